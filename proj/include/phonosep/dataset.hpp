#pragma once

// Stem construction from multitracks via voice-probability merging, split by
// agreement score, manifests, and a deterministic synthetic corpus generator
// used for desk-scale experiments.

#include "phonosep/phoneme.hpp"
#include "phonosep/wav.hpp"

#include <array>
#include <string>
#include <vector>

namespace phonosep {

struct TrackVoiceProfile {
    std::string track_id;
    double prob = 0.0;  // mean singing-voice probability in [0,1]
};

std::vector<TrackVoiceProfile> load_voice_profiles(const std::string& path);

struct SourceSet {
    AudioClip vocals, accompaniment, mixture;
};

// Merge all tracks whose probability reaches max * nu into the vocals stem;
// the rest become the accompaniment. Lengths are equalized by zero-padding.
SourceSet build_sources(const std::vector<AudioClip>& tracks, const std::vector<double>& probs,
                        double nu = 0.98);

struct SongEntry {
    std::string id;
    std::string mixture, vocals, accompaniment, annotations;  // file paths
    double eta = 1.0;
    std::string split;  // train | val | test | ""
};

using Manifest = std::vector<SongEntry>;

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);
void validate_manifest(const Manifest& manifest);  // referenced files must exist

struct SplitConfig {
    double train_lo = 0.7;
    double train_hi = 0.88;  // train: train_hi > eta >= train_lo
    double val_hi = 0.89;    // val:   val_hi   > eta >= train_hi; test: eta >= val_hi
};

struct SplitResult {
    Manifest train, val, test;
    int excluded = 0;
};

SplitResult split_by_agreement(const Manifest& manifest, const SplitConfig& cfg = {});

// ---------------------------------------------------------------------------
// Synthetic corpus: each song is a schedule of one-phoneme words; the vocals
// are three formant sinusoids per phoneme (fixed deterministic table), the
// accompaniment is band-limited noise plus chord pads, annotations are exact
// by construction and eta is 1.0.
// ---------------------------------------------------------------------------

struct SynthConfig {
    int n_train = 40, n_val = 5, n_test = 10;
    double duration_s = 20.0;
    unsigned seed = 0;
    int jobs = 1;
};

struct SynthWord {
    double t_start = 0.0, t_end = 0.0;
    int phoneme = 0;  // vocabulary index, < 39
    double amplitude = 0.0;
};

// Fixed formant table for the 39 phonemes (Hz).
std::array<double, 3> phoneme_formants(int index);

// The internal per-song schedule, exposed so tests can compare annotation
// rasterization against the generator's ground truth.
std::vector<SynthWord> synth_schedule(unsigned song_seed, double duration_s);

AudioClip synth_vocals(const std::vector<SynthWord>& schedule, double duration_s);
AudioClip synth_accompaniment(unsigned song_seed, double duration_s);

// Writes the corpus (audio, annotations, lexicon, manifest) under out_dir and
// returns the manifest. Two runs with equal seed are bit-identical.
Manifest synth_generate(const std::string& out_dir, const SynthConfig& cfg);

}  // namespace phonosep
