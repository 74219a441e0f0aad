#include "phonosep/dataset.hpp"

#include "phonosep/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phonosep {

namespace fs = std::filesystem;

std::vector<TrackVoiceProfile> load_voice_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open voice-profile file: " + path);
    std::vector<TrackVoiceProfile> profiles;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        TrackVoiceProfile p;
        if (!(is >> p.track_id >> p.prob))
            throw std::runtime_error("malformed voice-profile line: " + line);
        if (p.prob < 0.0 || p.prob > 1.0)
            throw std::runtime_error("voice probability outside [0,1]: " + line);
        profiles.push_back(p);
    }
    return profiles;
}

SourceSet build_sources(const std::vector<AudioClip>& tracks, const std::vector<double>& probs,
                        double nu) {
    if (tracks.empty()) throw std::invalid_argument("build_sources: no tracks");
    if (tracks.size() != probs.size())
        throw std::invalid_argument("build_sources: profiles do not cover tracks (" +
                                    std::to_string(probs.size()) + " profiles, " +
                                    std::to_string(tracks.size()) + " tracks)");
    int rate = tracks[0].sample_rate;
    size_t longest = 0;
    for (const auto& t : tracks) {
        if (t.sample_rate != rate)
            throw std::invalid_argument("build_sources: tracks have mixed sample rates");
        longest = std::max(longest, t.samples.size());
    }
    double threshold = *std::max_element(probs.begin(), probs.end()) * nu;

    SourceSet out;
    out.vocals.sample_rate = out.accompaniment.sample_rate = out.mixture.sample_rate = rate;
    out.vocals.samples.assign(longest, 0.0f);
    out.accompaniment.samples.assign(longest, 0.0f);
    for (size_t k = 0; k < tracks.size(); ++k) {
        auto& dst = probs[k] >= threshold ? out.vocals.samples : out.accompaniment.samples;
        for (size_t i = 0; i < tracks[k].samples.size(); ++i) dst[i] += tracks[k].samples[i];
    }
    out.mixture.samples.resize(longest);
    for (size_t i = 0; i < longest; ++i)
        out.mixture.samples[i] = out.vocals.samples[i] + out.accompaniment.samples[i];
    return out;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (base / p).string();
    };
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        SongEntry e;
        if (!(is >> e.id >> e.mixture >> e.vocals >> e.accompaniment >> e.annotations >> e.eta))
            throw std::runtime_error("malformed manifest line: " + line);
        is >> e.split;
        e.mixture = resolve(e.mixture);
        e.vocals = resolve(e.vocals);
        e.accompaniment = resolve(e.accompaniment);
        e.annotations = resolve(e.annotations);
        m.push_back(e);
    }
    return m;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << "# id mixture vocals accompaniment annotations eta split\n";
    for (const auto& e : manifest)
        out << e.id << " " << e.mixture << " " << e.vocals << " " << e.accompaniment << " "
            << e.annotations << " " << e.eta << " " << e.split << "\n";
}

void validate_manifest(const Manifest& manifest) {
    for (const auto& e : manifest)
        for (const std::string& p : {e.mixture, e.vocals, e.accompaniment, e.annotations})
            if (!fs::exists(p))
                throw std::runtime_error("manifest references missing file: " + p);
}

SplitResult split_by_agreement(const Manifest& manifest, const SplitConfig& cfg) {
    SplitResult r;
    for (SongEntry e : manifest) {
        if (e.eta >= cfg.val_hi) {
            e.split = "test";
            r.test.push_back(e);
        } else if (e.eta >= cfg.train_hi) {
            e.split = "val";
            r.val.push_back(e);
        } else if (e.eta >= cfg.train_lo) {
            e.split = "train";
            r.train.push_back(e);
        } else {
            ++r.excluded;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

std::array<double, 3> phoneme_formants(int index) {
    if (index < 0 || index >= PhonemeVocabulary::kNumPhonemes)
        throw std::invalid_argument("phoneme_formants: index out of range");
    // fixed table: spread over the 8192 Hz band, distinct per phoneme
    double f1 = 256.0 + 88.0 * (double)((index * 7) % 13);
    double f2 = 1000.0 + 128.0 * (double)((index * 11) % 17);
    double f3 = 2400.0 + 96.0 * (double)((index * 5) % 19);
    return {f1, f2, f3};
}

std::vector<SynthWord> synth_schedule(unsigned song_seed, double duration_s) {
    std::mt19937 rng(song_seed);
    std::uniform_real_distribution<double> gap(0.2, 0.7);
    std::uniform_real_distribution<double> len(0.3, 0.8);
    std::uniform_real_distribution<double> amp(0.3, 1.0);
    std::uniform_int_distribution<int> ph(0, PhonemeVocabulary::kNumPhonemes - 1);

    std::vector<SynthWord> schedule;
    double t = gap(rng);
    while (true) {
        SynthWord w;
        w.t_start = t;
        w.t_end = t + len(rng);
        if (w.t_end > duration_s - 0.1) break;
        w.phoneme = ph(rng);
        w.amplitude = amp(rng);
        schedule.push_back(w);
        t = w.t_end + gap(rng);
    }
    return schedule;
}

AudioClip synth_vocals(const std::vector<SynthWord>& schedule, double duration_s) {
    const int rate = stft_params::kSampleRate;
    const double pi = 3.14159265358979323846;
    AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.assign((size_t)std::llround(duration_s * rate), 0.0f);
    const double ramp = 0.010;  // 10 ms fades
    const double harmonic_amp[3] = {1.0, 0.6, 0.4};
    for (const auto& w : schedule) {
        auto f = phoneme_formants(w.phoneme);
        std::int64_t s0 = (std::int64_t)std::llround(w.t_start * rate);
        std::int64_t s1 = std::min<std::int64_t>((std::int64_t)clip.samples.size(),
                                                 (std::int64_t)std::llround(w.t_end * rate));
        for (std::int64_t n = s0; n < s1; ++n) {
            double t = (double)n / rate;
            double env = 1.0;
            double into = t - w.t_start, left = w.t_end - t;
            if (into < ramp) env = 0.5 * (1.0 - std::cos(pi * into / ramp));
            if (left < ramp) env = std::min(env, 0.5 * (1.0 - std::cos(pi * left / ramp)));
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += harmonic_amp[k] * std::sin(2.0 * pi * f[(size_t)k] * t);
            clip.samples[(size_t)n] += (float)(w.amplitude * env * v / 3.0);
        }
    }
    return clip;
}

AudioClip synth_accompaniment(unsigned song_seed, double duration_s) {
    const int rate = stft_params::kSampleRate;
    const double pi = 3.14159265358979323846;
    std::mt19937 rng(song_seed ^ 0x9e3779b9u);
    std::uniform_real_distribution<double> root_d(110.0, 220.0);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);

    AudioClip clip;
    clip.sample_rate = rate;
    std::int64_t n = (std::int64_t)std::llround(duration_s * rate);
    clip.samples.assign((size_t)n, 0.0f);

    // chord pads: triads with upper harmonics reaching into the vocal band,
    // per-chord level and a slow tremolo so pad energy fluctuates over time
    std::uniform_real_distribution<double> level_d(0.25, 1.0);
    std::uniform_real_distribution<double> harm_d(0.5, 1.0);
    std::uniform_real_distribution<double> trem_rate_d(0.3, 1.2);
    std::uniform_real_distribution<double> phase_d(0.0, 2.0 * pi);
    const double ratios[3] = {1.0, 1.25, 1.5};
    const int harmonics = 10;
    int n_chords = std::max(2, (int)std::llround(duration_s / 2.5));
    double chord_len = duration_s / n_chords;
    for (int c = 0; c < n_chords; ++c) {
        double root = root_d(rng);
        double level = level_d(rng);
        double trem_rate = trem_rate_d(rng);
        double trem_phase = phase_d(rng);
        std::vector<double> freq, amp, phase;
        for (double ratio : ratios)
            for (int k = 1; k <= harmonics; ++k) {
                double f = root * ratio * k;
                if (f >= 3800.0) break;
                freq.push_back(f);
                amp.push_back(harm_d(rng) / k);
                phase.push_back(phase_d(rng));
            }
        std::int64_t i0 = (std::int64_t)std::llround(c * chord_len * rate);
        std::int64_t i1 = std::min<std::int64_t>(
            n, (std::int64_t)std::llround((c + 1) * chord_len * rate));
        for (std::int64_t i = i0; i < i1; ++i) {
            double t = (double)i / rate;
            double v = 0.0;
            for (size_t j = 0; j < freq.size(); ++j)
                v += amp[j] * std::sin(2.0 * pi * freq[j] * t + phase[j]);
            double trem = 1.0 + 0.5 * std::sin(2.0 * pi * trem_rate * t + trem_phase);
            clip.samples[(size_t)i] = (float)(0.08 * level * trem * v);
        }
    }

    // band-limited noise: white noise through an 8-tap moving average
    std::vector<double> wn((size_t)n);
    for (auto& x : wn) x = noise(rng);
    double acc = 0.0;
    const int taps = 8;
    for (std::int64_t i = 0; i < n; ++i) {
        acc += wn[(size_t)i];
        if (i >= taps) acc -= wn[(size_t)(i - taps)];
        clip.samples[(size_t)i] += (float)(0.05 * acc / taps);
    }

    // a lead line synthesized like the vocals but on its own schedule, so
    // the mixture alone does not reveal when the annotated singer is active
    auto lead = synth_vocals(synth_schedule(song_seed ^ 0x517cc1b7u, duration_s), duration_s);
    for (std::int64_t i = 0; i < n; ++i)
        clip.samples[(size_t)i] += 0.9f * lead.samples[(size_t)i];
    return clip;
}

Manifest synth_generate(const std::string& out_dir, const SynthConfig& cfg) {
    fs::create_directories(fs::path(out_dir) / "songs");

    // corpus-local lexicon: 39 one-phoneme words, word text = phoneme symbol
    {
        std::ofstream lex((fs::path(out_dir) / "lexicon.dict").string());
        lex << ";;; synthetic corpus lexicon\n";
        for (int p = 0; p < PhonemeVocabulary::kNumPhonemes; ++p)
            lex << PhonemeVocabulary::symbols()[(size_t)p] << "  "
                << PhonemeVocabulary::symbols()[(size_t)p] << "\n";
    }

    int total = cfg.n_train + cfg.n_val + cfg.n_test;
    Manifest manifest((size_t)total);

#pragma omp parallel for num_threads(std::max(1, cfg.jobs)) schedule(dynamic)
    for (int s = 0; s < total; ++s) {
        unsigned song_seed = cfg.seed * 1000003u + (unsigned)s;
        char name[32];
        std::snprintf(name, sizeof(name), "song%03d", s);
        fs::path dir = fs::path(out_dir) / "songs" / name;
        fs::create_directories(dir);

        auto schedule = synth_schedule(song_seed, cfg.duration_s);
        AudioClip vocals = synth_vocals(schedule, cfg.duration_s);
        AudioClip accomp = synth_accompaniment(song_seed, cfg.duration_s);
        AudioClip mixture;
        mixture.sample_rate = vocals.sample_rate;
        mixture.samples.resize(vocals.samples.size());
        for (size_t i = 0; i < mixture.samples.size(); ++i)
            mixture.samples[i] = vocals.samples[i] + accomp.samples[i];

        save_wav((dir / "vocals.wav").string(), vocals, 32);
        save_wav((dir / "accompaniment.wav").string(), accomp, 32);
        save_wav((dir / "mixture.wav").string(), mixture, 32);

        AnnotationSequence ann;
        ann.granularity = "words";
        ann.agreement = 1.0;
        for (const auto& w : schedule) {
            WordAnnotation a;
            a.t_start = w.t_start;
            a.t_end = w.t_end;
            auto f = phoneme_formants(w.phoneme);
            a.f_min = f[0];
            a.f_max = f[2];
            a.text = PhonemeVocabulary::symbols()[(size_t)w.phoneme];
            a.parent_index = 0;
            ann.words.push_back(a);
        }
        save_annotations((dir / "annotations.json").string(), ann);

        SongEntry e;
        e.id = name;
        std::string rel = (fs::path("songs") / name).string();
        e.mixture = rel + "/mixture.wav";
        e.vocals = rel + "/vocals.wav";
        e.accompaniment = rel + "/accompaniment.wav";
        e.annotations = rel + "/annotations.json";
        e.eta = 1.0;
        e.split = s < cfg.n_train ? "train" : (s < cfg.n_train + cfg.n_val ? "val" : "test");
        manifest[(size_t)s] = e;
    }

    save_manifest((fs::path(out_dir) / "manifest.txt").string(), manifest);
    return load_manifest((fs::path(out_dir) / "manifest.txt").string());
}

}  // namespace phonosep
