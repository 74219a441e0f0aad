#pragma once

// Phoneme vocabulary, CMUdict-format lexicon, word-level lyric annotations
// and the time-aligned phoneme activation matrix.

#include "phonosep/dsp.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phonosep {

// 39 CMUdict phoneme symbols in alphabetical order plus NON_PHONEME last.
class PhonemeVocabulary {
public:
    static constexpr int kNumPhonemes = 39;
    static constexpr int kSize = 40;
    static constexpr int kNonPhoneme = 39;

    static const std::vector<std::string>& symbols();
    // -1 for unknown symbols
    static int index_of(const std::string& symbol);
    // FNV-1a over the symbol list; stored in checkpoints so a model is never
    // applied with a mismatched vocabulary.
    static std::uint64_t fingerprint();
};

class Lexicon {
public:
    // CMUdict plain-text format: "WORD  PH1 PH2 ...", ';;;' comments.
    static Lexicon load(const std::string& path);

    void add(const std::string& word, std::vector<std::string> phonemes);

    // First pronunciation, stress digits stripped; empty for OOV (logged).
    std::vector<std::string> word_to_phonemes(const std::string& word) const;

    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::vector<std::string>> entries_;
};

struct WordAnnotation {
    double t_start = 0.0;
    double t_end = 0.0;
    double f_min = 0.0;  // carried but unused by separation
    double f_max = 0.0;
    std::string text;
    int parent_index = 0;
};

struct AnnotationSequence {
    std::vector<WordAnnotation> words;
    std::string granularity = "words";
    double agreement = 1.0;  // eta in [0,1]

    void validate() const;  // ordered, non-overlapping, t_start < t_end
};

AnnotationSequence load_annotations(const std::string& path);
void save_annotations(const std::string& path, const AnnotationSequence& seq);

// T frames x 40 binary matrix. For each word, all its phonemes are active at
// every frame whose center time lies in [t_start, t_end). NON_PHONEME is
// active exactly on rows with no phoneme active.
Mat build_activation_matrix(const AnnotationSequence& annotations, const Lexicon& lexicon,
                            int frames);

// Frame center time in seconds on the pipeline's STFT grid.
double frame_center_time(int frame);

// Softmax over the phoneme axis; every row becomes stochastic.
Mat normalize_strong(const Mat& z);

// Average-pool rows over non-overlapping windows of 2^depth frames.
Mat downsample_to_depth(const Mat& z_norm, int depth);

}  // namespace phonosep
