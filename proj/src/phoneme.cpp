#include "phonosep/phoneme.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace phonosep {

using nlohmann::json;

const std::vector<std::string>& PhonemeVocabulary::symbols() {
    static const std::vector<std::string> syms = {
        "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
        "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
        "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
        "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH", "NON_PHONEME"};
    return syms;
}

int PhonemeVocabulary::index_of(const std::string& symbol) {
    const auto& syms = symbols();
    auto it = std::find(syms.begin(), syms.end(), symbol);
    return it == syms.end() ? -1 : (int)(it - syms.begin());
}

std::uint64_t PhonemeVocabulary::fingerprint() {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& s : symbols())
        for (char c : s) {
            h ^= (std::uint64_t)(unsigned char)c;
            h *= 1099511628211ull;
        }
    return h;
}

namespace {

std::string strip_stress(const std::string& ph) {
    std::string out = ph;
    while (!out.empty() && std::isdigit((unsigned char)out.back())) out.pop_back();
    return out;
}

std::string upper(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = (char)std::toupper((unsigned char)c);
    return out;
}

}  // namespace

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lexicon: " + path);
    Lexicon lex;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.rfind(";;;", 0) == 0) continue;
        std::istringstream is(line);
        std::string word;
        is >> word;
        std::vector<std::string> phonemes;
        std::string ph;
        bool bad = false;
        while (is >> ph) {
            std::string sym = strip_stress(upper(ph));
            if (PhonemeVocabulary::index_of(sym) < 0 ||
                sym == "NON_PHONEME") {
                bad = true;
                break;
            }
            phonemes.push_back(sym);
        }
        if (bad || phonemes.empty()) {
            std::cerr << "lexicon: skipping malformed line " << lineno << ": " << line << "\n";
            continue;
        }
        // alternate pronunciations like WORD(2) keep only the first
        auto paren = word.find('(');
        if (paren != std::string::npos) continue;
        lex.entries_.emplace(upper(word), std::move(phonemes));
    }
    return lex;
}

void Lexicon::add(const std::string& word, std::vector<std::string> phonemes) {
    entries_[upper(word)] = std::move(phonemes);
}

std::vector<std::string> Lexicon::word_to_phonemes(const std::string& word) const {
    if (word.empty()) return {};
    auto it = entries_.find(upper(word));
    if (it == entries_.end()) {
        std::cerr << "lexicon: out-of-vocabulary word '" << word << "'\n";
        return {};
    }
    return it->second;
}

void AnnotationSequence::validate() const {
    for (size_t k = 0; k < words.size(); ++k) {
        if (!(words[k].t_start < words[k].t_end))
            throw std::invalid_argument("annotation " + std::to_string(k) + ": t_start >= t_end");
        if (k + 1 < words.size() && words[k].t_end > words[k + 1].t_start + 1e-9)
            throw std::invalid_argument("annotations overlap or are unordered at index " +
                                        std::to_string(k));
    }
    if (agreement < 0.0 || agreement > 1.0)
        throw std::invalid_argument("agreement score must be in [0,1]");
}

AnnotationSequence load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open annotation file: " + path);
    json j;
    in >> j;
    AnnotationSequence seq;
    seq.granularity = j.at("granularity").get<std::string>();
    seq.agreement = j.at("agreement").get<double>();
    for (const auto& w : j.at("words")) {
        WordAnnotation a;
        a.t_start = w.at("t_start").get<double>();
        a.t_end = w.at("t_end").get<double>();
        a.f_min = w.at("f_min").get<double>();
        a.f_max = w.at("f_max").get<double>();
        a.text = w.at("text").get<std::string>();
        a.parent_index = w.at("parent_index").get<int>();
        seq.words.push_back(a);
    }
    seq.validate();
    return seq;
}

void save_annotations(const std::string& path, const AnnotationSequence& seq) {
    json j;
    j["granularity"] = seq.granularity;
    j["agreement"] = seq.agreement;
    j["words"] = json::array();
    for (const auto& w : seq.words)
        j["words"].push_back({{"t_start", w.t_start},
                              {"t_end", w.t_end},
                              {"f_min", w.f_min},
                              {"f_max", w.f_max},
                              {"text", w.text},
                              {"parent_index", w.parent_index}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write annotation file: " + path);
    out << j.dump(2) << "\n";
}

double frame_center_time(int frame) {
    using namespace stft_params;
    return ((double)frame * kHop + kWindow / 2.0) / kSampleRate;
}

Mat build_activation_matrix(const AnnotationSequence& annotations, const Lexicon& lexicon,
                            int frames) {
    annotations.validate();
    Mat z(frames, PhonemeVocabulary::kSize);
    double horizon = frame_center_time(frames - 1);
    for (const auto& word : annotations.words) {
        if (word.t_start > horizon)
            std::cerr << "annotation '" << word.text << "' starts beyond frame horizon, truncated\n";
        std::vector<std::string> phonemes = lexicon.word_to_phonemes(word.text);
        if (phonemes.empty()) continue;
        for (int f = 0; f < frames; ++f) {
            double tc = frame_center_time(f);
            if (tc >= word.t_start && tc < word.t_end)
                for (const auto& ph : phonemes) z.at(f, PhonemeVocabulary::index_of(ph)) = 1.0f;
        }
    }
    for (int f = 0; f < frames; ++f) {
        bool any = false;
        for (int p = 0; p < PhonemeVocabulary::kNumPhonemes; ++p) any = any || z.at(f, p) > 0.0f;
        z.at(f, PhonemeVocabulary::kNonPhoneme) = any ? 0.0f : 1.0f;
    }
    return z;
}

Mat normalize_strong(const Mat& z) {
    Mat out(z.rows, z.cols);
    for (int r = 0; r < z.rows; ++r) {
        float mx = z.at(r, 0);
        for (int c = 1; c < z.cols; ++c) mx = std::max(mx, z.at(r, c));
        double sum = 0;
        for (int c = 0; c < z.cols; ++c) {
            double e = std::exp((double)z.at(r, c) - mx);
            out.at(r, c) = (float)e;
            sum += e;
        }
        for (int c = 0; c < z.cols; ++c) out.at(r, c) = (float)(out.at(r, c) / sum);
    }
    return out;
}

Mat downsample_to_depth(const Mat& z_norm, int depth) {
    if (depth < 0) throw std::invalid_argument("downsample_to_depth: negative depth");
    int win = 1 << depth;
    if (z_norm.rows % win != 0)
        throw std::invalid_argument("downsample_to_depth: " + std::to_string(z_norm.rows) +
                                    " frames not divisible by 2^" + std::to_string(depth));
    Mat out(z_norm.rows / win, z_norm.cols);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            double acc = 0;
            for (int k = 0; k < win; ++k) acc += z_norm.at(r * win + k, c);
            out.at(r, c) = (float)(acc / win);
        }
    return out;
}

}  // namespace phonosep
