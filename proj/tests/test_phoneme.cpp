#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phonosep/phoneme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace phonosep;

namespace {

std::string packaged_lexicon_path() {
    return std::string(PHONOSEP_SOURCE_DIR) + "/data/lexicon.dict";
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("vocabulary layout and fingerprint") {
    const auto& syms = PhonemeVocabulary::symbols();
    REQUIRE(syms.size() == 40);
    CHECK(PhonemeVocabulary::kNumPhonemes == 39);
    CHECK(syms[0] == "AA");
    CHECK(syms[38] == "ZH");
    CHECK(syms[39] == "NON_PHONEME");
    CHECK(PhonemeVocabulary::index_of("AA") == 0);
    CHECK(PhonemeVocabulary::index_of("ZH") == 38);
    CHECK(PhonemeVocabulary::index_of("NON_PHONEME") == 39);
    CHECK(PhonemeVocabulary::index_of("QQ") == -1);
    // indices are a bijection
    for (int i = 0; i < 40; ++i) CHECK(PhonemeVocabulary::index_of(syms[(size_t)i]) == i);
    CHECK(PhonemeVocabulary::fingerprint() != 0);
    CHECK(PhonemeVocabulary::fingerprint() == PhonemeVocabulary::fingerprint());
}

TEST_CASE("lexicon: packaged lookups, OOV, malformed lines") {
    Lexicon lex = Lexicon::load(packaged_lexicon_path());
    auto cat = lex.word_to_phonemes("cat");
    REQUIRE(cat.size() == 3);
    CHECK(cat[0] == "K");
    CHECK(cat[1] == "AE");  // stress digit stripped
    CHECK(cat[2] == "T");
    CHECK(lex.word_to_phonemes("CAT") == cat);  // case-insensitive
    CHECK(lex.word_to_phonemes("").empty());
    CHECK(lex.word_to_phonemes("zzzqx").empty());

    std::string path = temp_path("phonosep_test_lexicon.dict");
    {
        std::ofstream out(path);
        out << ";;; comment line\n";
        out << "GOOD  G UH1 D\n";
        out << "BROKEN  Q9 XX\n";     // unknown symbols: skipped with warning
        out << "EMPTYWORD\n";         // no phonemes: skipped
        out << "GOOD(2)  G UW1 D\n";  // alternate pronunciation: ignored
    }
    Lexicon small = Lexicon::load(path);
    CHECK(small.size() == 1);
    auto good = small.word_to_phonemes("good");
    REQUIRE(good.size() == 3);
    CHECK(good[1] == "UH");
    CHECK(small.word_to_phonemes("broken").empty());
    std::remove(path.c_str());
}

TEST_CASE("frame_center_time matches the STFT grid") {
    CHECK(frame_center_time(0) == doctest::Approx(512.0 / 8192.0));
    CHECK(frame_center_time(10) == doctest::Approx((10.0 * 768 + 512) / 8192.0));
}

TEST_CASE("build_activation_matrix: empty, bag-of-phonemes word, rasterization oracle") {
    Lexicon lex = Lexicon::load(packaged_lexicon_path());

    AnnotationSequence empty;
    Mat z0 = build_activation_matrix(empty, lex, 32);
    for (int f = 0; f < 32; ++f) {
        for (int p = 0; p < 39; ++p) CHECK(z0.at(f, p) == 0.0f);
        CHECK(z0.at(f, 39) == 1.0f);
    }

    // one word "cat" covering exactly frame centers 10..19
    AnnotationSequence seq;
    WordAnnotation w;
    w.t_start = frame_center_time(10) - 1e-6;
    w.t_end = frame_center_time(19) + 1e-6;
    w.text = "CAT";
    seq.words.push_back(w);
    Mat z = build_activation_matrix(seq, lex, 32);
    int K = PhonemeVocabulary::index_of("K");
    int AE = PhonemeVocabulary::index_of("AE");
    int T = PhonemeVocabulary::index_of("T");
    for (int f = 0; f < 32; ++f) {
        bool in = f >= 10 && f <= 19;
        CHECK(z.at(f, K) == (in ? 1.0f : 0.0f));
        CHECK(z.at(f, AE) == (in ? 1.0f : 0.0f));
        CHECK(z.at(f, T) == (in ? 1.0f : 0.0f));
        CHECK(z.at(f, 39) == (in ? 0.0f : 1.0f));
    }

    // random word schedules against a brute-force frame-center oracle
    Lexicon mono;
    for (int p = 0; p < 39; ++p)
        mono.add(PhonemeVocabulary::symbols()[(size_t)p], {PhonemeVocabulary::symbols()[(size_t)p]});
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> gap(0.01, 0.4), len(0.05, 0.8);
    std::uniform_int_distribution<int> ph(0, 38);
    for (int trial = 0; trial < 10; ++trial) {
        AnnotationSequence s;
        double t = gap(rng);
        while (t < 8.0) {
            WordAnnotation a;
            a.t_start = t;
            a.t_end = t + len(rng);
            a.text = PhonemeVocabulary::symbols()[(size_t)ph(rng)];
            s.words.push_back(a);
            t = a.t_end + gap(rng);
        }
        int frames = 96;
        Mat got = build_activation_matrix(s, mono, frames);
        for (int f = 0; f < frames; ++f) {
            double tc = ((double)f * 768 + 512) / 8192.0;
            std::vector<int> active;
            for (const auto& a : s.words)
                if (tc >= a.t_start && tc < a.t_end)
                    active.push_back(PhonemeVocabulary::index_of(a.text));
            for (int p = 0; p < 39; ++p) {
                bool want = std::find(active.begin(), active.end(), p) != active.end();
                CHECK(got.at(f, p) == (want ? 1.0f : 0.0f));
            }
            CHECK(got.at(f, 39) == (active.empty() ? 1.0f : 0.0f));
        }
    }
}

TEST_CASE("activation-mass monotonicity under added annotations") {
    Lexicon lex = Lexicon::load(packaged_lexicon_path());
    AnnotationSequence a;
    WordAnnotation w1;
    w1.t_start = 0.2;
    w1.t_end = 0.9;
    w1.text = "DOG";
    a.words.push_back(w1);
    Mat za = build_activation_matrix(a, lex, 64);
    AnnotationSequence b = a;
    WordAnnotation w2;
    w2.t_start = 1.5;
    w2.t_end = 2.5;
    w2.text = "CAT";
    b.words.push_back(w2);
    Mat zb = build_activation_matrix(b, lex, 64);
    for (int p = 0; p < 39; ++p) {
        double ca = 0, cb = 0;
        for (int f = 0; f < 64; ++f) {
            ca += za.at(f, p);
            cb += zb.at(f, p);
        }
        CHECK(cb >= ca);
    }
}

TEST_CASE("normalize_strong: values, sums, column equivariance") {
    Mat z(1, 40);
    z.at(0, 39) = 1.0f;  // NON_PHONEME only
    Mat n = normalize_strong(z);
    double e = std::exp(1.0);
    CHECK(n.at(0, 39) == doctest::Approx(e / (e + 39.0)).epsilon(1e-6));
    CHECK(n.at(0, 39) == doctest::Approx(0.0652).epsilon(2e-3));
    for (int p = 0; p < 39; ++p) {
        CHECK(n.at(0, p) == doctest::Approx(1.0 / (e + 39.0)).epsilon(1e-6));
        CHECK(n.at(0, p) == doctest::Approx(0.0240).epsilon(2e-3));
    }

    std::mt19937 rng(3);
    std::uniform_int_distribution<int> bit(0, 1);
    Mat r(16, 40);
    for (auto& v : r.v) v = (float)bit(rng);
    Mat nr = normalize_strong(r);
    for (int f = 0; f < 16; ++f) {
        double sum = 0;
        for (int p = 0; p < 40; ++p) sum += nr.at(f, p);
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }

    // permuting columns permutes the output identically
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat rp(16, 40);
    for (int f = 0; f < 16; ++f)
        for (int p = 0; p < 40; ++p) rp.at(f, perm[(size_t)p]) = r.at(f, p);
    Mat nrp = normalize_strong(rp);
    for (int f = 0; f < 16; ++f)
        for (int p = 0; p < 40; ++p)
            CHECK(nrp.at(f, perm[(size_t)p]) == doctest::Approx(nr.at(f, p)).epsilon(1e-7));
}

TEST_CASE("downsample_to_depth: identity, pair average, stochasticity") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Mat z(8, 40);
    for (auto& v : z.v) v = u(rng);
    Mat zn = normalize_strong(z);

    Mat d0 = downsample_to_depth(zn, 0);
    for (size_t i = 0; i < zn.v.size(); ++i) CHECK(d0.v[i] == zn.v[i]);

    Mat d1 = downsample_to_depth(zn, 1);
    REQUIRE(d1.rows == 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 40; ++c)
            CHECK(d1.at(r, c) ==
                  doctest::Approx(0.5 * (zn.at(2 * r, c) + zn.at(2 * r + 1, c))).epsilon(1e-6));

    for (int d = 0; d <= 3; ++d) {
        Mat dd = downsample_to_depth(zn, d);
        for (int r = 0; r < dd.rows; ++r) {
            double sum = 0;
            for (int c = 0; c < 40; ++c) sum += dd.at(r, c);
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }
    CHECK_THROWS_AS(downsample_to_depth(zn, 4), std::invalid_argument);  // 8 % 16 != 0
    CHECK_THROWS_AS(downsample_to_depth(zn, -1), std::invalid_argument);
}

TEST_CASE("annotation validation and JSON roundtrip") {
    AnnotationSequence bad;
    WordAnnotation w;
    w.t_start = 1.0;
    w.t_end = 0.5;
    w.text = "CAT";
    bad.words.push_back(w);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    AnnotationSequence overlap;
    WordAnnotation a, b;
    a.t_start = 0.0;
    a.t_end = 1.0;
    a.text = "CAT";
    b.t_start = 0.5;
    b.t_end = 1.5;
    b.text = "DOG";
    overlap.words = {a, b};
    CHECK_THROWS_AS(overlap.validate(), std::invalid_argument);

    AnnotationSequence bad_eta;
    bad_eta.agreement = 1.5;
    CHECK_THROWS_AS(bad_eta.validate(), std::invalid_argument);

    AnnotationSequence seq;
    seq.granularity = "words";
    seq.agreement = 0.93;
    WordAnnotation c;
    c.t_start = 0.25;
    c.t_end = 0.75;
    c.f_min = 100.0;
    c.f_max = 900.0;
    c.text = "SING";
    c.parent_index = 2;
    seq.words.push_back(c);
    std::string path = temp_path("phonosep_test_ann.json");
    save_annotations(path, seq);
    AnnotationSequence back = load_annotations(path);
    CHECK(back.granularity == seq.granularity);
    CHECK(back.agreement == doctest::Approx(seq.agreement));
    REQUIRE(back.words.size() == 1);
    CHECK(back.words[0].t_start == doctest::Approx(0.25));
    CHECK(back.words[0].t_end == doctest::Approx(0.75));
    CHECK(back.words[0].f_min == doctest::Approx(100.0));
    CHECK(back.words[0].f_max == doctest::Approx(900.0));
    CHECK(back.words[0].text == "SING");
    CHECK(back.words[0].parent_index == 2);
    std::remove(path.c_str());
}
