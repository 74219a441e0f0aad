#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phonosep/training.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace phonosep;

namespace {

std::string temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    return p.string();
}

// In-memory dataset: random patch magnitudes, NON_PHONEME-only activations,
// optional waveforms (vocals = low-amplitude noise, accompaniment silent).
TrainDataset make_dataset(const std::vector<int>& patch_counts, int bins, unsigned seed,
                          bool with_waves) {
    TrainDataset d;
    d.bins = bins;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (size_t s = 0; s < patch_counts.size(); ++s) {
        LoadedSong song;
        song.id = "song" + std::to_string(s);
        song.n_patches = patch_counts[s];
        for (int p = 0; p < song.n_patches; ++p) {
            Mat m(stft_params::kPatchFrames, bins), v(stft_params::kPatchFrames, bins);
            for (auto& x : m.v) x = u(rng);
            for (auto& x : v.v) x = 0.5f * u(rng);
            song.mixture_patches.push_back(std::move(m));
            song.vocals_patches.push_back(std::move(v));
        }
        song.activations = Mat(song.n_patches * stft_params::kPatchFrames, 40);
        for (int r = 0; r < song.activations.rows; ++r) song.activations.at(r, 39) = 1.0f;
        if (with_waves) {
            size_t len = (size_t)song.n_patches * stft_params::kPatchFrames * stft_params::kHop;
            song.vocals_wave.resize(len);
            for (auto& x : song.vocals_wave) x = 0.1f * (u(rng) - 0.5f);
            song.accompaniment_wave.assign(len, 0.0f);
            song.mixture_wave = song.vocals_wave;
        }
        d.songs.push_back(std::move(song));
    }
    return d;
}

Mat oracle_segment_magnitude(const std::vector<float>& segment, int pool) {
    AudioClip clip;
    clip.sample_rate = stft_params::kSampleRate;
    clip.samples = segment;
    return pool_bins(magnitude(stft(clip)), pool);
}

UNet<float> tiny_model(const std::string& variant, unsigned seed) {
    UNetConfig cfg;
    cfg.depth = 3;
    cfg.base_channels = 4;
    cfg.input_frames = 128;
    cfg.input_bins = 64;
    return UNet<float>(cfg, config_for_variant(variant), seed);
}

}  // namespace

TEST_CASE("config validation rejects non-positive counts") {
    TrainConfig ok;
    CHECK_NOTHROW(ok.validate());
    TrainConfig bad = ok;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.batches_per_epoch = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.max_epochs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.min_delta = -1e-6;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("plateau scheduler: sixteen flat epochs reduce exactly once at epoch 16") {
    PlateauScheduler sched(0.5, 15, 1e-5);
    int reductions = 0, reduce_epoch = 0;
    for (int epoch = 1; epoch <= 16; ++epoch) {
        if (sched.observe(1.0)) {
            ++reductions;
            reduce_epoch = epoch;
        }
    }
    CHECK(reductions == 1);
    CHECK(reduce_epoch == 16);
}

TEST_CASE("early stopper: one improvement then thirty flat epochs stops at epoch 31") {
    EarlyStopper stop(30, 1e-5);
    int stop_epoch = 0;
    for (int epoch = 1; epoch <= 40; ++epoch) {
        if (stop.observe(0.5)) {  // epoch 1 improves on infinity, the rest are flat
            stop_epoch = epoch;
            break;
        }
    }
    CHECK(stop_epoch == 31);
}

TEST_CASE("improvements below min_delta do not reset patience") {
    PlateauScheduler sched(0.5, 3, 1e-5);
    CHECK(!sched.observe(1.0));           // first observation sets the best
    CHECK(!sched.observe(1.0 - 5e-6));    // below min_delta: bad = 1
    CHECK(!sched.observe(1.0 - 5e-6));    // bad = 2
    CHECK(sched.observe(1.0 - 5e-6));     // bad = 3: reduce
    CHECK(!sched.observe(1.0 - 2e-5));    // a real improvement resets
    CHECK(!sched.observe(1.0));
    CHECK(!sched.observe(1.0));
    CHECK(sched.observe(1.0));
}

TEST_CASE("sample_batch: determinism, size, patch-proportional song frequency") {
    TrainDataset data = make_dataset({3, 1}, 8, 11, false);

    std::mt19937 r1(5), r2(5);
    auto a = sample_batch(data, 32, 5, r1, false);
    auto b = sample_batch(data, 32, 5, r2, false);
    REQUIRE(a.size() == 32);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].song == b[i].song);
        CHECK(a[i].patch == b[i].patch);
        CHECK(!a[i].augmented);
        CHECK(a[i].mixture == &data.songs[(size_t)a[i].song].mixture_patches[(size_t)a[i].patch]);
    }

    std::mt19937 rng(7);
    auto big = sample_batch(data, 10000, 5, rng, false);
    int song0 = 0;
    for (const auto& s : big) song0 += s.song == 0 ? 1 : 0;
    double freq = song0 / 10000.0;
    CHECK(std::abs(freq - 0.75) < 0.02);  // 3 of 4 patches live in song 0

    TrainDataset empty;
    std::mt19937 r3(1);
    CHECK_THROWS_AS(sample_batch(empty, 4, 5, r3, false), std::invalid_argument);
}

TEST_CASE("augmentation: epoch-level fraction is one in five within one sample") {
    TrainDataset data = make_dataset({2, 1}, 64, 3, true);
    std::mt19937 rng(9);
    const int batch_size = 64, batches = 16, augment_every = 5;
    std::int64_t offset = 0;
    int augmented = 0;
    for (int b = 0; b < batches; ++b) {
        auto batch = sample_batch(data, batch_size, augment_every, rng, true, offset);
        offset += batch_size;
        for (const auto& s : batch) augmented += s.augmented ? 1 : 0;
    }
    int total = batch_size * batches;
    CHECK(std::abs(augmented - total / augment_every) <= 1);

    // allow_augmented=false produces only real samples regardless of offset
    auto plain = sample_batch(data, 64, augment_every, rng, false, 4);
    for (const auto& s : plain) CHECK(!s.augmented);
}

TEST_CASE("augmented samples: silent accompaniment makes mixture equal vocals") {
    TrainDataset data = make_dataset({2}, 64, 21, true);
    std::mt19937 rng(13);
    // augment_every=1 makes every sample a fake mixture
    auto batch = sample_batch(data, 4, 1, rng, true, 0);
    int pool = stft_params::kBins / data.bins;
    for (const auto& s : batch) {
        REQUIRE(s.augmented);
        REQUIRE(s.mixture_owned.v.size() == s.vocals_owned.v.size());
        for (size_t i = 0; i < s.mixture_owned.v.size(); ++i)
            CHECK(s.mixture_owned.v[i] == doctest::Approx(s.vocals_owned.v[i]).epsilon(1e-6));

        // the target is the magnitude of the re-analyzed vocals segment
        const auto& wave = data.songs[(size_t)s.song].vocals_wave;
        size_t seg = (size_t)stft_params::kPatchFrames * stft_params::kHop;
        std::vector<float> v(seg, 0.0f);
        for (size_t i = 0; i < seg && (size_t)s.patch * seg + i < wave.size(); ++i)
            v[i] = wave[(size_t)s.patch * seg + i];
        Mat want = oracle_segment_magnitude(v, pool);
        REQUIRE(s.vocals_owned.rows == want.rows);
        REQUIRE(s.vocals_owned.cols == want.cols);
        for (size_t i = 0; i < want.v.size(); ++i)
            CHECK(std::abs(s.vocals_owned.v[i] - want.v[i]) < 1e-5f);
    }
}

TEST_CASE("checkpoint roundtrip reproduces the next training step") {
    TrainDataset data = make_dataset({2, 2}, 64, 31, false);
    UNet<float> model = tiny_model("S_s", 7);
    std::vector<Tensor<float>> tensors;
    for (auto& np : model.parameters()) tensors.push_back(np.tensor);
    AdamOptimizer<float> opt(tensors, 1e-3);

    std::mt19937 sample_rng(17), forward_rng(23);
    for (int i = 0; i < 2; ++i) {
        auto batch = sample_batch(data, 4, 0, sample_rng, false);
        float loss = train_step(model, opt, batch, data.bins, forward_rng);
        CHECK(std::isfinite(loss));
    }

    std::string path = temp_dir("phonosep_train_rt") + ".ckpt";
    CheckpointMeta meta{2, 0.5, opt.lr(), opt.step_count()};
    save_model(path, model, &opt, meta);
    LoadedModel lm = load_model(path);
    REQUIRE(lm.optimizer);
    CHECK(lm.optimizer->step_count() == opt.step_count());

    auto batch = sample_batch(data, 4, 0, sample_rng, false);
    std::mt19937 fa(99), fb(99);
    float loss_a = train_step(model, opt, batch, data.bins, fa);
    float loss_b = train_step(lm.model, *lm.optimizer, batch, data.bins, fb);
    CHECK(std::abs(loss_a - loss_b) < 1e-6f);
    std::filesystem::remove(path);
}

TEST_CASE("train: run directory artifacts, monotone learning rate, history") {
    TrainDataset train_data = make_dataset({2, 2}, 64, 41, true);
    TrainDataset val_data = make_dataset({1}, 64, 42, true);
    UNet<float> model = tiny_model("unet", 5);

    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.batches_per_epoch = 3;
    cfg.val_batches = 2;
    cfg.max_epochs = 3;
    cfg.plateau_patience = 2;
    cfg.early_stop_patience = 4;
    cfg.seed = 1;

    std::string run_dir = temp_dir("phonosep_train_run");
    TrainResult res = train(model, train_data, val_data, cfg, run_dir);

    CHECK(!res.aborted_nan);
    REQUIRE(!res.history.empty());
    CHECK((int)res.history.size() <= cfg.max_epochs);
    for (size_t i = 1; i < res.history.size(); ++i)
        CHECK(res.history[i].lr <= res.history[i - 1].lr);
    for (const auto& rec : res.history) {
        CHECK(std::isfinite(rec.train_loss));
        CHECK(std::isfinite(rec.val_loss));
    }
    CHECK(res.best_epoch >= 1);
    CHECK(std::isfinite(res.best_val_loss));

    namespace fs = std::filesystem;
    CHECK(fs::exists(run_dir + "/config.json"));
    CHECK(fs::exists(run_dir + "/log.txt"));
    CHECK(fs::exists(run_dir + "/last.ckpt"));
    CHECK(fs::exists(run_dir + "/best.ckpt"));
    fs::remove_all(run_dir);
}

TEST_CASE("train: non-finite loss aborts with a diagnostic checkpoint") {
    TrainDataset train_data = make_dataset({2}, 64, 51, true);
    TrainDataset val_data = make_dataset({1}, 64, 52, true);
    UNet<float> model = tiny_model("unet", 5);
    model.parameters()[0].tensor.data()[0] = std::numeric_limits<float>::quiet_NaN();

    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.batches_per_epoch = 2;
    cfg.val_batches = 1;
    cfg.max_epochs = 2;
    cfg.seed = 1;

    std::string run_dir = temp_dir("phonosep_train_nan");
    TrainResult res = train(model, train_data, val_data, cfg, run_dir);
    CHECK(res.aborted_nan);
    CHECK(res.history.empty());
    CHECK(std::filesystem::exists(run_dir + "/nan_diagnostic.ckpt"));
    std::filesystem::remove_all(run_dir);
}
