#include "phonosep/training.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

namespace phonosep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kPatch = stft_params::kPatchFrames;
constexpr int kP = PhonemeVocabulary::kSize;

Mat slice_activations(const Mat& acts, int frame_off) {
    Mat z(kPatch, kP);
    for (int r = 0; r < kPatch; ++r) {
        int src = frame_off + r;
        if (src < acts.rows)
            for (int p = 0; p < kP; ++p) z.at(r, p) = acts.at(src, p);
        else
            z.at(r, PhonemeVocabulary::kNonPhoneme) = 1.0f;
    }
    return z;
}

// Waveform segment covering one 128-frame patch, zero-padded at the tail.
std::vector<float> patch_segment(const std::vector<float>& wave, int patch_index) {
    const size_t seg = (size_t)kPatch * stft_params::kHop;
    std::vector<float> out(seg, 0.0f);
    size_t start = (size_t)patch_index * seg;
    for (size_t i = 0; i < seg && start + i < wave.size(); ++i) out[i] = wave[start + i];
    return out;
}

Mat segment_magnitude(const std::vector<float>& segment, int pool) {
    AudioClip clip;
    clip.sample_rate = stft_params::kSampleRate;
    clip.samples = segment;
    return pool_bins(magnitude(stft(clip)), pool);
}

}  // namespace

TrainDataset load_songs(const Manifest& manifest, const Lexicon& lexicon, int model_bins,
                        bool shuffle_phonemes, unsigned shuffle_seed) {
    if (stft_params::kBins % model_bins != 0)
        throw std::invalid_argument("load_songs: model bins must divide 512");
    int pool = stft_params::kBins / model_bins;

    TrainDataset data;
    data.bins = model_bins;
    data.songs.resize(manifest.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < (std::int64_t)manifest.size(); ++i) {
        const SongEntry& e = manifest[(size_t)i];
        LoadedSong& s = data.songs[(size_t)i];
        s.id = e.id;
        AudioClip mix = resample(load_wav(e.mixture));
        AudioClip voc = resample(load_wav(e.vocals));
        AudioClip acc = resample(load_wav(e.accompaniment));
        s.mixture_wave = mix.samples;
        s.vocals_wave = voc.samples;
        s.accompaniment_wave = acc.samples;

        ComplexSpectrogram mix_spec = stft(mix);
        ComplexSpectrogram voc_spec = stft(voc);
        auto mix_patches = extract_patches(mix_spec);
        auto voc_patches = extract_patches(voc_spec);
        s.n_patches = (int)mix_patches.size();
        for (auto& p : mix_patches) s.mixture_patches.push_back(pool_bins(p.mag, pool));
        for (int p = 0; p < s.n_patches && p < (int)voc_patches.size(); ++p)
            s.vocals_patches.push_back(pool_bins(voc_patches[(size_t)p].mag, pool));
        while ((int)s.vocals_patches.size() < s.n_patches)
            s.vocals_patches.push_back(Mat(kPatch, model_bins));

        AnnotationSequence ann = load_annotations(e.annotations);
        s.activations = build_activation_matrix(ann, lexicon, s.n_patches * kPatch);
        if (shuffle_phonemes) {
            // permute all 40 columns so no consistent signal survives
            std::vector<int> perm(kP);
            std::iota(perm.begin(), perm.end(), 0);
            std::mt19937 prng(shuffle_seed * 7919u + (unsigned)i);
            std::shuffle(perm.begin(), perm.end(), prng);
            Mat shuffled = s.activations;
            for (int r = 0; r < s.activations.rows; ++r)
                for (int p = 0; p < kP; ++p)
                    shuffled.at(r, perm[(size_t)p]) = s.activations.at(r, p);
            s.activations = shuffled;
        }
    }
    return data;
}

std::vector<TrainSample> sample_batch(const TrainDataset& data, int batch_size, int augment_every,
                                      std::mt19937& rng, bool allow_augmented,
                                      std::int64_t sample_offset) {
    std::int64_t total = data.total_patches();
    if (total == 0) throw std::invalid_argument("sample_batch: empty dataset");

    bool pool_ok = false;
    for (const auto& s : data.songs) pool_ok = pool_ok || !s.accompaniment_wave.empty();
    static bool warned = false;
    if (allow_augmented && !pool_ok && !warned) {
        std::cerr << "sample_batch: empty accompaniment pool, augmentation disabled\n";
        warned = true;
    }

    std::uniform_int_distribution<std::int64_t> pick(0, total - 1);
    auto locate = [&](std::int64_t flat) {
        int song = 0;
        while (flat >= data.songs[(size_t)song].n_patches) {
            flat -= data.songs[(size_t)song].n_patches;
            ++song;
        }
        return std::pair<int, int>(song, (int)flat);
    };

    int pool = stft_params::kBins / data.bins;
    std::vector<TrainSample> batch((size_t)batch_size);
    for (int i = 0; i < batch_size; ++i) {
        TrainSample& ts = batch[(size_t)i];
        auto [song, patch] = locate(pick(rng));
        bool fake = allow_augmented && pool_ok && augment_every > 0 &&
                    ((sample_offset + i) % augment_every == augment_every - 1);
        if (!fake) {
            const LoadedSong& s = data.songs[(size_t)song];
            ts.song = song;
            ts.patch = patch;
            ts.mixture = &s.mixture_patches[(size_t)patch];
            ts.vocals = &s.vocals_patches[(size_t)patch];
            ts.z = slice_activations(s.activations, patch * kPatch);
        } else {
            auto [asong, apatch] = locate(pick(rng));
            const LoadedSong& vs = data.songs[(size_t)song];
            const LoadedSong& as = data.songs[(size_t)asong];
            std::vector<float> v = patch_segment(vs.vocals_wave, patch);
            std::vector<float> a = patch_segment(as.accompaniment_wave, apatch);
            std::vector<float> mixed(v.size());
            for (size_t k = 0; k < v.size(); ++k) mixed[k] = v[k] + a[k];
            ts.song = song;
            ts.patch = patch;
            ts.augmented = true;
            ts.mixture_owned = segment_magnitude(mixed, pool);
            ts.vocals_owned = segment_magnitude(v, pool);
            ts.mixture = &ts.mixture_owned;
            ts.vocals = &ts.vocals_owned;
            ts.z = slice_activations(vs.activations, patch * kPatch);
        }
    }
    return batch;
}

namespace {

struct BatchTensors {
    Tensor<float> x4;      // [B,N,M,1] model input
    Tensor<float> x3;      // [B,N,M] mixture magnitude for masking
    Tensor<float> target;  // [B,N,M]
    Tensor<float> z;       // [B,N,40]
};

BatchTensors pack_batch(const std::vector<TrainSample>& batch, int bins, bool conditioned) {
    int B = (int)batch.size();
    std::vector<float> xv((size_t)B * kPatch * bins), tv((size_t)B * kPatch * bins);
    std::vector<float> zv;
    if (conditioned) zv.resize((size_t)B * kPatch * kP);
    for (int b = 0; b < B; ++b) {
        const TrainSample& ts = batch[(size_t)b];
        std::copy(ts.mixture->v.begin(), ts.mixture->v.end(),
                  xv.begin() + (std::int64_t)b * kPatch * bins);
        std::copy(ts.vocals->v.begin(), ts.vocals->v.end(),
                  tv.begin() + (std::int64_t)b * kPatch * bins);
        if (conditioned)
            std::copy(ts.z.v.begin(), ts.z.v.end(), zv.begin() + (std::int64_t)b * kPatch * kP);
    }
    BatchTensors out;
    out.x4 = Tensor<float>::from_data({B, kPatch, bins, 1}, xv);
    out.x3 = Tensor<float>::from_data({B, kPatch, bins}, std::move(xv));
    out.target = Tensor<float>::from_data({B, kPatch, bins}, std::move(tv));
    if (conditioned) out.z = Tensor<float>::from_data({B, kPatch, kP}, std::move(zv));
    return out;
}

}  // namespace

float train_step(UNet<float>& model, AdamOptimizer<float>& opt,
                 const std::vector<TrainSample>& batch, int bins, std::mt19937& forward_rng) {
    BatchTensors bt = pack_batch(batch, bins, model.conditioned());
    Tape<float> tape;
    float loss_value;
    {
        TapeScope<float> scope(tape);
        Tensor<float> mask = model.forward(bt.x4, bt.z, true, forward_rng);
        Tensor<float> loss = mean_abs_error(mul(mask, bt.x3), bt.target);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) return loss_value;
        opt.zero_grad();
        tape.backward(loss);
    }
    opt.step();
    return loss_value;
}

float validation_loss(UNet<float>& model, const std::vector<std::vector<TrainSample>>& batches,
                      int bins) {
    std::mt19937 rng(0);  // dropout off in eval mode
    double acc = 0;
    for (const auto& batch : batches) {
        BatchTensors bt = pack_batch(batch, bins, model.conditioned());
        Tensor<float> mask = model.forward(bt.x4, bt.z, false, rng);
        acc += (double)mean_abs_error(mul(mask, bt.x3), bt.target).item();
    }
    return (float)(acc / (double)batches.size());
}

TrainResult train(UNet<float>& model, const TrainDataset& train_data, const TrainDataset& val_data,
                  const TrainConfig& cfg, const std::string& run_dir,
                  AdamOptimizer<float>* resume_optimizer, int start_epoch) {
    cfg.validate();
    if (train_data.bins != val_data.bins)
        throw std::invalid_argument("train: train/val grids differ");
    fs::create_directories(run_dir);

    {
        json j{{"batch_size", cfg.batch_size},
               {"batches_per_epoch", cfg.batches_per_epoch},
               {"lr", cfg.lr},
               {"plateau_patience", cfg.plateau_patience},
               {"early_stop_patience", cfg.early_stop_patience},
               {"min_delta", cfg.min_delta},
               {"augment_every", cfg.augment_every},
               {"val_batches", cfg.val_batches},
               {"max_epochs", cfg.max_epochs},
               {"seed", cfg.seed}};
        std::ofstream out(run_dir + "/config.json");
        out << j.dump(2) << "\n";
    }

    std::unique_ptr<AdamOptimizer<float>> owned;
    AdamOptimizer<float>* opt = resume_optimizer;
    if (!opt) {
        std::vector<Tensor<float>> tensors;
        for (auto& np : model.parameters()) tensors.push_back(np.tensor);
        owned = std::make_unique<AdamOptimizer<float>>(tensors, cfg.lr);
        opt = owned.get();
    }

    std::mt19937 sample_rng(cfg.seed);
    std::mt19937 forward_rng(cfg.seed + 1);
    std::mt19937 val_rng(cfg.seed + 2);

    // validation batches frozen at run start; never augmented
    std::vector<std::vector<TrainSample>> val_batches;
    for (int i = 0; i < cfg.val_batches; ++i)
        val_batches.push_back(sample_batch(val_data, cfg.batch_size, 0, val_rng, false));

    PlateauScheduler scheduler(0.5, cfg.plateau_patience, cfg.min_delta);
    EarlyStopper stopper(cfg.early_stop_patience, cfg.min_delta);

    std::ofstream log(run_dir + "/log.txt", start_epoch > 0 ? std::ios::app : std::ios::out);
    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    result.best_checkpoint = run_dir + "/best.ckpt";
    result.last_checkpoint = run_dir + "/last.ckpt";

    std::int64_t sample_offset = (std::int64_t)start_epoch * cfg.batches_per_epoch * cfg.batch_size;
    for (int epoch = start_epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
        double train_acc = 0;
        bool nan = false;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            auto batch = sample_batch(train_data, cfg.batch_size, cfg.augment_every, sample_rng,
                                      true, sample_offset);
            sample_offset += cfg.batch_size;
            float loss;
            try {
                loss = train_step(model, *opt, batch, train_data.bins, forward_rng);
            } catch (const std::runtime_error&) {
                loss = std::numeric_limits<float>::quiet_NaN();
            }
            if (!std::isfinite(loss)) {
                nan = true;
                break;
            }
            train_acc += loss;
        }
        if (nan) {
            CheckpointMeta meta{epoch, result.best_val_loss, opt->lr(), opt->step_count()};
            save_model(run_dir + "/nan_diagnostic.ckpt", model, opt, meta);
            std::cerr << "train: non-finite loss at epoch " << epoch
                      << ", diagnostic checkpoint written\n";
            result.aborted_nan = true;
            break;
        }

        double train_loss = train_acc / cfg.batches_per_epoch;
        double val_loss = validation_loss(model, val_batches, val_data.bins);

        EpochRecord rec{epoch, train_loss, val_loss, opt->lr()};
        result.history.push_back(rec);
        log << epoch << " " << train_loss << " " << val_loss << " " << opt->lr() << "\n";
        log.flush();

        CheckpointMeta meta{epoch, result.best_val_loss, opt->lr(), opt->step_count()};
        save_model(result.last_checkpoint, model, opt, meta);
        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            meta.best_val_loss = val_loss;
            save_model(result.best_checkpoint, model, opt, meta);
        }

        if (scheduler.observe(val_loss)) opt->set_lr(opt->lr() * scheduler.factor());
        if (stopper.observe(val_loss)) break;
    }
    return result;
}

}  // namespace phonosep
