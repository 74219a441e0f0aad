#pragma once

// Batch sampling with waveform-domain mix augmentation, masked-magnitude L1
// training, plateau scheduling, early stopping and run-directory output.

#include "phonosep/checkpoint.hpp"
#include "phonosep/dataset.hpp"
#include "phonosep/pipeline.hpp"

#include <random>

namespace phonosep {

struct TrainConfig {
    int batch_size = 128;
    int batches_per_epoch = 1024;
    double lr = 0.001;
    int plateau_patience = 15;
    int early_stop_patience = 30;
    double min_delta = 1e-5;
    int augment_every = 5;  // one fake mixture per four real ones
    int val_batches = 256;  // frozen at run start
    int max_epochs = 1000;
    unsigned seed = 0;

    void validate() const {
        if (batch_size <= 0 || batches_per_epoch <= 0 || plateau_patience <= 0 ||
            early_stop_patience <= 0 || val_batches <= 0 || max_epochs <= 0 || min_delta < 0)
            throw std::invalid_argument("TrainConfig: counts must be positive, min_delta >= 0");
    }
};

// A song loaded onto the model's grid: waveforms at 8192 Hz, patch-aligned
// magnitudes (frequency-pooled to the model's bin count) and the rasterized
// activation matrix.
struct LoadedSong {
    std::string id;
    std::vector<float> mixture_wave, vocals_wave, accompaniment_wave;
    std::vector<Mat> mixture_patches, vocals_patches;  // per patch, frames x bins
    Mat activations;                                   // padded_frames x 40
    int n_patches = 0;
};

struct TrainDataset {
    std::vector<LoadedSong> songs;
    int bins = stft_params::kBins;  // model frequency extent

    std::int64_t total_patches() const {
        std::int64_t n = 0;
        for (const auto& s : songs) n += s.n_patches;
        return n;
    }
};

// shuffle_phonemes permutes the 39 phoneme columns of each song's activation
// matrix with a per-song deterministic permutation (control condition for
// conditioning experiments); NON_PHONEME stays in place.
TrainDataset load_songs(const Manifest& manifest, const Lexicon& lexicon, int model_bins,
                        bool shuffle_phonemes = false, unsigned shuffle_seed = 0);

struct TrainSample {
    const Mat* mixture = nullptr;  // points into the dataset for real samples
    const Mat* vocals = nullptr;
    Mat mixture_owned, vocals_owned;  // storage for augmented samples
    Mat z;                            // activation slice, frames x 40
    int song = 0, patch = 0;
    bool augmented = false;
};

// Uniform over (song, patch); every augment_every-th sample (counted by
// sample_offset across batches) is a fake mixture built by adding a random
// accompaniment segment to the vocals waveform.
std::vector<TrainSample> sample_batch(const TrainDataset& data, int batch_size, int augment_every,
                                      std::mt19937& rng, bool allow_augmented = true,
                                      std::int64_t sample_offset = 0);

class PlateauScheduler {
public:
    PlateauScheduler(double factor, int patience, double min_delta)
        : factor_(factor), patience_(patience), min_delta_(min_delta) {}

    // Returns true when the learning rate should be reduced this epoch.
    bool observe(double val_loss) {
        if (val_loss < best_ - min_delta_) {
            best_ = val_loss;
            bad_ = 0;
            return false;
        }
        if (++bad_ >= patience_) {
            bad_ = 0;
            return true;
        }
        return false;
    }

    double factor() const { return factor_; }
    double best() const { return best_; }

private:
    double factor_;
    int patience_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_ = 0;
};

class EarlyStopper {
public:
    EarlyStopper(int patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

    // Returns true when training should stop after this epoch.
    bool observe(double val_loss) {
        if (val_loss < best_ - min_delta_) {
            best_ = val_loss;
            bad_ = 0;
            return false;
        }
        return ++bad_ >= patience_;
    }

    double best() const { return best_; }

private:
    int patience_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_ = 0;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0, val_loss = 0, lr = 0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    double best_val_loss = 0;
    int best_epoch = 0;
    bool aborted_nan = false;
    std::string best_checkpoint, last_checkpoint;
};

// Runs the loop and writes run_dir/{config.json,log.txt,last.ckpt,best.ckpt}.
// Resuming from a checkpoint continues epoch numbering and optimizer state.
TrainResult train(UNet<float>& model, const TrainDataset& train_data, const TrainDataset& val_data,
                  const TrainConfig& cfg, const std::string& run_dir,
                  AdamOptimizer<float>* resume_optimizer = nullptr, int start_epoch = 0);

// One optimizer step over a prepared batch; returns the loss. Exposed for
// checkpoint round-trip tests.
float train_step(UNet<float>& model, AdamOptimizer<float>& opt,
                 const std::vector<TrainSample>& batch, int bins, std::mt19937& forward_rng);

// Mean masked-magnitude L1 over frozen batches, dropout off.
float validation_loss(UNet<float>& model, const std::vector<std::vector<TrainSample>>& batches,
                      int bins);

}  // namespace phonosep
