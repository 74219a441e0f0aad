#pragma once

// Binary model checkpoint: versioned header, named parameter entries with
// raw little-endian values, optimizer state and training metadata. The
// layout is documented in docs/formats.md; round-trips are bit-exact.

#include "phonosep/optim.hpp"
#include "phonosep/unet.hpp"

#include <memory>

namespace phonosep {

struct CheckpointMeta {
    int epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double lr = 1e-3;
    long opt_step = 0;
    std::uint64_t vocab_fingerprint = 0;
};

struct LoadedModel {
    UNet<float> model;
    std::unique_ptr<AdamOptimizer<float>> optimizer;
    CheckpointMeta meta;
};

void save_model(const std::string& path, UNet<float>& model, AdamOptimizer<float>* optimizer,
                const CheckpointMeta& meta);

LoadedModel load_model(const std::string& path);

// Human-readable sidecar (variant, config, vocabulary fingerprint) written
// next to the checkpoint as <path>.json.
void write_sidecar(const std::string& checkpoint_path, const UNet<float>& model,
                   const CheckpointMeta& meta,
                   const std::vector<std::string>& metric_history = {});

}  // namespace phonosep
