#pragma once

// Conditioned encoder-decoder backbone producing a soft time-frequency vocal
// mask. Encoder blocks: conv(5x5, stride 2) -> batch-norm -> [FiLM] ->
// leaky ReLU(0.2). Decoder mirrors with transposed convolutions, skip
// concatenations, ReLU and dropout on the first three blocks; the final
// 1-channel transposed convolution ends in a sigmoid.

#include "phonosep/conditioning.hpp"

namespace phonosep {

struct UNetConfig {
    int depth = 6;
    int base_channels = 16;
    int input_frames = 128;
    int input_bins = 512;
    int kernel = 5;
    double leaky_slope = 0.2;
    int decoder_dropout_blocks = 3;
    double dropout_rate = 0.5;

    // Desk-scale preset for tests.
    static UNetConfig tiny() {
        UNetConfig c;
        c.depth = 3;
        c.base_channels = 4;
        c.input_frames = 64;
        c.input_bins = 64;
        return c;
    }

    std::vector<int> channel_plan() const {
        std::vector<int> plan((size_t)depth);
        for (int d = 0; d < depth; ++d) plan[(size_t)d] = base_channels << d;
        return plan;
    }

    int freq_at_depth(int d) const { return input_bins >> d; }   // 1-based depth
    int frames_at_depth(int d) const { return input_frames >> d; }

    void validate() const {
        if (input_frames % (1 << depth) != 0 || input_bins % (1 << depth) != 0)
            throw std::invalid_argument("UNetConfig: spatial extents must be divisible by 2^depth");
        if (depth < 1 || base_channels < 1) throw std::invalid_argument("UNetConfig: bad sizes");
    }
};

struct ParamBreakdown {
    long backbone = 0;
    long control = 0;
    long basis = 0;
    long total() const { return backbone + control + basis; }
};

template <typename T>
class UNet {
public:
    UNet() = default;

    UNet(const UNetConfig& cfg, const ConditioningConfig& cond, unsigned seed)
        : config_(cfg), cond_(cond) {
        cfg.validate();
        std::mt19937 rng(seed);
        auto plan = cfg.channel_plan();
        int K = cfg.kernel;

        int cin = 1;
        for (int d = 0; d < cfg.depth; ++d) {
            int cout = plan[(size_t)d];
            EncBlock blk;
            blk.kernel = Tensor<T>::zeros({K, K, cin, cout});
            blk.bias = Tensor<T>::zeros({cout});
            blk.bn_gamma = Tensor<T>::ones({cout});
            blk.bn_beta = Tensor<T>::zeros({cout});
            blk.bn_state = BatchNormState<T>(cout);
            init_truncated_normal(blk.kernel, K * K * cin, rng);
            enc_.push_back(std::move(blk));
            cin = cout;
        }

        for (int i = 0; i < cfg.depth; ++i) {
            // after block i-1 the skip concat doubles plan[depth-1-i] channels
            int in_ch =
                i == 0 ? plan[(size_t)(cfg.depth - 1)] : 2 * plan[(size_t)(cfg.depth - 1 - i)];
            int out_ch = i < cfg.depth - 1 ? plan[(size_t)(cfg.depth - 2 - i)] : 1;
            DecBlock blk;
            blk.kernel = Tensor<T>::zeros({K, K, out_ch, in_ch});
            blk.bias = Tensor<T>::zeros({out_ch});
            blk.final_block = (i == cfg.depth - 1);
            if (!blk.final_block) {
                blk.bn_gamma = Tensor<T>::ones({out_ch});
                blk.bn_beta = Tensor<T>::zeros({out_ch});
                blk.bn_state = BatchNormState<T>(out_ch);
            }
            blk.use_dropout = (i < cfg.decoder_dropout_blocks) && !blk.final_block;
            init_truncated_normal(blk.kernel, K * K * in_ch, rng);
            dec_.push_back(std::move(blk));
        }

        if (cond_.mode == ConditioningMode::WeakSimple) {
            control_ = WeakControl<T>(WeakControlConfig::simple(cfg.depth),
                                      PhonemeVocabulary::kSize, rng);
        } else if (cond_.mode == ConditioningMode::WeakComplex) {
            control_ = WeakControl<T>(WeakControlConfig::complex_cfg(plan),
                                      PhonemeVocabulary::kSize, rng);
        } else if (cond_.mode == ConditioningMode::Strong) {
            std::vector<int> depths;
            if (cond_.insertion == Insertion::Complete)
                for (int d = 1; d <= cfg.depth; ++d) depths.push_back(d);
            else
                depths.push_back(cfg.depth);
            basis_ = StrongBasis<T>(
                cond_.strong_variant, depths, [&](int d) { return cfg.freq_at_depth(d); },
                [&](int d) { return plan[(size_t)(d - 1)]; }, PhonemeVocabulary::kSize, rng);
        }
    }

    const UNetConfig& config() const { return config_; }
    const ConditioningConfig& conditioning() const { return cond_; }
    WeakControl<T>& control() { return control_; }
    StrongBasis<T>& basis() { return basis_; }

    bool conditioned() const { return cond_.mode != ConditioningMode::None; }

    // x: [B,N,M,1] (or [N,M,1]); z: raw binary [B,N,P], required iff
    // conditioned. Returns the mask [B,N,M] in (0,1).
    Tensor<T> forward(const Tensor<T>& x_in, const Tensor<T>& z_in, bool train,
                      std::mt19937& rng) {
        Shape xs = x_in.shape();
        bool batched = xs.size() == 4;
        if (!batched && xs.size() != 3)
            throw std::invalid_argument("unet forward: x must be [B,N,M,1] or [N,M,1]");
        Tensor<T> x = batched ? x_in : reshape(x_in, {1, xs[0], xs[1], xs[2]});
        int B = x.shape()[0];
        if (x.shape()[1] != config_.input_frames || x.shape()[2] != config_.input_bins ||
            x.shape()[3] != 1)
            throw std::invalid_argument("unet forward: expected input [B," +
                                        std::to_string(config_.input_frames) + "," +
                                        std::to_string(config_.input_bins) + ",1], got " +
                                        shape_str(x_in.shape()));

        Tensor<T> z;
        if (conditioned()) {
            if (!z_in.defined())
                throw std::invalid_argument("unet forward: conditioning requires a phoneme matrix");
            z = z_in.shape().size() == 2
                    ? reshape(z_in, {1, z_in.shape()[0], z_in.shape()[1]})
                    : z_in;
            if (z.shape() != Shape{B, config_.input_frames, PhonemeVocabulary::kSize})
                throw std::invalid_argument("unet forward: z must be [B,N,40], got " +
                                            shape_str(z_in.shape()));
        }

        // weak control outputs, strong normalized activations
        Tensor<T> weak_gammas, weak_betas, z_norm;
        if (cond_.mode == ConditioningMode::WeakSimple ||
            cond_.mode == ConditioningMode::WeakComplex) {
            auto gb = control_.forward(z, train, rng);
            weak_gammas = gb.first;
            weak_betas = gb.second;
        } else if (cond_.mode == ConditioningMode::Strong) {
            z_norm = softmax(z, 2);
        }

        auto plan = config_.channel_plan();
        std::vector<Tensor<T>> skips;
        Tensor<T> h = x;
        int weak_offset = 0;
        for (int d = 0; d < config_.depth; ++d) {
            EncBlock& blk = enc_[(size_t)d];
            h = conv2d(h, blk.kernel);
            h = add(h, broadcast(blk.bias, h.shape()));
            h = batch_norm(h, blk.bn_gamma, blk.bn_beta, blk.bn_state, train);
            // FiLM after batch normalization, before the leaky ReLU
            int depth1 = d + 1;
            if (cond_.mode == ConditioningMode::WeakSimple) {
                Tensor<T> g = slice_last(weak_gammas, d, 1);  // [B,1]
                Tensor<T> b = slice_last(weak_betas, d, 1);
                h = film_weak(h, g, b);
            } else if (cond_.mode == ConditioningMode::WeakComplex) {
                Tensor<T> g = slice_last(weak_gammas, weak_offset, plan[(size_t)d]);
                Tensor<T> b = slice_last(weak_betas, weak_offset, plan[(size_t)d]);
                h = film_weak(h, g, b);
            } else if (cond_.mode == ConditioningMode::Strong) {
                int bi = basis_.index_of_depth(depth1);
                if (bi >= 0) {
                    Tensor<T> z_d = depth_activations(z_norm, depth1);
                    h = film_strong(h, z_d, basis_.gammas[(size_t)bi], basis_.betas[(size_t)bi],
                                    cond_.strong_variant);
                }
            }
            h = leaky_relu(h, T(config_.leaky_slope));
            weak_offset += plan[(size_t)d];
            skips.push_back(h);
        }

        for (int i = 0; i < config_.depth; ++i) {
            DecBlock& blk = dec_[(size_t)i];
            h = conv2d_transpose(h, blk.kernel);
            h = add(h, broadcast(blk.bias, h.shape()));
            if (blk.final_block) {
                h = sigmoid(h);
            } else {
                h = batch_norm(h, blk.bn_gamma, blk.bn_beta, blk.bn_state, train);
                h = relu(h);
                if (blk.use_dropout) h = dropout(h, config_.dropout_rate, train, rng);
                h = concat_last(h, skips[(size_t)(config_.depth - 2 - i)]);
            }
        }

        Tensor<T> mask = reshape(h, {B, config_.input_frames, config_.input_bins});
        return batched ? mask : reshape(mask, {config_.input_frames, config_.input_bins});
    }

    // Average-pool the normalized activation matrix to the time grid of a
    // 1-based depth: [B,N,P] -> [B,N/2^d,P]. Rows stay stochastic.
    Tensor<T> depth_activations(const Tensor<T>& z_norm, int depth1) const {
        int B = z_norm.shape()[0], N = z_norm.shape()[1], P = z_norm.shape()[2];
        int win = 1 << depth1;
        if (N % win != 0)
            throw std::invalid_argument("depth_activations: frames not divisible by 2^depth");
        Tensor<T> r = reshape(z_norm, {B, N / win, win, P});
        return reduce_mean(r, 2);
    }

    std::vector<NamedParam<T>> parameters() {
        std::vector<NamedParam<T>> out;
        for (size_t d = 0; d < enc_.size(); ++d) {
            std::string p = "enc" + std::to_string(d) + ".";
            out.push_back({p + "kernel", enc_[d].kernel});
            out.push_back({p + "bias", enc_[d].bias});
            out.push_back({p + "bn_gamma", enc_[d].bn_gamma});
            out.push_back({p + "bn_beta", enc_[d].bn_beta});
        }
        for (size_t i = 0; i < dec_.size(); ++i) {
            std::string p = "dec" + std::to_string(i) + ".";
            out.push_back({p + "kernel", dec_[i].kernel});
            out.push_back({p + "bias", dec_[i].bias});
            if (!dec_[i].final_block) {
                out.push_back({p + "bn_gamma", dec_[i].bn_gamma});
                out.push_back({p + "bn_beta", dec_[i].bn_beta});
            }
        }
        if (cond_.mode == ConditioningMode::WeakSimple ||
            cond_.mode == ConditioningMode::WeakComplex)
            for (auto& np : control_.parameters()) out.push_back(np);
        if (cond_.mode == ConditioningMode::Strong)
            for (auto& np : basis_.parameters()) out.push_back(np);
        return out;
    }

    // Batch-norm running statistics, for checkpointing.
    std::vector<std::pair<std::string, std::vector<T>*>> buffers() {
        std::vector<std::pair<std::string, std::vector<T>*>> out;
        for (size_t d = 0; d < enc_.size(); ++d) {
            std::string p = "enc" + std::to_string(d) + ".";
            out.push_back({p + "bn_rmean", &enc_[d].bn_state.running_mean});
            out.push_back({p + "bn_rvar", &enc_[d].bn_state.running_var});
        }
        for (size_t i = 0; i < dec_.size(); ++i) {
            if (dec_[i].final_block) continue;
            std::string p = "dec" + std::to_string(i) + ".";
            out.push_back({p + "bn_rmean", &dec_[i].bn_state.running_mean});
            out.push_back({p + "bn_rvar", &dec_[i].bn_state.running_var});
        }
        if (cond_.mode == ConditioningMode::WeakSimple ||
            cond_.mode == ConditioningMode::WeakComplex) {
            out.push_back({"control.bn1_rmean", &control_.bn1_state.running_mean});
            out.push_back({"control.bn1_rvar", &control_.bn1_state.running_var});
            out.push_back({"control.bn2_rmean", &control_.bn2_state.running_mean});
            out.push_back({"control.bn2_rvar", &control_.bn2_state.running_var});
        }
        return out;
    }

    // Learnable parameter totals by component.
    ParamBreakdown count_parameters() {
        ParamBreakdown pb;
        for (auto& np : parameters()) {
            long n = (long)np.tensor.numel();
            if (np.name.rfind("control.", 0) == 0)
                pb.control += n;
            else if (np.name.rfind("basis.", 0) == 0)
                pb.basis += n;
            else
                pb.backbone += n;
        }
        return pb;
    }

private:
    struct EncBlock {
        Tensor<T> kernel, bias, bn_gamma, bn_beta;
        BatchNormState<T> bn_state;
    };
    struct DecBlock {
        Tensor<T> kernel, bias, bn_gamma, bn_beta;
        BatchNormState<T> bn_state;
        bool final_block = false;
        bool use_dropout = false;
    };

    UNetConfig config_;
    ConditioningConfig cond_;
    std::vector<EncBlock> enc_;
    std::vector<DecBlock> dec_;
    WeakControl<T> control_;
    StrongBasis<T> basis_;
};

// ---------------------------------------------------------------------------
// Named model variants (the 11 configurations) and parameter auditing.
// ---------------------------------------------------------------------------

const std::vector<std::string>& model_variants();
ConditioningConfig config_for_variant(const std::string& variant);

// Learnable-parameter increment over the base U-Net (or the base total for
// "unet"), computed by instantiating the model at the given config.
long param_count(const std::string& variant, const UNetConfig& cfg = UNetConfig());

}  // namespace phonosep
