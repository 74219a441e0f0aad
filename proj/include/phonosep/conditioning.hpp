#pragma once

// FiLM machinery: weak control networks emitting (gamma, beta) per depth,
// strong per-phoneme basis tensors activated by the aligned phoneme matrix,
// and the affine modulation ops themselves.

#include "phonosep/nn.hpp"
#include "phonosep/optim.hpp"
#include "phonosep/phoneme.hpp"

namespace phonosep {

enum class ConditioningMode { None, WeakSimple, WeakComplex, Strong };
enum class StrongVariant { All, Channel, Frequency, Scalar };
enum class Insertion { Complete, Bottleneck };

struct ConditioningConfig {
    ConditioningMode mode = ConditioningMode::None;
    StrongVariant strong_variant = StrongVariant::Scalar;
    Insertion insertion = Insertion::Complete;
};

std::string to_string(ConditioningMode m);
std::string to_string(StrongVariant v);
std::string to_string(Insertion i);
ConditioningMode conditioning_mode_from_string(const std::string& s);
StrongVariant strong_variant_from_string(const std::string& s);
Insertion insertion_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// film_weak: gamma/beta are scalar or per-channel, identical at every
// time-frequency position. Accepts x [B,W,H,C] (or [W,H,C]) and gamma/beta
// of shape [1], [C], [B,1] or [B,C].
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> film_weak(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
    if (gamma.shape() != beta.shape())
        throw std::invalid_argument("film_weak: gamma/beta shape mismatch");
    const Shape& xs = x.shape();
    if (xs.size() != 3 && xs.size() != 4)
        throw std::invalid_argument("film_weak: x must be [W,H,C] or [B,W,H,C]");
    int C = xs.back();
    int B = xs.size() == 4 ? xs[0] : 1;
    const Shape& gs = gamma.shape();

    auto as_mod_shape = [&](const Tensor<T>& t) -> Tensor<T> {
        if (gs == Shape{1} || gs == Shape{C}) return t;  // right-aligned broadcast handles these
        if (xs.size() == 4 && gs == Shape{B, 1}) return reshape(t, {B, 1, 1, 1});
        if (xs.size() == 4 && gs == Shape{B, C}) return reshape(t, {B, 1, 1, C});
        throw std::invalid_argument("film_weak: illegal gamma shape " + shape_str(gs) +
                                    " for x " + shape_str(xs));
    };
    Tensor<T> g = broadcast(as_mod_shape(gamma), xs);
    Tensor<T> b = broadcast(as_mod_shape(beta), xs);
    return add(mul(g, x), b);
}

// ---------------------------------------------------------------------------
// film_strong: per-frame modulation (gamma x z_d) . x_d + (beta x z_d) where
// z_d is the row-stochastic activation matrix at this depth and gamma/beta
// are basis tensors in one of the variant shapes.
//   all:       [H,C,P]   channel: [C,P]
//   frequency: [H,P]     scalar:  [P]
// ---------------------------------------------------------------------------

template <typename T>
void check_basis_shape(const Shape& bs, StrongVariant variant, int H, int C, int P) {
    bool ok = false;
    switch (variant) {
        case StrongVariant::All: ok = bs == Shape{H, C, P}; break;
        case StrongVariant::Channel: ok = bs == Shape{C, P}; break;
        case StrongVariant::Frequency: ok = bs == Shape{H, P}; break;
        case StrongVariant::Scalar: ok = bs == Shape{P}; break;
    }
    if (!ok)
        throw std::invalid_argument("film_strong: basis shape " + shape_str(bs) +
                                    " does not match variant " + to_string(variant) +
                                    " with H=" + std::to_string(H) + " C=" + std::to_string(C) +
                                    " P=" + std::to_string(P));
}

template <typename T>
Tensor<T> film_strong(const Tensor<T>& x, const Tensor<T>& z_d, const Tensor<T>& gamma,
                      const Tensor<T>& beta, StrongVariant variant) {
    Shape xs = x.shape();
    bool batched = xs.size() == 4;
    if (!batched && xs.size() != 3)
        throw std::invalid_argument("film_strong: x must be [W,H,C] or [B,W,H,C]");
    Tensor<T> xb = batched ? x : reshape(x, {1, xs[0], xs[1], xs[2]});
    Tensor<T> zb = z_d;
    if (z_d.shape().size() == 2)
        zb = reshape(z_d, {1, z_d.shape()[0], z_d.shape()[1]});
    if (zb.shape().size() != 3)
        throw std::invalid_argument("film_strong: z_d must be [W,P] or [B,W,P]");
    int B = xb.shape()[0], W = xb.shape()[1], H = xb.shape()[2], C = xb.shape()[3];
    int P = zb.shape()[2];
    if (zb.shape()[0] != B || zb.shape()[1] != W)
        throw std::invalid_argument("film_strong: time extent mismatch, x " + shape_str(xb.shape()) +
                                    " vs z_d " + shape_str(zb.shape()));
    check_basis_shape<T>(gamma.shape(), variant, H, C, P);
    check_basis_shape<T>(beta.shape(), variant, H, C, P);

    auto modulation = [&](const Tensor<T>& basis) -> Tensor<T> {
        Tensor<T> m = contract_p(zb, basis);  // [B,W,...]
        switch (variant) {
            case StrongVariant::All: return broadcast(m, {B, W, H, C});
            case StrongVariant::Channel: return broadcast(reshape(m, {B, W, 1, C}), {B, W, H, C});
            case StrongVariant::Frequency: return broadcast(reshape(m, {B, W, H, 1}), {B, W, H, C});
            case StrongVariant::Scalar: return broadcast(reshape(m, {B, W, 1, 1}), {B, W, H, C});
        }
        throw std::logic_error("unreachable");
    };
    Tensor<T> out = add(mul(modulation(gamma), xb), modulation(beta));
    return batched ? out : reshape(out, xs);
}

// ---------------------------------------------------------------------------
// Weak control network: autopool over time, a dense layer, two dense blocks
// (dense + 50% dropout + batch-norm, ReLU), then two parallel linear heads
// emitting all gamma_d and all beta_d.
// ---------------------------------------------------------------------------

struct WeakControlConfig {
    bool complex_variant = false;
    std::vector<int> dense_widths;  // simple: 32,64,128; complex: 64,256,1024
    int head_width = 0;             // depth (simple) or sum of channels (complex)

    static WeakControlConfig simple(int depth_blocks) {
        return {false, {32, 64, 128}, depth_blocks};
    }
    static WeakControlConfig complex_cfg(const std::vector<int>& channels) {
        int head = 0;
        for (int c : channels) head += c;
        return {true, {64, 256, 1024}, head};
    }
};

template <typename T>
struct WeakControl {
    WeakControlConfig config;
    Tensor<T> alpha;  // autopool temperature, one per phoneme dimension
    Tensor<T> w0, b0;
    Tensor<T> w1, b1, bn1_gamma, bn1_beta;
    Tensor<T> w2, b2, bn2_gamma, bn2_beta;
    Tensor<T> head_gamma_w, head_gamma_b;
    Tensor<T> head_beta_w, head_beta_b;
    BatchNormState<T> bn1_state, bn2_state;

    WeakControl() = default;

    WeakControl(const WeakControlConfig& cfg, int P, std::mt19937& rng) : config(cfg) {
        const auto& u = cfg.dense_widths;
        alpha = Tensor<T>::zeros({P});
        w0 = Tensor<T>::zeros({P, u[0]});
        b0 = Tensor<T>::zeros({u[0]});
        w1 = Tensor<T>::zeros({u[0], u[1]});
        b1 = Tensor<T>::zeros({u[1]});
        bn1_gamma = Tensor<T>::ones({u[1]});
        bn1_beta = Tensor<T>::zeros({u[1]});
        w2 = Tensor<T>::zeros({u[1], u[2]});
        b2 = Tensor<T>::zeros({u[2]});
        bn2_gamma = Tensor<T>::ones({u[2]});
        bn2_beta = Tensor<T>::zeros({u[2]});
        head_gamma_w = Tensor<T>::zeros({u[2], cfg.head_width});
        head_gamma_b = Tensor<T>::ones({cfg.head_width});  // near-identity modulation at start
        head_beta_w = Tensor<T>::zeros({u[2], cfg.head_width});
        head_beta_b = Tensor<T>::zeros({cfg.head_width});
        bn1_state = BatchNormState<T>(u[1]);
        bn2_state = BatchNormState<T>(u[2]);
        init_truncated_normal(w0, P, rng);
        init_truncated_normal(w1, u[0], rng);
        init_truncated_normal(w2, u[1], rng);
        init_truncated_normal(head_gamma_w, u[2], rng);
        init_truncated_normal(head_beta_w, u[2], rng);
    }

    // z: raw binary activation patch [B,N,P]. Returns {gammas, betas}, each
    // [B, head_width].
    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& z, bool train, std::mt19937& rng) {
        if (z.shape().size() != 3 || z.shape()[2] != PhonemeVocabulary::kSize)
            throw std::invalid_argument("weak control: z must be [B,N,40], got " +
                                        shape_str(z.shape()));
        Tensor<T> h = autopool(z, alpha);  // [B,P]
        h = relu(dense(h, w0, b0));
        h = dense(h, w1, b1);
        h = dropout(h, 0.5, train, rng);
        h = relu(batch_norm(h, bn1_gamma, bn1_beta, bn1_state, train));
        h = dense(h, w2, b2);
        h = dropout(h, 0.5, train, rng);
        h = relu(batch_norm(h, bn2_gamma, bn2_beta, bn2_state, train));
        Tensor<T> gammas = dense(h, head_gamma_w, head_gamma_b);
        Tensor<T> betas = dense(h, head_beta_w, head_beta_b);
        return {gammas, betas};
    }

    std::vector<NamedParam<T>> parameters() {
        return {{"control.alpha", alpha},
                {"control.w0", w0},
                {"control.b0", b0},
                {"control.w1", w1},
                {"control.b1", b1},
                {"control.bn1_gamma", bn1_gamma},
                {"control.bn1_beta", bn1_beta},
                {"control.w2", w2},
                {"control.b2", b2},
                {"control.bn2_gamma", bn2_gamma},
                {"control.bn2_beta", bn2_beta},
                {"control.head_gamma_w", head_gamma_w},
                {"control.head_gamma_b", head_gamma_b},
                {"control.head_beta_w", head_beta_w},
                {"control.head_beta_b", head_beta_b}};
    }
};

// ---------------------------------------------------------------------------
// Strong basis tensors per conditioned depth.
// ---------------------------------------------------------------------------

template <typename T>
struct StrongBasis {
    StrongVariant variant = StrongVariant::Scalar;
    std::vector<int> depths;  // 1-based conditioned depths
    std::vector<Tensor<T>> gammas, betas;

    StrongBasis() = default;

    // H_of / C_of give the feature-map extents at each 1-based depth.
    StrongBasis(StrongVariant v, const std::vector<int>& conditioned_depths,
                const std::function<int(int)>& H_of, const std::function<int(int)>& C_of, int P,
                std::mt19937& rng)
        : variant(v), depths(conditioned_depths) {
        for (int d : depths) {
            Shape s;
            switch (v) {
                case StrongVariant::All: s = {H_of(d), C_of(d), P}; break;
                case StrongVariant::Channel: s = {C_of(d), P}; break;
                case StrongVariant::Frequency: s = {H_of(d), P}; break;
                case StrongVariant::Scalar: s = {P}; break;
            }
            Tensor<T> g = Tensor<T>::zeros(s);
            Tensor<T> b = Tensor<T>::zeros(s);
            // training starts near the identity modulation
            init_normal(g, 1.0, 0.02, rng);
            init_normal(b, 0.0, 0.02, rng);
            gammas.push_back(g);
            betas.push_back(b);
        }
    }

    int index_of_depth(int d) const {
        for (size_t i = 0; i < depths.size(); ++i)
            if (depths[i] == d) return (int)i;
        return -1;
    }

    std::vector<NamedParam<T>> parameters() {
        std::vector<NamedParam<T>> out;
        for (size_t i = 0; i < depths.size(); ++i) {
            out.push_back({"basis.gamma_d" + std::to_string(depths[i]), gammas[i]});
            out.push_back({"basis.beta_d" + std::to_string(depths[i]), betas[i]});
        }
        return out;
    }
};

}  // namespace phonosep
