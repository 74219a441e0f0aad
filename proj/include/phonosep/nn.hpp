#pragma once

// Neural-network layers on top of the tensor engine: strided convolutions,
// their adjoint (transposed convolution), batch normalization, dropout and
// weight initialization.

#include "phonosep/tensor.hpp"

namespace phonosep {

// conv2d with stride 2 and SAME padding. Input [B,W,H,Cin] (a 3-D [W,H,Cin]
// input is treated as batch 1), kernel [K,K,Cin,Cout].
// Output spatial extents are ceil(in/2); for even inputs exactly halved.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel) {
    Shape is = input.shape();
    bool batched = is.size() == 4;
    if (!batched && is.size() != 3)
        throw std::invalid_argument("conv2d: input must be [B,W,H,C] or [W,H,C], got " +
                                    shape_str(is));
    Tensor<T> x = batched ? input : reshape(input, {1, is[0], is[1], is[2]});
    const Shape& ks = kernel.shape();
    if (ks.size() != 4 || ks[0] != ks[1])
        throw std::invalid_argument("conv2d: kernel must be [K,K,Cin,Cout], got " + shape_str(ks));
    int B = x.shape()[0], W = x.shape()[1], H = x.shape()[2], Ci = x.shape()[3];
    int K = ks[0], Co = ks[3];
    if (ks[2] != Ci)
        throw std::invalid_argument("conv2d: kernel Cin=" + std::to_string(ks[2]) +
                                    " does not match input channels " + std::to_string(Ci) +
                                    " (input " + shape_str(is) + ", kernel " + shape_str(ks) + ")");
    const int S = 2;
    int Wo = (W + S - 1) / S, Ho = (H + S - 1) / S;
    int padW = std::max(0, (Wo - 1) * S + K - W);
    int padH = std::max(0, (Ho - 1) * S + K - H);
    int pw0 = padW / 2, ph0 = padH / 2;

    std::vector<T> v((size_t)B * Wo * Ho * Co, T(0));
    const T* X = x.data().data();
    const T* Ker = kernel.data().data();
#pragma omp parallel for collapse(2)
    for (int b = 0; b < B; ++b)
        for (int ow = 0; ow < Wo; ++ow)
            for (int oh = 0; oh < Ho; ++oh) {
                T* out = &v[(size_t)(((std::int64_t)b * Wo + ow) * Ho + oh) * Co];
                for (int kw = 0; kw < K; ++kw) {
                    int iw = ow * S + kw - pw0;
                    if (iw < 0 || iw >= W) continue;
                    for (int kh = 0; kh < K; ++kh) {
                        int ih = oh * S + kh - ph0;
                        if (ih < 0 || ih >= H) continue;
                        const T* xin = &X[(size_t)(((std::int64_t)b * W + iw) * H + ih) * Ci];
                        const T* kr = &Ker[(size_t)((kw * K + kh) * Ci) * Co];
                        for (int ci = 0; ci < Ci; ++ci) {
                            T xv = xin[ci];
                            const T* kc = &kr[(size_t)ci * Co];
                            for (int co = 0; co < Co; ++co) out[co] += xv * kc[co];
                        }
                    }
                }
            }

    auto bw = [x, kernel, B, W, H, Ci, K, Co, Wo, Ho, pw0, ph0, S](Node<T>& out) {
        auto& gx = x.grad();
        auto& gk = kernel.grad();
        const T* G = out.grad.data();
        for (int b = 0; b < B; ++b)
            for (int ow = 0; ow < Wo; ++ow)
                for (int oh = 0; oh < Ho; ++oh) {
                    const T* g = &G[(size_t)(((std::int64_t)b * Wo + ow) * Ho + oh) * Co];
                    for (int kw = 0; kw < K; ++kw) {
                        int iw = ow * S + kw - pw0;
                        if (iw < 0 || iw >= W) continue;
                        for (int kh = 0; kh < K; ++kh) {
                            int ih = oh * S + kh - ph0;
                            if (ih < 0 || ih >= H) continue;
                            size_t xbase = (size_t)(((std::int64_t)b * W + iw) * H + ih) * Ci;
                            size_t kbase = (size_t)((kw * K + kh) * Ci) * Co;
                            for (int ci = 0; ci < Ci; ++ci) {
                                T xv = x.data()[xbase + ci];
                                T acc = T(0);
                                for (int co = 0; co < Co; ++co) {
                                    T gv = g[co];
                                    acc += gv * kernel.data()[kbase + (size_t)ci * Co + co];
                                    gk[kbase + (size_t)ci * Co + co] += gv * xv;
                                }
                                gx[xbase + ci] += acc;
                            }
                        }
                    }
                }
    };
    Tensor<T> y = detail::make_op<T>({B, Wo, Ho, Co}, std::move(v), {x, kernel}, bw);
    return batched ? y : reshape(y, {Wo, Ho, Co});
}

// Adjoint of conv2d: maps [B,W,H,Cout] -> [B,2W,2H,Cin] with the same kernel
// layout [K,K,Cin,Cout], so that <conv2d(x,k), y> == <x, conv2d_transpose(y,k)>.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& kernel) {
    Shape is = input.shape();
    bool batched = is.size() == 4;
    if (!batched && is.size() != 3)
        throw std::invalid_argument("conv2d_transpose: input must be [B,W,H,C] or [W,H,C]");
    Tensor<T> x = batched ? input : reshape(input, {1, is[0], is[1], is[2]});
    const Shape& ks = kernel.shape();
    if (ks.size() != 4 || ks[0] != ks[1])
        throw std::invalid_argument("conv2d_transpose: kernel must be [K,K,Cin,Cout]");
    int B = x.shape()[0], Wo = x.shape()[1], Ho = x.shape()[2], Co = x.shape()[3];
    int K = ks[0], Ci = ks[2];
    if (ks[3] != Co)
        throw std::invalid_argument("conv2d_transpose: kernel Cout=" + std::to_string(ks[3]) +
                                    " does not match input channels " + std::to_string(Co));
    const int S = 2;
    int W = Wo * S, H = Ho * S;
    int padW = std::max(0, (Wo - 1) * S + K - W);
    int padH = std::max(0, (Ho - 1) * S + K - H);
    int pw0 = padW / 2, ph0 = padH / 2;

    std::vector<T> v((size_t)B * W * H * Ci, T(0));
    const T* X = x.data().data();
    const T* Ker = kernel.data().data();
    for (int b = 0; b < B; ++b)
        for (int ow = 0; ow < Wo; ++ow)
            for (int oh = 0; oh < Ho; ++oh) {
                const T* xin = &X[(size_t)(((std::int64_t)b * Wo + ow) * Ho + oh) * Co];
                for (int kw = 0; kw < K; ++kw) {
                    int iw = ow * S + kw - pw0;
                    if (iw < 0 || iw >= W) continue;
                    for (int kh = 0; kh < K; ++kh) {
                        int ih = oh * S + kh - ph0;
                        if (ih < 0 || ih >= H) continue;
                        T* out = &v[(size_t)(((std::int64_t)b * W + iw) * H + ih) * Ci];
                        const T* kr = &Ker[(size_t)((kw * K + kh) * Ci) * Co];
                        for (int ci = 0; ci < Ci; ++ci) {
                            T acc = T(0);
                            const T* kc = &kr[(size_t)ci * Co];
                            for (int co = 0; co < Co; ++co) acc += xin[co] * kc[co];
                            out[ci] += acc;
                        }
                    }
                }
            }

    auto bw = [x, kernel, B, W, H, Ci, K, Co, Wo, Ho, pw0, ph0, S](Node<T>& out) {
        auto& gx = x.grad();
        auto& gk = kernel.grad();
        const T* G = out.grad.data();
        for (int b = 0; b < B; ++b)
            for (int ow = 0; ow < Wo; ++ow)
                for (int oh = 0; oh < Ho; ++oh) {
                    size_t xbase = (size_t)(((std::int64_t)b * Wo + ow) * Ho + oh) * Co;
                    for (int kw = 0; kw < K; ++kw) {
                        int iw = ow * S + kw - pw0;
                        if (iw < 0 || iw >= W) continue;
                        for (int kh = 0; kh < K; ++kh) {
                            int ih = oh * S + kh - ph0;
                            if (ih < 0 || ih >= H) continue;
                            const T* g = &G[(size_t)(((std::int64_t)b * W + iw) * H + ih) * Ci];
                            size_t kbase = (size_t)((kw * K + kh) * Ci) * Co;
                            for (int ci = 0; ci < Ci; ++ci) {
                                T gv = g[ci];
                                for (int co = 0; co < Co; ++co) {
                                    gx[xbase + co] += gv * kernel.data()[kbase + (size_t)ci * Co + co];
                                    gk[kbase + (size_t)ci * Co + co] += gv * x.data()[xbase + co];
                                }
                            }
                        }
                    }
                }
    };
    Tensor<T> y = detail::make_op<T>({B, W, H, Ci}, std::move(v), {x, kernel}, bw);
    return batched ? y : reshape(y, {W, H, Ci});
}

// ---------------------------------------------------------------------------
// Batch normalization over the channel (trailing) axis.
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormState {
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T momentum = T(0.99);
    T eps = T(1e-5);

    explicit BatchNormState(int channels = 0)
        : running_mean((size_t)channels, T(0)), running_var((size_t)channels, T(1)) {}
};

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, bool train) {
    const Shape& s = x.shape();
    int C = s.back();
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
        throw std::invalid_argument("batch_norm: gamma/beta must be [C]");
    if ((int)state.running_mean.size() != C)
        throw std::invalid_argument("batch_norm: state channel count mismatch");
    std::int64_t m = x.numel() / C;
    std::vector<T> v(x.data().size());

    if (train) {
        std::vector<double> mu((size_t)C, 0), var((size_t)C, 0);
        for (std::int64_t i = 0; i < m; ++i)
            for (int c = 0; c < C; ++c) mu[(size_t)c] += (double)x.data()[(size_t)(i * C + c)];
        for (int c = 0; c < C; ++c) mu[(size_t)c] /= (double)m;
        for (std::int64_t i = 0; i < m; ++i)
            for (int c = 0; c < C; ++c) {
                double d = (double)x.data()[(size_t)(i * C + c)] - mu[(size_t)c];
                var[(size_t)c] += d * d;
            }
        for (int c = 0; c < C; ++c) var[(size_t)c] /= (double)m;

        auto muT = std::make_shared<std::vector<T>>((size_t)C);
        auto ivarT = std::make_shared<std::vector<T>>((size_t)C);
        for (int c = 0; c < C; ++c) {
            (*muT)[(size_t)c] = T(mu[(size_t)c]);
            (*ivarT)[(size_t)c] = T(1.0 / std::sqrt(var[(size_t)c] + (double)state.eps));
        }
        for (std::int64_t i = 0; i < m; ++i)
            for (int c = 0; c < C; ++c) {
                T xh = (x.data()[(size_t)(i * C + c)] - (*muT)[(size_t)c]) * (*ivarT)[(size_t)c];
                v[(size_t)(i * C + c)] = gamma.data()[(size_t)c] * xh + beta.data()[(size_t)c];
            }
        for (int c = 0; c < C; ++c) {
            state.running_mean[(size_t)c] =
                state.momentum * state.running_mean[(size_t)c] + (T(1) - state.momentum) * T(mu[(size_t)c]);
            state.running_var[(size_t)c] =
                state.momentum * state.running_var[(size_t)c] + (T(1) - state.momentum) * T(var[(size_t)c]);
        }

        auto bw = [x, gamma, beta, muT, ivarT, m, C](Node<T>& out) {
            auto& gx = x.grad();
            auto& gg = gamma.grad();
            auto& gb = beta.grad();
            for (int c = 0; c < C; ++c) {
                double sum_g = 0, sum_gxh = 0;
                T mu_c = (*muT)[(size_t)c], iv = (*ivarT)[(size_t)c];
                for (std::int64_t i = 0; i < m; ++i) {
                    size_t idx = (size_t)(i * C + c);
                    double xh = ((double)x.data()[idx] - (double)mu_c) * (double)iv;
                    sum_g += (double)out.grad[idx];
                    sum_gxh += (double)out.grad[idx] * xh;
                }
                gg[(size_t)c] += T(sum_gxh);
                gb[(size_t)c] += T(sum_g);
                double gam = (double)gamma.data()[(size_t)c];
                for (std::int64_t i = 0; i < m; ++i) {
                    size_t idx = (size_t)(i * C + c);
                    double xh = ((double)x.data()[idx] - (double)mu_c) * (double)iv;
                    double dxh = (double)out.grad[idx] * gam;
                    gx[idx] += T((double)iv * (dxh - sum_g * gam / (double)m -
                                               xh * sum_gxh * gam / (double)m));
                }
            }
        };
        return detail::make_op<T>(s, std::move(v), {x, gamma, beta}, bw);
    }

    // eval mode: running statistics are constants
    std::vector<T> iv((size_t)C);
    for (int c = 0; c < C; ++c)
        iv[(size_t)c] = T(1.0 / std::sqrt((double)state.running_var[(size_t)c] + (double)state.eps));
    for (std::int64_t i = 0; i < m; ++i)
        for (int c = 0; c < C; ++c) {
            T xh = (x.data()[(size_t)(i * C + c)] - state.running_mean[(size_t)c]) * iv[(size_t)c];
            v[(size_t)(i * C + c)] = gamma.data()[(size_t)c] * xh + beta.data()[(size_t)c];
        }
    std::vector<T> rm = state.running_mean;
    auto bw = [x, gamma, beta, iv, rm, m, C](Node<T>& out) {
        auto& gx = x.grad();
        auto& gg = gamma.grad();
        auto& gb = beta.grad();
        for (std::int64_t i = 0; i < m; ++i)
            for (int c = 0; c < C; ++c) {
                size_t idx = (size_t)(i * C + c);
                T xh = (x.data()[idx] - rm[(size_t)c]) * iv[(size_t)c];
                gx[idx] += out.grad[idx] * gamma.data()[(size_t)c] * iv[(size_t)c];
                gg[(size_t)c] += out.grad[idx] * xh;
                gb[(size_t)c] += out.grad[idx];
            }
    };
    return detail::make_op<T>(s, std::move(v), {x, gamma, beta}, bw);
}

// ---------------------------------------------------------------------------
// Dropout with inverted scaling; identity in eval mode. The retained mask is
// resampled on every training-mode call.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool train, std::mt19937& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
    if (!train || rate == 0.0) return x;
    double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<T>>(x.data().size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<T> v(x.data().size());
    for (size_t i = 0; i < v.size(); ++i) {
        (*mask)[i] = u(rng) < keep ? T(1.0 / keep) : T(0);
        v[i] = x.data()[i] * (*mask)[i];
    }
    return detail::make_op<T>(x.shape(), std::move(v), {x}, [x, mask](Node<T>& out) {
        auto& gx = x.grad();
        for (size_t i = 0; i < out.grad.size(); ++i) gx[i] += out.grad[i] * (*mask)[i];
    });
}

// Fully connected layer: x [B,F] * w [F,U] + b [U].
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    Tensor<T> y = matmul(x, w);
    return add(y, broadcast(b, y.shape()));
}

// ---------------------------------------------------------------------------
// Initialization: truncated normal with fan-in scaling, cut at two sigma.
// ---------------------------------------------------------------------------

template <typename T>
void init_truncated_normal(Tensor<T>& t, int fan_in, std::mt19937& rng, double gain = 1.0) {
    double stddev = gain / std::sqrt((double)std::max(1, fan_in));
    std::normal_distribution<double> nd(0.0, stddev);
    for (auto& v : t.data()) {
        double x;
        do {
            x = nd(rng);
        } while (std::abs(x) > 2.0 * stddev);
        v = T(x);
    }
}

template <typename T>
void init_normal(Tensor<T>& t, double mean, double stddev, std::mt19937& rng) {
    std::normal_distribution<double> nd(mean, stddev);
    for (auto& v : t.data()) v = T(nd(rng));
}

}  // namespace phonosep
