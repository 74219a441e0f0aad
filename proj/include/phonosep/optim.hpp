#pragma once

// Adaptive-moment optimizer and finite-difference gradient checking.

#include "phonosep/tensor.hpp"

#include <limits>
#include <map>

namespace phonosep {

template <typename T>
struct NamedParam {
    std::string name;
    Tensor<T> tensor;
};

template <typename T>
class AdamOptimizer {
public:
    struct Slot {
        std::vector<T> m, v;
    };

    AdamOptimizer(std::vector<Tensor<T>> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto& p : params_) {
            p.set_requires_grad(true);
            slots_.push_back(Slot{std::vector<T>(p.data().size(), T(0)),
                                  std::vector<T>(p.data().size(), T(0))});
        }
    }

    void step() {
        for (auto& p : params_)
            for (T g : p.grad())
                if (!std::isfinite((double)g))
                    throw std::runtime_error("optimizer_step: non-finite gradient, step rejected");
        ++step_count_;
        double bc1 = 1.0 - std::pow(beta1_, (double)step_count_);
        double bc2 = 1.0 - std::pow(beta2_, (double)step_count_);
        for (size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            auto& g = p.grad();
            auto& s = slots_[k];
            for (size_t i = 0; i < g.size(); ++i) {
                s.m[i] = T(beta1_) * s.m[i] + T(1.0 - beta1_) * g[i];
                s.v[i] = T(beta2_) * s.v[i] + T(1.0 - beta2_) * g[i] * g[i];
                double mh = (double)s.m[i] / bc1;
                double vh = (double)s.v[i] / bc2;
                p.data()[i] -= T(lr_ * mh / (std::sqrt(vh) + eps_));
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    long step_count() const { return step_count_; }
    void set_step_count(long n) { step_count_ = n; }
    std::vector<Slot>& slots() { return slots_; }
    const std::vector<Tensor<T>>& params() const { return params_; }

private:
    std::vector<Tensor<T>> params_;
    std::vector<Slot> slots_;
    long step_count_ = 0;
    double lr_, beta1_, beta2_, eps_;
};

// ---------------------------------------------------------------------------
// Gradient checking against central finite differences. The op is evaluated
// as a scalar via a fixed random-weighted sum of its output so that every
// output element contributes.
// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::int64_t coords_checked = 0;
    bool passed(double tol) const { return max_rel_error < tol; }
};

template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>(const std::vector<Tensor<T>>&)>& op,
                           std::vector<Tensor<T>> inputs, unsigned seed = 1,
                           std::int64_t max_coords_per_input = -1) {
    for (auto& in : inputs) in.set_requires_grad(true);

    std::mt19937 rng(seed);
    std::shared_ptr<std::vector<T>> weights;  // fixed across evaluations
    double f_scale = 0;  // sum of |w_i * out_i|, bounds the rounding noise

    auto eval = [&]() -> double {
        Tensor<T> out = op(inputs);
        if (!weights) {
            weights = std::make_shared<std::vector<T>>(out.data().size());
            std::uniform_real_distribution<double> u(0.25, 1.0);
            for (auto& w : *weights) w = T(u(rng));
        }
        double acc = 0, mag = 0;
        for (size_t i = 0; i < out.data().size(); ++i) {
            double term = (double)out.data()[i] * (double)(*weights)[i];
            acc += term;
            mag += std::abs(term);
        }
        f_scale = std::max(f_scale, mag);
        return acc;
    };

    // analytic gradients
    Tape<T> tape;
    std::vector<std::vector<T>> analytic;
    {
        TapeScope<T> scope(tape);
        Tensor<T> out = op(inputs);
        if (!weights) {
            weights = std::make_shared<std::vector<T>>(out.data().size());
            std::uniform_real_distribution<double> u(0.25, 1.0);
            for (auto& w : *weights) w = T(u(rng));
        }
        Tensor<T> wt = Tensor<T>::from_data(out.shape(), *weights);
        Tensor<T> loss = sum_all(mul(out, wt));
        for (auto& in : inputs) in.zero_grad();
        tape.backward(loss);
        for (auto& in : inputs) analytic.push_back(in.grad());
    }

    // scale-aware denominator floor: tiny gradient coordinates are compared
    // against the gradient's own magnitude rather than against zero
    double gmax = 0;
    for (auto& g : analytic)
        for (T v : g) gmax = std::max(gmax, std::abs((double)v));
    const bool f32 = sizeof(T) == 4;
    const double floor_scale = std::max(1e-12, 1e-3 * gmax);

    GradCheckReport rep;
    std::mt19937 pick(seed + 17);
    for (size_t k = 0; k < inputs.size(); ++k) {
        auto& in = inputs[k];
        std::int64_t n = in.numel();
        std::vector<std::int64_t> coords;
        if (max_coords_per_input < 0 || n <= max_coords_per_input) {
            coords.resize((size_t)n);
            std::iota(coords.begin(), coords.end(), 0);
        } else {
            std::uniform_int_distribution<std::int64_t> d(0, n - 1);
            for (std::int64_t i = 0; i < max_coords_per_input; ++i) coords.push_back(d(pick));
        }
        for (std::int64_t idx : coords) {
            T orig = in.data()[(size_t)idx];
            double h = f32 ? 1e-2 * std::max(1.0, std::abs((double)orig))
                           : 1e-5 * std::max(1.0, std::abs((double)orig));
            in.data()[(size_t)idx] = T((double)orig + h);
            double fp = eval();
            in.data()[(size_t)idx] = T((double)orig - h);
            double fm = eval();
            in.data()[(size_t)idx] = orig;
            double fd = (fp - fm) / (2 * h);
            double an = (double)analytic[k][(size_t)idx];
            double denom = std::max({std::abs(an), std::abs(fd), floor_scale});
            // the difference quotient carries irreducible rounding noise of
            // about eps * |f| / h; discrepancies inside that band are not
            // evidence of a wrong gradient
            double eps_mach = f32 ? 1.19e-7 : 2.3e-16;
            double noise = 4.0 * eps_mach * f_scale / h;
            double rel = std::max(0.0, std::abs(an - fd) - noise) / denom;
            rep.max_rel_error = std::max(rep.max_rel_error, rel);
            ++rep.coords_checked;
        }
    }
    return rep;
}

}  // namespace phonosep
