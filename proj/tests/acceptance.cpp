// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 7 trains three desk-scale models on a synthetic corpus
// and dominates the runtime.

#include "phonosep/dataset.hpp"
#include "phonosep/evaluation.hpp"
#include "phonosep/training.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace phonosep;
namespace fs = std::filesystem;

namespace {

const double kPi = 3.14159265358979323846;

bool g_all_passed = true;

void report(int n, bool pass, const std::string& desc) {
    std::cout << "criterion " << n << ": " << (pass ? "pass" : "fail") << " - " << desc
              << std::endl;
    g_all_passed = g_all_passed && pass;
}

std::string temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / (name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

// ---------------------------------------------------------------------------
// criterion 1: parameter counts
// ---------------------------------------------------------------------------

bool check_param_counts(std::string& detail) {
    const std::vector<std::pair<std::string, long>> exact = {
        {"S_s*", 80},      {"S_s", 480},     {"S_f*", 640},     {"S_c*", 40960},
        {"S_f", 40320},    {"S_c", 80640},   {"S_a*", 327680},  {"S_a", 1966080}};
    bool ok = true;
    std::ostringstream os;
    for (const auto& [name, want] : exact) {
        long got = param_count(name);
        if (got != want) {
            ok = false;
            os << " " << name << "=" << got << " (want " << want << ")";
        }
    }
    long base = param_count("unet");
    if (std::abs((double)base - 9.83e6) > 0.01 * 9.83e6) {
        ok = false;
        os << " unet=" << base;
    }
    long wsi = param_count("W_si");
    if (std::abs((double)wsi - 14060.0) > 0.05 * 14060.0) {
        ok = false;
        os << " W_si=" << wsi;
    }
    long wco = param_count("W_co");
    if (std::abs((double)wco - 2.35e6) > 0.05 * 2.35e6) {
        ok = false;
        os << " W_co=" << wco;
    }
    detail = "strong increments exact, base/weak within tolerance" + os.str();
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 2: strong-FiLM brute-force oracle
// ---------------------------------------------------------------------------

Shape basis_shape(StrongVariant v, int H, int C, int P) {
    switch (v) {
        case StrongVariant::All: return {H, C, P};
        case StrongVariant::Channel: return {C, P};
        case StrongVariant::Frequency: return {H, P};
        case StrongVariant::Scalar: return {P};
    }
    return {};
}

double strong_film_max_dev(unsigned seed, StrongVariant variant) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> wd(1, 6), hd(1, 5), cd(1, 4), pd(2, 8);
    int W = wd(rng), H = hd(rng), C = cd(rng), P = pd(rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0), us(0.01, 1.0);

    auto rand_tensor = [&](const Shape& s) {
        std::vector<double> v((size_t)shape_numel(s));
        for (auto& x : v) x = u(rng);
        return Tensor<double>::from_data(s, std::move(v));
    };
    Tensor<double> x = rand_tensor({W, H, C});
    std::vector<double> zv((size_t)W * P);
    for (int w = 0; w < W; ++w) {
        double sum = 0;
        for (int p = 0; p < P; ++p) {
            zv[(size_t)(w * P + p)] = us(rng);
            sum += zv[(size_t)(w * P + p)];
        }
        for (int p = 0; p < P; ++p) zv[(size_t)(w * P + p)] /= sum;
    }
    Tensor<double> z = Tensor<double>::from_data({W, P}, std::move(zv));
    Tensor<double> gamma = rand_tensor(basis_shape(variant, H, C, P));
    Tensor<double> beta = rand_tensor(basis_shape(variant, H, C, P));

    Tensor<double> y = film_strong(x, z, gamma, beta, variant);

    auto basis_at = [&](const Tensor<double>& b, int h, int c, int p) -> double {
        switch (variant) {
            case StrongVariant::All: return b.data()[(size_t)((h * C + c) * P + p)];
            case StrongVariant::Channel: return b.data()[(size_t)(c * P + p)];
            case StrongVariant::Frequency: return b.data()[(size_t)(h * P + p)];
            case StrongVariant::Scalar: return b.data()[(size_t)p];
        }
        return 0.0;
    };
    double max_dev = 0;
    for (int w = 0; w < W; ++w)
        for (int h = 0; h < H; ++h)
            for (int c = 0; c < C; ++c) {
                double g = 0, b = 0;
                for (int p = 0; p < P; ++p) {
                    double zp = z.data()[(size_t)(w * P + p)];
                    g += zp * basis_at(gamma, h, c, p);
                    b += zp * basis_at(beta, h, c, p);
                }
                size_t idx = (size_t)((w * H + h) * C + c);
                double want = g * x.data()[idx] + b;
                max_dev = std::max(max_dev, std::abs(y.data()[idx] - want));
            }
    return max_dev;
}

// ---------------------------------------------------------------------------
// criterion 3: gradient suite (32-bit), every op plus the tiny conditioned net
// ---------------------------------------------------------------------------

Tensor<float> randf(const Shape& s, std::mt19937& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    std::vector<float> v((size_t)shape_numel(s));
    for (auto& x : v) x = u(rng);
    return Tensor<float>::from_data(s, std::move(v));
}

bool gradient_suite(std::string& detail) {
    using V = std::vector<Tensor<float>>;
    struct OpCase {
        const char* name;
        std::function<Tensor<float>(const V&)> fn;
        std::function<V(std::mt19937&)> make;
    };
    auto pair34 = [](std::mt19937& rng) {
        return V{randf({3, 4}, rng), randf({3, 4}, rng)};
    };
    auto single34 = [](std::mt19937& rng) { return V{randf({3, 4}, rng)}; };
    // kinked ops need inputs bounded away from the nonsmooth point, or the
    // central difference straddles it
    auto away_from_zero = [](std::mt19937& rng) {
        Tensor<float> t = randf({3, 4}, rng);
        for (auto& v : t.data()) v += v >= 0 ? 0.5f : -0.5f;
        return V{t};
    };
    auto separated_pair = [](std::mt19937& rng) {
        Tensor<float> a = randf({3, 4}, rng);
        Tensor<float> b = randf({3, 4}, rng);
        std::uniform_real_distribution<float> gap(0.3f, 1.0f);
        std::bernoulli_distribution sign(0.5);
        for (size_t i = 0; i < b.data().size(); ++i)
            b.data()[i] = a.data()[i] + (sign(rng) ? 1.0f : -1.0f) * gap(rng);
        return V{a, b};
    };

    std::vector<OpCase> cases = {
        {"add", [](const V& in) { return add(in[0], in[1]); }, pair34},
        {"sub", [](const V& in) { return sub(in[0], in[1]); }, pair34},
        {"mul", [](const V& in) { return mul(in[0], in[1]); }, pair34},
        {"scale", [](const V& in) { return scale(in[0], 1.7f); }, single34},
        {"leaky_relu", [](const V& in) { return leaky_relu(in[0], 0.2f); }, away_from_zero},
        {"relu", [](const V& in) { return relu(in[0]); }, away_from_zero},
        {"sigmoid", [](const V& in) { return sigmoid(in[0]); }, single34},
        {"softmax", [](const V& in) { return softmax(in[0], 1); }, single34},
        {"reshape", [](const V& in) { return reshape(in[0], {4, 3}); }, single34},
        {"slice_last", [](const V& in) { return slice_last(in[0], 1, 2); }, single34},
        {"concat_last", [](const V& in) { return concat_last(in[0], in[1]); }, pair34},
        {"sum_all", [](const V& in) { return sum_all(in[0]); }, single34},
        {"reduce_sum", [](const V& in) { return reduce_sum(in[0], 0); }, single34},
        {"reduce_mean", [](const V& in) { return reduce_mean(in[0], 1); }, single34},
        {"mean_abs_error", [](const V& in) { return mean_abs_error(in[0], in[1]); },
         separated_pair},
        {"broadcast", [](const V& in) { return broadcast(in[0], {3, 5, 4}); },
         [](std::mt19937& rng) { return V{randf({4}, rng)}; }},
        {"matmul", [](const V& in) { return matmul(in[0], in[1]); },
         [](std::mt19937& rng) { return V{randf({3, 4}, rng), randf({4, 2}, rng)}; }},
        {"conv2d", [](const V& in) { return conv2d(in[0], in[1]); },
         [](std::mt19937& rng) { return V{randf({5, 5, 1}, rng), randf({3, 3, 1, 2}, rng)}; }},
        {"conv2d_transpose", [](const V& in) { return conv2d_transpose(in[0], in[1]); },
         [](std::mt19937& rng) { return V{randf({3, 3, 2}, rng), randf({3, 3, 1, 2}, rng)}; }},
        {"contract_p", [](const V& in) { return contract_p(in[0], in[1]); },
         [](std::mt19937& rng) { return V{randf({2, 4, 5}, rng), randf({3, 5}, rng)}; }},
        {"autopool", [](const V& in) { return autopool(in[0], in[1]); },
         [](std::mt19937& rng) { return V{randf({6, 5}, rng), randf({5}, rng)}; }},
        {"batch_norm",
         [](const V& in) {
             BatchNormState<float> st(4);
             return batch_norm(in[0], in[1], in[2], st, true);
         },
         [](std::mt19937& rng) {
             return V{randf({6, 4}, rng), randf({4}, rng, 0.5f, 1.5f), randf({4}, rng)};
         }},
        {"film_weak", [](const V& in) { return film_weak(in[0], in[1], in[2]); },
         [](std::mt19937& rng) {
             return V{randf({4, 3, 2}, rng), randf({2}, rng, 0.5f, 1.5f), randf({2}, rng)};
         }},
        {"film_strong",
         [](const V& in) {
             return film_strong(in[0], in[1], in[2], in[3], StrongVariant::Channel);
         },
         [](std::mt19937& rng) {
             return V{randf({4, 3, 2}, rng), randf({4, 5}, rng, 0.0f, 1.0f),
                      randf({2, 5}, rng), randf({2, 5}, rng)};
         }},
    };

    bool ok = true;
    std::ostringstream os;
    double worst = 0;
    for (const auto& c : cases) {
        double max_err = 0;
        for (unsigned seed = 1; seed <= 20; ++seed) {
            std::mt19937 rng(seed * 131u + 7u);
            auto rep = grad_check<float>(c.fn, c.make(rng), seed, 6);
            max_err = std::max(max_err, rep.max_rel_error);
        }
        worst = std::max(worst, max_err);
        if (max_err >= 1e-3) {
            ok = false;
            os << " " << c.name << "=" << max_err;
        }
    }

    // full tiny conditioned model, eval mode for deterministic re-evaluation
    UNetConfig cfg = UNetConfig::tiny();
    double net_err = 0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        UNet<float> model(cfg, config_for_variant("S_s"), seed);
        auto fn = [&](const V& in) {
            std::mt19937 frng(0);
            return model.forward(in[0], in[1], false, frng);
        };
        std::mt19937 rng(seed * 977u + 3u);
        V inputs{randf({1, cfg.input_frames, cfg.input_bins, 1}, rng, 0.0f, 1.0f),
                 randf({1, cfg.input_frames, 40}, rng, 0.0f, 1.0f)};
        auto rep = grad_check<float>(fn, inputs, seed, 4);
        net_err = std::max(net_err, rep.max_rel_error);
    }
    worst = std::max(worst, net_err);
    if (net_err >= 1e-3) {
        ok = false;
        os << " tiny_unet=" << net_err;
    }
    std::ostringstream d;
    d << (int)cases.size() << " ops + tiny conditioned net, 20 seeds, worst rel err " << worst;
    detail = d.str() + os.str();
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 4: STFT roundtrip
// ---------------------------------------------------------------------------

AudioClip band_limited(double seconds, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> freq(50.0, 3300.0), amp(0.05, 0.2), ph(0.0, 2 * kPi);
    AudioClip c;
    c.sample_rate = 8192;
    c.samples.assign((size_t)std::llround(seconds * 8192), 0.0f);
    for (int k = 0; k < 64; ++k) {
        double f = freq(rng), a = amp(rng), p = ph(rng);
        for (size_t i = 0; i < c.samples.size(); ++i)
            c.samples[i] += (float)(a * std::sin(2.0 * kPi * f * (double)i / 8192.0 + p));
    }
    return c;
}

bool roundtrip_suite(std::string& detail) {
    double worst = 1e9;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        AudioClip x = band_limited(3.0, seed);
        AudioClip y = istft(stft(x));
        size_t margin = stft_params::kWindow / 2;
        double sig = 0, err = 0;
        size_t n = std::min(x.samples.size(), y.samples.size());
        for (size_t i = margin; i + margin < n; ++i) {
            sig += (double)x.samples[i] * x.samples[i];
            double d = (double)x.samples[i] - y.samples[i];
            err += d * d;
        }
        worst = std::min(worst, 10.0 * std::log10(sig / std::max(err, 1e-300)));
    }
    std::ostringstream d;
    d << "10 random 3 s signals, worst interior SNR " << worst << " dB";
    detail = d.str();
    return worst > 60.0;
}

// ---------------------------------------------------------------------------
// criterion 5: BSS-eval oracle + PES floor
// ---------------------------------------------------------------------------

Eigen::MatrixXd shift_columns(const std::vector<double>& s, int L, int m) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, L);
    for (int tau = 0; tau < L; ++tau)
        for (int t = 0; t < (int)s.size(); ++t) A(t + tau, tau) = s[(size_t)t];
    return A;
}

std::array<double, 3> oracle_bss(const std::vector<double>& ref_tgt,
                                 const std::vector<double>& ref_other,
                                 const std::vector<double>& est, int L) {
    int n = (int)est.size(), m = n + L - 1;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (int t = 0; t < n; ++t) y(t) = est[(size_t)t];
    Eigen::MatrixXd A1 = shift_columns(ref_tgt, L, m);
    Eigen::MatrixXd A(m, 2 * L);
    A << A1, shift_columns(ref_other, L, m);
    Eigen::VectorXd s_target = A1 * A1.colPivHouseholderQr().solve(y);
    Eigen::VectorXd p_all = A * A.colPivHouseholderQr().solve(y);
    auto db = [](double num, double den) {
        return std::min(80.0, std::max(-80.0, 10.0 * std::log10(num / den)));
    };
    return {db(s_target.squaredNorm(), (y - s_target).squaredNorm()),
            db(s_target.squaredNorm(), (p_all - s_target).squaredNorm()),
            db(p_all.squaredNorm(), (y - p_all).squaredNorm())};
}

bool bss_oracle_suite(std::string& detail) {
    double worst = 0;
    std::mt19937 mix_rng(55);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto wnoise = [](size_t n, unsigned seed, double amp) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> g(0.0, amp);
        std::vector<double> x(n);
        for (auto& v : x) v = g(rng);
        return x;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const size_t n = 1000;
        auto r0 = wnoise(n, 500 + (unsigned)trial, 1.0);
        auto r1 = wnoise(n, 600 + (unsigned)trial, 1.0);
        auto w0 = wnoise(n, 700 + (unsigned)trial, 0.05);
        std::vector<double> e0(n), e1(n);
        double a = u(mix_rng), b = 0.3 * u(mix_rng);
        for (size_t t = 0; t < n; ++t) {
            e0[t] = a * r0[t] + (t >= 2 ? 0.2 * r0[t - 2] : 0.0) + b * r1[t] + w0[t];
            e1[t] = r1[t] + 0.2 * r0[t];
        }
        const int L = 32;
        auto sc = bss_eval(r0, r1, e0, e1, L);
        auto o = oracle_bss(r0, r1, e0, L);
        worst = std::max({worst, std::abs(sc[0].sdr - o[0]), std::abs(sc[0].sir - o[1]),
                          std::abs(sc[0].sar - o[2])});
    }

    // PES floor: silent target frame with zero predicted energy
    std::vector<double> ref(4096, 0.5);
    for (size_t t = 1536; t < 2560; ++t) ref[t] = 0.0;
    std::vector<double> est(4096, 0.0);
    PesEps pe = pes_eps(ref, est);
    bool floor_ok = pe.pes.has_value() && *pe.pes == -80.0;

    std::ostringstream d;
    d << "20 random cases, worst oracle deviation " << worst << " dB; PES floor "
      << (floor_ok ? "-80 exact" : "wrong");
    detail = d.str();
    return worst < 0.01 && floor_ok;
}

// ---------------------------------------------------------------------------
// criterion 6: scheduler traces
// ---------------------------------------------------------------------------

bool scheduler_traces(std::string& detail) {
    PlateauScheduler sched(0.5, 15, 1e-5);
    double lr = 1e-3;
    int reduce_epoch = 0, reductions = 0;
    for (int epoch = 1; epoch <= 16; ++epoch)
        if (sched.observe(1.0)) {
            lr *= sched.factor();
            ++reductions;
            reduce_epoch = epoch;
        }
    bool plateau_ok = reductions == 1 && reduce_epoch == 16 && lr == 0.5e-3;

    EarlyStopper stop(30, 1e-5);
    int stop_epoch = 0;
    for (int epoch = 1; epoch <= 40 && stop_epoch == 0; ++epoch)
        if (stop.observe(0.5)) stop_epoch = epoch;
    bool stop_ok = stop_epoch == 31;

    PlateauScheduler fine(0.5, 2, 1e-5);
    fine.observe(1.0);
    bool delta_ok = !fine.observe(1.0 - 5e-6) && fine.observe(1.0 - 5e-6);

    detail = "lr halves at epoch 16, stop at epoch 31, min_delta boundary respected";
    return plateau_ok && stop_ok && delta_ok;
}

// ---------------------------------------------------------------------------
// criterion 7: desk-scale conditioning benefit
// ---------------------------------------------------------------------------

struct TrainedModel {
    UNet<float> model;
    double best_val = 0;
};

TrainedModel run_training(const std::string& variant, const TrainDataset& train_data,
                          const TrainDataset& val_data, const std::string& run_dir) {
    UNetConfig cfg;
    cfg.depth = 3;
    cfg.base_channels = 4;
    cfg.input_frames = 128;
    cfg.input_bins = 128;
    UNet<float> model(cfg, config_for_variant(variant), 21);

    TrainConfig tc;
    tc.batch_size = 16;
    tc.batches_per_epoch = 40;
    tc.lr = 2e-3;
    tc.plateau_patience = 6;
    tc.early_stop_patience = 14;
    tc.val_batches = 10;
    tc.max_epochs = 70;
    tc.augment_every = 2;
    tc.seed = 3;

    TrainResult res = train(model, train_data, val_data, tc, run_dir);
    TrainedModel out;
    out.best_val = res.best_val_loss;
    out.model = load_model(res.best_checkpoint).model;
    return out;
}

bool conditioning_benefit(std::string& detail) {
    std::string dir = temp_dir("phonosep_acceptance_corpus");
    SynthConfig sc;
    sc.n_train = 40;
    sc.n_val = 5;
    sc.n_test = 10;
    sc.duration_s = 20.0;
    sc.seed = 7;
    sc.jobs = (int)std::max(1u, std::thread::hardware_concurrency());
    Manifest manifest = synth_generate(dir, sc);
    Lexicon lex = Lexicon::load(dir + "/lexicon.dict");

    Manifest train_m, val_m, test_m;
    for (const auto& e : manifest)
        (e.split == "train" ? train_m : e.split == "val" ? val_m : test_m).push_back(e);

    const int bins = 128;
    TrainDataset train_data = load_songs(train_m, lex, bins);
    TrainDataset val_data = load_songs(val_m, lex, bins);
    TrainDataset train_shuf = load_songs(train_m, lex, bins, true, 11);
    TrainDataset val_shuf = load_songs(val_m, lex, bins, true, 11);

    TrainedModel un = run_training("unet", train_data, val_data, dir + "/run_unet");
    TrainedModel co = run_training("S_s", train_data, val_data, dir + "/run_cond");
    TrainedModel sh = run_training("S_s", train_shuf, val_shuf, dir + "/run_shuf");

    bool a = co.best_val < 0.97 * un.best_val;
    bool c = sh.best_val > 0.99 * un.best_val;

    // median test SDR via full separation on the 10 held-out songs
    std::vector<double> sdr_un, sdr_co;
    for (const auto& e : test_m) {
        AudioClip mix = load_wav(e.mixture);
        AudioClip voc = load_wav(e.vocals);
        AudioClip acc = load_wav(e.accompaniment);
        AnnotationSequence ann = load_annotations(e.annotations);
        for (auto* tm : {&un, &co}) {
            SeparationResult r = separate(mix, &ann, lex, &tm->model);
            size_t n = std::min(r.vocals.samples.size(), voc.samples.size());
            std::vector<double> rv(voc.samples.begin(), voc.samples.begin() + (long)n);
            std::vector<double> ra(acc.samples.begin(), acc.samples.begin() + (long)n);
            std::vector<double> ev(r.vocals.samples.begin(), r.vocals.samples.begin() + (long)n);
            std::vector<double> ea(n);
            for (size_t i = 0; i < n; ++i) ea[i] = mix.samples[i] - ev[i];
            auto scores = bss_eval(rv, ra, ev, ea, 512);
            (tm == &un ? sdr_un : sdr_co).push_back(scores[0].defined ? scores[0].sdr : -80.0);
        }
    }
    double med_un = median_of(sdr_un), med_co = median_of(sdr_co);
    bool b = med_co >= med_un;
    TTestResult tt = paired_t_test(sdr_co, sdr_un);

    std::ostringstream d;
    d << "val L1 unet " << un.best_val << ", conditioned " << co.best_val << " ("
      << 100.0 * (1.0 - co.best_val / un.best_val) << "% better), shuffled " << sh.best_val
      << "; median test SDR unet " << med_un << " dB, conditioned " << med_co
      << " dB; paired t=" << tt.t << " p=" << tt.p << " n=" << tt.n;
    detail = d.str();
    fs::remove_all(dir);
    return a && b && c;
}

// ---------------------------------------------------------------------------
// criterion 8: split fixture
// ---------------------------------------------------------------------------

bool split_fixture(std::string& detail) {
    Manifest m;
    auto entry = [](const std::string& id, double eta) {
        SongEntry e;
        e.id = id;
        e.eta = eta;
        return e;
    };
    m.push_back(entry("a", 0.75));
    m.push_back(entry("b", 0.885));
    m.push_back(entry("c", 0.95));
    m.push_back(entry("d", 0.5));
    SplitResult r = split_by_agreement(m);
    bool ok = r.train.size() == 1 && r.train[0].id == "a" && r.val.size() == 1 &&
              r.val[0].id == "b" && r.test.size() == 1 && r.test[0].id == "c" && r.excluded == 1;
    detail = "0.75->train, 0.885->val, 0.95->test, 0.5->excluded";
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 9: augmentation ratio over a 1024-batch epoch
// ---------------------------------------------------------------------------

TrainDataset fabricated_dataset(const std::vector<int>& patch_counts, int bins, unsigned seed) {
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
        size_t len = (size_t)song.n_patches * stft_params::kPatchFrames * stft_params::kHop;
        song.vocals_wave.resize(len);
        for (auto& x : song.vocals_wave) x = 0.1f * (u(rng) - 0.5f);
        song.accompaniment_wave.assign(len, 0.0f);
        song.mixture_wave = song.vocals_wave;
        d.songs.push_back(std::move(song));
    }
    return d;
}

bool augmentation_ratio(std::string& detail) {
    TrainDataset data = fabricated_dataset({2, 1}, 64, 3);
    std::mt19937 rng(9);
    const int batch_size = 8, batches = 1024, augment_every = 5;
    std::int64_t offset = 0;
    long augmented = 0;
    for (int b = 0; b < batches; ++b) {
        auto batch = sample_batch(data, batch_size, augment_every, rng, true, offset);
        offset += batch_size;
        for (const auto& s : batch) augmented += s.augmented ? 1 : 0;
    }
    long total = (long)batch_size * batches;
    std::ostringstream d;
    d << augmented << " of " << total << " samples augmented (expected " << total / 5.0
      << " +- 1)";
    detail = d.str();
    return std::abs((double)augmented - (double)total / 5.0) <= 1.0;
}

// ---------------------------------------------------------------------------
// criterion 10: checkpoint roundtrip
// ---------------------------------------------------------------------------

bool checkpoint_roundtrip(std::string& detail) {
    TrainDataset data = fabricated_dataset({2, 2}, 64, 31);
    UNetConfig cfg;
    cfg.depth = 3;
    cfg.base_channels = 4;
    cfg.input_frames = 128;
    cfg.input_bins = 64;
    UNet<float> model(cfg, config_for_variant("S_s"), 7);
    std::vector<Tensor<float>> tensors;
    for (auto& np : model.parameters()) tensors.push_back(np.tensor);
    AdamOptimizer<float> opt(tensors, 1e-3);

    std::mt19937 sample_rng(17), forward_rng(23);
    for (int i = 0; i < 2; ++i) {
        auto batch = sample_batch(data, 4, 0, sample_rng, false);
        train_step(model, opt, batch, data.bins, forward_rng);
    }
    std::string dir = temp_dir("phonosep_acceptance_ckpt");
    CheckpointMeta meta{2, 0.5, opt.lr(), opt.step_count()};
    save_model(dir + "/m.ckpt", model, &opt, meta);
    LoadedModel lm = load_model(dir + "/m.ckpt");

    auto batch = sample_batch(data, 4, 0, sample_rng, false);
    std::mt19937 fa(99), fb(99);
    float la = train_step(model, opt, batch, data.bins, fa);
    float lb = train_step(lm.model, *lm.optimizer, batch, data.bins, fb);
    fs::remove_all(dir);
    std::ostringstream d;
    d << "post-load step loss " << lb << " vs " << la << " (|diff| " << std::abs(la - lb) << ")";
    detail = d.str();
    return std::abs(la - lb) < 1e-6f;
}

template <typename F>
void run(int n, F&& fn) {
    std::string detail;
    bool pass = false;
    auto t0 = std::chrono::steady_clock::now();
    try {
        pass = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream d;
    d << detail << " [" << dt << " s]";
    report(n, pass, d.str());
}

}  // namespace

bool selected(int argc, char** argv, int n) {
    if (argc < 2) return true;
    for (int i = 1; i < argc; ++i)
        if (std::stoi(argv[i]) == n) return true;
    return false;
}

int main(int argc, char** argv) {
    auto want = [&](int n) { return selected(argc, argv, n); };
    if (want(1)) run(1, check_param_counts);
    if (want(2)) run(2, [](std::string& detail) {
        double worst = 0;
        for (unsigned trial = 0; trial < 50; ++trial)
            worst = std::max(worst,
                             strong_film_max_dev(trial + 1, (StrongVariant)(trial % 4)));
        std::ostringstream d;
        d << "50 randomized variant/shape cases, max deviation " << worst;
        detail = d.str();
        return worst < 1e-6;
    });
    if (want(3)) run(3, gradient_suite);
    if (want(4)) run(4, roundtrip_suite);
    if (want(5)) run(5, bss_oracle_suite);
    if (want(6)) run(6, scheduler_traces);
    if (want(7)) run(7, conditioning_benefit);
    if (want(8)) run(8, split_fixture);
    if (want(9)) run(9, augmentation_ratio);
    if (want(10)) run(10, checkpoint_roundtrip);
    return g_all_passed ? 0 : 1;
}
