#include "phonosep/evaluation.hpp"

#include "phonosep/dsp.hpp"
#include "phonosep/fft.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace phonosep {

namespace {

constexpr double kDbCeiling = 80.0;
constexpr double kDbFloor = -80.0;

double clamp_db(double num, double den) {
    if (num <= 0.0) return kDbFloor;
    if (den <= 0.0) return kDbCeiling;
    double db = 10.0 * std::log10(num / den);
    return std::min(kDbCeiling, std::max(kDbFloor, db));
}

double energy(const std::vector<double>& x) {
    double e = 0;
    for (double v : x) e += v * v;
    return e;
}

// Full cross-correlation c(l) = sum_t x[t] y[t-l] for l in (-L, L), returned
// as a function object over signed lags.
struct Corr {
    std::vector<double> pos;  // l >= 0: sum x[t] y[t-l]
    std::vector<double> neg;  // l > 0 : c(-l)
    double operator()(int lag) const { return lag >= 0 ? pos[(size_t)lag] : neg[(size_t)(-lag)]; }
};

Corr correlate(const std::vector<double>& x, const std::vector<double>& y, int L) {
    Corr c;
    c.pos = cross_correlate(x, y, (size_t)L);
    c.neg = cross_correlate(y, x, (size_t)L);
    return c;
}

// y(t) = sum_tau a[tau] s[t - tau], zero-padded to length m.
std::vector<double> filter_signal(const std::vector<double>& s, const std::vector<double>& a,
                                  size_t m) {
    std::vector<double> conv = fft_convolve(s, a);
    conv.resize(m, 0.0);
    return conv;
}

}  // namespace

std::array<BssScores, 2> bss_eval(const std::vector<double>& ref0, const std::vector<double>& ref1,
                                  const std::vector<double>& est0, const std::vector<double>& est1,
                                  int filter_len) {
    size_t n = ref0.size();
    if (ref1.size() != n || est0.size() != n || est1.size() != n)
        throw std::invalid_argument("bss_eval: sources must have equal lengths");
    if (n == 0) throw std::invalid_argument("bss_eval: empty signals");
    const int L = filter_len;
    const size_t m = n + (size_t)L - 1;  // projection length with zero padding

    const std::vector<double>* refs[2] = {&ref0, &ref1};
    const std::vector<double>* ests[2] = {&est0, &est1};
    bool ref_zero[2] = {energy(ref0) == 0.0, energy(ref1) == 0.0};

    // Gram blocks from FFT cross-correlations; G[(i,tau),(j,tau')] =
    // corr_ij(tau' - tau).
    Corr c00 = correlate(ref0, ref0, L);
    Corr c01 = correlate(ref0, ref1, L);
    Corr c11 = correlate(ref1, ref1, L);
    auto corr_of = [&](int i, int j) -> const Corr& {
        if (i == 0 && j == 0) return c00;
        if (i == 1 && j == 1) return c11;
        return c01;  // c10(lag) = c01 with i/j swapped, handled by sign below
    };
    auto gram = [&](int i, int ti, int j, int tj) {
        if (i <= j) return corr_of(i, j)(tj - ti);
        return corr_of(j, i)(ti - tj);
    };

    std::array<BssScores, 2> out;
    for (int tgt = 0; tgt < 2; ++tgt) {
        const std::vector<double>& est = *ests[tgt];
        if (ref_zero[tgt]) {
            out[(size_t)tgt].defined = false;
            continue;
        }
        int other = 1 - tgt;

        // projection onto the shifted target reference alone
        Eigen::MatrixXd A((int)L, (int)L);
        Eigen::VectorXd d((int)L);
        std::vector<double> xc_t = cross_correlate(est, *refs[tgt], (size_t)L);
        for (int t1 = 0; t1 < L; ++t1) {
            d(t1) = xc_t[(size_t)t1];
            for (int t2 = 0; t2 < L; ++t2) A(t1, t2) = gram(tgt, t1, tgt, t2);
        }
        Eigen::VectorXd a_single = A.ldlt().solve(d);
        std::vector<double> taps((size_t)L);
        for (int i = 0; i < L; ++i) taps[(size_t)i] = a_single(i);
        std::vector<double> s_target = filter_signal(*refs[tgt], taps, m);

        // projection onto both shifted references
        std::vector<double> p_all;
        if (ref_zero[other]) {
            p_all = s_target;
        } else {
            Eigen::MatrixXd G(2 * L, 2 * L);
            Eigen::VectorXd dd(2 * L);
            std::vector<double> xc_o = cross_correlate(est, *refs[other], (size_t)L);
            int idx_map[2] = {tgt, other};
            for (int bi = 0; bi < 2; ++bi)
                for (int t1 = 0; t1 < L; ++t1) {
                    dd(bi * L + t1) = bi == 0 ? xc_t[(size_t)t1] : xc_o[(size_t)t1];
                    for (int bj = 0; bj < 2; ++bj)
                        for (int t2 = 0; t2 < L; ++t2)
                            G(bi * L + t1, bj * L + t2) =
                                gram(idx_map[bi], t1, idx_map[bj], t2);
                }
            Eigen::VectorXd a_joint = G.ldlt().solve(dd);
            std::vector<double> taps_t((size_t)L), taps_o((size_t)L);
            for (int i = 0; i < L; ++i) {
                taps_t[(size_t)i] = a_joint(i);
                taps_o[(size_t)i] = a_joint(L + i);
            }
            std::vector<double> pt = filter_signal(*refs[tgt], taps_t, m);
            std::vector<double> po = filter_signal(*refs[other], taps_o, m);
            p_all.resize(m);
            for (size_t i = 0; i < m; ++i) p_all[i] = pt[i] + po[i];
        }

        std::vector<double> e_interf(m), e_artif(m), distortion(m), target_plus_interf(m);
        for (size_t i = 0; i < m; ++i) {
            double e = i < n ? est[i] : 0.0;
            e_interf[i] = p_all[i] - s_target[i];
            e_artif[i] = e - p_all[i];
            distortion[i] = e_interf[i] + e_artif[i];
            target_plus_interf[i] = s_target[i] + e_interf[i];
        }
        BssScores& sc = out[(size_t)tgt];
        double e_tgt = energy(s_target);
        sc.sdr = clamp_db(e_tgt, energy(distortion));
        sc.sir = clamp_db(e_tgt, energy(e_interf));
        sc.sar = clamp_db(energy(target_plus_interf), energy(e_artif));
    }
    return out;
}

PesEps pes_eps(const std::vector<double>& reference_vocals,
               const std::vector<double>& estimated_vocals) {
    if (reference_vocals.size() != estimated_vocals.size())
        throw std::invalid_argument("pes_eps: signals must be aligned");
    using namespace stft_params;
    const size_t n = reference_vocals.size();
    const double eps = 1e-9;
    const double rel = std::pow(10.0, -25.0 / 10.0);

    auto max_abs = [](const std::vector<double>& x) {
        double m = 0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    };
    double ref_thresh = rel * max_abs(reference_vocals) * max_abs(reference_vocals);
    double est_thresh = rel * max_abs(estimated_vocals) * max_abs(estimated_vocals);

    size_t frames = n == 0 ? 0 : (n + kHop - 1) / kHop;
    std::vector<double> pes_terms, eps_terms;
    for (size_t f = 0; f < frames; ++f) {
        size_t start = f * kHop;
        double e_ref = 0, e_est = 0;
        for (size_t i = start; i < std::min(n, start + (size_t)kWindow); ++i) {
            e_ref += reference_vocals[i] * reference_vocals[i];
            e_est += estimated_vocals[i] * estimated_vocals[i];
        }
        bool ref_silent = e_ref < ref_thresh;
        bool est_silent = e_est < est_thresh;
        if (ref_silent) pes_terms.push_back(10.0 * std::log10(e_est + eps));
        if (est_silent && !ref_silent) eps_terms.push_back(10.0 * std::log10(e_ref + eps));
    }
    auto mean_floored = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        double acc = 0;
        for (double x : v) acc += x;
        return std::max(kDbFloor, acc / (double)v.size());
    };
    return {mean_floored(pes_terms), mean_floored(eps_terms)};
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

MetricSummary summarize(const std::vector<std::optional<double>>& vals) {
    MetricSummary s;
    std::vector<double> defined;
    for (const auto& v : vals)
        if (v)
            defined.push_back(*v);
        else
            ++s.excluded;
    if (!defined.empty()) s.median = median_of(defined);
    return s;
}

}  // namespace

EvalReport make_report(std::vector<TrackEval> tracks) {
    EvalReport r;
    r.tracks = std::move(tracks);
    auto gather = [&](auto getter) {
        std::vector<std::optional<double>> v;
        for (const auto& t : r.tracks) v.push_back(getter(t));
        return v;
    };
    auto bss_opt = [](const BssScores& s, double BssScores::*field) -> std::optional<double> {
        if (!s.defined) return std::nullopt;
        return s.*field;
    };
    r.sdr_vocals = summarize(gather([&](const TrackEval& t) { return bss_opt(t.vocals, &BssScores::sdr); }));
    r.sir_vocals = summarize(gather([&](const TrackEval& t) { return bss_opt(t.vocals, &BssScores::sir); }));
    r.sar_vocals = summarize(gather([&](const TrackEval& t) { return bss_opt(t.vocals, &BssScores::sar); }));
    r.sdr_accompaniment =
        summarize(gather([&](const TrackEval& t) { return bss_opt(t.accompaniment, &BssScores::sdr); }));
    r.sir_accompaniment =
        summarize(gather([&](const TrackEval& t) { return bss_opt(t.accompaniment, &BssScores::sir); }));
    r.sar_accompaniment =
        summarize(gather([&](const TrackEval& t) { return bss_opt(t.accompaniment, &BssScores::sar); }));
    r.pes = summarize(gather([](const TrackEval& t) { return t.silence.pes; }));
    r.eps = summarize(gather([](const TrackEval& t) { return t.silence.eps; }));
    return r;
}

// ---------------------------------------------------------------------------
// Paired t-test via the regularized incomplete beta function.
// ---------------------------------------------------------------------------

namespace {

double betacf(double a, double b, double x) {
    const int kMaxIter = 300;
    const double kEps = 3e-12, kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                b * std::log(1.0 - x);
    double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_sf(double t, int dof) {
    if (dof < 1) throw std::invalid_argument("student_t_sf: dof must be >= 1");
    double x = (double)dof / ((double)dof + t * t);
    double tail = 0.5 * incbeta((double)dof / 2.0, 0.5, x);
    return t >= 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");
    int n = (int)a.size();
    double mean = 0;
    for (int i = 0; i < n; ++i) mean += a[(size_t)i] - b[(size_t)i];
    mean /= n;
    double var = 0;
    for (int i = 0; i < n; ++i) {
        double d = a[(size_t)i] - b[(size_t)i] - mean;
        var += d * d;
    }
    var /= (n - 1);

    TTestResult r;
    r.n = n;
    if (var == 0.0) {
        r.zero_variance = true;
        r.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() * (mean > 0 ? 1 : -1);
        r.p = mean == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = mean / std::sqrt(var / n);
    r.p = 2.0 * student_t_sf(std::abs(r.t), n - 1);
    return r;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "NA";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *v;
    return os.str();
}

std::string fmt_bss(const BssScores& s, double BssScores::*field) {
    if (!s.defined) return "NA";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << s.*field;
    return os.str();
}

std::optional<double> parse_opt(const std::string& s) {
    if (s == "NA") return std::nullopt;
    return std::stod(s);
}

}  // namespace

void write_report_text(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << std::left << std::setw(12) << "track" << std::setw(10) << "SDR_v" << std::setw(10)
        << "SIR_v" << std::setw(10) << "SAR_v" << std::setw(10) << "SDR_a" << std::setw(10)
        << "SIR_a" << std::setw(10) << "SAR_a" << std::setw(10) << "PES" << std::setw(10) << "EPS"
        << "\n";
    for (const auto& t : report.tracks)
        out << std::left << std::setw(12) << t.track_id << std::setw(10)
            << fmt_bss(t.vocals, &BssScores::sdr) << std::setw(10)
            << fmt_bss(t.vocals, &BssScores::sir) << std::setw(10)
            << fmt_bss(t.vocals, &BssScores::sar) << std::setw(10)
            << fmt_bss(t.accompaniment, &BssScores::sdr) << std::setw(10)
            << fmt_bss(t.accompaniment, &BssScores::sir) << std::setw(10)
            << fmt_bss(t.accompaniment, &BssScores::sar) << std::setw(10)
            << fmt_opt(t.silence.pes) << std::setw(10) << fmt_opt(t.silence.eps) << "\n";
    out << "\nmedians (excluded tracks in parentheses)\n";
    auto line = [&](const char* name, const MetricSummary& s) {
        out << std::left << std::setw(12) << name << fmt_opt(s.median) << " (" << s.excluded
            << ")\n";
    };
    line("SDR_vocals", report.sdr_vocals);
    line("SIR_vocals", report.sir_vocals);
    line("SAR_vocals", report.sar_vocals);
    line("SDR_accomp", report.sdr_accompaniment);
    line("SIR_accomp", report.sir_accompaniment);
    line("SAR_accomp", report.sar_accompaniment);
    line("PES", report.pes);
    line("EPS", report.eps);
}

void write_report_tsv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "track\tsdr_v\tsir_v\tsar_v\tsdr_a\tsir_a\tsar_a\tpes\teps\n";
    for (const auto& t : report.tracks)
        out << t.track_id << "\t" << fmt_bss(t.vocals, &BssScores::sdr) << "\t"
            << fmt_bss(t.vocals, &BssScores::sir) << "\t" << fmt_bss(t.vocals, &BssScores::sar)
            << "\t" << fmt_bss(t.accompaniment, &BssScores::sdr) << "\t"
            << fmt_bss(t.accompaniment, &BssScores::sir) << "\t"
            << fmt_bss(t.accompaniment, &BssScores::sar) << "\t" << fmt_opt(t.silence.pes) << "\t"
            << fmt_opt(t.silence.eps) << "\n";
}

EvalReport load_report_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<TrackEval> tracks;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::vector<std::string> cols;
        std::string col;
        while (std::getline(is, col, '\t')) cols.push_back(col);
        if (cols.size() != 9) throw std::runtime_error("malformed report line: " + line);
        TrackEval t;
        t.track_id = cols[0];
        auto set_bss = [&](BssScores& s, int i) {
            auto sdr = parse_opt(cols[(size_t)i]);
            if (!sdr) {
                s.defined = false;
                return;
            }
            s.sdr = *sdr;
            s.sir = *parse_opt(cols[(size_t)i + 1]);
            s.sar = *parse_opt(cols[(size_t)i + 2]);
        };
        set_bss(t.vocals, 1);
        set_bss(t.accompaniment, 4);
        t.silence.pes = parse_opt(cols[7]);
        t.silence.eps = parse_opt(cols[8]);
        tracks.push_back(t);
    }
    return make_report(std::move(tracks));
}

}  // namespace phonosep
