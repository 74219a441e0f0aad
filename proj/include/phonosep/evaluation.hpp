#pragma once

// BSS-eval metrics (SDR/SIR/SAR via least-squares projection onto
// time-shifted reference subspaces), silence metrics (PES/EPS), median
// reporting and paired significance testing.

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace phonosep {

struct BssScores {
    double sdr = 0.0, sir = 0.0, sar = 0.0;
    bool defined = true;  // false when the reference is all-zero
};

// references/estimates: two time-aligned sources of equal length.
// filter_len is the allowed-distortion filter length in taps.
std::array<BssScores, 2> bss_eval(const std::vector<double>& ref0, const std::vector<double>& ref1,
                                  const std::vector<double>& est0, const std::vector<double>& est1,
                                  int filter_len = 512);

struct PesEps {
    std::optional<double> pes;  // predicted energy at silent-target frames (dB)
    std::optional<double> eps;  // target energy at silent-prediction frames (dB)
};

PesEps pes_eps(const std::vector<double>& reference_vocals,
               const std::vector<double>& estimated_vocals);

struct TrackEval {
    std::string track_id;
    BssScores vocals, accompaniment;
    PesEps silence;
};

struct MetricSummary {
    std::optional<double> median;
    int excluded = 0;  // tracks without a defined value
};

struct EvalReport {
    std::vector<TrackEval> tracks;
    MetricSummary sdr_vocals, sir_vocals, sar_vocals;
    MetricSummary sdr_accompaniment, sir_accompaniment, sar_accompaniment;
    MetricSummary pes, eps;
};

EvalReport make_report(std::vector<TrackEval> tracks);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    int n = 0;
    bool zero_variance = false;
};

// Two-sided paired t-test with n-1 degrees of freedom, matched by position.
TTestResult paired_t_test(const std::vector<double>& metric_a, const std::vector<double>& metric_b);

// Survival function of the t-distribution, accurate to ~1e-6 (continued
// fraction evaluation of the regularized incomplete beta).
double student_t_sf(double t, int dof);

double median_of(std::vector<double> values);

// Structured-text report plus a machine-readable line-oriented twin.
void write_report_text(const std::string& path, const EvalReport& report);
void write_report_tsv(const std::string& path, const EvalReport& report);
EvalReport load_report_tsv(const std::string& path);

}  // namespace phonosep
