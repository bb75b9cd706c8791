#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "viana/maps.hpp"
#include "viana/observable.hpp"

namespace viana {

// Shared knobs of the Monte-Carlo estimators. Member i draws from the
// stream (seed, tag, i); reductions run in a fixed pairwise order, so
// results are bit-identical for any worker count.
struct EnsembleConfig {
    std::uint64_t seed = 1;
    long size = 100000;
    long burn_in = 10000;
    int threads = 0;  // 0: default
};

// ---------------------------------------------------------------------------
// Norms

struct HolderEstimate {
    double sup = 0.0;
    double seminorm = 0.0;
    double norm = 0.0;  // sup + seminorm
    long resolution = 0;
};

// Grid lower bound: sup over nested grid points, seminorm over pairs at
// dyadic index separations along both axes and the diagonal. Estimates are
// nondecreasing under doubling of the resolution.
HolderEstimate estimate_holder_norm(const SkewProductSpec& spec, const Observable& obs,
                                    double gamma, long resolution);

// ---------------------------------------------------------------------------
// Calibration

// Empirical expansion constant: the `quantile` quantile (default 10th
// percentile) of (1/n) sum log ||DF^{-1}||^{-1} over a Lebesgue-uniform
// ensemble. Throws ConvergenceError when the estimate is not positive.
double calibrate_c(const SkewProductSpec& spec, long ensemble, long n, std::uint64_t seed,
                   double quantile = 0.10, int threads = 0);

// Largest delta (scanning down from delta_max by factor 0.7) whose empirical
// stationary mean of -log dist_delta(., S) stays below safety * epsilon; the
// slow-recurrence threshold 2*epsilon then dominates the almost-sure average
// and recurrence times are finite. Returns delta_max when it already passes.
double calibrate_delta(const SkewProductSpec& spec, double epsilon, double delta_max,
                       std::uint64_t seed, double safety = 0.8, int threads = 0);

// ---------------------------------------------------------------------------
// Invariant measure

struct Histogram2D {
    long n_theta = 0, n_x = 0;
    std::vector<double> mass;  // probability mass per cell, sums to 1
    long dropped = 0;          // singular-hit members excluded from the mass
    double theta_lo = 0, theta_hi = 1, x_lo = 0, x_hi = 1;

    std::vector<double> theta_marginal() const;
};

// Density of ensemble endpoints after burn-in from Lebesgue-uniform starts.
Histogram2D empirical_acip(const SkewProductSpec& spec, long samples, long burn_in,
                           long n_theta, long n_x, std::uint64_t seed, int threads = 0);

// ---------------------------------------------------------------------------
// Correlations & large deviations

struct CorrPoint {
    long n = 0;
    double corr = 0.0;
    double stderr_ = 0.0;
};

// Cor(phi, psi o F^n) = |cov| / (||phi||_{H_gamma} ||psi||_inf) over a
// stationary ensemble; the norms are grid estimates at `norm_resolution`.
std::vector<CorrPoint> correlation_series(const SkewProductSpec& spec, const Observable& phi,
                                          const Observable& psi, const std::vector<long>& n_list,
                                          const EnsembleConfig& cfg, long norm_resolution = 128);

struct LdPoint {
    long n = 0;
    double ld = 0.0;
    double stderr_ = 0.0;
};

// Fraction of stationary starts whose time-n Birkhoff average deviates from
// the stationary mean by more than epsilon.
std::vector<LdPoint> ld_series(const SkewProductSpec& spec, const Observable& phi,
                               double epsilon, const std::vector<long>& n_list,
                               const EnsembleConfig& cfg);

// ---------------------------------------------------------------------------
// Tail curves

enum class TailKind { Expansion, RecurrenceH, RecurrenceV, Joint };

std::string tail_kind_name(TailKind k);

struct TailParams {
    double c = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    double kappa = 0.1;
};

struct TailCurve {
    TailKind kind = TailKind::Joint;
    std::vector<long> n_values;
    std::vector<double> p_values;  // survival fractions
    std::vector<long> counts;      // points with time function > n
    long ensemble_size = 0;
    long excluded = 0;  // singular hits, outside the denominator
    TailParams params;
    std::uint64_t seed = 0;
};

struct TailCurveSet {
    TailCurve expansion, rec_h, rec_v, joint, expansion_or_v;
};

// One orbit pass per Lebesgue-uniform start (no burn-in: the tail statement
// is about Lebesgue measure) computing all time functions; horizon is
// max(n_list). Sentinel results count as exceeding every n.
TailCurveSet tail_curves(const SkewProductSpec& spec, const TailParams& params,
                         const std::vector<long>& n_list, long ensemble,
                         std::uint64_t seed, int threads = 0);

TailCurve tail_curve(const SkewProductSpec& spec, TailKind kind, const TailParams& params,
                     const std::vector<long>& n_list, long ensemble, std::uint64_t seed,
                     int threads = 0);

// ---------------------------------------------------------------------------
// Stretched-exponential fit  p_n ~ C exp(-tau n^zeta)

struct StretchedExpFit {
    double c_hat = 1.0;
    double tau_hat = 0.0;
    double zeta_hat = 0.0;
    double r2 = 0.0;
    double zeta_lo = 0.0, zeta_hi = 0.0;  // bootstrap 95% interval
    long window_lo = 0, window_hi = 0;    // fitted n-range
};

// Least squares of log(-log(p/C)) against log n with C profiled on a log
// grid and refined; only points with p in (1e-6, 0.9) enter, at least 4 are
// required. Throws UnfittableError on degenerate curves. zeta is reported
// with a 200-resample bootstrap interval and never clamped.
StretchedExpFit fit_stretched_exp(const std::vector<long>& n_values,
                                  const std::vector<double>& p_values,
                                  std::optional<std::pair<long, long>> window = {},
                                  std::uint64_t seed = 0xb003ULL);

StretchedExpFit fit_stretched_exp(const TailCurve& curve,
                                  std::optional<std::pair<long, long>> window = {},
                                  std::uint64_t seed = 0xb003ULL);

// Least squares of log p against n^zeta with zeta held fixed (comparison
// envelopes); returns (C, tau).
std::pair<double, double> fit_envelope(const std::vector<long>& n_values,
                                       const std::vector<double>& p_values, double zeta);

// ---------------------------------------------------------------------------
// CLT diagnostics

struct SigmaSquared {
    double value = 0.0;       // at n_trunc
    double at_quarter = 0.0;  // at n_trunc/4
    double at_half = 0.0;     // at n_trunc/2
    double drift = 0.0;       // |value - at_half| / max(value, tiny)
    bool converged = false;   // drift <= 10%
    double mean = 0.0;        // stationary mean estimate used for centering
};

// Green-Kubo variance (1/n) E[(sum_{i<n} phi o F^i - n mean)^2] evaluated at
// three truncations to exhibit convergence.
SigmaSquared sigma_squared(const SkewProductSpec& spec, const Observable& phi, long n_trunc,
                           const EnsembleConfig& cfg);

struct CltReport {
    double sigma2 = 0.0;
    std::vector<std::pair<long, double>> ks_by_n;
    double be_exponent = 0.0;  // fitted q in KS ~ C n^-q
    bool degenerate = false;   // sigma2 indistinguishable from zero
};

// Kolmogorov-Smirnov distance between normalized Birkhoff sums S_n/sqrt(n)
// and Normal(0, sigma2) at each n, plus the fitted decay exponent.
CltReport clt_diagnostic(const SkewProductSpec& spec, const Observable& phi,
                         const std::vector<long>& n_list, const EnsembleConfig& cfg);

// Exact KS statistic of `values` against Normal(0, sigma2); sorts a copy.
double ks_against_normal(std::vector<double> values, double sigma2);

}  // namespace viana
