#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "viana/maps.hpp"

namespace viana {

// Base dynamics whose transfer operator gets discretized: the circle map
// theta -> beta*theta mod 1, or the k-th iterate of Q_b on [Q_b^2(0), Q_b(0)].
struct BaseDef {
    enum class Kind { Beta, QuadIter } kind = Kind::Beta;
    double beta = 2.0;
    double b = 0.0;
    int k = 1;
    double lo = 0.0, hi = 1.0;
};

BaseDef beta_base(double beta);
BaseDef quad_base(double b, int k);
BaseDef base_of(const SkewProductSpec& spec);

// Row-stochastic Ulam matrix P[i][j] = |cell_i n g^{-1}(cell_j)| / |cell_i|
// over a partition into half-open cells (the last cell is closed).
struct UlamOperator {
    long n_cells = 0;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;

    // 1-D partition
    std::vector<double> edges;  // n_cells + 1 edges

    // 2-D partition (row index = it * n_x + ix)
    bool two_d = false;
    long n_theta = 0, n_x = 0;
    double theta_lo = 0, theta_hi = 1, x_lo = 0, x_hi = 1;
    std::vector<double> row_noise;  // 2-D only: per-row max entry stderr proxy

    double cell_width(long i) const;
    double max_row_sum_error() const;  // max_i |sum_j P[i][j] - 1|
};

// Exact preimage-interval construction for piecewise monotone bases.
// Branches of the beta map are closed-form; Q_b^k branches come from its
// critical points, inverted by bisection. Non-monotone pieces are split and
// retried before giving up.
UlamOperator build_ulam_base(const BaseDef& base, long n_cells);

// Coarse 2-D discretization of the full skew product over base x J by
// stratified sampling (strata^2 jittered samples per cell; fiber preimages
// have no closed form). Requires n_theta * n_x <= 2^22.
UlamOperator build_ulam_2d(const SkewProductSpec& spec, long n_theta, long n_x,
                           int strata = 8, std::uint64_t seed = 0x75a11dULL,
                           int threads = 0);

// Cell-averaged probability density (integrates to 1 against cell widths).
struct DensityVector {
    std::vector<double> values;
    double l1_residual = 0.0;  // ||hP - h||_1 of the returned fixed point
    long iterations = 0;
    bool converged = false;
};

// Power iteration from the uniform density; stops when the successive L1
// change drops below 1e-12 or after 1e5 iterations. Non-convergence is
// reported through the residual, never fabricated away.
DensityVector stationary_density(const UlamOperator& op);

// Closed-form invariant density of the beta map (cell-averaged):
//   h(x) proportional to sum_{n >= 0 : x < T^n(1)} beta^{-n},
// truncated once beta^{-n} < 1e-15.
DensityVector parry_density(double beta, long n_cells);

// integral |f - g| over the common 1-D partition of `op`.
double density_l1_distance(const UlamOperator& op, const DensityVector& f,
                           const DensityVector& g);

// 1 - |lambda_2|, second eigenvalue by power iteration on the complement of
// the stationary left eigenvector.
struct GapEstimate {
    double gap = 0.0;
    double lambda2_abs = 0.0;
    bool converged = false;
    long iterations = 0;
};

GapEstimate spectral_gap(const UlamOperator& op);

// theta-marginal of a 2-D cell density (probability masses per theta column).
std::vector<double> theta_marginal(const UlamOperator& op, const DensityVector& d);

}  // namespace viana
