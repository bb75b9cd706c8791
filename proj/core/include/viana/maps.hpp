#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace viana {

// Two families of skew products over a trapped fiber interval J:
//   F1(theta, x) = (beta * theta mod 1,  Q_a(x) + alpha * sin(2*pi*theta))   on S^1 x J
//   F2(theta, x) = (Q_b^k(theta),        Q_a(x) + alpha * s(theta))          on I x J
// with Q_a(x) = a - x^2 and I = [Q_b^2(0), Q_b(0)].

enum class MapKind { F1, F2 };
enum class Subset { Full, Horizontal, Vertical };

struct PhasePoint {
    double theta = 0.0;
    double x = 0.0;
};

// Coupling s : I -> [-1, 1] for F2. Couplings are pluggable; each must
// declare the base coordinates where it fails to be C^2.
struct Coupling {
    std::function<double(double)> value;
    std::function<double(double)> slope;
    std::vector<double> singular_points;
    double sup = 1.0;
    std::string name;
};

// Default coupling: arcsin ramp rescaled onto [-1,1] over [lo,hi]. Smooth in
// the interior, derivative blows up like an inverse square root at both
// endpoints.
Coupling arcsin_coupling(double lo, double hi);

struct TrappingInterval {
    double p = 0.0;          // negative fixed point of Q_a
    double lo = 0.0, hi = 0.0;
    double margin = 0.0;     // min clearance of (lo, hi) inside (p, -p)
};

// Base coordinates b_i of the vertical singular lines {b_i} x J. The
// horizontal singular line x = 0 is always present.
struct SingularSet {
    std::vector<double> horizontal;
};

struct SkewProductSpec {
    MapKind kind = MapKind::F1;
    double a = 0.0;
    double alpha = 0.0;
    double beta = 0.0;            // F1 only
    double b = 0.0;               // F2 only
    int k = 1;                    // F2 only
    Coupling coupling;            // F2 only
    double base_lo = 0.0, base_hi = 1.0;
    TrappingInterval fiber;
    SingularSet singular;

    double base_len() const { return base_hi - base_lo; }
    double fiber_len() const { return fiber.hi - fiber.lo; }
    double diameter() const;
};

double quad(double a, double x);              // Q_a(x) = a - x^2
double quad_iter(double a, double x, long n); // Q_a^n(x)
double neg_fixed_point(double a);             // p = -(1 + sqrt(1+4a)) / 2

// Shortest arc distance on S^1 = [0,1).
double circle_dist(double t1, double t2);

// d if d <= delta, else 1. Requires d >= 0 and 0 < delta < 1.
double truncated_dist(double d, double delta);

// Builds the canonical invariant fiber interval for Q_a(x) + alpha*s with
// |s| <= coupling_sup: an open interval strictly inside (p, -p) that absorbs
// the worst-case coupling push. Throws when alpha is too large for any such
// interval to exist.
TrappingInterval trapping_interval(double a, double alpha, double coupling_sup = 1.0);

// Grid check of one-step invariance: Q_a(x) +- alpha*coupling_sup stays in
// (lo, hi) for `samples` points of [lo, hi], endpoints included.
bool trapping_invariant_holds(double a, double alpha, double lo, double hi,
                              double coupling_sup, long samples);

// Bisects g(a) = Q_a^{m+p}(0) - Q_a^m(0) in [bracket_lo, bracket_hi]. The
// returned parameter has a pre-periodic, non-periodic critical orbit and an
// acip whose empirical support fills [Q_a^2(0), Q_a(0)]; a = 2 is rejected.
double find_misiurewicz(double bracket_lo, double bracket_hi, int preperiod, int period);

// Parameter with critical orbit 0 -> a -> a-a^2 -> fixed point (root of
// a^3 - 2a^2 + 2a - 2), memoized.
double misiurewicz_31();

// Critical points of Q_b^k inside [Q_b^2(0), Q_b(0)], i.e. the union of the
// preimage trees Q_b^{-j}(0), 0 <= j < k. Exact via the quadratic inverse.
std::vector<double> critical_points_of_iterate(double b, int k);

SkewProductSpec make_f1(double a, double alpha, double beta);
SkewProductSpec make_f2(double b, int k, double a, double alpha, Coupling coupling);
SkewProductSpec make_f2(double b, int k, double a, double alpha);

// Reference parameterizations used by the experiment defaults.
SkewProductSpec default_f1();
SkewProductSpec default_f2();

PhasePoint apply(const SkewProductSpec& spec, const PhasePoint& y);
double base_apply(const SkewProductSpec& spec, double theta);
double base_derivative(const SkewProductSpec& spec, double theta);

struct JacobianLogs {
    double log_inv_norm_inv;  // log ||DF(y)^{-1}||^{-1} = log sigma_min(DF(y))
    double log_fiber;         // log |2x|
};

// Exact 2x2 singular values of DF(y). Throws SingularityError on the
// singular set (and within 1e-300 of x = 0).
JacobianLogs jacobian_logs(const SkewProductSpec& spec, const PhasePoint& y);

// sigma_min, sigma_max and |det DF| at y; same domain restrictions.
void jacobian_svd(const SkewProductSpec& spec, const PhasePoint& y,
                  double& sigma_min, double& sigma_max, double& abs_det);

double dist_to_singular(const SkewProductSpec& spec, const PhasePoint& y, Subset which);
// Distance within the base to the projected vertical singular lines.
double base_dist_to_singular(const SkewProductSpec& spec, double theta);

// Non-degeneracy scan: samples points in dyadic distance shells from the
// singular set down to radius_floor and fits the smallest constant making
// the three conditions
//   (S1)  dist^xi / B <= sigma_min,  sigma_max <= B * dist^-xi
//   (S2)  |log sigma_min(y1) - log sigma_min(y2)| <= B d(y1,y2) / dist^xi
//   (S3)  same as (S2) for log|det DF|
// hold at exponent xi (1 for F1, 2 for F2 unless overridden). A shell whose
// required constant keeps growing as the radius shrinks is reported as a
// violation; a clean scan has finite b_hat and no violations.
struct ScanViolation {
    PhasePoint point;
    double radius;
    int condition;    // 1, 2, 3
    double required_b;
};

struct NondegeneracyReport {
    double xi = 1.0;
    double b_hat = 1.0;
    std::vector<ScanViolation> violations;
    bool pass() const;
};

NondegeneracyReport nondegeneracy_scan(const SkewProductSpec& spec, long sample_count,
                                       double radius_floor,
                                       std::optional<double> xi_override = {},
                                       std::uint64_t seed = 0x5eedULL);

}  // namespace viana
