#include "viana/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "viana/errors.hpp"
#include "viana/rng.hpp"

namespace viana {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSingularGuard = 1e-300;

double clamp01(double u) { return u < -1.0 ? -1.0 : (u > 1.0 ? 1.0 : u); }

}  // namespace

double quad(double a, double x) { return a - x * x; }

double quad_iter(double a, double x, long n) {
    for (long i = 0; i < n; ++i) x = a - x * x;
    return x;
}

double neg_fixed_point(double a) { return -(1.0 + std::sqrt(1.0 + 4.0 * a)) / 2.0; }

double circle_dist(double t1, double t2) {
    double d = std::fabs(t1 - t2);
    d -= std::floor(d);
    return d <= 0.5 ? d : 1.0 - d;
}

double truncated_dist(double d, double delta) {
    if (d < 0.0) throw std::invalid_argument("truncated_dist: distance must be >= 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("truncated_dist: delta must lie in (0, 1)");
    return d <= delta ? d : 1.0;
}

Coupling arcsin_coupling(double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    Coupling c;
    c.value = [mid, half](double t) {
        return (2.0 / kPi) * std::asin(clamp01((t - mid) / half));
    };
    c.slope = [mid, half](double t) {
        const double u = (t - mid) / half;
        if (std::fabs(u) >= 1.0) return std::numeric_limits<double>::infinity();
        return (2.0 / kPi) / (half * std::sqrt(1.0 - u * u));
    };
    c.singular_points = {lo, hi};
    c.sup = 1.0;
    c.name = "arcsin";
    return c;
}

double SkewProductSpec::diameter() const {
    const double base_diam = kind == MapKind::F1 ? 0.5 : base_len();
    return std::hypot(base_diam, fiber_len());
}

TrappingInterval trapping_interval(double a, double alpha, double coupling_sup) {
    if (!(a > 0.0 && a < 2.0)) throw std::invalid_argument("trapping_interval: a must lie in (0, 2)");
    if (!(alpha > 0.0)) throw std::invalid_argument("trapping_interval: alpha must be > 0");
    if (!(coupling_sup > 0.0 && coupling_sup <= 1.0))
        throw std::invalid_argument("trapping_interval: coupling sup must lie in (0, 1]");

    const double amp = alpha * coupling_sup;
    const double p = neg_fixed_point(a);
    const double pa = -p;  // |p|

    // An invariant open interval must stay strictly inside (p, -p): anything
    // at or below p drifts monotonically downward under Q_a - amp. Clearing
    // the lower endpoint needs h(2|p|-1) - h^2 >= amp; take twice the
    // marginal clearance.
    const double slope = 2.0 * pa - 1.0;
    const double h = 2.0 * amp / slope;
    if (!(h * slope - h * h >= amp)) throw std::invalid_argument("trapping_interval: alpha too large");

    TrappingInterval J;
    J.p = p;
    J.lo = p + h;
    const double hi_cap = std::sqrt(a - amp - J.lo);
    J.hi = std::min(-J.lo, hi_cap) - h;
    if (!(J.hi > a + amp)) throw std::invalid_argument("trapping_interval: alpha too large");
    J.margin = std::min(J.lo - p, pa - J.hi);

    // Endpoint analysis: the image of [lo, hi] under Q_a +- amp is
    // [a - max(lo^2, hi^2) - amp, a + amp].
    const double worst = std::max(J.lo * J.lo, J.hi * J.hi);
    const double img_lo = a - worst - amp;
    const double img_hi = a + amp;
    if (!(img_lo > J.lo && img_hi < J.hi))
        throw std::invalid_argument("trapping_interval: alpha too large");
    if (!trapping_invariant_holds(a, alpha, J.lo, J.hi, coupling_sup, 100000))
        throw std::invalid_argument("trapping_interval: alpha too large");
    return J;
}

bool trapping_invariant_holds(double a, double alpha, double lo, double hi,
                              double coupling_sup, long samples) {
    const double amp = alpha * coupling_sup;
    for (long i = 0; i <= samples; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples);
        const double q = a - x * x;
        if (!(q - amp > lo && q + amp < hi)) return false;
    }
    return true;
}

namespace {

// Support of the acip of Q_a is the full core [Q_a^2(0), Q_a(0)] exactly
// when Q_a is non-renormalizable; an orbit histogram with empty interior
// bins flags the renormalizable case.
bool acip_support_is_full_core(double a) {
    const double top = quad(a, 0.0);
    const double bot = quad(a, top);
    if (!(bot < top)) return false;
    constexpr int kBins = 256;
    constexpr long kIters = 200000;
    constexpr long kBurn = 1000;
    std::vector<long> bins(kBins, 0);
    double x = 0.1234;
    for (long i = 0; i < kBurn; ++i) x = quad(a, x);
    for (long i = 0; i < kIters; ++i) {
        x = quad(a, x);
        int b = static_cast<int>((x - bot) / (top - bot) * kBins);
        if (b >= 0 && b < kBins) ++bins[b];
    }
    for (int b = 0; b < kBins; ++b)
        if (bins[b] == 0) return false;
    return true;
}

}  // namespace

double find_misiurewicz(double bracket_lo, double bracket_hi, int preperiod, int period) {
    if (preperiod < 1 || period < 1)
        throw std::invalid_argument("find_misiurewicz: preperiod and period must be >= 1");
    auto g = [preperiod, period](double a) {
        return quad_iter(a, 0.0, preperiod + period) - quad_iter(a, 0.0, preperiod);
    };
    double glo = g(bracket_lo), ghi = g(bracket_hi);
    if (glo == 0.0) ghi = glo;  // degenerate endpoints handled by the sign test below
    if (!(glo * ghi < 0.0))
        throw std::invalid_argument("find_misiurewicz: no sign change of Q_a^{m+p}(0) - Q_a^m(0) in bracket");

    double lo = bracket_lo, hi = bracket_hi;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) {
            lo = hi = mid;
            break;
        }
        if (glo * gm < 0.0)
            hi = mid;
        else {
            lo = mid;
            glo = gm;
        }
    }
    const double root = 0.5 * (lo + hi);
    if (std::fabs(g(root)) > 1e-13)
        throw ConvergenceError("find_misiurewicz: bisection residual above 1e-13");
    if (std::fabs(root - 2.0) < 1e-9)
        throw std::invalid_argument("find_misiurewicz: the full quadratic parameter a = 2 is excluded");
    if (!(root > 0.0 && root < 2.0))
        throw std::invalid_argument("find_misiurewicz: parameter outside (0, 2)");

    // Pre-periodic but not periodic: the orbit of the critical point must
    // never return to 0.
    double x = 0.0;
    for (int j = 1; j <= preperiod + period; ++j) {
        x = quad(root, x);
        if (std::fabs(x) < 1e-8)
            throw std::invalid_argument("find_misiurewicz: critical orbit is periodic");
    }
    if (!acip_support_is_full_core(root))
        throw std::invalid_argument("find_misiurewicz: empirical acip support is not the full core (renormalizable?)");
    return root;
}

double misiurewicz_31() {
    static const double a = find_misiurewicz(1.4, 1.6, 3, 1);
    return a;
}

std::vector<double> critical_points_of_iterate(double b, int k) {
    if (k < 1) throw std::invalid_argument("critical_points_of_iterate: k must be >= 1");
    const double i_hi = quad(b, 0.0);
    const double i_lo = quad(b, i_hi);
    std::vector<double> out = {0.0};
    std::vector<double> level = {0.0};
    for (int j = 1; j < k; ++j) {
        std::vector<double> next;
        for (double s : level) {
            const double r = b - s;
            if (r < 0.0) continue;
            const double t = std::sqrt(r);
            if (t >= i_lo && t <= i_hi) next.push_back(t);
            if (-t >= i_lo && -t <= i_hi) next.push_back(-t);
        }
        out.insert(out.end(), next.begin(), next.end());
        level = std::move(next);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double u, double v) { return std::fabs(u - v) < 1e-12; }),
              out.end());
    return out;
}

SkewProductSpec make_f1(double a, double alpha, double beta) {
    if (!(alpha > 0.0)) throw std::invalid_argument("make_f1: coupling strength alpha must be > 0");
    if (!(beta > 1.0)) throw std::invalid_argument("make_f1: base slope beta must be > 1");
    if (!(a > 0.0 && a < 2.0) || a == 2.0)
        throw std::invalid_argument("make_f1: quadratic parameter a must lie in (0, 2)");
    SkewProductSpec s;
    s.kind = MapKind::F1;
    s.a = a;
    s.alpha = alpha;
    s.beta = beta;
    s.base_lo = 0.0;
    s.base_hi = 1.0;
    s.fiber = trapping_interval(a, alpha, 1.0);
    s.singular.horizontal = {0.0};
    return s;
}

SkewProductSpec make_f2(double b, int k, double a, double alpha, Coupling coupling) {
    if (!(alpha > 0.0)) throw std::invalid_argument("make_f2: coupling strength alpha must be > 0");
    if (k < 1) throw std::invalid_argument("make_f2: base iterate count k must be >= 1");
    if (!(a > 0.0 && a < 2.0)) throw std::invalid_argument("make_f2: quadratic parameter a must lie in (0, 2)");
    if (!(b > 0.0 && b <= 2.0)) throw std::invalid_argument("make_f2: base parameter b must lie in (0, 2]");
    if (!(coupling.sup > 0.0 && coupling.sup <= 1.0))
        throw std::invalid_argument("make_f2: coupling must map into [-1, 1]");

    SkewProductSpec s;
    s.kind = MapKind::F2;
    s.a = a;
    s.alpha = alpha;
    s.b = b;
    s.k = k;
    s.base_hi = quad(b, 0.0);
    s.base_lo = quad(b, s.base_hi);
    if (!(s.base_lo < s.base_hi)) throw std::invalid_argument("make_f2: degenerate base interval");
    s.coupling = std::move(coupling);

    // Range check of the declared coupling over a dense grid.
    constexpr int kProbe = 20000;
    for (int i = 0; i <= kProbe; ++i) {
        const double t = s.base_lo + (s.base_hi - s.base_lo) * i / double(kProbe);
        if (std::fabs(s.coupling.value(t)) > 1.0 + 1e-12)
            throw std::invalid_argument("make_f2: coupling exceeds [-1, 1]");
    }

    s.fiber = trapping_interval(a, alpha, s.coupling.sup);

    std::vector<double> lines = critical_points_of_iterate(b, k);
    for (double t : s.coupling.singular_points)
        if (t >= s.base_lo && t <= s.base_hi) lines.push_back(t);
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end(),
                            [](double u, double v) { return std::fabs(u - v) < 1e-12; }),
                lines.end());
    s.singular.horizontal = std::move(lines);
    return s;
}

SkewProductSpec make_f2(double b, int k, double a, double alpha) {
    const double hi = quad(b, 0.0);
    const double lo = quad(b, hi);
    return make_f2(b, k, a, alpha, arcsin_coupling(lo, hi));
}

SkewProductSpec default_f1() { return make_f1(misiurewicz_31(), 0.01, 2.0); }

SkewProductSpec default_f2() {
    const double a = misiurewicz_31();
    return make_f2(a, 2, a, 0.005);
}

double base_apply(const SkewProductSpec& spec, double theta) {
    if (spec.kind == MapKind::F1) {
        double t = spec.beta * theta;
        t -= std::floor(t);
        return t < 1.0 ? t : 0.0;
    }
    double t = theta;
    for (int j = 0; j < spec.k; ++j) t = spec.b - t * t;
    // one-ulp guard: Q_b^k maps I into I exactly, rounding may not
    if (t < spec.base_lo) t = spec.base_lo;
    if (t > spec.base_hi) t = spec.base_hi;
    return t;
}

double base_derivative(const SkewProductSpec& spec, double theta) {
    if (spec.kind == MapKind::F1) return spec.beta;
    double d = 1.0;
    double t = theta;
    for (int j = 0; j < spec.k; ++j) {
        d *= -2.0 * t;
        t = spec.b - t * t;
    }
    return d;
}

PhasePoint apply(const SkewProductSpec& spec, const PhasePoint& y) {
    PhasePoint out;
    out.theta = base_apply(spec, y.theta);
    const double s = spec.kind == MapKind::F1 ? std::sin(2.0 * kPi * y.theta)
                                              : spec.coupling.value(y.theta);
    out.x = spec.a - y.x * y.x + spec.alpha * s;
    return out;
}

void jacobian_svd(const SkewProductSpec& spec, const PhasePoint& y,
                  double& sigma_min, double& sigma_max, double& abs_det) {
    if (dist_to_singular(spec, y, Subset::Full) <= 0.0 || std::fabs(y.x) < kSingularGuard)
        throw SingularityError("jacobian on the singular set");
    const double gp = base_derivative(spec, y.theta);
    const double od = spec.kind == MapKind::F1
                          ? 2.0 * kPi * spec.alpha * std::cos(2.0 * kPi * y.theta)
                          : spec.alpha * spec.coupling.slope(y.theta);
    const double fx = -2.0 * y.x;
    // DF = [[gp, 0], [od, fx]]; singular values from the 2x2 Gram matrix.
    const double det = gp * fx;
    const double trace = gp * gp + od * od + fx * fx;
    const double disc = std::sqrt(std::max(trace * trace - 4.0 * det * det, 0.0));
    const double lam_max = 0.5 * (trace + disc);
    const double lam_min = lam_max > 0.0 ? (det * det) / lam_max : 0.0;
    sigma_min = std::sqrt(lam_min);
    sigma_max = std::sqrt(lam_max);
    abs_det = std::fabs(det);
    if (!(sigma_min > 0.0)) throw SingularityError("jacobian degenerate at this point");
}

JacobianLogs jacobian_logs(const SkewProductSpec& spec, const PhasePoint& y) {
    double smin, smax, det;
    jacobian_svd(spec, y, smin, smax, det);
    return {std::log(smin), std::log(2.0 * std::fabs(y.x))};
}

double base_dist_to_singular(const SkewProductSpec& spec, double theta) {
    if (spec.kind == MapKind::F1) return circle_dist(theta, 0.0);
    double best = std::numeric_limits<double>::infinity();
    for (double b : spec.singular.horizontal) best = std::min(best, std::fabs(theta - b));
    return best;
}

double dist_to_singular(const SkewProductSpec& spec, const PhasePoint& y, Subset which) {
    switch (which) {
        case Subset::Horizontal:
            return base_dist_to_singular(spec, y.theta);
        case Subset::Vertical:
            return std::fabs(y.x);
        case Subset::Full:
            return std::min(base_dist_to_singular(spec, y.theta), std::fabs(y.x));
    }
    return 0.0;
}

bool NondegeneracyReport::pass() const {
    return violations.empty() && std::isfinite(b_hat);
}

namespace {

struct ShellStat {
    double radius;
    double required_b = 1.0;
    ScanViolation worst{};  // sample achieving required_b
};

}  // namespace

NondegeneracyReport nondegeneracy_scan(const SkewProductSpec& spec, long sample_count,
                                       double radius_floor, std::optional<double> xi_override,
                                       std::uint64_t seed) {
    if (sample_count < 1000)
        throw std::invalid_argument("nondegeneracy_scan: sample count must be >= 1000");
    if (!(radius_floor > 0.0 && radius_floor < 0.01))
        throw std::invalid_argument("nondegeneracy_scan: radius floor must lie in (0, 0.01)");

    NondegeneracyReport rep;
    rep.xi = xi_override.value_or(spec.kind == MapKind::F1 ? 1.0 : 2.0);
    const double xi = rep.xi;

    std::vector<double> radii;
    for (double r = 1.0 / 16.0; r >= radius_floor; r *= 0.5) radii.push_back(r);
    if (radii.empty() || radii.back() > radius_floor) radii.push_back(radius_floor);

    const long per_shell = std::max<long>(8, sample_count / static_cast<long>(radii.size()));
    const int n_lines = static_cast<int>(spec.singular.horizontal.size());

    std::vector<ShellStat> shells;
    shells.reserve(radii.size());
    std::uint64_t ctr = 0;

    for (double r : radii) {
        ShellStat st;
        st.radius = r;
        for (long i = 0; i < per_shell; ++i) {
            Rng rng = stream_rng(seed, kTagScan, ctr++);
            const int comp = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n_lines + 1));
            PhasePoint y1;
            if (comp < n_lines) {
                const double line = spec.singular.horizontal[comp];
                const double side = rng.next_double() < 0.5 ? -1.0 : 1.0;
                double t = line + side * r;
                if (spec.kind == MapKind::F1) {
                    t -= std::floor(t);
                } else if (t < spec.base_lo || t > spec.base_hi) {
                    t = line - side * r;
                    if (t < spec.base_lo || t > spec.base_hi) continue;
                }
                y1.theta = t;
                y1.x = rng.uniform(spec.fiber.lo + 0.05, spec.fiber.hi - 0.05);
            } else {
                y1.x = (rng.next_double() < 0.5 ? -1.0 : 1.0) * r;
                y1.theta = rng.uniform(spec.base_lo, spec.base_hi);
            }
            const double d1 = dist_to_singular(spec, y1, Subset::Full);
            if (!(d1 > 0.0)) continue;

            double smin1, smax1, det1;
            try {
                jacobian_svd(spec, y1, smin1, smax1, det1);
            } catch (const SingularityError&) {
                continue;
            }
            const double dpow = std::pow(d1, xi);
            const double req1 = std::max(dpow / smin1, smax1 * dpow);

            // Partner point at distance d1/4 (same side of the singular set).
            const double ang = rng.uniform(0.0, 2.0 * kPi);
            PhasePoint y2 = y1;
            double dth = 0.25 * d1 * std::cos(ang);
            double dx = 0.25 * d1 * std::sin(ang);
            if (spec.kind == MapKind::F2 &&
                (y1.theta + dth < spec.base_lo || y1.theta + dth > spec.base_hi))
                dth = -dth;
            if (y1.x + dx < spec.fiber.lo || y1.x + dx > spec.fiber.hi) dx = -dx;
            y2.theta = y1.theta + dth;
            if (spec.kind == MapKind::F1) y2.theta -= std::floor(y2.theta);
            y2.x = y1.x + dx;
            const double d12 = std::hypot(0.25 * d1 * std::cos(ang), dx);

            double req2 = 1.0, req3 = 1.0;
            try {
                double smin2, smax2, det2;
                jacobian_svd(spec, y2, smin2, smax2, det2);
                req2 = std::fabs(std::log(smin2) - std::log(smin1)) * dpow / d12;
                req3 = std::fabs(std::log(det2) - std::log(det1)) * dpow / d12;
            } catch (const SingularityError&) {
                // partner landed on the singular set; skip the regularity pair
            }

            const double reqs[3] = {req1, req2, req3};
            for (int c = 0; c < 3; ++c) {
                if (reqs[c] > st.required_b) {
                    st.required_b = reqs[c];
                    st.worst = {y1, r, c + 1, reqs[c]};
                }
            }
        }
        shells.push_back(st);
    }

    // Reference level from the coarse shells; divergence at fine radii means
    // the exponent is too small.
    double b_ref = 1.0;
    for (const auto& st : shells)
        if (st.radius >= 1e-3) b_ref = std::max(b_ref, st.required_b);
    double b_hat = 1.0;
    for (const auto& st : shells) {
        b_hat = std::max(b_hat, st.required_b);
        if (st.radius < 1e-3 && st.required_b > 8.0 * b_ref) rep.violations.push_back(st.worst);
    }
    rep.b_hat = b_hat;
    return rep;
}

}  // namespace viana
