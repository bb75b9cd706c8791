#include "viana/orbit.hpp"

#include <cmath>
#include <stdexcept>

#include "viana/errors.hpp"

namespace viana {

namespace {

constexpr double kSingularGuard = 1e-300;

// True when the orbit may not continue through y without touching the
// singular set.
inline bool on_singular(const SkewProductSpec& spec, const PhasePoint& y) {
    return std::fabs(y.x) < kSingularGuard ||
           dist_to_singular(spec, y, Subset::Full) <= 0.0;
}

}  // namespace

bool base_needs_refill(const SkewProductSpec& spec) {
    return base_refill_bits(spec) > 0;
}

int base_refill_bits(const SkewProductSpec& spec) {
    if (spec.kind != MapKind::F1) return 0;
    int e = 0;
    if (std::frexp(spec.beta, &e) != 0.5) return 0;  // beta = 2^(e-1) exactly
    const int m = e - 1;
    return m >= 1 && m <= 32 ? m : 0;
}

IterateResult iterate(const SkewProductSpec& spec, PhasePoint y, long n) {
    if (n < 0) throw std::invalid_argument("iterate: step count must be >= 0");
    IterateResult r;
    OrbitStepper st(spec, y);
    for (long j = 0; j <= n; ++j) {
        if (!r.singular_hit && on_singular(spec, st.point())) {
            r.singular_hit = true;
            r.hit_step = j;
        }
        if (j < n) st.advance();
    }
    r.end = st.point();
    return r;
}

Trajectory trajectory(const SkewProductSpec& spec, PhasePoint y, long n) {
    if (n < 0) throw std::invalid_argument("trajectory: step count must be >= 0");
    Trajectory t;
    t.points.reserve(static_cast<std::size_t>(n) + 1);
    OrbitStepper st(spec, y);
    for (long j = 0; j <= n; ++j) {
        if (!t.singular_hit && on_singular(spec, st.point())) {
            t.singular_hit = true;
            t.hit_step = j;
        }
        t.points.push_back(st.point());
        if (j < n) st.advance();
    }
    return t;
}

CocycleSums cocycle_sums(const SkewProductSpec& spec, PhasePoint y, long n,
                         bool keep_partials) {
    if (n < 0) throw std::invalid_argument("cocycle_sums: step count must be >= 0");
    CocycleSums cs;
    cs.n = n;
    if (keep_partials) {
        cs.partial_inv_norm.reserve(static_cast<std::size_t>(n));
        cs.partial_fiber.reserve(static_cast<std::size_t>(n));
    }
    OrbitStepper st(spec, y);
    for (long j = 0; j < n; ++j) {
        if (on_singular(spec, st.point())) {
            cs.singular_hit = true;
            cs.hit_step = j;
            break;
        }
        const JacobianLogs jl = jacobian_logs(spec, st.point());
        cs.sum_inv_norm += jl.log_inv_norm_inv;
        cs.sum_fiber += jl.log_fiber;
        if (keep_partials) {
            cs.partial_inv_norm.push_back(cs.sum_inv_norm);
            cs.partial_fiber.push_back(cs.sum_fiber);
        }
        st.advance();
    }
    return cs;
}

namespace {

TimeFunctionResult finalize(long last_violation, long horizon, bool singular_hit) {
    TimeFunctionResult r;
    r.horizon = horizon;
    r.witness = last_violation;
    r.singular_hit = singular_hit;
    if (!singular_hit && last_violation < horizon) r.value = last_violation + 1;
    return r;
}

}  // namespace

TimeFunctionBundle time_functions(const SkewProductSpec& spec, PhasePoint y, double c,
                                  double epsilon, double delta, long n_max) {
    if (!(c > 0.0)) throw std::invalid_argument("time_functions: expansion constant c must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("time_functions: epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("time_functions: delta must lie in (0, 1)");
    if (n_max < 1) throw std::invalid_argument("time_functions: horizon must be >= 1");

    double sum_exp = 0.0, sum_full = 0.0, sum_h = 0.0, sum_v = 0.0;
    long viol_exp = 0, viol_full = 0, viol_h = 0, viol_v = 0;
    bool hit = false;
    const double half_c = 0.5 * c;
    const double two_eps = 2.0 * epsilon;
    OrbitStepper st(spec, y);
    for (long n = 1; n <= n_max; ++n) {
        const PhasePoint& p = st.point();
        if (on_singular(spec, p)) {
            hit = true;
            break;
        }
        sum_exp += jacobian_logs(spec, p).log_inv_norm_inv;
        const double dh = base_dist_to_singular(spec, p.theta);
        const double dv = std::fabs(p.x);
        if (dh <= delta) sum_h -= std::log(dh);
        if (dv <= delta) sum_v -= std::log(dv);
        const double df = dh < dv ? dh : dv;
        if (df <= delta) sum_full -= std::log(df);

        const double dn = static_cast<double>(n);
        if (sum_exp < half_c * dn) viol_exp = n;
        if (sum_full > two_eps * dn) viol_full = n;
        if (sum_h > two_eps * dn) viol_h = n;
        if (sum_v > two_eps * dn) viol_v = n;
        st.advance();
    }

    TimeFunctionBundle b;
    b.singular_hit = hit;
    b.expansion = finalize(viol_exp, n_max, hit);
    b.rec_full = finalize(viol_full, n_max, hit);
    b.rec_h = finalize(viol_h, n_max, hit);
    b.rec_v = finalize(viol_v, n_max, hit);
    return b;
}

TimeFunctionResult expansion_time(const SkewProductSpec& spec, PhasePoint y, double c,
                                  long n_max) {
    if (!(c > 0.0)) throw std::invalid_argument("expansion_time: expansion constant c must be > 0");
    if (n_max < 1) throw std::invalid_argument("expansion_time: horizon must be >= 1");
    double sum = 0.0;
    long viol = 0;
    const double half_c = 0.5 * c;
    OrbitStepper st(spec, y);
    for (long n = 1; n <= n_max; ++n) {
        if (on_singular(spec, st.point())) return finalize(viol, n_max, true);
        sum += jacobian_logs(spec, st.point()).log_inv_norm_inv;
        if (sum < half_c * static_cast<double>(n)) viol = n;
        st.advance();
    }
    return finalize(viol, n_max, false);
}

TimeFunctionResult recurrence_time(const SkewProductSpec& spec, PhasePoint y,
                                   double epsilon, double delta, Subset which, long n_max) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("recurrence_time: epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("recurrence_time: delta must lie in (0, 1)");
    if (n_max < 1) throw std::invalid_argument("recurrence_time: horizon must be >= 1");
    double sum = 0.0;
    long viol = 0;
    const double two_eps = 2.0 * epsilon;
    OrbitStepper st(spec, y);
    for (long n = 1; n <= n_max; ++n) {
        if (on_singular(spec, st.point())) return finalize(viol, n_max, true);
        const double d = dist_to_singular(spec, st.point(), which);
        if (d <= delta) sum -= std::log(d);
        if (sum > two_eps * static_cast<double>(n)) viol = n;
        st.advance();
    }
    return finalize(viol, n_max, false);
}

FiberBoundReport fiber_bound_check(const SkewProductSpec& spec, long n, double c,
                                   double kappa, long ensemble, std::uint64_t seed,
                                   int threads) {
    if (n < 1) throw std::invalid_argument("fiber_bound_check: n must be >= 1");
    if (!(c > 0.0)) throw std::invalid_argument("fiber_bound_check: c must be > 0");
    if (!(kappa > 0.0 && kappa < 0.25))
        throw std::invalid_argument("fiber_bound_check: kappa must lie in (0, 1/4)");
    if (ensemble < 1) throw std::invalid_argument("fiber_bound_check: empty ensemble");

    const double sqrt_alpha = std::sqrt(spec.alpha);
    const double g_threshold = (0.5 - 2.0 * kappa) * std::log(1.0 / spec.alpha);
    const double b2_depth = std::sqrt(static_cast<double>(n));

    // 0: violates, 1: satisfies, 2: in B2(n), 3: singular hit
    std::vector<std::uint8_t> outcome(static_cast<std::size_t>(ensemble), 3);
    parallel_for(static_cast<std::size_t>(ensemble), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(seed, kTagEnsemble, i);
            PhasePoint y{rng.uniform(spec.base_lo, spec.base_hi),
                         rng.uniform(spec.fiber.lo, spec.fiber.hi)};
            OrbitStepper st(spec, y);
            double log_fiber = 0.0, g_sum = 0.0;
            bool in_b2 = false, hit = false;
            for (long j = 0; j < n; ++j) {
                const PhasePoint& p = st.point();
                const double ax = std::fabs(p.x);
                if (ax < kSingularGuard) {
                    hit = true;
                    break;
                }
                log_fiber += std::log(2.0 * ax);
                const double r = ax >= sqrt_alpha ? 0.0 : std::log(sqrt_alpha / ax);
                if (r >= g_threshold) g_sum += r;
                if (j >= 1 && r >= b2_depth) in_b2 = true;
                st.advance();
            }
            if (hit)
                outcome[i] = 3;
            else if (in_b2)
                outcome[i] = 2;
            else
                outcome[i] = log_fiber >= c * static_cast<double>(n) - g_sum ? 1 : 0;
        }
    }, threads);

    FiberBoundReport rep;
    rep.n = n;
    for (std::uint8_t o : outcome) {
        if (o == 2) ++rep.b2_excluded;
        if (o == 0) ++rep.violations;
        if (o <= 1) ++rep.checked;
    }
    rep.fraction = rep.checked > 0
                       ? static_cast<double>(rep.violations) / static_cast<double>(rep.checked)
                       : 0.0;
    return rep;
}

DepthSummary return_depths(const SkewProductSpec& spec, PhasePoint y, long n, double kappa,
                           double c, double store_threshold) {
    if (!(kappa > 0.0 && kappa < 0.25))
        throw std::invalid_argument("return_depths: kappa must lie in (0, 1/4)");
    if (n < 1) throw std::invalid_argument("return_depths: step count must be >= 1");

    DepthSummary out;
    out.kappa = kappa;
    const double sqrt_alpha = std::sqrt(spec.alpha);
    const double g_threshold = (0.5 - 2.0 * kappa) * std::log(1.0 / spec.alpha);
    const double b2_depth = std::sqrt(static_cast<double>(n));

    OrbitStepper st(spec, y);
    for (long j = 0; j < n; ++j) {
        const PhasePoint& p = st.point();
        if (on_singular(spec, p)) {
            out.singular_hit = true;
            out.hit_step = j;
            break;
        }
        const double ax = std::fabs(p.x);
        const double r = ax >= sqrt_alpha ? 0.0 : std::log(sqrt_alpha / ax);
        if (r >= store_threshold) {
            out.indices.push_back(j);
            out.depths.push_back(r);
        }
        if (r >= g_threshold) {
            out.g_indices.push_back(j);
            out.g_sum += r;
        }
        if (j >= 1 && r >= b2_depth) out.in_b2 = true;
        st.advance();
    }
    out.in_b1 = out.g_sum >= 0.5 * c * static_cast<double>(n);
    return out;
}

}  // namespace viana
