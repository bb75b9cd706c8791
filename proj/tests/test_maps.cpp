#include <cmath>
#include <numbers>

#include "doctest.h"
#include "viana/errors.hpp"
#include "viana/maps.hpp"
#include "viana/rng.hpp"

using namespace viana;

namespace {

// Independent 2x2 singular values from finite-difference Jacobian entries.
// The base difference unwraps the circle for F1.
void fd_singular_values(const SkewProductSpec& spec, const PhasePoint& y, double h,
                        double& smin, double& smax) {
    auto diff_theta = [&](double t1, double t0) {
        double d = t1 - t0;
        if (spec.kind == MapKind::F1) {
            if (d > 0.5) d -= 1.0;
            if (d < -0.5) d += 1.0;
        }
        return d;
    };
    const PhasePoint tp = apply(spec, {y.theta + h, y.x});
    const PhasePoint tm = apply(spec, {y.theta - h, y.x});
    const PhasePoint xp = apply(spec, {y.theta, y.x + h});
    const PhasePoint xm = apply(spec, {y.theta, y.x - h});
    const double a11 = diff_theta(tp.theta, tm.theta) / (2 * h);
    const double a21 = (tp.x - tm.x) / (2 * h);
    const double a12 = diff_theta(xp.theta, xm.theta) / (2 * h);
    const double a22 = (xp.x - xm.x) / (2 * h);
    // eigenvalues of A^T A via the quadratic formula
    const double g11 = a11 * a11 + a21 * a21;
    const double g22 = a12 * a12 + a22 * a22;
    const double g12 = a11 * a12 + a21 * a22;
    const double tr = g11 + g22;
    const double disc = std::sqrt(std::max((g11 - g22) * (g11 - g22) + 4 * g12 * g12, 0.0));
    smax = std::sqrt(0.5 * (tr + disc));
    smin = std::sqrt(std::max(0.5 * (tr - disc), 0.0));
}

// Critical points of Q_b^k by recursive subdivision on derivative sign
// changes, independent of the closed-form preimage construction.
void subdivide_critical(double b, int k, double lo, double hi, double dlo, double dhi,
                        int depth, std::vector<double>& out) {
    auto deriv = [&](double t) {
        double d = 1.0, x = t;
        for (int j = 0; j < k; ++j) {
            d *= -2.0 * x;
            x = b - x * x;
        }
        return d;
    };
    if (hi - lo < 1e-12) {
        out.push_back(0.5 * (lo + hi));
        return;
    }
    const double mid = 0.5 * (lo + hi);
    const double dm = deriv(mid);
    if (depth > 60) return;
    if (dlo == 0.0 || dlo * dm <= 0.0) subdivide_critical(b, k, lo, mid, dlo, dm, depth + 1, out);
    if (dhi == 0.0 || dm * dhi <= 0.0) subdivide_critical(b, k, mid, hi, dm, dhi, depth + 1, out);
}

std::vector<double> critical_points_oracle(double b, int k) {
    const double hi = quad(b, 0.0);
    const double lo = quad(b, hi);
    std::vector<double> out;
    const int probes = 4096;
    auto deriv = [&](double t) {
        double d = 1.0, x = t;
        for (int j = 0; j < k; ++j) {
            d *= -2.0 * x;
            x = b - x * x;
        }
        return d;
    };
    double prev_t = lo, prev_d = deriv(lo);
    for (int i = 1; i <= probes; ++i) {
        const double t = lo + (hi - lo) * i / double(probes);
        const double d = deriv(t);
        if (prev_d == 0.0) out.push_back(prev_t);
        if (prev_d * d < 0.0) subdivide_critical(b, k, prev_t, t, prev_d, d, 0, out);
        prev_t = t;
        prev_d = d;
    }
    if (prev_d == 0.0) out.push_back(prev_t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double u, double v) { return std::fabs(u - v) < 1e-9; }),
              out.end());
    return out;
}

}  // namespace

TEST_CASE("make_f1 validates its parameters") {
    const double a = misiurewicz_31();
    const SkewProductSpec s = make_f1(a, 0.01, 2.0);
    CHECK(s.kind == MapKind::F1);
    CHECK(s.singular.horizontal.size() == 1);
    CHECK(s.singular.horizontal[0] == 0.0);
    CHECK(s.fiber.lo < s.fiber.hi);

    CHECK_THROWS_AS(make_f1(a, 0.0, 2.0), std::invalid_argument);   // coupling must be positive
    CHECK_THROWS_AS(make_f1(a, -0.01, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(make_f1(a, 0.01, 0.9), std::invalid_argument);  // base not expanding
    CHECK_THROWS_AS(make_f1(2.0, 0.01, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(make_f1(2.5, 0.01, 2.0), std::invalid_argument);
}

TEST_CASE("apply evaluates the F1 formula") {
    const SkewProductSpec s = make_f1(1.5, 0.01, 2.0);
    const PhasePoint p = apply(s, {0.25, 0.0});
    CHECK(p.theta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p.x == doctest::Approx(1.51).epsilon(1e-14));  // Q_a(0) + alpha sin(pi/2)

    const PhasePoint q = apply(s, {0.75, 0.3});
    CHECK(q.theta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q.x == doctest::Approx(1.5 - 0.09 - 0.01).epsilon(1e-13));  // sin(3 pi / 2) = -1
}

TEST_CASE("apply evaluates the F2 formula at the base critical point") {
    const double a = misiurewicz_31();
    const SkewProductSpec s = make_f2(a, 1, a, 0.005);
    const PhasePoint p = apply(s, {0.0, 0.0});
    CHECK(p.theta == doctest::Approx(s.b).epsilon(1e-15));
    CHECK(p.x == doctest::Approx(a + 0.005 * s.coupling.value(0.0)).epsilon(1e-13));
}

TEST_CASE("make_f2 assembles the singular lines and validates the coupling") {
    const double a = misiurewicz_31();
    const SkewProductSpec s = default_f2();
    CHECK(s.base_hi == doctest::Approx(quad(a, 0.0)));
    CHECK(s.base_lo == doctest::Approx(quad(a, s.base_hi)));
    CHECK(s.singular.horizontal.size() >= 1);

    // critical points of Q_b^k against the subdivision oracle
    const std::vector<double> oracle = critical_points_oracle(s.b, s.k);
    const std::vector<double> exact = critical_points_of_iterate(s.b, s.k);
    REQUIRE(exact.size() == oracle.size());
    for (std::size_t i = 0; i < exact.size(); ++i)
        CHECK(exact[i] == doctest::Approx(oracle[i]).epsilon(1e-7));
    // every critical point appears among the singular lines
    for (double c : exact) {
        bool found = false;
        for (double l : s.singular.horizontal)
            if (std::fabs(l - c) < 1e-9) found = true;
        CHECK(found);
    }

    CHECK_THROWS_AS(make_f2(a, 0, a, 0.005), std::invalid_argument);  // k >= 1

    Coupling wide = arcsin_coupling(s.base_lo, s.base_hi);
    wide.sup = 1.5;
    CHECK_THROWS_AS(make_f2(a, 2, a, 0.005, wide), std::invalid_argument);

    // coupling whose declared sup lies but whose values exceed the range
    Coupling liar = arcsin_coupling(s.base_lo, s.base_hi);
    const auto inner = liar.value;
    liar.value = [inner](double t) { return 1.2 * inner(t); };
    CHECK_THROWS_AS(make_f2(a, 2, a, 0.005, liar), std::invalid_argument);
}

TEST_CASE("jacobian_logs is exact on the diagonal case and rejects the singular set") {
    const SkewProductSpec s = make_f1(misiurewicz_31(), 0.01, 2.0);
    const JacobianLogs jl = jacobian_logs(s, {0.25, 1.0});  // cos term vanishes
    CHECK(jl.log_inv_norm_inv == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(jl.log_fiber == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    CHECK_THROWS_AS(jacobian_logs(s, {0.25, 0.0}), SingularityError);
    CHECK_THROWS_AS(jacobian_logs(s, {0.0, 1.0}), SingularityError);
}

TEST_CASE("jacobian_logs agrees with finite differences at random points") {
    const SkewProductSpec f1 = default_f1();
    const SkewProductSpec f2 = default_f2();
    for (const SkewProductSpec* spec : {&f1, &f2}) {
        long tested = 0;
        Rng rng = stream_rng(0xfd, kTagEnsemble, 0);
        while (tested < 10000) {
            PhasePoint y{rng.uniform(spec->base_lo, spec->base_hi),
                         rng.uniform(spec->fiber.lo + 0.02, spec->fiber.hi - 0.02)};
            if (dist_to_singular(*spec, y, Subset::Full) < 1e-2) continue;
            ++tested;
            double smin_fd, smax_fd;
            fd_singular_values(*spec, y, 1e-6, smin_fd, smax_fd);
            double smin, smax, det;
            jacobian_svd(*spec, y, smin, smax, det);
            REQUIRE(std::fabs(std::log(smin) - std::log(smin_fd)) <=
                    1e-5 * std::max(1.0, std::fabs(std::log(smin))));
        }
    }
}

TEST_CASE("dist_to_singular splits into horizontal and vertical parts") {
    const SkewProductSpec s = default_f1();
    CHECK(dist_to_singular(s, {0.5, 0.3}, Subset::Horizontal) == doctest::Approx(0.5));
    CHECK(dist_to_singular(s, {0.5, 0.3}, Subset::Vertical) == doctest::Approx(0.3));
    CHECK(dist_to_singular(s, {0.5, 0.3}, Subset::Full) == doctest::Approx(0.3));
    // circle wraparound
    CHECK(dist_to_singular(s, {0.9, 1.0}, Subset::Horizontal) ==
          doctest::Approx(0.1).epsilon(1e-12));

    // full = min(horizontal, vertical) exactly
    const SkewProductSpec f2 = default_f2();
    Rng rng = stream_rng(0xd1, kTagEnsemble, 0);
    for (const SkewProductSpec* spec : {&s, &f2}) {
        for (int i = 0; i < 1000; ++i) {
            const PhasePoint y{rng.uniform(spec->base_lo, spec->base_hi),
                               rng.uniform(spec->fiber.lo, spec->fiber.hi)};
            const double dh = dist_to_singular(*spec, y, Subset::Horizontal);
            const double dv = dist_to_singular(*spec, y, Subset::Vertical);
            REQUIRE(dist_to_singular(*spec, y, Subset::Full) == std::min(dh, dv));
        }
    }
}

TEST_CASE("truncated_dist branches and rejections") {
    CHECK(truncated_dist(0.05, 0.1) == 0.05);
    CHECK(truncated_dist(0.5, 0.1) == 1.0);
    CHECK(truncated_dist(0.1, 0.1) == 0.1);  // boundary d = delta keeps the distance
    CHECK_THROWS_AS(truncated_dist(0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(truncated_dist(0.5, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(truncated_dist(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("trapping interval construction and validation") {
    const double a = misiurewicz_31();
    const TrappingInterval J = trapping_interval(a, 0.01);
    CHECK(J.p == doctest::Approx(-1.83929).epsilon(1e-5));
    CHECK(J.margin > 0.0);
    CHECK(J.lo > J.p);
    CHECK(J.hi < -J.p);

    // grid oracle on the constructed interval
    CHECK(trapping_invariant_holds(a, 0.01, J.lo, J.hi, 1.0, 1000000));

    // an interval containing [p, -p] is never invariant: the image of its
    // lower-edge region undershoots the interval (same grid oracle)
    CHECK_FALSE(trapping_invariant_holds(a, 0.01, J.p - 0.02, -J.p + 0.02, 1.0, 1000000));

    CHECK_THROWS_AS(trapping_interval(a, 1.0), std::invalid_argument);  // alpha too large
}

TEST_CASE("find_misiurewicz locates the (3,1) parameter and rejects bad inputs") {
    const double a = find_misiurewicz(1.4, 1.6, 3, 1);
    CHECK(a == doctest::Approx(1.543689).epsilon(1e-6));
    // root of a^3 - 2 a^2 + 2 a - 2
    CHECK(a * a * a - 2 * a * a + 2 * a - 2 == doctest::Approx(0.0).epsilon(1e-12));
    // re-iteration residual
    CHECK(std::fabs(quad_iter(a, 0.0, 4) - quad_iter(a, 0.0, 3)) < 1e-12);
    // Q_a^3(0) lands on the positive fixed point
    const double q = (-1.0 + std::sqrt(1.0 + 4.0 * a)) / 2.0;
    CHECK(quad_iter(a, 0.0, 3) == doctest::Approx(q).epsilon(1e-10));

    // bracket around the full quadratic finds a = 2 and rejects it
    CHECK_THROWS_AS(find_misiurewicz(1.9, 2.1, 2, 1), std::invalid_argument);
    // no sign change
    CHECK_THROWS_AS(find_misiurewicz(1.0, 1.1, 3, 1), std::invalid_argument);
}

TEST_CASE("nondegeneracy scan passes at the map's exponent and flags a low exponent") {
    const SkewProductSpec f1 = default_f1();
    const NondegeneracyReport r1 = nondegeneracy_scan(f1, 4000, 1e-8);
    CHECK(r1.xi == 1.0);
    CHECK(r1.pass());
    CHECK(std::isfinite(r1.b_hat));
    CHECK(r1.b_hat >= 1.0);

    const SkewProductSpec f2 = default_f2();
    const NondegeneracyReport r2 = nondegeneracy_scan(f2, 4000, 1e-8);
    CHECK(r2.xi == 2.0);
    CHECK(r2.pass());

    // at xi = 0.5 the (S1) lower bound ratio diverges as dist -> 0 near the
    // fiber critical line
    const NondegeneracyReport rb = nondegeneracy_scan(f1, 4000, 1e-8, 0.5);
    CHECK_FALSE(rb.violations.empty());
    double min_x = 1e300;
    for (const ScanViolation& v : rb.violations) min_x = std::min(min_x, std::fabs(v.point.x));
    CHECK(min_x < 1e-4);

    CHECK_THROWS_AS(nondegeneracy_scan(f1, 100, 1e-8), std::invalid_argument);
}

TEST_CASE("trapping holds on a grid of the full phase space") {
    for (const SkewProductSpec& s : {default_f1(), default_f2()}) {
        const long n = 200;
        for (long i = 0; i <= n; ++i) {
            for (long j = 0; j <= n; ++j) {
                const PhasePoint y{
                    s.base_lo + s.base_len() * static_cast<double>(i) / static_cast<double>(n),
                    s.fiber.lo + s.fiber_len() * static_cast<double>(j) / static_cast<double>(n)};
                const PhasePoint z = apply(s, y);
                REQUIRE(z.theta >= s.base_lo);
                REQUIRE(z.theta <= s.base_hi);
                REQUIRE(z.x > s.fiber.lo);
                REQUIRE(z.x < s.fiber.hi);
            }
        }
    }
}

TEST_CASE("apply is pure: repeated evaluation is bit-identical") {
    const SkewProductSpec f1 = default_f1();
    const SkewProductSpec f2 = default_f2();
    Rng rng = stream_rng(0xab, kTagEnsemble, 3);
    for (const SkewProductSpec* s : {&f1, &f2}) {
        for (int i = 0; i < 100; ++i) {
            const PhasePoint y{rng.uniform(s->base_lo, s->base_hi),
                               rng.uniform(s->fiber.lo, s->fiber.hi)};
            const PhasePoint a = apply(*s, y);
            const PhasePoint b = apply(*s, y);
            REQUIRE(a.theta == b.theta);
            REQUIRE(a.x == b.x);
        }
    }
}

TEST_CASE("default coupling has unit range and square-root endpoint slopes") {
    const SkewProductSpec s = default_f2();
    CHECK(s.coupling.value(s.base_lo) == doctest::Approx(-1.0));
    CHECK(s.coupling.value(s.base_hi) == doctest::Approx(1.0));
    const double mid = 0.5 * (s.base_lo + s.base_hi);
    CHECK(s.coupling.value(mid) == doctest::Approx(0.0).epsilon(1e-12));
    // slope blows up like an inverse square root toward the endpoint
    const double len = s.base_hi - s.base_lo;
    const double s1 = s.coupling.slope(s.base_hi - 1e-4 * len);
    const double s2 = s.coupling.slope(s.base_hi - 1e-6 * len);
    CHECK(s2 / s1 == doctest::Approx(10.0).epsilon(0.05));
    CHECK(std::isinf(s.coupling.slope(s.base_hi)));
    CHECK(s.coupling.singular_points.size() == 2);
}
