#include "viana/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "viana/errors.hpp"
#include "viana/orbit.hpp"
#include "viana/parallel.hpp"
#include "viana/rng.hpp"

namespace viana {

namespace {

constexpr double kSingularGuard = 1e-300;

PhasePoint lebesgue_start(const SkewProductSpec& spec, Rng& rng) {
    PhasePoint y;
    y.theta = rng.uniform(spec.base_lo, spec.base_hi);
    y.x = rng.uniform(spec.fiber.lo, spec.fiber.hi);
    return y;
}

void require_increasing(const std::vector<long>& n_list, long min_first) {
    if (n_list.empty()) throw std::invalid_argument("n_list must be nonempty");
    if (n_list.front() < min_first)
        throw std::invalid_argument("n_list entries out of range");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw std::invalid_argument("n_list must be strictly increasing");
}

// variance helper returning (mean, stderr of the mean), fixed-order sums
std::pair<double, double> mean_and_stderr(std::span<const double> v) {
    const double m = pairwise_mean(v);
    if (v.size() < 2) return {m, 0.0};
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
    const double var = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

struct LinReg {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

LinReg linreg(const std::vector<double>& x, const std::vector<double>& y) {
    LinReg out;
    const std::size_t n = x.size();
    if (n < 2) return out;
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (out.slope * x[i] + out.intercept);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    out.sse = ss_res;
    out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res < 1e-18 ? 1.0 : 0.0);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

HolderEstimate estimate_holder_norm(const SkewProductSpec& spec, const Observable& obs,
                                    double gamma, long resolution) {
    if (resolution < 64)
        throw std::invalid_argument("estimate_holder_norm: resolution must be >= 64 per axis");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("estimate_holder_norm: gamma must lie in (0, 1]");

    const bool circular = spec.kind == MapKind::F1;
    const long r = resolution;
    const long n_theta = circular ? r : r + 1;
    const double tspan = spec.base_len();

    std::vector<double> thetas(static_cast<std::size_t>(n_theta));
    for (long i = 0; i < n_theta; ++i)
        thetas[static_cast<std::size_t>(i)] =
            spec.base_lo + tspan * static_cast<double>(i) / static_cast<double>(r);

    std::vector<long> offsets;
    for (long d = 1; d <= r / 2; d *= 2) offsets.push_back(d);

    auto theta_gap = [&](long i, long d) {
        const double raw = tspan * static_cast<double>(d) / static_cast<double>(r);
        (void)i;
        if (!circular) return raw;
        return std::min(raw, 1.0 - raw);
    };

    HolderEstimate est;
    est.resolution = r;

    if (obs.base_only) {
        std::vector<double> vals(static_cast<std::size_t>(n_theta));
        for (long i = 0; i < n_theta; ++i) {
            vals[static_cast<std::size_t>(i)] = obs({thetas[static_cast<std::size_t>(i)], 0.0});
            est.sup = std::max(est.sup, std::fabs(vals[static_cast<std::size_t>(i)]));
        }
        for (long d : offsets) {
            for (long i = 0; i < n_theta; ++i) {
                long j = i + d;
                if (circular)
                    j %= n_theta;
                else if (j >= n_theta)
                    continue;
                const double gap = theta_gap(i, d);
                if (gap <= 0.0) continue;
                const double q = std::fabs(vals[static_cast<std::size_t>(j)] -
                                           vals[static_cast<std::size_t>(i)]) /
                                 std::pow(gap, gamma);
                est.seminorm = std::max(est.seminorm, q);
            }
        }
        est.norm = est.sup + est.seminorm;
        return est;
    }

    const long n_x = r + 1;
    const double xspan = spec.fiber_len();
    std::vector<double> vals(static_cast<std::size_t>(n_theta * n_x));
    for (long i = 0; i < n_theta; ++i) {
        for (long j = 0; j < n_x; ++j) {
            const PhasePoint y{thetas[static_cast<std::size_t>(i)],
                               spec.fiber.lo + xspan * static_cast<double>(j) / static_cast<double>(r)};
            const double v = obs(y);
            vals[static_cast<std::size_t>(i * n_x + j)] = v;
            est.sup = std::max(est.sup, std::fabs(v));
        }
    }
    auto at = [&](long i, long j) { return vals[static_cast<std::size_t>(i * n_x + j)]; };
    for (long d : offsets) {
        const double dx = xspan * static_cast<double>(d) / static_cast<double>(r);
        for (long i = 0; i < n_theta; ++i) {
            const long ic = circular ? (i + d) % n_theta : i + d;
            const bool i_ok = circular || ic < n_theta;
            const double dth = theta_gap(i, d);
            for (long j = 0; j < n_x; ++j) {
                const double v0 = at(i, j);
                if (i_ok && dth > 0.0) {
                    const double q = std::fabs(at(ic, j) - v0) / std::pow(dth, gamma);
                    est.seminorm = std::max(est.seminorm, q);
                }
                if (j + d < n_x) {
                    const double q = std::fabs(at(i, j + d) - v0) / std::pow(dx, gamma);
                    est.seminorm = std::max(est.seminorm, q);
                    if (i_ok && dth > 0.0) {
                        const double diag = std::fabs(at(ic, j + d) - v0) /
                                            std::pow(std::hypot(dth, dx), gamma);
                        est.seminorm = std::max(est.seminorm, diag);
                    }
                }
            }
        }
    }
    est.norm = est.sup + est.seminorm;
    return est;
}

// ---------------------------------------------------------------------------

double calibrate_c(const SkewProductSpec& spec, long ensemble, long n, std::uint64_t seed,
                   double quantile, int threads) {
    if (ensemble < 100) throw std::invalid_argument("calibrate_c: ensemble must be >= 100");
    if (n < 100) throw std::invalid_argument("calibrate_c: orbit length must be >= 100");
    std::vector<double> avgs(static_cast<std::size_t>(ensemble),
                             std::numeric_limits<double>::quiet_NaN());
    parallel_for(static_cast<std::size_t>(ensemble), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(seed, kTagCalibrate, i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            double sum = 0.0;
            bool ok = true;
            for (long t = 0; t < n; ++t) {
                const PhasePoint& y = st.point();
                if (std::fabs(y.x) < kSingularGuard ||
                    dist_to_singular(spec, y, Subset::Full) <= 0.0) {
                    ok = false;
                    break;
                }
                sum += jacobian_logs(spec, y).log_inv_norm_inv;
                st.advance();
            }
            if (ok) avgs[i] = sum / static_cast<double>(n);
        }
    }, threads);
    std::vector<double> clean;
    clean.reserve(avgs.size());
    for (double a : avgs)
        if (!std::isnan(a)) clean.push_back(a);
    if (clean.size() < 10) throw ConvergenceError("calibrate_c: too few valid orbits");
    std::sort(clean.begin(), clean.end());
    const double c = clean[static_cast<std::size_t>(quantile * static_cast<double>(clean.size() - 1))];
    if (!(c > 0.0))
        throw ConvergenceError("calibrate_c: empirical expansion constant is not positive");
    return c;
}

double calibrate_delta(const SkewProductSpec& spec, double epsilon, double delta_max,
                       std::uint64_t seed, double safety, int threads) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("calibrate_delta: epsilon must be > 0");
    if (!(delta_max > 0.0 && delta_max < 1.0))
        throw std::invalid_argument("calibrate_delta: delta_max must lie in (0, 1)");

    std::vector<double> cand;
    for (double d = delta_max; d > 1e-7 && cand.size() < 40; d *= 0.7) cand.push_back(d);

    constexpr long kMembers = 2000, kSteps = 2000, kBurn = 1000;
    std::vector<std::vector<double>> per(static_cast<std::size_t>(kMembers));
    parallel_for(static_cast<std::size_t>(kMembers), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(seed, kTagCalibrate, 0x10000 + i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            for (long t = 0; t < kBurn; ++t) st.advance();
            per[i].assign(cand.size(), 0.0);
            for (long t = 0; t < kSteps; ++t) {
                const double d = dist_to_singular(spec, st.point(), Subset::Full);
                if (d > 0.0) {
                    const double nl = -std::log(d);
                    for (std::size_t j = 0; j < cand.size(); ++j)
                        if (d <= cand[j]) per[i][j] += nl;
                }
                st.advance();
            }
        }
    }, threads);

    for (std::size_t j = 0; j < cand.size(); ++j) {
        double acc = 0.0;
        for (long i = 0; i < kMembers; ++i) acc += per[static_cast<std::size_t>(i)][j];
        const double rate = acc / (static_cast<double>(kMembers) * static_cast<double>(kSteps));
        if (rate <= safety * epsilon) return cand[j];
    }
    return cand.back();
}

// ---------------------------------------------------------------------------

std::vector<double> Histogram2D::theta_marginal() const {
    std::vector<double> m(static_cast<std::size_t>(n_theta), 0.0);
    for (long it = 0; it < n_theta; ++it)
        for (long ix = 0; ix < n_x; ++ix)
            m[static_cast<std::size_t>(it)] += mass[static_cast<std::size_t>(it * n_x + ix)];
    return m;
}

Histogram2D empirical_acip(const SkewProductSpec& spec, long samples, long burn_in,
                           long n_theta, long n_x, std::uint64_t seed, int threads) {
    if (burn_in < 1000) throw std::invalid_argument("empirical_acip: burn_in must be >= 1000");
    if (samples < 1) throw std::invalid_argument("empirical_acip: need samples >= 1");
    if (n_theta < 1 || n_x < 1) throw std::invalid_argument("empirical_acip: bad bin counts");

    Histogram2D h;
    h.n_theta = n_theta;
    h.n_x = n_x;
    h.theta_lo = spec.base_lo;
    h.theta_hi = spec.base_hi;
    h.x_lo = spec.fiber.lo;
    h.x_hi = spec.fiber.hi;

    const int max_slots = default_threads();
    std::vector<std::vector<std::uint64_t>> counts(
        static_cast<std::size_t>(std::max(max_slots, threads > 0 ? threads : 1)),
        std::vector<std::uint64_t>(static_cast<std::size_t>(n_theta * n_x), 0));
    std::vector<std::uint64_t> dropped(counts.size(), 0);

    const double dt = (h.theta_hi - h.theta_lo) / static_cast<double>(n_theta);
    const double dx = (h.x_hi - h.x_lo) / static_cast<double>(n_x);

    parallel_for_slotted(static_cast<std::size_t>(samples), threads,
                         [&](int slot, std::size_t lo, std::size_t hi) {
        auto& local = counts[static_cast<std::size_t>(slot)];
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(seed, kTagEnsemble, i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            bool ok = true;
            for (long t = 0; t < burn_in; ++t) {
                if (std::fabs(st.point().x) < kSingularGuard) {
                    ok = false;
                    break;
                }
                st.advance();
            }
            if (!ok) {
                ++dropped[static_cast<std::size_t>(slot)];
                continue;
            }
            long it = static_cast<long>((st.point().theta - h.theta_lo) / dt);
            long ix = static_cast<long>((st.point().x - h.x_lo) / dx);
            it = std::clamp<long>(it, 0, n_theta - 1);
            ix = std::clamp<long>(ix, 0, n_x - 1);
            ++local[static_cast<std::size_t>(it * n_x + ix)];
        }
    });

    std::vector<std::uint64_t> total(static_cast<std::size_t>(n_theta * n_x), 0);
    std::uint64_t total_dropped = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        total_dropped += dropped[s];
        for (std::size_t c = 0; c < total.size(); ++c) total[c] += counts[s][c];
    }
    h.dropped = static_cast<long>(total_dropped);
    const double denom = static_cast<double>(samples) - static_cast<double>(total_dropped);
    h.mass.resize(total.size());
    for (std::size_t c = 0; c < total.size(); ++c)
        h.mass[c] = denom > 0.0 ? static_cast<double>(total[c]) / denom : 0.0;
    return h;
}

// ---------------------------------------------------------------------------

std::vector<CorrPoint> correlation_series(const SkewProductSpec& spec, const Observable& phi,
                                          const Observable& psi, const std::vector<long>& n_list,
                                          const EnsembleConfig& cfg, long norm_resolution) {
    require_increasing(n_list, 1);
    const HolderEstimate hphi = estimate_holder_norm(spec, phi, phi.gamma, norm_resolution);
    const HolderEstimate hpsi = estimate_holder_norm(spec, psi, psi.gamma, norm_resolution);
    if (!(hphi.norm > 0.0))
        throw std::invalid_argument("correlation_series: phi has zero norm");
    if (!(hpsi.sup > 0.0))
        throw std::invalid_argument("correlation_series: psi has zero sup norm");

    const long m = cfg.size;
    const long n_max = n_list.back();
    const std::size_t kn = n_list.size();
    std::vector<double> phi_v(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> psi_v(kn, std::vector<double>(static_cast<std::size_t>(m)));

    parallel_for(static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(cfg.seed, kTagEnsemble, i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            for (long t = 0; t < cfg.burn_in; ++t) st.advance();
            phi_v[i] = phi(st.point());
            std::size_t next = 0;
            for (long t = 1; t <= n_max; ++t) {
                st.advance();
                if (t == n_list[next]) {
                    psi_v[next][i] = psi(st.point());
                    ++next;
                }
            }
        }
    }, cfg.threads);

    const double m_phi = pairwise_mean(phi_v);
    std::vector<CorrPoint> out(kn);
    std::vector<double> prod(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < kn; ++k) {
        const double m_psi = pairwise_mean(psi_v[k]);
        for (std::size_t i = 0; i < prod.size(); ++i)
            prod[i] = (phi_v[i] - m_phi) * (psi_v[k][i] - m_psi);
        auto [cov, se] = mean_and_stderr(prod);
        out[k].n = n_list[k];
        out[k].corr = std::fabs(cov) / (hphi.norm * hpsi.sup);
        out[k].stderr_ = se / (hphi.norm * hpsi.sup);
    }
    return out;
}

std::vector<LdPoint> ld_series(const SkewProductSpec& spec, const Observable& phi,
                               double epsilon, const std::vector<long>& n_list,
                               const EnsembleConfig& cfg) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("ld_series: epsilon must be > 0");
    require_increasing(n_list, 1);

    const long m = cfg.size;
    const long n_max = n_list.back();
    const std::size_t kn = n_list.size();
    std::vector<std::vector<double>> avg(kn, std::vector<double>(static_cast<std::size_t>(m)));

    parallel_for(static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(cfg.seed, kTagEnsemble, i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            for (long t = 0; t < cfg.burn_in; ++t) st.advance();
            double sum = 0.0;
            std::size_t next = 0;
            for (long t = 0; t < n_max; ++t) {
                sum += phi(st.point());
                if (t + 1 == n_list[next]) {
                    avg[next][i] = sum / static_cast<double>(t + 1);
                    ++next;
                }
                st.advance();
            }
        }
    }, cfg.threads);

    const double mean_ref = pairwise_mean(avg.back());
    std::vector<LdPoint> out(kn);
    for (std::size_t k = 0; k < kn; ++k) {
        long count = 0;
        for (double a : avg[k])
            if (std::fabs(a - mean_ref) > epsilon) ++count;
        const double p = static_cast<double>(count) / static_cast<double>(m);
        out[k].n = n_list[k];
        out[k].ld = p;
        out[k].stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(m));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string tail_kind_name(TailKind k) {
    switch (k) {
        case TailKind::Expansion: return "expansion";
        case TailKind::RecurrenceH: return "recurrence_h";
        case TailKind::RecurrenceV: return "recurrence_v";
        case TailKind::Joint: return "joint";
    }
    return "?";
}

TailCurveSet tail_curves(const SkewProductSpec& spec, const TailParams& params,
                         const std::vector<long>& n_list, long ensemble,
                         std::uint64_t seed, int threads) {
    require_increasing(n_list, 0);
    if (ensemble < 1) throw std::invalid_argument("tail_curves: ensemble must be >= 1");
    const long horizon = std::max<long>(n_list.back(), 1);

    const long sentinel = horizon + 1;
    std::vector<long> ve(static_cast<std::size_t>(ensemble)), vf(ve.size()), vh(ve.size()),
        vv(ve.size());
    std::vector<std::uint8_t> excluded(ve.size(), 0);

    parallel_for(static_cast<std::size_t>(ensemble), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(seed, kTagTail, i);
            const PhasePoint y = lebesgue_start(spec, rng);
            const TimeFunctionBundle b =
                time_functions(spec, y, params.c, params.epsilon, params.delta, horizon);
            if (b.singular_hit) {
                excluded[i] = 1;
                continue;
            }
            ve[i] = b.expansion.value.value_or(sentinel);
            vf[i] = b.rec_full.value.value_or(sentinel);
            vh[i] = b.rec_h.value.value_or(sentinel);
            vv[i] = b.rec_v.value.value_or(sentinel);
        }
    }, threads);

    long n_excluded = 0;
    for (std::uint8_t e : excluded) n_excluded += e;
    const long denom = ensemble - n_excluded;

    auto make_curve = [&](TailKind kind, auto&& exceeds) {
        TailCurve c;
        c.kind = kind;
        c.params = params;
        c.seed = seed;
        c.ensemble_size = denom;
        c.excluded = n_excluded;
        for (long n : n_list) {
            long count = 0;
            for (std::size_t i = 0; i < ve.size(); ++i)
                if (!excluded[i] && exceeds(i, n)) ++count;
            c.n_values.push_back(n);
            c.counts.push_back(count);
            c.p_values.push_back(denom > 0 ? static_cast<double>(count) / static_cast<double>(denom)
                                           : 0.0);
        }
        return c;
    };

    TailCurveSet set;
    set.expansion = make_curve(TailKind::Expansion, [&](std::size_t i, long n) { return ve[i] > n; });
    set.rec_h = make_curve(TailKind::RecurrenceH, [&](std::size_t i, long n) { return vh[i] > n; });
    set.rec_v = make_curve(TailKind::RecurrenceV, [&](std::size_t i, long n) { return vv[i] > n; });
    set.joint = make_curve(TailKind::Joint,
                           [&](std::size_t i, long n) { return ve[i] > n || vf[i] > n; });
    set.expansion_or_v = make_curve(TailKind::RecurrenceV,
                                    [&](std::size_t i, long n) { return ve[i] > n || vv[i] > n; });
    return set;
}

TailCurve tail_curve(const SkewProductSpec& spec, TailKind kind, const TailParams& params,
                     const std::vector<long>& n_list, long ensemble, std::uint64_t seed,
                     int threads) {
    TailCurveSet set = tail_curves(spec, params, n_list, ensemble, seed, threads);
    switch (kind) {
        case TailKind::Expansion: return set.expansion;
        case TailKind::RecurrenceH: return set.rec_h;
        case TailKind::RecurrenceV: return set.rec_v;
        case TailKind::Joint: return set.joint;
    }
    return set.joint;
}

// ---------------------------------------------------------------------------

namespace {

struct FitData {
    std::vector<double> log_n;
    std::vector<double> p;
    double max_p = 0.0;
};

// SSE of the inner linear fit at a fixed profile constant C.
LinReg fit_at_c(const FitData& d, double log_c) {
    std::vector<double> y(d.p.size());
    for (std::size_t i = 0; i < d.p.size(); ++i) {
        const double inner = std::log(d.p[i]) - log_c;  // log(p/C) < 0
        y[i] = std::log(-inner);
    }
    return linreg(d.log_n, y);
}

StretchedExpFit fit_core(const FitData& d) {
    // coarse profile grid over log C, then ternary refinement
    const double lo0 = std::log(d.max_p) + 1e-9;
    const double hi0 = std::log(d.max_p) + 8.0;
    double best_lc = lo0, best_sse = std::numeric_limits<double>::infinity();
    constexpr int kGrid = 257;
    for (int g = 0; g < kGrid; ++g) {
        const double lc = lo0 + (hi0 - lo0) * g / static_cast<double>(kGrid - 1);
        const double sse = fit_at_c(d, lc).sse;
        if (sse < best_sse) {
            best_sse = sse;
            best_lc = lc;
        }
    }
    double a = std::max(lo0, best_lc - (hi0 - lo0) / (kGrid - 1));
    double b = std::min(hi0, best_lc + (hi0 - lo0) / (kGrid - 1));
    for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (fit_at_c(d, m1).sse <= fit_at_c(d, m2).sse)
            b = m2;
        else
            a = m1;
    }
    const double lc = 0.5 * (a + b);
    const LinReg fit = fit_at_c(d, lc);
    if (!std::isfinite(fit.slope) || !std::isfinite(fit.intercept))
        throw UnfittableError("fit_stretched_exp: degenerate regression");
    StretchedExpFit out;
    out.c_hat = std::exp(lc);
    out.zeta_hat = fit.slope;
    out.tau_hat = std::exp(fit.intercept);
    out.r2 = fit.r2;
    return out;
}

}  // namespace

StretchedExpFit fit_stretched_exp(const std::vector<long>& n_values,
                                  const std::vector<double>& p_values,
                                  std::optional<std::pair<long, long>> window,
                                  std::uint64_t seed) {
    if (n_values.size() != p_values.size())
        throw std::invalid_argument("fit_stretched_exp: size mismatch");
    FitData d;
    long w_lo = std::numeric_limits<long>::max(), w_hi = 0;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        const long n = n_values[i];
        const double p = p_values[i];
        if (n < 1) continue;
        if (window && (n < window->first || n > window->second)) continue;
        if (!(p > 1e-6 && p < 0.9)) continue;
        d.log_n.push_back(std::log(static_cast<double>(n)));
        d.p.push_back(p);
        d.max_p = std::max(d.max_p, p);
        w_lo = std::min(w_lo, n);
        w_hi = std::max(w_hi, n);
    }
    if (d.p.size() < 4)
        throw UnfittableError("fit_stretched_exp: fewer than 4 usable points in window");
    {
        double pmin = d.p[0], pmax = d.p[0];
        for (double p : d.p) {
            pmin = std::min(pmin, p);
            pmax = std::max(pmax, p);
        }
        if (pmax - pmin < 1e-12)
            throw UnfittableError("fit_stretched_exp: curve is constant, model not identifiable");
    }

    StretchedExpFit out = fit_core(d);
    out.window_lo = w_lo;
    out.window_hi = w_hi;

    // bootstrap interval for zeta, resampling curve points
    std::vector<double> zetas;
    zetas.reserve(200);
    for (int rep = 0; rep < 200; ++rep) {
        Rng rng = stream_rng(seed, kTagBootstrap, static_cast<std::uint64_t>(rep));
        FitData rd;
        for (std::size_t i = 0; i < d.p.size(); ++i) {
            const std::size_t pick = static_cast<std::size_t>(rng.next_u64() % d.p.size());
            rd.log_n.push_back(d.log_n[pick]);
            rd.p.push_back(d.p[pick]);
            rd.max_p = std::max(rd.max_p, d.p[pick]);
        }
        try {
            zetas.push_back(fit_core(rd).zeta_hat);
        } catch (const UnfittableError&) {
        }
    }
    if (zetas.size() >= 20) {
        std::sort(zetas.begin(), zetas.end());
        out.zeta_lo = zetas[static_cast<std::size_t>(0.025 * static_cast<double>(zetas.size() - 1))];
        out.zeta_hi = zetas[static_cast<std::size_t>(0.975 * static_cast<double>(zetas.size() - 1))];
    } else {
        out.zeta_lo = out.zeta_hi = out.zeta_hat;
    }
    return out;
}

StretchedExpFit fit_stretched_exp(const TailCurve& curve,
                                  std::optional<std::pair<long, long>> window,
                                  std::uint64_t seed) {
    return fit_stretched_exp(curve.n_values, curve.p_values, window, seed);
}

std::pair<double, double> fit_envelope(const std::vector<long>& n_values,
                                       const std::vector<double>& p_values, double zeta) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (n_values[i] < 1 || !(p_values[i] > 1e-12)) continue;
        x.push_back(std::pow(static_cast<double>(n_values[i]), zeta));
        y.push_back(std::log(p_values[i]));
    }
    if (x.size() < 2) throw UnfittableError("fit_envelope: fewer than 2 usable points");
    const LinReg f = linreg(x, y);
    return {std::exp(f.intercept), -f.slope};
}

// ---------------------------------------------------------------------------

SigmaSquared sigma_squared(const SkewProductSpec& spec, const Observable& phi, long n_trunc,
                           const EnsembleConfig& cfg) {
    if (n_trunc < 4) throw std::invalid_argument("sigma_squared: n_trunc must be >= 4");
    const long nq = std::max<long>(1, n_trunc / 4);
    const long nh = std::max<long>(2, n_trunc / 2);
    const long m = cfg.size;

    std::vector<double> sq(static_cast<std::size_t>(m)), sh(sq.size()), sf(sq.size());
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(cfg.seed, kTagEnsemble, i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            for (long t = 0; t < cfg.burn_in; ++t) st.advance();
            double sum = 0.0;
            for (long t = 0; t < n_trunc; ++t) {
                sum += phi(st.point());
                if (t + 1 == nq) sq[i] = sum;
                if (t + 1 == nh) sh[i] = sum;
                st.advance();
            }
            sf[i] = sum;
        }
    }, cfg.threads);

    SigmaSquared out;
    out.mean = pairwise_mean(sf) / static_cast<double>(n_trunc);

    auto sigma_at = [&](const std::vector<double>& sums, long n) {
        std::vector<double> sqr(sums.size());
        const double center = static_cast<double>(n) * out.mean;
        for (std::size_t i = 0; i < sums.size(); ++i)
            sqr[i] = (sums[i] - center) * (sums[i] - center);
        return pairwise_mean(sqr) / static_cast<double>(n);
    };
    out.at_quarter = sigma_at(sq, nq);
    out.at_half = sigma_at(sh, nh);
    out.value = sigma_at(sf, n_trunc);
    out.drift = std::fabs(out.value - out.at_half) / std::max(out.value, 1e-300);
    out.converged = out.drift <= 0.10;
    return out;
}

double ks_against_normal(std::vector<double> values, double sigma2) {
    if (values.empty()) throw std::invalid_argument("ks_against_normal: empty sample");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("ks_against_normal: sigma2 must be > 0");
    std::sort(values.begin(), values.end());
    const double sigma = std::sqrt(sigma2);
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double z = values[i] / (sigma * std::numbers::sqrt2);
        const double cdf = 0.5 * std::erfc(-z);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - cdf);
        d = std::max(d, cdf - static_cast<double>(i) / n);
    }
    return d;
}

CltReport clt_diagnostic(const SkewProductSpec& spec, const Observable& phi,
                         const std::vector<long>& n_list, const EnsembleConfig& cfg) {
    require_increasing(n_list, 1);
    CltReport rep;
    const SigmaSquared ss = sigma_squared(spec, phi, n_list.back(), cfg);
    rep.sigma2 = ss.value;
    if (!(ss.value > 1e-12)) {
        rep.degenerate = true;
        return rep;
    }

    const long m = cfg.size;
    const std::size_t kn = n_list.size();
    std::vector<std::vector<double>> sums(kn, std::vector<double>(static_cast<std::size_t>(m)));
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = stream_rng(cfg.seed, kTagEnsemble, 0x20000000ULL + i);
            OrbitStepper st(spec, lebesgue_start(spec, rng));
            for (long t = 0; t < cfg.burn_in; ++t) st.advance();
            double sum = 0.0;
            std::size_t next = 0;
            for (long t = 0; t < n_list.back(); ++t) {
                sum += phi(st.point());
                if (t + 1 == n_list[next]) {
                    sums[next][i] = sum;
                    ++next;
                }
                st.advance();
            }
        }
    }, cfg.threads);

    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < kn; ++k) {
        const long n = n_list[k];
        std::vector<double> vals(sums[k].size());
        // center by the per-n ensemble mean: a sqrt(n)-amplified global mean
        // error would otherwise shift the largest-n comparisons
        const double center = pairwise_mean(sums[k]);
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = (sums[k][i] - center) / std::sqrt(static_cast<double>(n));
        const double d = ks_against_normal(std::move(vals), ss.value);
        rep.ks_by_n.emplace_back(n, d);
        if (d > 0.0) {
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(d));
        }
    }
    if (lx.size() >= 2) rep.be_exponent = -linreg(lx, ly).slope;
    return rep;
}

}  // namespace viana
