#include "viana/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viana/errors.hpp"
#include "viana/parallel.hpp"
#include "viana/rng.hpp"

namespace viana {

BaseDef beta_base(double beta) {
    if (!(beta > 1.0)) throw std::invalid_argument("beta_base: beta must be > 1");
    BaseDef b;
    b.kind = BaseDef::Kind::Beta;
    b.beta = beta;
    b.lo = 0.0;
    b.hi = 1.0;
    return b;
}

BaseDef quad_base(double b_param, int k) {
    if (!(b_param > 0.0 && b_param <= 2.0))
        throw std::invalid_argument("quad_base: b must lie in (0, 2]");
    if (k < 1) throw std::invalid_argument("quad_base: k must be >= 1");
    BaseDef b;
    b.kind = BaseDef::Kind::QuadIter;
    b.b = b_param;
    b.k = k;
    b.hi = quad(b_param, 0.0);
    b.lo = quad(b_param, b.hi);
    return b;
}

BaseDef base_of(const SkewProductSpec& spec) {
    return spec.kind == MapKind::F1 ? beta_base(spec.beta) : quad_base(spec.b, spec.k);
}

double UlamOperator::cell_width(long i) const {
    if (two_d) {
        return (theta_hi - theta_lo) / static_cast<double>(n_theta) *
               (x_hi - x_lo) / static_cast<double>(n_x);
    }
    return edges[static_cast<std::size_t>(i) + 1] - edges[static_cast<std::size_t>(i)];
}

double UlamOperator::max_row_sum_error() const {
    double worst = 0.0;
    for (const auto& row : rows) {
        double s = 0.0;
        for (const auto& [j, w] : row) s += w;
        worst = std::max(worst, std::fabs(s - 1.0));
    }
    return worst;
}

namespace {

void normalize_rows(UlamOperator& op) {
    for (auto& row : op.rows) {
        double s = 0.0;
        for (const auto& [j, w] : row) s += w;
        if (s > 0.0)
            for (auto& [j, w] : row) w /= s;
    }
}

// Accumulates mass of the source interval [t0, t1] (theta space) into the
// uniform source cells it overlaps, all going to destination cell `dest`.
void spread_interval(UlamOperator& op, double t0, double t1, std::uint32_t dest) {
    if (t1 < t0) std::swap(t0, t1);
    const double lo = op.edges.front(), hi = op.edges.back();
    const double w = (hi - lo) / static_cast<double>(op.n_cells);
    long i0 = static_cast<long>(std::floor((t0 - lo) / w));
    long i1 = static_cast<long>(std::floor((t1 - lo) / w));
    i0 = std::clamp<long>(i0, 0, op.n_cells - 1);
    i1 = std::clamp<long>(i1, 0, op.n_cells - 1);
    for (long i = i0; i <= i1; ++i) {
        const double a = std::max(t0, op.edges[static_cast<std::size_t>(i)]);
        const double b = std::min(t1, op.edges[static_cast<std::size_t>(i) + 1]);
        if (b > a) op.rows[static_cast<std::size_t>(i)].emplace_back(dest, b - a);
    }
}

void merge_row_duplicates(UlamOperator& op) {
    for (auto& row : op.rows) {
        std::sort(row.begin(), row.end());
        std::size_t w = 0;
        for (std::size_t r = 0; r < row.size(); ++r) {
            if (w > 0 && row[w - 1].first == row[r].first)
                row[w - 1].second += row[r].second;
            else
                row[w++] = row[r];
        }
        row.resize(w);
    }
}

void build_beta_rows(UlamOperator& op, double beta) {
    const long n = op.n_cells;
    op.rows.assign(static_cast<std::size_t>(n), {});
    const long n_branches = static_cast<long>(std::ceil(beta));
    for (long l = 0; l < n_branches; ++l) {
        // branch l: theta in [l/beta, min((l+1)/beta, 1)), image beta*theta - l
        const double branch_hi_img = std::min(beta - static_cast<double>(l), 1.0);
        for (long j = 0; j < n; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(n);
            const double v = static_cast<double>(j + 1) / static_cast<double>(n);
            if (u >= branch_hi_img) continue;
            const double vv = std::min(v, branch_hi_img);
            const double t0 = (u + static_cast<double>(l)) / beta;
            const double t1 = (vv + static_cast<double>(l)) / beta;
            spread_interval(op, t0, t1, static_cast<std::uint32_t>(j));
        }
    }
    merge_row_duplicates(op);
}

struct MonotonePiece {
    double lo, hi;    // theta interval
    double vlo, vhi;  // images of lo, hi
};

double quad_iter_k(double b, int k, double t) {
    for (int j = 0; j < k; ++j) t = b - t * t;
    return t;
}

double quad_iter_deriv(double b, int k, double t) {
    double d = 1.0;
    for (int j = 0; j < k; ++j) {
        d *= -2.0 * t;
        t = b - t * t;
    }
    return d;
}

// Splits [lo, hi] into pieces on which Q_b^k is monotone, refining at any
// sampled derivative sign change it finds beyond the known critical points.
std::vector<MonotonePiece> monotone_pieces(double b, int k, double lo, double hi) {
    std::vector<double> cuts = critical_points_of_iterate(b, k);
    cuts.insert(cuts.begin(), lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double u, double v) { return std::fabs(u - v) < 1e-13; }),
               cuts.end());

    std::vector<MonotonePiece> pieces;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        std::vector<std::pair<double, double>> stack{{cuts[c], cuts[c + 1]}};
        int depth = 0;
        while (!stack.empty()) {
            auto [a, e] = stack.back();
            stack.pop_back();
            if (e - a < 1e-13) continue;
            bool monotone = true;
            double split = 0.0;
            constexpr int kProbe = 16;
            double prev = quad_iter_deriv(b, k, a + (e - a) * 0.5 / kProbe);
            for (int s = 1; s < kProbe; ++s) {
                const double t = a + (e - a) * (s + 0.5) / kProbe;
                const double d = quad_iter_deriv(b, k, t);
                if (prev * d < 0.0) {
                    monotone = false;
                    split = t;
                    break;
                }
                if (d != 0.0) prev = d;
            }
            if (monotone) {
                pieces.push_back({a, e, quad_iter_k(b, k, a), quad_iter_k(b, k, e)});
            } else {
                if (++depth > 64)
                    throw ConvergenceError("build_ulam_base: monotonicity refinement failed");
                stack.push_back({a, split});
                stack.push_back({split, e});
            }
        }
    }
    return pieces;
}

// theta in [p.lo, p.hi] with Q_b^k(theta) = v, by bisection on the monotone piece.
double invert_on_piece(double b, int k, const MonotonePiece& p, double v) {
    double lo = p.lo, hi = p.hi;
    const bool increasing = p.vhi >= p.vlo;
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = quad_iter_k(b, k, mid);
        if ((fm < v) == increasing)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void build_quad_rows(UlamOperator& op, double b, int k) {
    const long n = op.n_cells;
    const double lo = op.edges.front(), hi = op.edges.back();
    op.rows.assign(static_cast<std::size_t>(n), {});
    for (const MonotonePiece& p : monotone_pieces(b, k, lo, hi)) {
        const double vmin = std::min(p.vlo, p.vhi);
        const double vmax = std::max(p.vlo, p.vhi);
        if (vmax - vmin < 1e-15) continue;
        // cell edges falling inside the image range give theta breakpoints
        long j0 = static_cast<long>(std::floor((vmin - lo) / (hi - lo) * n));
        long j1 = static_cast<long>(std::floor((vmax - lo) / (hi - lo) * n));
        j0 = std::clamp<long>(j0, 0, n - 1);
        j1 = std::clamp<long>(j1, 0, n - 1);
        double t_prev = p.vlo <= p.vhi ? p.lo : p.hi;  // theta at vmin side
        for (long j = j0; j <= j1; ++j) {
            const double edge = op.edges[static_cast<std::size_t>(j) + 1];
            double t_next;
            if (j == j1 || edge >= vmax)
                t_next = p.vlo <= p.vhi ? p.hi : p.lo;  // theta at vmax side
            else
                t_next = invert_on_piece(b, k, p, edge);
            spread_interval(op, t_prev, t_next, static_cast<std::uint32_t>(j));
            t_prev = t_next;
        }
    }
    merge_row_duplicates(op);
}

}  // namespace

UlamOperator build_ulam_base(const BaseDef& base, long n_cells) {
    if (n_cells < 2) throw std::invalid_argument("build_ulam_base: need at least 2 cells");
    UlamOperator op;
    op.n_cells = n_cells;
    op.edges.resize(static_cast<std::size_t>(n_cells) + 1);
    for (long i = 0; i <= n_cells; ++i)
        op.edges[static_cast<std::size_t>(i)] =
            base.lo + (base.hi - base.lo) * static_cast<double>(i) / static_cast<double>(n_cells);
    if (base.kind == BaseDef::Kind::Beta)
        build_beta_rows(op, base.beta);
    else
        build_quad_rows(op, base.b, base.k);
    normalize_rows(op);
    return op;
}

UlamOperator build_ulam_2d(const SkewProductSpec& spec, long n_theta, long n_x, int strata,
                           std::uint64_t seed, int threads) {
    if (n_theta < 1 || n_x < 1 || n_theta * n_x > (1L << 22))
        throw std::invalid_argument("build_ulam_2d: need 1 <= n_theta*n_x <= 2^22");
    if (strata < 8) throw std::invalid_argument("build_ulam_2d: need at least 8 strata per axis");

    UlamOperator op;
    op.two_d = true;
    op.n_theta = n_theta;
    op.n_x = n_x;
    op.n_cells = n_theta * n_x;
    op.theta_lo = spec.base_lo;
    op.theta_hi = spec.base_hi;
    op.x_lo = spec.fiber.lo;
    op.x_hi = spec.fiber.hi;
    op.rows.assign(static_cast<std::size_t>(op.n_cells), {});
    op.row_noise.assign(static_cast<std::size_t>(op.n_cells), 0.0);

    const double dt = (op.theta_hi - op.theta_lo) / static_cast<double>(n_theta);
    const double dx = (op.x_hi - op.x_lo) / static_cast<double>(n_x);
    const long per_cell = static_cast<long>(strata) * strata;

    parallel_for(static_cast<std::size_t>(op.n_cells), [&](std::size_t lo, std::size_t hi) {
        std::vector<std::pair<std::uint32_t, int>> counts;
        for (std::size_t cell = lo; cell < hi; ++cell) {
            const long it = static_cast<long>(cell) / n_x;
            const long ix = static_cast<long>(cell) % n_x;
            Rng rng = stream_rng(seed, kTagUlam, cell);
            counts.clear();
            for (int si = 0; si < strata; ++si) {
                for (int sj = 0; sj < strata; ++sj) {
                    PhasePoint y;
                    y.theta = op.theta_lo + dt * (static_cast<double>(it) +
                                                  (si + rng.next_double()) / strata);
                    y.x = op.x_lo + dx * (static_cast<double>(ix) +
                                          (sj + rng.next_double()) / strata);
                    const PhasePoint z = apply(spec, y);
                    long jt = static_cast<long>((z.theta - op.theta_lo) / dt);
                    long jx = static_cast<long>((z.x - op.x_lo) / dx);
                    jt = std::clamp<long>(jt, 0, n_theta - 1);
                    jx = std::clamp<long>(jx, 0, n_x - 1);
                    const std::uint32_t dest = static_cast<std::uint32_t>(jt * n_x + jx);
                    bool found = false;
                    for (auto& [d, c] : counts)
                        if (d == dest) {
                            ++c;
                            found = true;
                            break;
                        }
                    if (!found) counts.emplace_back(dest, 1);
                }
            }
            std::sort(counts.begin(), counts.end());
            auto& row = op.rows[cell];
            double worst = 0.0;
            for (const auto& [d, c] : counts) {
                const double p = static_cast<double>(c) / static_cast<double>(per_cell);
                row.emplace_back(d, p);
                worst = std::max(worst, std::sqrt(p * (1.0 - p) / static_cast<double>(per_cell)));
            }
            op.row_noise[cell] = worst;
        }
    }, threads);
    return op;
}

DensityVector stationary_density(const UlamOperator& op) {
    const long n = op.n_cells;
    std::vector<double> mass(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    std::vector<double> next(static_cast<std::size_t>(n));
    double diff = 0.0;
    long it = 0;
    constexpr long kMaxIter = 100000;
    for (it = 1; it <= kMaxIter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (long i = 0; i < n; ++i) {
            const double mi = mass[static_cast<std::size_t>(i)];
            if (mi == 0.0) continue;
            for (const auto& [j, w] : op.rows[static_cast<std::size_t>(i)]) next[j] += mi * w;
        }
        diff = 0.0;
        for (long i = 0; i < n; ++i)
            diff += std::fabs(next[static_cast<std::size_t>(i)] - mass[static_cast<std::size_t>(i)]);
        mass.swap(next);
        if (diff < 1e-12) break;
    }

    DensityVector d;
    d.converged = diff < 1e-12;
    d.iterations = std::min(it, kMaxIter);
    d.l1_residual = diff;
    // exact renormalization, then convert mass to cell-averaged density
    double total = 0.0;
    for (double m : mass) total += m;
    d.values.resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
        d.values[static_cast<std::size_t>(i)] =
            mass[static_cast<std::size_t>(i)] / total / op.cell_width(i);
    return d;
}

DensityVector parry_density(double beta, long n_cells) {
    if (!(beta > 1.0)) throw std::invalid_argument("parry_density: beta must be > 1");
    if (n_cells < 1) throw std::invalid_argument("parry_density: need at least 1 cell");

    // Orbit of 1 under T(x) = beta x mod 1. When beta*t lands within rounding
    // of an integer the true orbit point is 0; snap so the algebraic cases
    // (integer beta, golden mean, ...) follow their exact orbit.
    std::vector<double> orbit;   // T^m(1)
    std::vector<double> weight;  // beta^{-m}
    double t = 1.0, w = 1.0;
    while (w >= 1e-15) {
        orbit.push_back(t);
        weight.push_back(w);
        double bt = beta * t;
        double frac = bt - std::floor(bt);
        if (frac > 1.0 - 1e-11 || frac < 1e-11) frac = 0.0;
        t = frac;
        w /= beta;
    }

    DensityVector d;
    d.converged = true;
    d.values.assign(static_cast<std::size_t>(n_cells), 0.0);
    const double cw = 1.0 / static_cast<double>(n_cells);
    for (long i = 0; i < n_cells; ++i) {
        const double lo = static_cast<double>(i) * cw;
        const double hi = static_cast<double>(i + 1) * cw;
        double v = 0.0;
        for (std::size_t m = 0; m < orbit.size(); ++m) {
            const double overlap = std::min(hi, orbit[m]) - lo;  // |[lo,hi) n [0, T^m 1)|
            if (overlap > 0.0) v += weight[m] * std::min(overlap, hi - lo);
        }
        d.values[static_cast<std::size_t>(i)] = v / cw;
    }
    double total = 0.0;
    for (double v : d.values) total += v * cw;
    for (double& v : d.values) v /= total;
    return d;
}

double density_l1_distance(const UlamOperator& op, const DensityVector& f,
                           const DensityVector& g) {
    if (f.values.size() != g.values.size())
        throw std::invalid_argument("density_l1_distance: size mismatch");
    double s = 0.0;
    for (long i = 0; i < op.n_cells; ++i)
        s += std::fabs(f.values[static_cast<std::size_t>(i)] -
                       g.values[static_cast<std::size_t>(i)]) *
             op.cell_width(i);
    return s;
}

GapEstimate spectral_gap(const UlamOperator& op) {
    const long n = op.n_cells;
    // stationary left eigenvector as mass (for the deflation projector)
    DensityVector stat = stationary_density(op);
    std::vector<double> pi(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
        pi[static_cast<std::size_t>(i)] = stat.values[static_cast<std::size_t>(i)] * op.cell_width(i);

    std::vector<double> v(static_cast<std::size_t>(n)), pv(static_cast<std::size_t>(n));
    Rng rng = stream_rng(0xdecafULL, kTagSpectral, 0);
    for (double& x : v) x = rng.next_double() - 0.5;

    auto project = [&](std::vector<double>& u) {
        // remove the lambda=1 right eigenvector (constants) along pi
        double dot = 0.0;
        for (long i = 0; i < n; ++i) dot += pi[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
        for (double& x : u) x -= dot;
    };
    auto norm2 = [&](const std::vector<double>& u) {
        double s = 0.0;
        for (double x : u) s += x * x;
        return std::sqrt(s);
    };

    project(v);
    double nv = norm2(v);
    GapEstimate ge;
    if (!(nv > 0.0)) {
        ge.converged = true;
        ge.lambda2_abs = 0.0;
        ge.gap = 1.0;
        return ge;
    }
    for (double& x : v) x /= nv;

    // |lambda_2| from the cumulative geometric mean of the deflated norm
    // ratios: robust to complex pairs, whose per-step ratios oscillate
    // forever while the running mean settles like 1/t.
    constexpr long kMaxIter = 20000;
    constexpr long kWarmup = 64;
    constexpr long kCheckEvery = 256;
    double est = 0.0, prev_est = -1.0;
    double log_acc = 0.0;
    long it = 0;
    for (it = 1; it <= kMaxIter; ++it) {
        std::fill(pv.begin(), pv.end(), 0.0);
        for (long i = 0; i < n; ++i) {
            double s = 0.0;
            for (const auto& [j, w] : op.rows[static_cast<std::size_t>(i)])
                s += w * v[j];
            pv[static_cast<std::size_t>(i)] = s;
        }
        project(pv);
        const double np = norm2(pv);
        if (np < 1e-300) {
            ge.lambda2_abs = 0.0;
            ge.gap = 1.0;
            ge.converged = true;
            ge.iterations = it;
            return ge;
        }
        if (it > kWarmup) log_acc += std::log(np);
        for (long i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = pv[static_cast<std::size_t>(i)] / np;
        if (it > kWarmup && (it - kWarmup) % kCheckEvery == 0) {
            est = std::exp(log_acc / static_cast<double>(it - kWarmup));
            if (prev_est >= 0.0 && std::fabs(est - prev_est) <= 1e-5 * std::max(est, 1e-9)) {
                ge.converged = true;
                break;
            }
            prev_est = est;
        }
    }
    if (it >= kMaxIter) est = std::exp(log_acc / static_cast<double>(kMaxIter - kWarmup));
    ge.iterations = std::min(it, kMaxIter);
    ge.lambda2_abs = std::min(est, 1.0);
    ge.gap = 1.0 - ge.lambda2_abs;
    return ge;
}

std::vector<double> theta_marginal(const UlamOperator& op, const DensityVector& d) {
    if (!op.two_d) throw std::invalid_argument("theta_marginal: needs a 2-D operator");
    std::vector<double> m(static_cast<std::size_t>(op.n_theta), 0.0);
    for (long it = 0; it < op.n_theta; ++it)
        for (long ix = 0; ix < op.n_x; ++ix)
            m[static_cast<std::size_t>(it)] +=
                d.values[static_cast<std::size_t>(it * op.n_x + ix)] * op.cell_width(0);
    return m;
}

}  // namespace viana
