#include "viana/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "viana/orbit.hpp"
#include "viana/parallel.hpp"
#include "viana/rng.hpp"

namespace viana {

long OccupancyGrid::occupied_count() const {
    long c = 0;
    for (std::uint8_t o : occupied) c += o;
    return c;
}

long OccupancyGrid::cell_of(const PhasePoint& y) const {
    const double dt = (theta_hi - theta_lo) / static_cast<double>(n_theta);
    const double dx = (x_hi - x_lo) / static_cast<double>(n_x);
    long it = static_cast<long>((y.theta - theta_lo) / dt);
    long ix = static_cast<long>((y.x - x_lo) / dx);
    it = std::clamp<long>(it, 0, n_theta - 1);
    ix = std::clamp<long>(ix, 0, n_x - 1);
    return it * n_x + ix;
}

PhasePoint OccupancyGrid::cell_center(long cell) const {
    const double dt = (theta_hi - theta_lo) / static_cast<double>(n_theta);
    const double dx = (x_hi - x_lo) / static_cast<double>(n_x);
    const long it = cell / n_x;
    const long ix = cell % n_x;
    return {theta_lo + dt * (static_cast<double>(it) + 0.5),
            x_lo + dx * (static_cast<double>(ix) + 0.5)};
}

namespace {

PhasePoint grid_sample(const SkewProductSpec& spec, std::uint64_t seed, std::size_t index) {
    Rng rng = stream_rng(seed, kTagGrid, index);
    return {rng.uniform(spec.base_lo, spec.base_hi), rng.uniform(spec.fiber.lo, spec.fiber.hi)};
}

double phase_dist(const SkewProductSpec& spec, const PhasePoint& a, const PhasePoint& b) {
    const double dt = spec.kind == MapKind::F1 ? circle_dist(a.theta, b.theta)
                                               : std::fabs(a.theta - b.theta);
    return std::hypot(dt, a.x - b.x);
}

}  // namespace

int auto_generation(const SkewProductSpec& spec) {
    const double amp = spec.alpha * (spec.kind == MapKind::F1 ? 1.0 : spec.coupling.sup);
    double lo = spec.fiber.lo, hi = spec.fiber.hi;
    int g = 0;
    for (; g < 64; ++g) {
        const double worst = std::max(lo * lo, hi * hi);
        const double nlo = spec.a - worst - amp;
        const double nhi = spec.a + amp;
        if (std::fabs(nlo - lo) < 1e-9 && std::fabs(nhi - hi) < 1e-9) break;
        lo = nlo;
        hi = nhi;
    }
    return g + 2;
}

OccupancyGrid attractor_grid(const SkewProductSpec& spec, long n_theta, long n_x,
                             long samples, std::uint64_t seed, int generation, int threads) {
    if (n_theta < 1 || n_x < 1) throw std::invalid_argument("attractor_grid: bad resolution");
    if (samples < 10 * n_theta * n_x)
        throw std::invalid_argument("attractor_grid: need at least 10 samples per cell");
    if (generation < 0) throw std::invalid_argument("attractor_grid: generation must be >= 0");
    if (generation == 0) generation = auto_generation(spec);

    OccupancyGrid g;
    g.n_theta = n_theta;
    g.n_x = n_x;
    g.seed = seed;
    g.samples = samples;
    g.generation = generation;
    g.theta_lo = spec.base_lo;
    g.theta_hi = spec.base_hi;
    g.x_lo = spec.fiber.lo;
    g.x_hi = spec.fiber.hi;

    const std::size_t n_cells = static_cast<std::size_t>(n_theta * n_x);
    const int slots_max = threads > 0 ? threads : default_threads();
    std::vector<std::vector<std::uint8_t>> masks(static_cast<std::size_t>(slots_max),
                                                 std::vector<std::uint8_t>(n_cells, 0));
    parallel_for_slotted(static_cast<std::size_t>(samples), threads,
                         [&](int slot, std::size_t lo, std::size_t hi) {
                             auto& mask = masks[static_cast<std::size_t>(slot)];
                             for (std::size_t i = lo; i < hi; ++i) {
                                 OrbitStepper st(spec, grid_sample(spec, seed, i));
                                 for (int s = 0; s < generation; ++s) st.advance();
                                 mask[static_cast<std::size_t>(g.cell_of(st.point()))] = 1;
                             }
                         });
    g.occupied.assign(n_cells, 0);
    for (int s = 0; s < slots_max; ++s)
        for (std::size_t c = 0; c < n_cells; ++c)
            if (masks[static_cast<std::size_t>(s)][c]) g.occupied[c] = 1;
    return g;
}

TransitivityResult transitivity_check(const SkewProductSpec& spec, const OccupancyGrid& grid,
                                      double eps, long n_max, long ball_samples,
                                      double threshold, std::uint64_t seed, int threads) {
    const double cell_diag =
        std::hypot((grid.theta_hi - grid.theta_lo) / static_cast<double>(grid.n_theta),
                   (grid.x_hi - grid.x_lo) / static_cast<double>(grid.n_x));
    if (!(eps > cell_diag))
        throw std::invalid_argument("transitivity_check: eps must exceed the grid cell diameter");
    if (n_max < 1 || ball_samples < 1)
        throw std::invalid_argument("transitivity_check: bad n_max or ball_samples");
    const long n_occ = grid.occupied_count();
    if (n_occ == 0) throw std::invalid_argument("transitivity_check: empty grid");

    TransitivityResult res;
    res.eps = eps;

    // seeded choice of an occupied cell as the ball center
    {
        Rng rng = stream_rng(seed, kTagBall, 0xc377ULL);
        long pick = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(n_occ));
        long cell = -1;
        for (std::size_t c = 0; c < grid.occupied.size(); ++c) {
            if (grid.occupied[c] && pick-- == 0) {
                cell = static_cast<long>(c);
                break;
            }
        }
        res.center = grid.cell_center(cell);
    }

    const bool full_ball = eps >= spec.diameter();
    const long count = full_ball ? grid.samples : ball_samples;

    const std::size_t n_cells = grid.occupied.size();
    const int slots_max = threads > 0 ? threads : default_threads();
    std::vector<std::vector<long>> first_visit(  // per slot, min step hitting each cell
        static_cast<std::size_t>(slots_max),
        std::vector<long>(n_cells, std::numeric_limits<long>::max()));
    parallel_for_slotted(
        static_cast<std::size_t>(count), threads,
        [&](int slot, std::size_t lo, std::size_t hi) {
            auto& fv = first_visit[static_cast<std::size_t>(slot)];
            for (std::size_t i = lo; i < hi; ++i) {
                PhasePoint y;
                if (full_ball) {
                    y = grid_sample(spec, grid.seed, i);
                } else {
                    Rng rng = stream_rng(seed, kTagBall, i);
                    for (int tries = 0; tries < 10000; ++tries) {
                        double t = rng.uniform(res.center.theta - eps, res.center.theta + eps);
                        if (spec.kind == MapKind::F1) {
                            t -= std::floor(t);
                        } else if (t < spec.base_lo || t > spec.base_hi) {
                            continue;
                        }
                        const double x = rng.uniform(res.center.x - eps, res.center.x + eps);
                        if (x < spec.fiber.lo || x > spec.fiber.hi) continue;
                        const PhasePoint cand{t, x};
                        if (phase_dist(spec, cand, res.center) <= eps) {
                            y = cand;
                            break;
                        }
                    }
                }
                OrbitStepper st(spec, y);
                for (long n = 0; n <= n_max; ++n) {
                    auto& slot_min = fv[static_cast<std::size_t>(grid.cell_of(st.point()))];
                    if (n < slot_min) slot_min = n;
                    if (n < n_max) st.advance();
                }
            }
        });

    std::vector<long> fv(n_cells, std::numeric_limits<long>::max());
    for (int s = 0; s < slots_max; ++s)
        for (std::size_t c = 0; c < n_cells; ++c)
            fv[c] = std::min(fv[c], first_visit[static_cast<std::size_t>(s)][c]);

    // cumulative coverage of occupied cells by first-visit step
    std::vector<long> hist(static_cast<std::size_t>(n_max) + 2, 0);
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (!grid.occupied[c]) continue;
        const long n = fv[c];
        if (n <= n_max) ++hist[static_cast<std::size_t>(n)];
    }
    res.coverage.resize(static_cast<std::size_t>(n_max) + 1);
    long acc = 0;
    for (long n = 0; n <= n_max; ++n) {
        acc += hist[static_cast<std::size_t>(n)];
        res.coverage[static_cast<std::size_t>(n)] =
            static_cast<double>(acc) / static_cast<double>(n_occ);
        if (!res.n0 && res.coverage[static_cast<std::size_t>(n)] >= threshold) res.n0 = n;
    }
    return res;
}

}  // namespace viana
