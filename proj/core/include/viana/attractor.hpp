#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "viana/maps.hpp"

namespace viana {

// Cells of base x J hit by the generation-th image F^g(y) of Lebesgue-
// uniform samples. Generation 2 realizes the F^2(M) picture; the attractor
// intersection F^n(M) needs the fiber image interval to settle first, which
// auto_generation detects (settled + 2).
struct OccupancyGrid {
    long n_theta = 0, n_x = 0;
    std::vector<std::uint8_t> occupied;
    int generation = 2;
    std::uint64_t seed = 0;
    long samples = 0;
    double theta_lo = 0, theta_hi = 1, x_lo = 0, x_hi = 1;

    long occupied_count() const;
    long cell_of(const PhasePoint& y) const;
    PhasePoint cell_center(long cell) const;
};

// Iterations of the fiber interval envelope [lo,hi] -> Q_a([lo,hi]) + [-amp,amp]
// until both endpoints settle, plus two.
int auto_generation(const SkewProductSpec& spec);

// generation = 0 picks auto_generation(spec).
OccupancyGrid attractor_grid(const SkewProductSpec& spec, long n_theta, long n_x,
                             long samples, std::uint64_t seed, int generation = 0,
                             int threads = 0);

// Iterates a sampled eps-ball around an occupied cell and reports, for each
// n <= n_max, the cumulative fraction of occupied cells visited by steps
// 0..n. Ball samples are prefix-nested in the sample count, so doubling the
// count never loses coverage. When the ball covers the whole space the
// sampler reuses the grid's own sample stream, making coverage at
// n = grid.generation exactly 1 by construction.
struct TransitivityResult {
    std::vector<double> coverage;  // index n = 0..n_max
    std::optional<long> n0;        // first n with coverage >= threshold
    PhasePoint center;
    double eps = 0.0;
};

TransitivityResult transitivity_check(const SkewProductSpec& spec, const OccupancyGrid& grid,
                                      double eps, long n_max, long ball_samples,
                                      double threshold = 0.99, std::uint64_t seed = 0xba11ULL,
                                      int threads = 0);

}  // namespace viana
