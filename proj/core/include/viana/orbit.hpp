#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

#include "viana/maps.hpp"
#include "viana/rng.hpp"

namespace viana {

// When beta is an exact power of two, beta*theta mod 1 is exact in binary
// floating point and truncates log2(beta) low bits of theta per step; every
// double would reach theta = 0 exactly within ~60 steps, which no real orbit
// does. Long orbits therefore refill the vacated low bits from a stream
// derived from the starting point: the orbit simulates a real initial
// condition whose binary tail extends the double, and stays a pure function
// of (spec, point).
bool base_needs_refill(const SkewProductSpec& spec);
int base_refill_bits(const SkewProductSpec& spec);  // log2(beta) when refilling

inline Rng orbit_refill_stream(const PhasePoint& y) {
    const std::uint64_t ht = Rng::mix(std::bit_cast<std::uint64_t>(y.theta));
    const std::uint64_t hx = Rng::mix(std::bit_cast<std::uint64_t>(y.x));
    return stream_rng(ht ^ (hx << 1 | hx >> 63), 0x0f, 0);
}

class OrbitStepper {
  public:
    OrbitStepper(const SkewProductSpec& spec, const PhasePoint& start)
        : spec_(&spec),
          y_(start),
          refill_bits_(base_refill_bits(spec)),
          bits_(orbit_refill_stream(start)) {}

    const PhasePoint& point() const { return y_; }

    void advance() {
        PhasePoint z = apply(*spec_, y_);
        if (refill_bits_ > 0) {
            if (avail_ < refill_bits_) {
                buf_ = bits_.next_u64();
                avail_ = 64;
            }
            const std::uint64_t r = buf_ & ((1ULL << refill_bits_) - 1);
            buf_ >>= refill_bits_;
            avail_ -= refill_bits_;
            double t = z.theta + static_cast<double>(r) * 0x1.0p-53;
            if (t >= 1.0) t -= 1.0;
            z.theta = t;
        }
        y_ = z;
    }

  private:
    const SkewProductSpec* spec_;
    PhasePoint y_;
    int refill_bits_;
    Rng bits_;
    std::uint64_t buf_ = 0;
    int avail_ = 0;
};

// Orbits that land exactly on the singular set (or within 1e-300 of the
// fiber critical line) are flagged rather than thrown: the flag propagates
// into results and ensemble code counts such points separately.
struct IterateResult {
    PhasePoint end;
    bool singular_hit = false;
    long hit_step = -1;
};

IterateResult iterate(const SkewProductSpec& spec, PhasePoint y, long n);

struct Trajectory {
    std::vector<PhasePoint> points;  // n+1 points, orbit segment y, F(y), ..., F^n(y)
    bool singular_hit = false;
    long hit_step = -1;
};

Trajectory trajectory(const SkewProductSpec& spec, PhasePoint y, long n);

// Birkhoff sums of the two expansion cocycles along an orbit:
//   sum_inv_norm = sum_{j<n} log ||DF(F^j y)^{-1}||^{-1}
//   sum_fiber    = sum_{j<n} log |2 x_j|  ( = log |d_x f_n| by the chain rule)
// Prefix sums are accumulated sequentially so an independent recomputation
// from a fresh orbit reproduces them bit for bit.
struct CocycleSums {
    long n = 0;
    double sum_inv_norm = 0.0;
    double sum_fiber = 0.0;
    std::vector<double> partial_inv_norm;  // prefix sums after 1..n terms (optional)
    std::vector<double> partial_fiber;
    bool singular_hit = false;
    long hit_step = -1;
};

CocycleSums cocycle_sums(const SkewProductSpec& spec, PhasePoint y, long n,
                         bool keep_partials = false);

// First time N in [1, horizon] from which the defining Birkhoff-average
// inequality holds for every n in [N, horizon]. "Exceeded horizon" is a
// first-class outcome (value empty), not an error: the tails of these
// functions are the object of study.
struct TimeFunctionResult {
    std::optional<long> value;
    long horizon = 0;
    long witness = 0;  // last n in [1, horizon] violating the inequality (0 if none)
    bool singular_hit = false;
    bool exceeded() const { return !singular_hit && !value.has_value(); }
};

// min{ N >= 1 : (1/n) sum_{j<n} log||DF(F^j y)^{-1}||^{-1} >= c/2 for all N <= n <= horizon }
TimeFunctionResult expansion_time(const SkewProductSpec& spec, PhasePoint y, double c,
                                  long n_max);

// min{ N >= 1 : (1/n) sum_{j<n} -log dist_delta(F^j y, S_sel) <= 2 epsilon
//               for all N <= n <= horizon }
TimeFunctionResult recurrence_time(const SkewProductSpec& spec, PhasePoint y,
                                   double epsilon, double delta, Subset which, long n_max);

// All four time functions from a single orbit pass.
struct TimeFunctionBundle {
    TimeFunctionResult expansion, rec_full, rec_h, rec_v;
    bool singular_hit = false;
};

TimeFunctionBundle time_functions(const SkewProductSpec& spec, PhasePoint y, double c,
                                  double epsilon, double delta, long n_max);

// Return depths r_j = max(0, log(sqrt(alpha)/|x_j|)) for j = 0..n-1, the
// deep-return index set G = { j : r_j >= (1/2 - 2 kappa) log(1/alpha) } and
// the two bad-set flags
//   in_b1:  sum_{j in G} r_j >= (c/2) n
//   in_b2:  exists 1 <= j < n with |x_j| <= sqrt(alpha) e^{-sqrt(n)}
struct DepthSummary {
    std::vector<long> indices;    // j for each stored depth
    std::vector<double> depths;   // r_j (only entries >= store_threshold kept)
    std::vector<long> g_indices;
    double g_sum = 0.0;
    bool in_b1 = false;
    bool in_b2 = false;
    double kappa = 0.0;
    bool singular_hit = false;
    long hit_step = -1;
};

DepthSummary return_depths(const SkewProductSpec& spec, PhasePoint y, long n, double kappa,
                           double c, double store_threshold = 0.0);

// Empirical check of the fiber-derivative lower bound
//   log |d_x f_n| >= c n - sum_{j in G} r_j
// over a Lebesgue-uniform ensemble, excluding the deep-return set
//   B2(n) = { exists 1 <= j < n : |x_j| <= sqrt(alpha) e^{-sqrt(n)} }.
// The bound holds for all large n with some map-dependent constant; the
// minimal n is not quantified, so the violation fraction is reported
// instead of being assumed zero.
struct FiberBoundReport {
    long n = 0;
    long checked = 0;     // ensemble members outside B2(n)
    long b2_excluded = 0;
    long violations = 0;
    double fraction = 0.0;  // violations / checked
};

FiberBoundReport fiber_bound_check(const SkewProductSpec& spec, long n, double c,
                                   double kappa, long ensemble, std::uint64_t seed,
                                   int threads = 0);

}  // namespace viana
