#pragma once

#include <functional>
#include <optional>
#include <string>

#include "viana/maps.hpp"

namespace viana {

// Real observable on phase space (or on the base alone), carrying the
// Holder exponent its norm estimates are taken at.
struct Observable {
    std::function<double(const PhasePoint&)> f;
    bool base_only = false;
    double gamma = 1.0;
    std::string name;

    double operator()(const PhasePoint& y) const { return f(y); }
};

Observable obs_constant(double c);
Observable obs_cos_theta();
Observable obs_coord_x();
Observable obs_cos_theta_plus_x();

// Coboundary psi o F - psi with psi(theta, x) = x; its Birkhoff sums
// telescope, so its limit variance is zero.
Observable obs_coboundary_x(const SkewProductSpec& spec);

// Three-branch auxiliary observable on the base, measuring log-closeness to
// the projected vertical singular lines:
//   -log dist                     if dist <  delta
//   (log delta / delta)(dist - 2 delta)   if delta <= dist < 2 delta
//   0                             if dist >= 2 delta
// With k_cap set, the value is capped at k_cap (the bounded-variation
// truncation phi_k).
Observable phi_observable(const SkewProductSpec& spec, double delta,
                          std::optional<double> k_cap = {});

// Registry used by the experiment config; throws on unknown names.
Observable observable_by_name(const SkewProductSpec& spec, const std::string& name,
                              double phi_delta = 0.01);

}  // namespace viana
