#include "viana/observable.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace viana {

Observable obs_constant(double c) {
    Observable o;
    o.f = [c](const PhasePoint&) { return c; };
    o.base_only = true;
    o.name = "constant";
    return o;
}

Observable obs_cos_theta() {
    Observable o;
    o.f = [](const PhasePoint& y) { return std::cos(2.0 * std::numbers::pi * y.theta); };
    o.base_only = true;
    o.name = "cos_theta";
    return o;
}

Observable obs_coord_x() {
    Observable o;
    o.f = [](const PhasePoint& y) { return y.x; };
    o.name = "x";
    return o;
}

Observable obs_cos_theta_plus_x() {
    Observable o;
    o.f = [](const PhasePoint& y) {
        return std::cos(2.0 * std::numbers::pi * y.theta) + y.x;
    };
    o.name = "cos_theta_plus_x";
    return o;
}

Observable obs_coboundary_x(const SkewProductSpec& spec) {
    Observable o;
    o.f = [spec](const PhasePoint& y) { return apply(spec, y).x - y.x; };
    o.name = "coboundary_x";
    return o;
}

Observable phi_observable(const SkewProductSpec& spec, double delta,
                          std::optional<double> k_cap) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("phi_observable: delta must lie in (0, 1/2)");
    if (k_cap && !(*k_cap > 0.0))
        throw std::invalid_argument("phi_observable: cap must be > 0");
    Observable o;
    const double log_delta = std::log(delta);
    const double cap = k_cap.value_or(0.0);
    const bool capped = k_cap.has_value();
    o.f = [spec, delta, log_delta, cap, capped](const PhasePoint& y) {
        const double d = base_dist_to_singular(spec, y.theta);
        double v;
        if (d < delta)
            v = -std::log(d);
        else if (d < 2.0 * delta)
            v = (log_delta / delta) * (d - 2.0 * delta);
        else
            v = 0.0;
        if (capped && v >= cap) v = cap;
        return v;
    };
    o.base_only = true;
    o.name = capped ? "phi_capped" : "phi";
    return o;
}

Observable observable_by_name(const SkewProductSpec& spec, const std::string& name,
                              double phi_delta) {
    if (name == "cos_theta") return obs_cos_theta();
    if (name == "x") return obs_coord_x();
    if (name == "cos_theta_plus_x") return obs_cos_theta_plus_x();
    if (name == "coboundary_x") return obs_coboundary_x(spec);
    if (name == "phi") return phi_observable(spec, phi_delta);
    if (name == "one") return obs_constant(1.0);
    throw std::invalid_argument("unknown observable: " + name);
}

}  // namespace viana
