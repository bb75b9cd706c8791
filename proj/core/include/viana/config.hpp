#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "viana/maps.hpp"
#include "viana/stats.hpp"

namespace viana {

// Parsed experiment configuration; plain key=value text under [section]
// headers. Unknown keys and constraint violations are rejected with the
// offending line number.
struct ExperimentConfig {
    struct Map {
        MapKind kind = MapKind::F1;
        std::optional<double> a;
        std::optional<double> alpha;
        std::optional<double> beta;   // F1
        std::optional<double> b;      // F2
        std::optional<int> k;         // F2
        std::string coupling = "arcsin";
    } map;

    struct Run {
        std::uint64_t seed = 1;
        long ensemble_size = 100000;
        long burn_in = 10000;
        long horizon = 10000;
        std::vector<long> n_list;  // resolved per command when empty
        int threads = 0;
    } run;

    struct Stats {
        double kappa = 0.1;
        std::optional<double> epsilon;  // default: c_hat / 2
        std::optional<double> delta;    // default: calibrated (<= alpha^{1-2kappa})
        std::optional<double> c;        // default: calibrated
        double gamma = 1.0;
        std::string phi = "cos_theta_plus_x";
        std::string psi = "x";
        double ld_epsilon = 0.1;
        double phi_delta = 0.01;
        long acip_theta_bins = 128;
        long acip_x_bins = 64;
        long ulam_cells = 1024;
        long grid_theta = 128;
        long grid_x = 128;
        double ball_eps = 0.05;
        double coverage_threshold = 0.99;
        long ball_samples = 20000;
    } stats;

    struct Output {
        std::string directory = "out";
        bool csv = true;
        bool svg = true;
    } output;

    std::string raw_text;  // exact text, hashed into the manifest
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Resolved experiment: the validated spec plus the dynamical constants,
// calibrated on demand (calibration is seeded by the run seed, so identical
// configs resolve identically).
class Experiment {
  public:
    explicit Experiment(ExperimentConfig cfg);

    const ExperimentConfig& config() const { return cfg_; }
    const SkewProductSpec& spec() const { return spec_; }

    double c_hat();    // expansion constant (config override or calibrated)
    double epsilon();  // recurrence epsilon (config override or c_hat / 2)
    double delta();    // truncation radius (config override or calibrated)
    TailParams tail_params();

    std::vector<long> n_list_or(const std::vector<long>& fallback) const;

  private:
    ExperimentConfig cfg_;
    SkewProductSpec spec_;
    std::optional<double> c_cache_;
    std::optional<double> delta_cache_;
};

std::string default_config_text(MapKind kind);

}  // namespace viana
