#include "viana/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "viana/errors.hpp"

namespace viana {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("expected a number, got '" + v + "'", line);
    }
}

long parse_long(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("expected an integer, got '" + v + "'", line);
    }
}

std::uint64_t parse_u64(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("expected an unsigned integer, got '" + v + "'", line);
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected a boolean, got '" + v + "'", line);
}

std::vector<long> parse_long_list(const std::string& v, int line) {
    std::vector<long> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list", line);
        out.push_back(parse_long(item, line));
    }
    if (out.empty()) throw ConfigError("empty list", line);
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1]) throw ConfigError("n_list must be strictly increasing", line);
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.raw_text = text;

    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    bool kind_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("unterminated section header", line_no);
            section = trim(t.substr(1, t.size() - 2));
            if (section != "map" && section != "run" && section != "stats" && section != "output")
                throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value", line_no);
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (val.empty()) throw ConfigError("empty value for '" + key + "'", line_no);

        if (section == "map") {
            if (key == "kind") {
                if (val == "f1" || val == "F1")
                    cfg.map.kind = MapKind::F1;
                else if (val == "f2" || val == "F2")
                    cfg.map.kind = MapKind::F2;
                else
                    throw ConfigError("kind must be f1 or f2", line_no);
                kind_seen = true;
            } else if (key == "a") {
                const double a = parse_double(val, line_no);
                if (!(a > 0.0 && a < 2.0))
                    throw ConfigError("a must lie in (0, 2), the full quadratic is excluded", line_no);
                cfg.map.a = a;
            } else if (key == "alpha") {
                const double al = parse_double(val, line_no);
                if (!(al > 0.0)) throw ConfigError("alpha must be > 0", line_no);
                cfg.map.alpha = al;
            } else if (key == "beta") {
                const double be = parse_double(val, line_no);
                if (!(be > 1.0)) throw ConfigError("beta must be > 1 (expanding base)", line_no);
                cfg.map.beta = be;
            } else if (key == "b") {
                const double b = parse_double(val, line_no);
                if (!(b > 0.0 && b <= 2.0)) throw ConfigError("b must lie in (0, 2]", line_no);
                cfg.map.b = b;
            } else if (key == "k") {
                const long k = parse_long(val, line_no);
                if (k < 1) throw ConfigError("k must be >= 1", line_no);
                cfg.map.k = static_cast<int>(k);
            } else if (key == "coupling") {
                if (val != "arcsin") throw ConfigError("unknown coupling '" + val + "'", line_no);
                cfg.map.coupling = val;
            } else {
                throw ConfigError("unknown key '" + key + "' in [map]", line_no);
            }
        } else if (section == "run") {
            if (key == "seed")
                cfg.run.seed = parse_u64(val, line_no);
            else if (key == "ensemble_size") {
                cfg.run.ensemble_size = parse_long(val, line_no);
                if (cfg.run.ensemble_size < 1) throw ConfigError("ensemble_size must be >= 1", line_no);
            } else if (key == "burn_in") {
                cfg.run.burn_in = parse_long(val, line_no);
                if (cfg.run.burn_in < 0) throw ConfigError("burn_in must be >= 0", line_no);
            } else if (key == "horizon") {
                cfg.run.horizon = parse_long(val, line_no);
                if (cfg.run.horizon < 1) throw ConfigError("horizon must be >= 1", line_no);
            } else if (key == "n_list")
                cfg.run.n_list = parse_long_list(val, line_no);
            else if (key == "threads") {
                const long th = parse_long(val, line_no);
                if (th < 0) throw ConfigError("threads must be >= 0", line_no);
                cfg.run.threads = static_cast<int>(th);
            } else
                throw ConfigError("unknown key '" + key + "' in [run]", line_no);
        } else if (section == "stats") {
            if (key == "kappa") {
                const double ka = parse_double(val, line_no);
                if (!(ka > 0.0 && ka < 0.25))
                    throw ConfigError("kappa must lie in (0, 1/4)", line_no);
                cfg.stats.kappa = ka;
            } else if (key == "epsilon") {
                const double e = parse_double(val, line_no);
                if (!(e > 0.0)) throw ConfigError("epsilon must be > 0", line_no);
                cfg.stats.epsilon = e;
            } else if (key == "delta") {
                const double d = parse_double(val, line_no);
                if (!(d > 0.0 && d < 1.0)) throw ConfigError("delta must lie in (0, 1)", line_no);
                cfg.stats.delta = d;
            } else if (key == "c") {
                const double c = parse_double(val, line_no);
                if (!(c > 0.0)) throw ConfigError("c must be > 0", line_no);
                cfg.stats.c = c;
            } else if (key == "gamma") {
                const double g = parse_double(val, line_no);
                if (!(g > 0.0 && g <= 1.0)) throw ConfigError("gamma must lie in (0, 1]", line_no);
                cfg.stats.gamma = g;
            } else if (key == "phi")
                cfg.stats.phi = val;
            else if (key == "psi")
                cfg.stats.psi = val;
            else if (key == "ld_epsilon") {
                const double e = parse_double(val, line_no);
                if (!(e > 0.0)) throw ConfigError("ld_epsilon must be > 0", line_no);
                cfg.stats.ld_epsilon = e;
            } else if (key == "phi_delta") {
                const double d = parse_double(val, line_no);
                if (!(d > 0.0 && d < 0.5)) throw ConfigError("phi_delta must lie in (0, 1/2)", line_no);
                cfg.stats.phi_delta = d;
            } else if (key == "acip_theta_bins") {
                cfg.stats.acip_theta_bins = parse_long(val, line_no);
                if (cfg.stats.acip_theta_bins < 1) throw ConfigError("acip_theta_bins must be >= 1", line_no);
            } else if (key == "acip_x_bins") {
                cfg.stats.acip_x_bins = parse_long(val, line_no);
                if (cfg.stats.acip_x_bins < 1) throw ConfigError("acip_x_bins must be >= 1", line_no);
            } else if (key == "ulam_cells") {
                cfg.stats.ulam_cells = parse_long(val, line_no);
                if (cfg.stats.ulam_cells < 2) throw ConfigError("ulam_cells must be >= 2", line_no);
            } else if (key == "grid_theta") {
                cfg.stats.grid_theta = parse_long(val, line_no);
                if (cfg.stats.grid_theta < 1) throw ConfigError("grid_theta must be >= 1", line_no);
            } else if (key == "grid_x") {
                cfg.stats.grid_x = parse_long(val, line_no);
                if (cfg.stats.grid_x < 1) throw ConfigError("grid_x must be >= 1", line_no);
            } else if (key == "ball_eps") {
                const double e = parse_double(val, line_no);
                if (!(e > 0.0)) throw ConfigError("ball_eps must be > 0", line_no);
                cfg.stats.ball_eps = e;
            } else if (key == "coverage_threshold") {
                const double c = parse_double(val, line_no);
                if (!(c > 0.0 && c <= 1.0))
                    throw ConfigError("coverage_threshold must lie in (0, 1]", line_no);
                cfg.stats.coverage_threshold = c;
            } else if (key == "ball_samples") {
                cfg.stats.ball_samples = parse_long(val, line_no);
                if (cfg.stats.ball_samples < 1) throw ConfigError("ball_samples must be >= 1", line_no);
            } else
                throw ConfigError("unknown key '" + key + "' in [stats]", line_no);
        } else if (section == "output") {
            if (key == "directory")
                cfg.output.directory = val;
            else if (key == "csv")
                cfg.output.csv = parse_bool(val, line_no);
            else if (key == "svg")
                cfg.output.svg = parse_bool(val, line_no);
            else
                throw ConfigError("unknown key '" + key + "' in [output]", line_no);
        } else {
            throw ConfigError("key '" + key + "' outside any [section]", line_no);
        }
    }
    if (!kind_seen) throw ConfigError("missing required key: [map] kind");
    if (cfg.map.kind == MapKind::F1 && cfg.map.b)
        throw ConfigError("b is only valid for kind=f2");
    if (cfg.map.kind == MapKind::F1 && cfg.map.k)
        throw ConfigError("k is only valid for kind=f2");
    if (cfg.map.kind == MapKind::F2 && cfg.map.beta)
        throw ConfigError("beta is only valid for kind=f1");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    const double a = cfg_.map.a.value_or(misiurewicz_31());
    if (cfg_.map.kind == MapKind::F1) {
        const double alpha = cfg_.map.alpha.value_or(0.01);
        const double beta = cfg_.map.beta.value_or(2.0);
        spec_ = make_f1(a, alpha, beta);
    } else {
        const double alpha = cfg_.map.alpha.value_or(0.005);
        const double b = cfg_.map.b.value_or(a);
        const int k = cfg_.map.k.value_or(2);
        spec_ = make_f2(b, k, a, alpha);
    }
}

double Experiment::c_hat() {
    if (cfg_.stats.c) return *cfg_.stats.c;
    if (!c_cache_) c_cache_ = calibrate_c(spec_, 10000, 10000, cfg_.run.seed, 0.10,
                                          cfg_.run.threads);
    return *c_cache_;
}

double Experiment::epsilon() {
    if (cfg_.stats.epsilon) return *cfg_.stats.epsilon;
    return c_hat() / 2.0;
}

double Experiment::delta() {
    if (cfg_.stats.delta) return *cfg_.stats.delta;
    if (!delta_cache_) {
        const double dmax = std::pow(spec_.alpha, 1.0 - 2.0 * cfg_.stats.kappa);
        delta_cache_ = calibrate_delta(spec_, epsilon(), dmax, cfg_.run.seed, 0.8,
                                       cfg_.run.threads);
    }
    return *delta_cache_;
}

TailParams Experiment::tail_params() {
    TailParams p;
    p.c = c_hat();
    p.epsilon = epsilon();
    p.delta = delta();
    p.kappa = cfg_.stats.kappa;
    return p;
}

std::vector<long> Experiment::n_list_or(const std::vector<long>& fallback) const {
    return cfg_.run.n_list.empty() ? fallback : cfg_.run.n_list;
}

std::string default_config_text(MapKind kind) {
    std::ostringstream ss;
    ss << "[map]\n";
    ss << "kind = " << (kind == MapKind::F1 ? "f1" : "f2") << "\n";
    ss << "\n[run]\nseed = 1\n";
    return ss.str();
}

}  // namespace viana
