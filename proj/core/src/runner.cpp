#include "viana/runner.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#include "viana/errors.hpp"
#include "viana/io.hpp"
#include "viana/orbit.hpp"
#include "viana/parallel.hpp"
#include "viana/rng.hpp"
#include "viana/version.hpp"

namespace viana {

namespace fs = std::filesystem;

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> kNames = {
        "iterate", "tails", "acip", "ulam", "correlation",
        "ld",      "clt",   "transitivity", "fit", "report"};
    return kNames;
}

std::string occupancy_csv(const OccupancyGrid& grid) {
    std::string out = "theta_index,x_index,occupied\n";
    for (long it = 0; it < grid.n_theta; ++it) {
        for (long ix = 0; ix < grid.n_x; ++ix) {
            out += format_long(it);
            out += ',';
            out += format_long(ix);
            out += ',';
            out += grid.occupied[static_cast<std::size_t>(it * grid.n_x + ix)] ? '1' : '0';
            out += '\n';
        }
    }
    return out;
}

std::string occupancy_svg(const OccupancyGrid& grid) {
    const double cw = 800.0 / static_cast<double>(grid.n_theta);
    const double ch = 600.0 / static_cast<double>(grid.n_x);
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n"
        "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    for (long it = 0; it < grid.n_theta; ++it) {
        for (long ix = 0; ix < grid.n_x; ++ix) {
            if (!grid.occupied[static_cast<std::size_t>(it * grid.n_x + ix)]) continue;
            svg += "<rect x=\"" + format_double(cw * static_cast<double>(it)) + "\" y=\"" +
                   format_double(600.0 - ch * static_cast<double>(ix + 1)) + "\" width=\"" +
                   format_double(cw) + "\" height=\"" + format_double(ch) +
                   "\" fill=\"#1f77b4\"/>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

namespace {

struct ManifestData {
    std::vector<std::pair<std::string, std::string>> kv;
    void add(const std::string& k, const std::string& v) { kv.emplace_back(k, v); }
};

std::vector<long> default_tail_n() { return {25, 35, 50, 71, 100, 141, 200, 283, 400}; }
std::vector<long> default_corr_n() { return {1, 2, 5, 10, 20, 35, 50}; }
std::vector<long> default_ld_n() { return {10, 32, 100, 316, 1000}; }
std::vector<long> default_clt_n() { return {100, 1000, 10000}; }

char hex_digit(int v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10); }

std::string hex64(std::uint64_t v) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = hex_digit(static_cast<int>(v & 0xf));
        v >>= 4;
    }
    return s;
}

}  // namespace

RunResult run_experiment(Experiment& exp, const std::string& command,
                         const std::string& out_dir) {
    RunResult res;
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig& cfg = exp.config();
    const SkewProductSpec& spec = exp.spec();
    if (cfg.run.threads > 0) set_default_threads(cfg.run.threads);

    fs::create_directories(out_dir);
    const std::string config_hash = hex64(fnv1a64(cfg.raw_text));
    auto out_path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
    // every output file names the config hash it came from
    auto emit = [&](const std::string& name, const std::string& content) {
        const std::string p = out_path(name);
        std::string stamped;
        if (name.ends_with(".svg"))
            stamped = "<!-- config=" + config_hash + " -->\n" + content;
        else
            stamped = "# config=" + config_hash + "\n" + content;
        write_text_file(p, stamped);
        res.files.push_back(p);
    };

    ManifestData man;
    man.add("command", command);
    man.add("config_hash", config_hash);
    man.add("seed", format_long(static_cast<long>(cfg.run.seed)));
    man.add("version", kVersion);
    man.add("csv_schema", format_long(kCsvSchemaVersion));
    man.add("threads", format_long(default_threads()));
    man.add("map", spec.kind == MapKind::F1 ? "f1" : "f2");
    man.add("a", format_double(spec.a));
    man.add("alpha", format_double(spec.alpha));
    if (spec.kind == MapKind::F1) {
        man.add("beta", format_double(spec.beta));
    } else {
        man.add("b", format_double(spec.b));
        man.add("k", format_long(spec.k));
        man.add("coupling", spec.coupling.name);
    }
    man.add("fiber_lo", format_double(spec.fiber.lo));
    man.add("fiber_hi", format_double(spec.fiber.hi));

    std::ostringstream summary;
    int code = kExitOk;

    try {
        if (command == "iterate") {
            Rng rng = stream_rng(cfg.run.seed, kTagEnsemble, 0);
            PhasePoint y{rng.uniform(spec.base_lo, spec.base_hi),
                         rng.uniform(spec.fiber.lo, spec.fiber.hi)};
            const long n = cfg.run.horizon;
            const Trajectory tr = trajectory(spec, y, n);
            emit("trajectory.csv", trajectory_csv(tr.points));
            summary << "iterated " << n << " steps; endpoint theta="
                    << format_double(tr.points.back().theta)
                    << " x=" << format_double(tr.points.back().x);
            if (tr.singular_hit) summary << " (singular hit at step " << tr.hit_step << ")";
        } else if (command == "tails") {
            const TailParams params = exp.tail_params();
            man.add("c_hat", format_double(params.c));
            man.add("epsilon", format_double(params.epsilon));
            man.add("delta", format_double(params.delta));
            man.add("kappa", format_double(params.kappa));
            const std::vector<long> ns = exp.n_list_or(default_tail_n());
            const TailCurveSet set =
                tail_curves(spec, params, ns, cfg.run.ensemble_size, cfg.run.seed,
                            cfg.run.threads);
            emit("tails.csv", tails_csv({set.expansion, set.rec_h, set.rec_v, set.joint}));
            summary << "joint tail: p(" << set.joint.n_values.front() << ")="
                    << format_double(set.joint.p_values.front()) << " p("
                    << set.joint.n_values.back() << ")="
                    << format_double(set.joint.p_values.back());
        } else if (command == "acip") {
            const Histogram2D h =
                empirical_acip(spec, cfg.run.ensemble_size, cfg.run.burn_in,
                               cfg.stats.acip_theta_bins, cfg.stats.acip_x_bins, cfg.run.seed,
                               cfg.run.threads);
            emit("acip.csv", acip_csv(h));
            std::vector<double> edges(static_cast<std::size_t>(h.n_theta) + 1);
            for (long i = 0; i <= h.n_theta; ++i)
                edges[static_cast<std::size_t>(i)] =
                    h.theta_lo + (h.theta_hi - h.theta_lo) * static_cast<double>(i) /
                                     static_cast<double>(h.n_theta);
            std::vector<double> marg = h.theta_marginal();
            const double dt = (h.theta_hi - h.theta_lo) / static_cast<double>(h.n_theta);
            for (double& v : marg) v /= dt;  // mass -> density
            emit("acip_theta_marginal.csv", density_csv(edges, marg));
            man.add("dropped", format_long(h.dropped));
            summary << "acip over " << h.n_theta << "x" << h.n_x << " bins, "
                    << cfg.run.ensemble_size << " samples, dropped " << h.dropped;
        } else if (command == "ulam") {
            const UlamOperator op = build_ulam_base(base_of(spec), cfg.stats.ulam_cells);
            const DensityVector d = stationary_density(op);
            const GapEstimate g = spectral_gap(op);
            emit("density.csv", density_csv(op.edges, d.values));
            man.add("l1_residual", format_double(d.l1_residual));
            man.add("power_iterations", format_long(d.iterations));
            man.add("spectral_gap", format_double(g.gap));
            man.add("lambda2_abs", format_double(g.lambda2_abs));
            summary << "ulam N=" << cfg.stats.ulam_cells << " residual="
                    << format_double(d.l1_residual) << " gap=" << format_double(g.gap);
            if (!d.converged || !g.converged) {
                summary << " (not converged)";
                code = kExitNumeric;
            }
        } else if (command == "correlation") {
            Observable phi = observable_by_name(spec, cfg.stats.phi, cfg.stats.phi_delta);
            Observable psi = observable_by_name(spec, cfg.stats.psi, cfg.stats.phi_delta);
            phi.gamma = cfg.stats.gamma;
            psi.gamma = cfg.stats.gamma;
            EnsembleConfig ec{cfg.run.seed, cfg.run.ensemble_size, cfg.run.burn_in,
                              cfg.run.threads};
            const auto pts = correlation_series(spec, phi, psi, exp.n_list_or(default_corr_n()), ec);
            emit("correlation.csv", correlation_csv(pts));
            summary << "correlation " << cfg.stats.phi << " vs " << cfg.stats.psi << ": Cor("
                    << pts.front().n << ")=" << format_double(pts.front().corr) << " Cor("
                    << pts.back().n << ")=" << format_double(pts.back().corr);
        } else if (command == "ld") {
            Observable phi = observable_by_name(spec, cfg.stats.phi, cfg.stats.phi_delta);
            phi.gamma = cfg.stats.gamma;
            EnsembleConfig ec{cfg.run.seed, cfg.run.ensemble_size, cfg.run.burn_in,
                              cfg.run.threads};
            const auto pts =
                ld_series(spec, phi, cfg.stats.ld_epsilon, exp.n_list_or(default_ld_n()), ec);
            emit("ld.csv", ld_csv(pts));
            man.add("ld_epsilon", format_double(cfg.stats.ld_epsilon));
            summary << "large deviations of " << cfg.stats.phi << ": LD(" << pts.front().n
                    << ")=" << format_double(pts.front().ld) << " LD(" << pts.back().n
                    << ")=" << format_double(pts.back().ld);
        } else if (command == "clt") {
            Observable phi = observable_by_name(spec, cfg.stats.phi, cfg.stats.phi_delta);
            phi.gamma = cfg.stats.gamma;
            EnsembleConfig ec{cfg.run.seed, cfg.run.ensemble_size, cfg.run.burn_in,
                              cfg.run.threads};
            std::vector<long> ns = exp.n_list_or(default_clt_n());
            const CltReport rep = clt_diagnostic(spec, phi, ns, ec);
            man.add("sigma2", format_double(rep.sigma2));
            man.add("degenerate", rep.degenerate ? "true" : "false");
            if (rep.degenerate) {
                summary << "clt: sigma2 degenerate (coboundary-like observable)";
            } else {
                emit("clt.csv", clt_csv(rep.ks_by_n));
                man.add("be_exponent", format_double(rep.be_exponent));
                summary << "clt: sigma2=" << format_double(rep.sigma2)
                        << " ks(n=" << rep.ks_by_n.back().first
                        << ")=" << format_double(rep.ks_by_n.back().second);
            }
        } else if (command == "transitivity") {
            const long cells = cfg.stats.grid_theta * cfg.stats.grid_x;
            const long samples = std::max(cfg.run.ensemble_size, 10 * cells);
            const OccupancyGrid grid =
                attractor_grid(spec, cfg.stats.grid_theta, cfg.stats.grid_x, samples,
                               cfg.run.seed, 0, cfg.run.threads);
            man.add("generation", format_long(grid.generation));
            const long n_max = std::min<long>(cfg.run.horizon, 1000);
            const TransitivityResult tr = transitivity_check(
                spec, grid, cfg.stats.ball_eps, n_max, cfg.stats.ball_samples,
                cfg.stats.coverage_threshold, cfg.run.seed, cfg.run.threads);
            emit("transitivity.csv", coverage_csv(tr.coverage));
            emit("attractor.csv", occupancy_csv(grid));
            if (cfg.output.svg) emit("attractor.svg", occupancy_svg(grid));
            man.add("occupied_cells", format_long(grid.occupied_count()));
            man.add("ball_eps", format_double(tr.eps));
            man.add("n0", tr.n0 ? format_long(*tr.n0) : "none");
            summary << "transitivity: coverage(" << n_max << ")="
                    << format_double(tr.coverage.back()) << " n0="
                    << (tr.n0 ? format_long(*tr.n0) : "none");
        } else if (command == "fit") {
            const std::string path = out_path("tails.csv");
            const std::vector<TailCurve> curves = parse_tails_csv(read_text_file(path));
            std::string fit_txt;
            bool any = false;
            for (const TailCurve& c : curves) {
                try {
                    const StretchedExpFit f = fit_stretched_exp(c);
                    fit_txt += "kind=" + tail_kind_name(c.kind) + "\n";
                    fit_txt += "c_hat=" + format_double(f.c_hat) + "\n";
                    fit_txt += "tau_hat=" + format_double(f.tau_hat) + "\n";
                    fit_txt += "zeta_hat=" + format_double(f.zeta_hat) + "\n";
                    fit_txt += "zeta_lo=" + format_double(f.zeta_lo) + "\n";
                    fit_txt += "zeta_hi=" + format_double(f.zeta_hi) + "\n";
                    fit_txt += "r2=" + format_double(f.r2) + "\n";
                    if (!any)
                        summary << "fit " << tail_kind_name(c.kind) << ": zeta_hat="
                                << format_double(f.zeta_hat) << " tau_hat="
                                << format_double(f.tau_hat) << " r2=" << format_double(f.r2);
                    any = true;
                } catch (const UnfittableError& e) {
                    fit_txt += "kind=" + tail_kind_name(c.kind) + "\n";
                    fit_txt += std::string("unfittable=") + e.what() + "\n";
                }
            }
            emit("fit.txt", fit_txt);
            if (!any) {
                summary << "fit: no fittable curves";
                code = kExitNumeric;
            }
        } else if (command == "report") {
            bool any = false;
            if (fs::exists(out_path("tails.csv"))) {
                const std::vector<TailCurve> curves = parse_tails_csv(read_text_file(out_path("tails.csv")));
                std::vector<PlotSeries> series;
                std::vector<long> all_n;
                for (const TailCurve& c : curves) {
                    PlotSeries s;
                    s.name = tail_kind_name(c.kind);
                    for (std::size_t i = 0; i < c.n_values.size(); ++i) {
                        s.x.push_back(static_cast<double>(c.n_values[i]));
                        s.y.push_back(c.p_values[i]);
                    }
                    all_n = c.n_values;
                    series.push_back(std::move(s));
                }
                for (const TailCurve& c : curves) {
                    if (c.kind != TailKind::Joint) continue;
                    try {
                        const auto [env_c, env_tau] = fit_envelope(c.n_values, c.p_values, 1.0 / 3.0);
                        series.push_back(envelope_series("envelope zeta=1/3", all_n, env_c,
                                                         env_tau, 1.0 / 3.0));
                    } catch (const UnfittableError&) {
                    }
                }
                emit("tails.svg", svg_decay_plot("tail survival", "n", series));
                any = true;
            }
            if (fs::exists(out_path("correlation.csv"))) {
                const auto pts = parse_correlation_csv(read_text_file(out_path("correlation.csv")));
                PlotSeries s;
                s.name = "Cor(n)";
                std::vector<long> ns;
                std::vector<double> ps;
                for (const CorrPoint& p : pts) {
                    s.x.push_back(static_cast<double>(p.n));
                    s.y.push_back(p.corr);
                    ns.push_back(p.n);
                    ps.push_back(p.corr);
                }
                std::vector<PlotSeries> series{s};
                try {
                    const auto [env_c, env_tau] = fit_envelope(ns, ps, 1.0 / 3.0);
                    series.push_back(envelope_series("envelope zeta=1/3", ns, env_c, env_tau,
                                                     1.0 / 3.0));
                } catch (const UnfittableError&) {
                }
                emit("correlation.svg", svg_decay_plot("correlation decay", "n", series));
                any = true;
            }
            if (fs::exists(out_path("ld.csv"))) {
                const auto pts = parse_ld_csv(read_text_file(out_path("ld.csv")));
                PlotSeries s;
                s.name = "LD(n)";
                std::vector<long> ns;
                std::vector<double> ps;
                for (const LdPoint& p : pts) {
                    s.x.push_back(static_cast<double>(p.n));
                    s.y.push_back(p.ld);
                    ns.push_back(p.n);
                    ps.push_back(p.ld);
                }
                std::vector<PlotSeries> series{s};
                try {
                    const auto [env_c, env_tau] = fit_envelope(ns, ps, 1.0 / 7.0);
                    series.push_back(envelope_series("envelope zeta=1/7", ns, env_c, env_tau,
                                                     1.0 / 7.0));
                } catch (const UnfittableError&) {
                }
                emit("ld.svg", svg_decay_plot("large deviations", "n", series));
                any = true;
            }
            if (!any) throw ConfigError("report: no result CSVs found in " + out_dir);
            summary << "report: wrote " << res.files.size() << " plot(s)";
        } else {
            throw ConfigError("unknown command: " + command);
        }
    } catch (const ConfigError& e) {
        code = kExitConfig;
        man.add("error", e.what());
        summary.str("");
        summary << "error: " << e.what();
    } catch (const std::exception& e) {
        code = kExitNumeric;
        man.add("error", e.what());
        summary.str("");
        summary << "error: " << e.what();
    }

    const auto t1 = std::chrono::steady_clock::now();
    man.add("wall_ms", format_long(
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()));
    man.add("status", code == kExitOk ? "ok" : "error");
    for (const std::string& f : res.files)
        man.add("output", fs::path(f).filename().string());
    std::string man_txt;
    for (const auto& [k, v] : man.kv) man_txt += k + "=" + v + "\n";
    const std::string man_path = out_path("manifest.txt");
    write_text_file(man_path, man_txt);
    res.files.push_back(man_path);

    res.exit_code = code;
    res.summary = summary.str();
    return res;
}

}  // namespace viana
