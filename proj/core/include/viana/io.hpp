#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "viana/stats.hpp"
#include "viana/ulam.hpp"

namespace viana {

// Shortest round-trip decimal form; byte-stable across runs and platforms
// with the same FP semantics.
std::string format_double(double v);
std::string format_long(long v);

std::uint64_t fnv1a64(const std::string& text);

// ---------------------------------------------------------------------------
// Fixed CSV schemas

// tails.csv: kind,n,p,count,ensemble_size
std::string tails_csv(const std::vector<TailCurve>& curves);
std::vector<TailCurve> parse_tails_csv(const std::string& text);

// correlation.csv: n,corr,stderr
std::string correlation_csv(const std::vector<CorrPoint>& pts);
std::vector<CorrPoint> parse_correlation_csv(const std::string& text);

// ld.csv: n,ld,stderr
std::string ld_csv(const std::vector<LdPoint>& pts);
std::vector<LdPoint> parse_ld_csv(const std::string& text);

// density.csv: cell_left,cell_right,value
std::string density_csv(const std::vector<double>& edges, const std::vector<double>& values);
void parse_density_csv(const std::string& text, std::vector<double>& edges,
                       std::vector<double>& values);

// clt.csv: n,ks
std::string clt_csv(const std::vector<std::pair<long, double>>& ks_by_n);

// transitivity.csv: n,coverage
std::string coverage_csv(const std::vector<double>& coverage);

// trajectory.csv: step,theta,x
std::string trajectory_csv(const std::vector<PhasePoint>& points);

// acip.csv: theta_left,theta_right,x_left,x_right,mass
std::string acip_csv(const Histogram2D& h);

// ---------------------------------------------------------------------------
// SVG decay plots (log10 y against n), hand-rolled with a fixed viewbox.

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;  // plotted on log10 scale; nonpositive points skipped
    bool dashed = false;
};

std::string svg_decay_plot(const std::string& title, const std::string& x_label,
                           const std::vector<PlotSeries>& series);

// Envelope curve C exp(-tau n^zeta) sampled at the n values.
PlotSeries envelope_series(const std::string& name, const std::vector<long>& n_values,
                           double c, double tau, double zeta);

// ---------------------------------------------------------------------------

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace viana
