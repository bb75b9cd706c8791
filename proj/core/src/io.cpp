#include "viana/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "viana/errors.hpp"

namespace viana {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_long(long v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& expected_header) {
    std::istringstream in(text);
    std::string line;
    // leading '#' lines carry provenance (config hash), not data
    do {
        if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
        if (!line.empty() && line.back() == '\r') line.pop_back();
    } while (!line.empty() && line[0] == '#');
    if (line != expected_header)
        throw std::runtime_error("unexpected CSV header: " + line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        rows.push_back(std::move(fields));
    }
    return rows;
}

double to_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad number in CSV: " + s);
    return v;
}

long to_long(const std::string& s) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad integer in CSV: " + s);
    return v;
}

TailKind kind_from_name(const std::string& name) {
    if (name == "expansion") return TailKind::Expansion;
    if (name == "recurrence_h") return TailKind::RecurrenceH;
    if (name == "recurrence_v") return TailKind::RecurrenceV;
    if (name == "joint") return TailKind::Joint;
    throw std::runtime_error("unknown tail kind: " + name);
}

}  // namespace

std::string tails_csv(const std::vector<TailCurve>& curves) {
    std::string out = "kind,n,p,count,ensemble_size\n";
    for (const TailCurve& c : curves) {
        const std::string kind = tail_kind_name(c.kind);
        for (std::size_t i = 0; i < c.n_values.size(); ++i) {
            out += kind;
            out += ',';
            out += format_long(c.n_values[i]);
            out += ',';
            out += format_double(c.p_values[i]);
            out += ',';
            out += format_long(c.counts[i]);
            out += ',';
            out += format_long(c.ensemble_size);
            out += '\n';
        }
    }
    return out;
}

std::vector<TailCurve> parse_tails_csv(const std::string& text) {
    std::vector<TailCurve> out;
    for (const auto& row : parse_csv(text, "kind,n,p,count,ensemble_size")) {
        if (row.size() != 5) throw std::runtime_error("bad tails.csv row");
        const TailKind kind = kind_from_name(row[0]);
        TailCurve* cur = nullptr;
        for (TailCurve& c : out)
            if (c.kind == kind) cur = &c;
        if (!cur) {
            out.emplace_back();
            cur = &out.back();
            cur->kind = kind;
        }
        cur->n_values.push_back(to_long(row[1]));
        cur->p_values.push_back(to_double(row[2]));
        cur->counts.push_back(to_long(row[3]));
        cur->ensemble_size = to_long(row[4]);
    }
    return out;
}

std::string correlation_csv(const std::vector<CorrPoint>& pts) {
    std::string out = "n,corr,stderr\n";
    for (const CorrPoint& p : pts) {
        out += format_long(p.n);
        out += ',';
        out += format_double(p.corr);
        out += ',';
        out += format_double(p.stderr_);
        out += '\n';
    }
    return out;
}

std::vector<CorrPoint> parse_correlation_csv(const std::string& text) {
    std::vector<CorrPoint> out;
    for (const auto& row : parse_csv(text, "n,corr,stderr")) {
        if (row.size() != 3) throw std::runtime_error("bad correlation.csv row");
        out.push_back({to_long(row[0]), to_double(row[1]), to_double(row[2])});
    }
    return out;
}

std::string ld_csv(const std::vector<LdPoint>& pts) {
    std::string out = "n,ld,stderr\n";
    for (const LdPoint& p : pts) {
        out += format_long(p.n);
        out += ',';
        out += format_double(p.ld);
        out += ',';
        out += format_double(p.stderr_);
        out += '\n';
    }
    return out;
}

std::vector<LdPoint> parse_ld_csv(const std::string& text) {
    std::vector<LdPoint> out;
    for (const auto& row : parse_csv(text, "n,ld,stderr")) {
        if (row.size() != 3) throw std::runtime_error("bad ld.csv row");
        out.push_back({to_long(row[0]), to_double(row[1]), to_double(row[2])});
    }
    return out;
}

std::string density_csv(const std::vector<double>& edges, const std::vector<double>& values) {
    if (edges.size() != values.size() + 1)
        throw std::invalid_argument("density_csv: edges must have one more entry than values");
    std::string out = "cell_left,cell_right,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += format_double(edges[i]);
        out += ',';
        out += format_double(edges[i + 1]);
        out += ',';
        out += format_double(values[i]);
        out += '\n';
    }
    return out;
}

void parse_density_csv(const std::string& text, std::vector<double>& edges,
                       std::vector<double>& values) {
    edges.clear();
    values.clear();
    for (const auto& row : parse_csv(text, "cell_left,cell_right,value")) {
        if (row.size() != 3) throw std::runtime_error("bad density.csv row");
        if (edges.empty()) edges.push_back(to_double(row[0]));
        edges.push_back(to_double(row[1]));
        values.push_back(to_double(row[2]));
    }
}

std::string clt_csv(const std::vector<std::pair<long, double>>& ks_by_n) {
    std::string out = "n,ks\n";
    for (const auto& [n, ks] : ks_by_n) {
        out += format_long(n);
        out += ',';
        out += format_double(ks);
        out += '\n';
    }
    return out;
}

std::string coverage_csv(const std::vector<double>& coverage) {
    std::string out = "n,coverage\n";
    for (std::size_t n = 0; n < coverage.size(); ++n) {
        out += format_long(static_cast<long>(n));
        out += ',';
        out += format_double(coverage[n]);
        out += '\n';
    }
    return out;
}

std::string trajectory_csv(const std::vector<PhasePoint>& points) {
    std::string out = "step,theta,x\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        out += format_long(static_cast<long>(i));
        out += ',';
        out += format_double(points[i].theta);
        out += ',';
        out += format_double(points[i].x);
        out += '\n';
    }
    return out;
}

std::string acip_csv(const Histogram2D& h) {
    std::string out = "theta_left,theta_right,x_left,x_right,mass\n";
    const double dt = (h.theta_hi - h.theta_lo) / static_cast<double>(h.n_theta);
    const double dx = (h.x_hi - h.x_lo) / static_cast<double>(h.n_x);
    for (long it = 0; it < h.n_theta; ++it) {
        for (long ix = 0; ix < h.n_x; ++ix) {
            out += format_double(h.theta_lo + dt * static_cast<double>(it));
            out += ',';
            out += format_double(h.theta_lo + dt * static_cast<double>(it + 1));
            out += ',';
            out += format_double(h.x_lo + dx * static_cast<double>(ix));
            out += ',';
            out += format_double(h.x_lo + dx * static_cast<double>(ix + 1));
            out += ',';
            out += format_double(h.mass[static_cast<std::size_t>(it * h.n_x + ix)]);
            out += '\n';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kW = 800, kH = 600;
constexpr double kMargin = 60;

struct Mapper {
    double x_lo, x_hi, y_lo, y_hi;
    double px(double x) const {
        return kMargin + (x - x_lo) / (x_hi - x_lo) * (kW - 2 * kMargin);
    }
    double py(double y) const {
        return kH - kMargin - (y - y_lo) / (y_hi - y_lo) * (kH - 2 * kMargin);
    }
};

}  // namespace

std::string svg_decay_plot(const std::string& title, const std::string& x_label,
                           const std::vector<PlotSeries>& series) {
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (const PlotSeries& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.y[i] > 0.0)) continue;
            const double ly = std::log10(s.y[i]);
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, ly);
            y_hi = std::max(y_hi, ly);
        }
    }
    if (!(x_hi > x_lo)) {
        x_lo = 0;
        x_hi = 1;
    }
    if (!(y_hi > y_lo)) {
        y_lo = -1;
        y_hi = 0;
    }
    y_hi += 0.05 * (y_hi - y_lo) + 1e-9;
    y_lo -= 0.05 * (y_hi - y_lo);
    const Mapper m{x_lo, x_hi, y_lo, y_hi};

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf"};
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n";
    svg += "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    svg += "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">" + title +
           "</text>\n";
    // axes
    svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(kH - kMargin) +
           "\" x2=\"" + format_double(kW - kMargin) + "\" y2=\"" + format_double(kH - kMargin) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(kMargin) +
           "\" x2=\"" + format_double(kMargin) + "\" y2=\"" + format_double(kH - kMargin) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"400\" y=\"585\" text-anchor=\"middle\" font-size=\"13\">" + x_label +
           "</text>\n";
    svg += "<text x=\"16\" y=\"300\" text-anchor=\"middle\" font-size=\"13\" "
           "transform=\"rotate(-90 16 300)\">log10 value</text>\n";
    // y gridlines at integer log10
    for (long g = static_cast<long>(std::ceil(y_lo)); g <= static_cast<long>(std::floor(y_hi)); ++g) {
        const double y = m.py(static_cast<double>(g));
        svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(y) +
               "\" x2=\"" + format_double(kW - kMargin) + "\" y2=\"" + format_double(y) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + format_double(kMargin - 6) + "\" y=\"" + format_double(y + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + format_long(g) + "</text>\n";
    }

    int color = 0;
    double legend_y = kMargin + 10;
    for (const PlotSeries& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.y[i] > 0.0)) continue;
            pts += format_double(m.px(s.x[i]));
            pts += ',';
            pts += format_double(m.py(std::log10(s.y[i])));
            pts += ' ';
        }
        const char* col = kColors[color % 7];
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += col;
        svg += "\" stroke-width=\"1.5\"";
        if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
        svg += " points=\"" + pts + "\"/>\n";
        svg += "<text x=\"" + format_double(kW - kMargin - 150) + "\" y=\"" +
               format_double(legend_y) + "\" font-size=\"12\" fill=\"";
        svg += col;
        svg += "\">" + s.name + "</text>\n";
        legend_y += 16;
        ++color;
    }
    svg += "</svg>\n";
    return svg;
}

PlotSeries envelope_series(const std::string& name, const std::vector<long>& n_values,
                           double c, double tau, double zeta) {
    PlotSeries s;
    s.name = name;
    s.dashed = true;
    for (long n : n_values) {
        if (n < 1) continue;
        s.x.push_back(static_cast<double>(n));
        s.y.push_back(c * std::exp(-tau * std::pow(static_cast<double>(n), zeta)));
    }
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace viana
