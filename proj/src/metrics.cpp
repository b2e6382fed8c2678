#include "gridsim/metrics.hpp"

#include "gridsim/safety_control.hpp"
#include "gridsim/text_format.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gridsim {

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
    const double h = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

struct Rgb {
    int r, g, b;
};

// Dark blue through yellow to dark red.
Rgb colormap(double u) {
    static constexpr std::array<std::array<double, 3>, 5> stops{{
        {49, 54, 149}, {116, 173, 209}, {255, 255, 191}, {244, 109, 67}, {165, 0, 38}}};
    u = std::clamp(u, 0.0, 1.0) * 4.0;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(u), 3);
    const double f = u - static_cast<double>(i);
    auto mix = [&](int k) { return static_cast<int>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k]))); };
    return {mix(0), mix(1), mix(2)};
}

std::string hex(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

const BusCoordinate& coordinate(const std::vector<BusCoordinate>& layout, int bus) {
    auto it = std::find_if(layout.begin(), layout.end(), [&](const BusCoordinate& b) { return b.bus == bus; });
    if (it == layout.end()) {
        throw std::invalid_argument("layout has no coordinates for bus " + std::to_string(bus));
    }
    return *it;
}

}  // namespace

BoxStats box_stats(std::vector<double> sample) {
    if (sample.empty()) {
        throw std::invalid_argument("box statistics of an empty sample");
    }
    std::sort(sample.begin(), sample.end());
    BoxStats b;
    b.min = sample.front();
    b.max = sample.back();
    b.q1 = quantile_sorted(sample, 0.25);
    b.median = quantile_sorted(sample, 0.5);
    b.q3 = quantile_sorted(sample, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo = b.q1 - 1.5 * iqr;
    const double hi = b.q3 + 1.5 * iqr;
    b.whisker_lo = *std::find_if(sample.begin(), sample.end(), [&](double v) { return v >= lo; });
    b.whisker_hi = *std::find_if(sample.rbegin(), sample.rend(), [&](double v) { return v <= hi; });
    return b;
}

const BusDeltaF& DeltaFReport::bus(int id) const {
    auto it = std::find_if(buses.begin(), buses.end(), [&](const BusDeltaF& b) { return b.bus == id; });
    if (it == buses.end()) {
        throw std::out_of_range("report has no bus " + std::to_string(id));
    }
    return *it;
}

std::vector<double> DeltaFReport::values() const {
    std::vector<double> out;
    out.reserve(buses.size());
    for (const auto& b : buses) {
        out.push_back(b.delta_f);
    }
    return out;
}

DeltaFReport delta_f(const TraceLog& trace, double f_nominal, double t_start, double t_end) {
    const auto& t = trace.time();
    const auto first = std::lower_bound(t.begin(), t.end(), t_start) - t.begin();
    const auto last = std::upper_bound(t.begin(), t.end(), t_end) - t.begin();
    if (first >= last) {
        throw std::invalid_argument("delta_f: no trace samples in the horizon");
    }
    DeltaFReport rep;
    rep.f_nominal = f_nominal;
    rep.t_start = t[static_cast<std::size_t>(first)];
    rep.t_end = t[static_cast<std::size_t>(last - 1)];
    for (int id : trace.entity_ids("bus")) {
        const auto& f = trace.values(entity_name("bus", id), "f_hz");
        const auto it = std::min_element(f.begin() + first, f.begin() + last);
        BusDeltaF b;
        b.bus = id;
        b.f_min = *it;
        b.t_min = t[static_cast<std::size_t>(it - f.begin())];
        b.delta_f = std::abs(f_nominal - b.f_min);
        rep.buses.push_back(b);
        if (b.delta_f > kDeltaFThresholdHz) {
            ++rep.count_over_threshold;
        }
    }
    if (!rep.buses.empty()) {
        rep.stats = box_stats(rep.values());
    }
    return rep;
}

InjectionReport injection_report(const TraceLog& trace, const Case& c, double t_start) {
    InjectionReport rep;
    const auto& t = trace.time();
    const auto first = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t_start) - t.begin());
    std::vector<double> total(t.size() - std::min(first, t.size()), 0.0);

    auto add_unit = [&](std::string entity, int bus, double p_cap, double i_max, bool has_mode) {
        UnitInjection u;
        u.entity = std::move(entity);
        u.bus = bus;
        u.p_cap = p_cap;
        u.i_max = i_max;
        const auto& p = trace.values(u.entity, "p");
        const auto& i = trace.values(u.entity, "i_mag");
        const std::vector<double>* mode = has_mode ? &trace.values(u.entity, "mode") : nullptr;
        int previous_mode = 0;
        for (std::size_t k = first; k < t.size(); ++k) {
            const double ap = std::abs(p[k]);
            total[k - first] += ap;
            if (ap > u.max_abs_p) {
                u.max_abs_p = ap;
                u.t_max = t[k];
            }
            u.max_current = std::max(u.max_current, i[k]);
            if (mode != nullptr) {
                const int m = std::clamp(static_cast<int>((*mode)[k]), 0, 3);
                u.mode_duty[static_cast<std::size_t>(m)] += 1.0;
                if (m != 0 && previous_mode == 0) {
                    ++u.activations;
                }
                previous_mode = m;
            } else {
                u.mode_duty[0] += 1.0;
            }
        }
        const double n = static_cast<double>(t.size() - std::min(first, t.size()));
        if (n > 0) {
            for (auto& d : u.mode_duty) {
                d /= n;
            }
        }
        u.relative = p_cap > 0.0 ? u.max_abs_p / p_cap : 0.0;
        rep.units.push_back(std::move(u));
    };
    for (const auto& g : c.gfms) {
        add_unit(entity_name("gfm", g.id), g.bus, g.p_cap, g.i_max, true);
    }
    for (const auto& g : c.gfls) {
        add_unit(entity_name("gfl", g.id), g.bus, g.p_cap, g.i_max, false);
    }
    for (double v : total) {
        rep.max_total_injection = std::max(rep.max_total_injection, v);
    }
    return rep;
}

int limiter_violations(const TraceLog& trace, const Case& c, double tol) {
    int count = 0;
    auto scan = [&](const std::string& entity, double p_cap, double i_max) {
        const auto& p = trace.values(entity, "p");
        const auto& i = trace.values(entity, "i_mag");
        for (std::size_t k = 0; k < p.size(); ++k) {
            count += std::abs(p[k]) > p_cap + tol ? 1 : 0;
            count += i[k] > i_max + tol ? 1 : 0;
        }
    };
    for (const auto& g : c.gfms) {
        scan(entity_name("gfm", g.id), g.p_cap, g.i_max);
    }
    for (const auto& g : c.gfls) {
        scan(entity_name("gfl", g.id), g.p_cap, g.i_max);
    }
    return count;
}

double heatmap_color(double delta_f_hz) {
    if (delta_f_hz >= kDeltaFThresholdHz) {
        return 1.0;
    }
    return std::max(delta_f_hz, 0.0) / kDeltaFThresholdHz;
}

std::vector<BusCoordinate> parse_layout(std::string_view text_in) {
    std::vector<BusCoordinate> out;
    std::istringstream in{std::string(text_in)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#' || (number == 1 && line.rfind("bus", 0) == 0)) {
            continue;
        }
        BusCoordinate b;
        char c1 = 0;
        char c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> b.bus >> c1 >> b.x >> c2 >> b.y) || c1 != ',' || c2 != ',') {
            throw std::runtime_error("layout line " + std::to_string(number) + ": expected bus,x,y");
        }
        out.push_back(b);
    }
    return out;
}

std::vector<BusCoordinate> load_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open layout " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_layout(buf.str());
}

std::string heatmap_csv(const DeltaFReport& report, const std::vector<BusCoordinate>& layout) {
    std::ostringstream os;
    os << "bus,x,y,delta_f_hz,color\n";
    for (const auto& b : report.buses) {
        const auto& xy = coordinate(layout, b.bus);
        os << b.bus << "," << text::format_double(xy.x) << "," << text::format_double(xy.y) << ","
           << text::format_double(b.delta_f) << "," << text::format_double(heatmap_color(b.delta_f)) << "\n";
    }
    return os.str();
}

std::string heatmap_svg(const DeltaFReport& report, const std::vector<BusCoordinate>& layout,
                        const std::string& title) {
    constexpr double width = 800.0;
    constexpr double height = 640.0;
    constexpr double margin = 50.0;
    constexpr double legend = 90.0;
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;
    if (!report.buses.empty()) {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -x0;
        for (const auto& b : report.buses) {
            const auto& xy = coordinate(layout, b.bus);
            x0 = std::min(x0, xy.x);
            x1 = std::max(x1, xy.x);
            y0 = std::min(y0, xy.y);
            y1 = std::max(y1, xy.y);
        }
    }
    const double sx = (width - 2 * margin - legend) / std::max(x1 - x0, 1e-9);
    const double sy = (height - 2 * margin) / std::max(y1 - y0, 1e-9);
    const double s = std::min(sx, sy);

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"28\" font-size=\"16\">" << title << "</text>\n";
    for (const auto& b : report.buses) {
        const auto& xy = coordinate(layout, b.bus);
        const double px = margin + (xy.x - x0) * s;
        const double py = height - margin - (xy.y - y0) * s;
        os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"11\" fill=\"" << hex(colormap(heatmap_color(b.delta_f)))
           << "\" stroke=\"#333\"><title>bus " << b.bus << ": " << b.delta_f << " Hz</title></circle>\n";
        os << "<text x=\"" << px << "\" y=\"" << py + 3.5 << "\" font-size=\"9\" text-anchor=\"middle\">" << b.bus
           << "</text>\n";
    }
    const double lx = width - margin - 30;
    const double ly = margin + 20;
    const double lh = height - 2 * margin - 40;
    for (int k = 0; k < 50; ++k) {
        const double u = 1.0 - (k + 0.5) / 50.0;
        os << "<rect x=\"" << lx << "\" y=\"" << ly + k * lh / 50.0 << "\" width=\"20\" height=\"" << lh / 50.0 + 0.5
           << "\" fill=\"" << hex(colormap(u)) << "\"/>\n";
    }
    os << "<text x=\"" << lx - 4 << "\" y=\"" << ly - 6 << "\" font-size=\"11\">&#8805; 0.2 Hz</text>\n";
    os << "<text x=\"" << lx + 2 << "\" y=\"" << ly + lh + 14 << "\" font-size=\"11\">0 Hz</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string summary_json(const DeltaFReport& report, const InjectionReport& inj, int limiter_violation_count) {
    using nlohmann::json;
    json doc;
    doc["f_nominal_hz"] = report.f_nominal;
    doc["horizon_s"] = {report.t_start, report.t_end};
    doc["threshold_hz"] = kDeltaFThresholdHz;
    doc["buses_over_threshold"] = report.count_over_threshold;
    doc["delta_f_stats_hz"] = {{"min", report.stats.min},       {"q1", report.stats.q1},
                               {"median", report.stats.median}, {"q3", report.stats.q3},
                               {"max", report.stats.max},       {"whisker_lo", report.stats.whisker_lo},
                               {"whisker_hi", report.stats.whisker_hi}};
    json buses = json::array();
    for (const auto& b : report.buses) {
        buses.push_back({{"bus", b.bus}, {"f_min_hz", b.f_min}, {"t_min_s", b.t_min}, {"delta_f_hz", b.delta_f}});
    }
    doc["buses"] = std::move(buses);
    json units = json::array();
    for (const auto& u : inj.units) {
        json duty;
        for (std::size_t m = 0; m < u.mode_duty.size(); ++m) {
            duty[std::string(to_string(static_cast<SafetyMode>(m)))] = u.mode_duty[m];
        }
        units.push_back({{"unit", u.entity},
                         {"bus", u.bus},
                         {"p_cap", u.p_cap},
                         {"max_abs_p", u.max_abs_p},
                         {"relative", u.relative},
                         {"t_max_s", u.t_max},
                         {"max_current", u.max_current},
                         {"i_max", u.i_max},
                         {"safety_activations", u.activations},
                         {"mode_duty", duty}});
    }
    doc["storage"] = std::move(units);
    doc["max_total_injection"] = inj.max_total_injection;
    doc["limiter_violations"] = limiter_violation_count;
    return doc.dump(2) + "\n";
}

}  // namespace gridsim
