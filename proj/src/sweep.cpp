#include "gridsim/sweep.hpp"

#include "gridsim/errors.hpp"
#include "gridsim/simulator.hpp"
#include "gridsim/text_format.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gridsim {

ScenarioRun run_scenario(const Case& c, const Scenario& s) {
    ScenarioRun out{apply_options(c, s.options), {}, {}};
    out.trace = run(out.study, s.config, s.events);
    out.report = delta_f(out.trace, out.study.f_nominal, s.nadir_window_start(), s.config.t_end);
    return out;
}

SweepResult run_sweep(const Case& c, const Scenario& s, SweepAxis axis, std::vector<double> values,
                      unsigned workers) {
    std::sort(values.begin(), values.end());
    if (!values.empty() && values.front() < 0.0) {
        throw std::invalid_argument("sweep values must be non-negative");
    }
    if (axis == SweepAxis::droop && !values.empty() && values.front() == 0.0) {
        throw std::invalid_argument("droop sweep values must be positive");
    }

    SweepResult result;
    result.axis = axis;
    result.points.resize(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < values.size(); k = next++) {
            auto& pt = result.points[k];
            pt.value = values[k];
            Scenario sc = s;
            if (axis == SweepAxis::capacity) {
                sc.options.capacity_fraction = values[k];
            } else {
                sc.options.m_p = values[k];
            }
            try {
                auto r = run_scenario(c, sc);
                pt.limiter_violations = limiter_violations(r.trace, r.study);
                pt.report = std::move(r.report);
            } catch (const std::exception& e) {
                pt.error = e.what();
            }
        }
    };
    if (workers == 0) {
        workers = std::max(1U, std::thread::hardware_concurrency());
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(values.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    return result;
}

SweepResult sweep_capacity(const Case& c, const Scenario& s, std::vector<double> fractions, unsigned workers) {
    return run_sweep(c, s, SweepAxis::capacity, std::move(fractions), workers);
}

SweepResult sweep_droop(const Case& c, const Scenario& s, std::vector<double> m_p_values, unsigned workers) {
    return run_sweep(c, s, SweepAxis::droop, std::move(m_p_values), workers);
}

std::string sweep_csv(const SweepResult& r) {
    using text::format_double;
    std::ostringstream os;
    os << to_string(r.axis) << ",status,min,q1,median,q3,max,whisker_lo,whisker_hi,buses_over_threshold,"
       << "limiter_violations,error\n";
    for (const auto& p : r.points) {
        os << format_double(p.value) << ",";
        if (p.report) {
            const auto& b = p.report->stats;
            os << "ok," << format_double(b.min) << "," << format_double(b.q1) << "," << format_double(b.median) << ","
               << format_double(b.q3) << "," << format_double(b.max) << "," << format_double(b.whisker_lo) << ","
               << format_double(b.whisker_hi) << "," << p.report->count_over_threshold << "," << p.limiter_violations
               << ",\n";
        } else {
            std::string msg = p.error;
            std::replace(msg.begin(), msg.end(), '"', '\'');
            os << "error,,,,,,,,,," << "\"" << msg << "\"\n";
        }
    }
    return os.str();
}

std::string sweep_svg(const SweepResult& r, const std::string& title) {
    constexpr double width = 720.0;
    constexpr double height = 420.0;
    constexpr double left = 70.0;
    constexpr double right = 30.0;
    constexpr double top = 50.0;
    constexpr double bottom = 60.0;
    double y_max = kDeltaFThresholdHz;
    for (const auto& p : r.points) {
        if (p.report) {
            y_max = std::max(y_max, p.report->stats.max);
        }
    }
    y_max *= 1.1;
    const double plot_h = height - top - bottom;
    auto y = [&](double v) { return top + plot_h * (1.0 - v / y_max); };
    const double slot = (width - left - right) / static_cast<double>(std::max<std::size_t>(r.points.size(), 1));

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left << "\" y=\"28\" font-size=\"16\">" << title << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = y_max * k / 4.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << y(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
           << text::format_double(std::round(v * 1000.0) / 1000.0) << "</text>\n";
    }
    os << "<line x1=\"" << left << "\" y1=\"" << y(kDeltaFThresholdHz) << "\" x2=\"" << width - right << "\" y2=\""
       << y(kDeltaFThresholdHz) << "\" stroke=\"#c00\" stroke-dasharray=\"5,4\"/>\n";
    os << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 18 "
       << top + plot_h / 2 << ")\" text-anchor=\"middle\">delta f (Hz)</text>\n";
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        const auto& p = r.points[k];
        const double cx = left + slot * (static_cast<double>(k) + 0.5);
        os << "<text x=\"" << cx << "\" y=\"" << height - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
           << text::format_double(p.value) << "</text>\n";
        if (!p.report) {
            os << "<text x=\"" << cx << "\" y=\"" << y(y_max / 2) << "\" font-size=\"11\" text-anchor=\"middle\">"
               << "failed</text>\n";
            continue;
        }
        const auto& b = p.report->stats;
        const double w = std::min(40.0, slot * 0.5);
        os << "<line x1=\"" << cx << "\" y1=\"" << y(b.whisker_lo) << "\" x2=\"" << cx << "\" y2=\""
           << y(b.whisker_hi) << "\" stroke=\"black\"/>\n";
        os << "<rect x=\"" << cx - w / 2 << "\" y=\"" << y(b.q3) << "\" width=\"" << w << "\" height=\""
           << std::max(y(b.q1) - y(b.q3), 0.5) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << cx - w / 2 << "\" y1=\"" << y(b.median) << "\" x2=\"" << cx + w / 2 << "\" y2=\""
           << y(b.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        for (double v : p.report->values()) {
            if (v < b.whisker_lo || v > b.whisker_hi) {
                os << "<circle cx=\"" << cx << "\" cy=\"" << y(v) << "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
            }
        }
    }
    os << "<text x=\"" << left + (width - left - right) / 2 << "\" y=\"" << height - 15
       << "\" font-size=\"12\" text-anchor=\"middle\">" << to_string(r.axis) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

Comparison compare_cases(const Case& a, const Case& b, const Scenario& s, std::string label_a, std::string label_b) {
    auto ids = [](const Case& c) {
        std::vector<int> v;
        for (const auto& bus : c.buses) {
            v.push_back(bus.id);
        }
        std::sort(v.begin(), v.end());
        return v;
    };
    if (ids(a) != ids(b)) {
        throw std::invalid_argument("compared cases have different bus sets");
    }
    Comparison out;
    out.label_a = std::move(label_a);
    out.label_b = std::move(label_b);
    out.a = run_scenario(a, s).report;
    out.b = run_scenario(b, s).report;
    return out;
}

Comparison compare_gfm_gfl(const Case& c, const Scenario& s) {
    Scenario base = s;
    base.options.storage = StorageFamily::as_case;
    const Case gfm = apply_options(c, base.options);
    Case gfl = with_gfl_storage(gfm);
    return compare_cases(gfm, gfl, base, "gfm", "gfl");
}

std::string comparison_csv(const Comparison& cmp) {
    using text::format_double;
    std::ostringstream os;
    os << "bus,delta_f_" << cmp.label_a << ",delta_f_" << cmp.label_b << "\n";
    for (const auto& ba : cmp.a.buses) {
        os << ba.bus << "," << format_double(ba.delta_f) << "," << format_double(cmp.b.bus(ba.bus).delta_f) << "\n";
    }
    return os.str();
}

}  // namespace gridsim
