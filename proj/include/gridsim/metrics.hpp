#pragma once

// Post-run metrics: frequency nadir reports, storage injection statistics,
// box-plot summaries, heatmap export, and limiter audits.

#include "gridsim/case_model.hpp"
#include "gridsim/trace.hpp"

#include <array>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace gridsim {

inline constexpr double kDeltaFThresholdHz = 0.2;

struct BoxStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double whisker_lo = 0.0;  // most extreme samples within 1.5 IQR of the box
    double whisker_hi = 0.0;

    bool operator==(const BoxStats&) const = default;
};

/// Quartiles by linear interpolation between order statistics.
/// Throws std::invalid_argument on an empty sample.
BoxStats box_stats(std::vector<double> sample);

struct BusDeltaF {
    int bus = 0;
    double f_min = 0.0;
    double t_min = 0.0;
    double delta_f = 0.0;

    bool operator==(const BusDeltaF&) const = default;
};

struct DeltaFReport {
    double f_nominal = 60.0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<BusDeltaF> buses;
    int count_over_threshold = 0;  // strictly above 0.2 Hz
    BoxStats stats;

    bool operator==(const DeltaFReport&) const = default;
    [[nodiscard]] const BusDeltaF& bus(int id) const;
    [[nodiscard]] std::vector<double> values() const;
};

/// Nadir of every bus:*/f_hz channel over [t_start, t_end]. Throws
/// std::invalid_argument when no sample falls in the window.
DeltaFReport delta_f(const TraceLog& trace, double f_nominal, double t_start = 0.0,
                     double t_end = std::numeric_limits<double>::infinity());

struct UnitInjection {
    std::string entity;  // "gfm:3" or "gfl:3"
    int bus = 0;
    double p_cap = 0.0;
    double i_max = 0.0;
    double max_abs_p = 0.0;
    double relative = 0.0;  // max |P| / p_cap
    double t_max = 0.0;
    double max_current = 0.0;
    std::array<double, 4> mode_duty{};  // fraction of samples per safety mode
    int activations = 0;                // entries into a non-inactive mode
};

struct InjectionReport {
    std::vector<UnitInjection> units;
    double max_total_injection = 0.0;  // max over time of the summed |P|
};

InjectionReport injection_report(const TraceLog& trace, const Case& c, double t_start = 0.0);

/// Samples where |P| > p_cap or |I| > i_max by more than `tol`.
int limiter_violations(const TraceLog& trace, const Case& c, double tol = 1e-9);

/// Heatmap color value: linear in [0, 0.2) Hz, exactly 1 at or above.
double heatmap_color(double delta_f_hz);

struct BusCoordinate {
    int bus = 0;
    double x = 0.0;
    double y = 0.0;
};

/// `bus,x,y` CSV with header.
std::vector<BusCoordinate> load_layout(const std::filesystem::path& path);
std::vector<BusCoordinate> parse_layout(std::string_view text);

/// Throws std::invalid_argument when a reported bus has no coordinates.
std::string heatmap_csv(const DeltaFReport& report, const std::vector<BusCoordinate>& layout);
std::string heatmap_svg(const DeltaFReport& report, const std::vector<BusCoordinate>& layout,
                        const std::string& title);

/// JSON document with per-bus nadirs, storage injections, and safety-mode activity.
std::string summary_json(const DeltaFReport& report, const InjectionReport& inj, int limiter_violation_count);

}  // namespace gridsim
