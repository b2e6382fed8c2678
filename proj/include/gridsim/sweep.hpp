#pragma once

// Scenario execution and the batch studies built on it: capacity and droop
// sweeps, and paired inverter-family comparisons.

#include "gridsim/case_model.hpp"
#include "gridsim/metrics.hpp"
#include "gridsim/scenario.hpp"
#include "gridsim/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gridsim {

struct ScenarioRun {
    Case study;  // case after scenario options
    TraceLog trace;
    DeltaFReport report;
};

/// Applies the scenario options, simulates, and extracts the nadir report
/// over [nadir window start, t_end].
ScenarioRun run_scenario(const Case& c, const Scenario& s);

struct SweepPoint {
    double value = 0.0;
    std::optional<DeltaFReport> report;  // empty when the run failed
    std::string error;
    int limiter_violations = 0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::capacity;
    std::vector<SweepPoint> points;  // sorted by value
};

/// Runs one simulation per value on up to `workers` threads (0: hardware
/// concurrency). Values must be non-negative and may repeat; a failing point
/// records its error and does not stop the others.
SweepResult run_sweep(const Case& c, const Scenario& s, SweepAxis axis, std::vector<double> values,
                      unsigned workers = 0);
SweepResult sweep_capacity(const Case& c, const Scenario& s, std::vector<double> fractions, unsigned workers = 0);
SweepResult sweep_droop(const Case& c, const Scenario& s, std::vector<double> m_p_values, unsigned workers = 0);

/// Box statistics per point as CSV (value,status,min,q1,median,q3,max,...).
std::string sweep_csv(const SweepResult& r);

/// Box plot of the per-point distributions.
std::string sweep_svg(const SweepResult& r, const std::string& title);

struct Comparison {
    std::string label_a;
    std::string label_b;
    DeltaFReport a;
    DeltaFReport b;
};

/// Runs the scenario on two case variants. Throws std::invalid_argument
/// when the variants do not share a bus set.
Comparison compare_cases(const Case& a, const Case& b, const Scenario& s, std::string label_a = "a",
                         std::string label_b = "b");

/// Same storage with GFM and with GFL controls.
Comparison compare_gfm_gfl(const Case& c, const Scenario& s);

/// Per-bus side-by-side CSV.
std::string comparison_csv(const Comparison& cmp);

}  // namespace gridsim
