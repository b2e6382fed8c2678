#pragma once

// Scenario files: simulation settings, events, case options, and sweep axes.
//
//   format_version = 1
//   [config]
//   dt = 0.001
//   t_end = 26
//   [options]
//   safety = on
//   [event]
//   time=1.0 kind=sg_trip id=9
//   [sweep]
//   axis = capacity
//   values = 0.05 0.10 0.15 0.20

#include "gridsim/case_model.hpp"
#include "gridsim/simulator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsim {

enum class SafetyOverride { as_case, on, off };
enum class StorageFamily { as_case, gfm, gfl, none };
enum class SweepAxis { capacity, droop };

std::string_view to_string(SweepAxis axis);
/// Throws std::invalid_argument on an unknown name.
SweepAxis parse_sweep_axis(std::string_view name);

struct ScenarioOptions {
    SafetyOverride safety = SafetyOverride::as_case;
    StorageFamily storage = StorageFamily::as_case;
    std::optional<double> capacity_fraction;
    std::optional<double> m_p;  // applied to every storage unit
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::capacity;
    std::vector<double> values;
};

struct Scenario {
    SimConfig config;
    std::vector<Event> events;
    ScenarioOptions options;
    std::optional<SweepSpec> sweep;
    /// Start of the nadir window; defaults to the first event time (or 0).
    std::optional<double> horizon_start;

    [[nodiscard]] double nadir_window_start() const;
};

/// Horizon appended after the first event when t_end is not given.
inline constexpr double kDefaultPostEventHorizon = 25.0;

Scenario parse_scenario(std::string_view text, std::string source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& s);

/// Case variant selected by the options: storage family, capacity, droop,
/// and safety switch, in that order.
Case apply_options(const Case& c, const ScenarioOptions& opts);

}  // namespace gridsim
