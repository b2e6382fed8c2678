#pragma once

// Static study-case description: buses, Pi-branches, and device parameter
// sets, all in per-unit on the case MVA base.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsim {

enum class BusKind { slack, pv, pq };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::pq;
    double v_set = 1.0;  // slack / pv only
    double p_load = 0.0;
    double q_load = 0.0;
    double shunt_b = 0.0;

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int id = 0;
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;  // total line charging, split half per end
    double tap_ratio = 1.0;   // off-nominal ratio on the from side
    bool in_service = true;

    bool operator==(const Branch&) const = default;
};

/// Barrier-function frequency band controller settings for one GFM.
struct SafetyParams {
    bool enabled = false;
    double omega_lo_hz = 59.8;
    double omega_hi_hz = 60.2;
    double alpha = 0.1;
    int p_exp = 1;

    bool operator==(const SafetyParams&) const = default;
};

/// Flux-decay synchronous machine with first-order governor and constant field voltage.
struct SgParams {
    int id = 0;
    int bus = 0;
    double M = 0.0;  // 2H, s (system base)
    double D = 0.0;
    double x_d = 0.0;
    double x_q = 0.0;
    double x_d_prime = 0.0;
    double t_do_prime = 0.0;
    double t_ch = 0.0;
    double r_g = 0.0;
    double p_set = 0.0;  // scheduled electrical output for pv buses
    double e_fd = 0.0;   // informational; back-computed at initialization

    bool operator==(const SgParams&) const = default;
};

/// Droop-controlled grid-forming inverter behind a coupling reactance.
struct GfmParams {
    int id = 0;
    int bus = 0;
    double tau = 0.02;
    double m_p = 0.0;
    double m_q = 0.0;
    double k_p = 0.5;
    double k_v = 5.0;
    double x_c = 0.15;
    double p_cap = 0.0;
    double q_cap = 0.0;
    double i_max = 0.0;
    double p_star = 0.0;
    double q_star = 0.0;
    double v_star = 0.0;  // informational; back-computed at initialization
    SafetyParams safety;

    bool operator==(const GfmParams&) const = default;
};

/// Grid-following inverter: PLL plus lagged current source with frequency droop.
struct GflParams {
    int id = 0;
    int bus = 0;
    double kp_pll = 0.2357;
    double ki_pll = 10.47;
    double tau_c = 0.02;
    double m_p = 0.0;
    double p_cap = 0.0;
    double i_max = 0.0;
    double p_star = 0.0;
    double q_star = 0.0;

    bool operator==(const GflParams&) const = default;
};

struct Case {
    int format_version = 1;
    std::string name;
    double base_mva = 100.0;
    double f_nominal = 60.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<SgParams> sgs;
    std::vector<GfmParams> gfms;
    std::vector<GflParams> gfls;

    bool operator==(const Case&) const = default;

    [[nodiscard]] std::optional<std::size_t> bus_index(int bus_id) const;
    [[nodiscard]] const Bus& bus(int bus_id) const;
    [[nodiscard]] double total_load() const;
};

inline constexpr int kCaseFormatVersion = 1;

/// Parses case text. Throws CaseError with source:line context on malformed
/// input; does not run the invariant checks.
Case parse_case(std::string_view text, std::string source = "<case>");

/// Reads, parses, and validates a case file. Invariant violations are
/// reported together in one CaseError.
Case load_case(const std::filesystem::path& path);

/// Writes the case in the same format `parse_case` accepts.
std::string serialize_case(const Case& c);

/// Empty iff every invariant holds. Each entry names the entity and the rule.
std::vector<std::string> validate_case(const Case& c);

/// Sum of storage power headroom over total real-power load.
double storage_capacity_fraction(const Case& c);

/// Rescales every storage unit's rating so the capacity fraction becomes
/// `target`. Quantities on the unit's own base (droop, coupling reactance,
/// current ratio) stay fixed, so p_cap, q_cap and i_max scale by k while
/// x_c, m_p and m_q scale by 1/k. A zero target removes all storage units.
Case with_storage_fraction(const Case& c, double target);

/// Replaces every GFM with a GFL carrying the same bus, droop, headroom,
/// current limit, and dispatch.
Case with_gfl_storage(const Case& c, double kp_pll = 0.2357, double ki_pll = 10.47, double tau_c = 0.02);

std::string_view to_string(BusKind kind);

}  // namespace gridsim
