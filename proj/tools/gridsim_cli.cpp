// gridsim command-line driver.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 convergence or divergence
// failure, 3 invalid case or scenario.

#include "gridsim/case_model.hpp"
#include "gridsim/errors.hpp"
#include "gridsim/metrics.hpp"
#include "gridsim/powerflow.hpp"
#include "gridsim/scenario.hpp"
#include "gridsim/simulator.hpp"
#include "gridsim/sweep.hpp"
#include "gridsim/text_format.hpp"
#include "gridsim/trace_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace gridsim;

namespace {

enum Exit { ok = 0, usage = 1, numeric = 2, invalid = 3 };

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content)) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

Scenario scenario_or_default(const std::string& path) {
    if (path.empty()) {
        return Scenario{};
    }
    return load_scenario(path);
}

void write_heatmap(const DeltaFReport& report, const std::string& layout_path, const fs::path& dir,
                   const std::string& stem, const std::string& title) {
    if (layout_path.empty()) {
        return;
    }
    const auto layout = load_layout(layout_path);
    write_file(dir / (stem + ".csv"), heatmap_csv(report, layout));
    write_file(dir / (stem + ".svg"), heatmap_svg(report, layout, title));
}

void print_report_line(const std::string& label, const DeltaFReport& r) {
    std::cout << label << ": median delta_f " << r.stats.median << " Hz, max " << r.stats.max << " Hz, "
              << r.count_over_threshold << "/" << r.buses.size() << " buses over " << kDeltaFThresholdHz << " Hz\n";
}

int cmd_powerflow(const std::string& case_path, const std::string& out_path) {
    const Case c = load_case(case_path);
    const auto pf = solve_powerflow(c, build_ybus(c));
    std::ostringstream os;
    os << "bus,v_mag,v_ang_deg,p_inj,q_inj\n";
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        os << c.buses[i].id << "," << text::format_double(std::abs(pf.v[i])) << ","
           << text::format_double(std::arg(pf.v[i]) * 180.0 / std::numbers::pi) << ","
           << text::format_double(pf.p_inj[i]) << "," << text::format_double(pf.q_inj[i]) << "\n";
    }
    if (out_path.empty()) {
        std::cout << os.str();
    } else {
        write_file(out_path, os.str());
    }
    std::cerr << "converged in " << pf.iterations << " iterations, max mismatch " << pf.max_mismatch << " pu\n";
    return ok;
}

int cmd_simulate(const std::string& case_path, const std::string& scenario_path, const fs::path& out_dir,
                 const std::string& layout) {
    const Case c = load_case(case_path);
    const Scenario s = scenario_or_default(scenario_path);
    fs::create_directories(out_dir);
    const auto r = run_scenario(c, s);
    write_trace_csv(r.trace, out_dir / "trace.csv");
    const auto inj = injection_report(r.trace, r.study, s.nadir_window_start());
    write_file(out_dir / "summary.json", summary_json(r.report, inj, limiter_violations(r.trace, r.study)));
    write_heatmap(r.report, layout, out_dir, "heatmap", "delta f, " + c.name);
    print_report_line("simulate", r.report);
    return ok;
}

int cmd_sweep(const std::string& case_path, const std::string& scenario_path, const std::string& axis_name,
              std::vector<double> values, const fs::path& out_dir, unsigned workers) {
    const Case c = load_case(case_path);
    const Scenario s = scenario_or_default(scenario_path);
    SweepAxis axis = SweepAxis::capacity;
    if (!axis_name.empty()) {
        axis = parse_sweep_axis(axis_name);
    } else if (s.sweep) {
        axis = s.sweep->axis;
    }
    if (values.empty() && s.sweep && s.sweep->axis == axis) {
        values = s.sweep->values;
    }
    if (values.empty()) {
        throw CLI::ValidationError("--values", "no sweep values given on the command line or in the scenario");
    }
    fs::create_directories(out_dir);
    const auto result = run_sweep(c, s, axis, values, workers);
    write_file(out_dir / "sweep.csv", sweep_csv(result));
    write_file(out_dir / "sweep.svg", sweep_svg(result, std::string(to_string(axis)) + " sweep, " + c.name));
    bool any_failed = false;
    for (const auto& p : result.points) {
        if (p.report) {
            print_report_line(std::string(to_string(axis)) + "=" + text::format_double(p.value), *p.report);
        } else {
            any_failed = true;
            std::cout << to_string(axis) << "=" << text::format_double(p.value) << ": failed: " << p.error << "\n";
        }
    }
    return any_failed ? numeric : ok;
}

int cmd_compare(const std::string& case_path, const std::string& scenario_path, const std::string& family,
                const fs::path& out_dir, const std::string& layout) {
    const Case c = load_case(case_path);
    const Scenario s = scenario_or_default(scenario_path);
    Comparison cmp;
    if (family == "gfl") {
        cmp = compare_gfm_gfl(c, s);
    } else {
        Scenario base = s;
        base.options.storage = StorageFamily::as_case;
        const Case gfm = apply_options(c, base.options);
        cmp = compare_cases(gfm, gfm, base, "gfm", "gfm_repeat");
    }
    fs::create_directories(out_dir);
    write_file(out_dir / "compare.csv", comparison_csv(cmp));
    write_heatmap(cmp.a, layout, out_dir, "heatmap_" + cmp.label_a, "delta f, " + cmp.label_a);
    write_heatmap(cmp.b, layout, out_dir, "heatmap_" + cmp.label_b, "delta f, " + cmp.label_b);
    print_report_line(cmp.label_a, cmp.a);
    print_report_line(cmp.label_b, cmp.b);
    return ok;
}

int cmd_report(const std::string& trace_path, const std::string& case_path, std::optional<double> t_start,
               std::optional<double> t_end, const fs::path& out_dir, const std::string& layout) {
    const Case c = load_case(case_path);
    const TraceLog trace = read_trace_csv(fs::path(trace_path));
    const double start = t_start.value_or(0.0);
    const auto rep = delta_f(trace, c.f_nominal, start, t_end.value_or(std::numeric_limits<double>::infinity()));
    fs::create_directories(out_dir);
    write_file(out_dir / "summary.json",
               summary_json(rep, injection_report(trace, c, start), limiter_violations(trace, c)));
    write_heatmap(rep, layout, out_dir, "heatmap", "delta f, " + c.name);
    print_report_line("report", rep);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridsim: positive-sequence transients of grid-forming storage networks"};
    app.require_subcommand(1);

    std::string case_path;
    std::string scenario_path;
    std::string out_path;
    std::string out_dir = "out";
    std::string layout;
    std::string axis;
    std::string family = "gfl";
    std::string trace_path;
    std::vector<double> values;
    unsigned workers = 0;
    std::optional<double> t_start;
    std::optional<double> t_end;

    auto* pf = app.add_subcommand("powerflow", "solve the power flow and print bus voltages");
    pf->add_option("--case", case_path, "case file")->required();
    pf->add_option("--out", out_path, "write the bus table to this CSV instead of stdout");

    auto* sim = app.add_subcommand("simulate", "run one scenario and write trace.csv and summary.json");
    sim->add_option("--case", case_path, "case file")->required();
    sim->add_option("--scenario", scenario_path, "scenario file (events and config)");
    sim->add_option("--out-dir", out_dir, "output directory");
    sim->add_option("--layout", layout, "bus layout CSV; enables heatmap.csv and heatmap.svg");

    auto* sw = app.add_subcommand("sweep", "storage capacity or droop sensitivity sweep");
    sw->add_option("--case", case_path, "case file")->required();
    sw->add_option("--scenario", scenario_path, "scenario file");
    sw->add_option("--axis", axis, "capacity or droop")->check(CLI::IsMember({"capacity", "droop"}));
    sw->add_option("--values", values, "axis values (capacity fraction or m_p)")->delimiter(',');
    sw->add_option("--out-dir", out_dir, "output directory");
    sw->add_option("--workers", workers, "parallel simulations (0: all cores)");

    auto* cmp = app.add_subcommand("compare", "compare the case's GFM storage against another inverter family");
    cmp->add_option("--case", case_path, "case file")->required();
    cmp->add_option("--scenario", scenario_path, "scenario file");
    cmp->add_option("--family", family, "family compared against GFM")->check(CLI::IsMember({"gfm", "gfl"}));
    cmp->add_option("--out-dir", out_dir, "output directory");
    cmp->add_option("--layout", layout, "bus layout CSV for heatmaps");

    auto* rep = app.add_subcommand("report", "re-derive metrics from a saved trace.csv");
    rep->add_option("--trace", trace_path, "trace.csv from simulate")->required();
    rep->add_option("--case", case_path, "case file the trace was produced from")->required();
    rep->add_option("--t-start", t_start, "start of the nadir window in s");
    rep->add_option("--t-end", t_end, "end of the nadir window in s");
    rep->add_option("--out-dir", out_dir, "output directory");
    rep->add_option("--layout", layout, "bus layout CSV for heatmaps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*pf) {
            return cmd_powerflow(case_path, out_path);
        }
        if (*sim) {
            return cmd_simulate(case_path, scenario_path, out_dir, layout);
        }
        if (*sw) {
            return cmd_sweep(case_path, scenario_path, axis, values, out_dir, workers);
        }
        if (*cmp) {
            return cmd_compare(case_path, scenario_path, family, out_dir, layout);
        }
        if (*rep) {
            return cmd_report(trace_path, case_path, t_start, t_end, out_dir, layout);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const CaseError& e) {
        std::cerr << "invalid case: " << e.what() << "\n";
        return invalid;
    } catch (const EventError& e) {
        std::cerr << "invalid event: " << e.what() << "\n";
        return invalid;
    } catch (const Error& e) {
        std::cerr << "simulation failed: " << e.what() << "\n";
        return numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    }
    return usage;
}
