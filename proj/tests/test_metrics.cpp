#include "gridsim/metrics.hpp"
#include "gridsim/trace_io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace gridsim;

namespace {

// Two buses: bus 1 dips to `dip1` at t = 1, bus 2 to `dip2` at t = 2.
TraceLog two_bus_trace(double dip1, double dip2) {
    TraceLog log;
    log.add_channel("bus:1", "f_hz");
    log.add_channel("bus:2", "f_hz");
    log.append_row(0.0, {60.0, 60.0});
    log.append_row(1.0, {dip1, 59.99});
    log.append_row(2.0, {59.95, dip2});
    log.append_row(3.0, {60.0, 60.0});
    return log;
}

// Storage unit channels with the given |P| per sample.
TraceLog unit_trace(const std::vector<double>& p1, const std::vector<double>& p2) {
    TraceLog log;
    for (const char* e : {"gfm:1", "gfm:2"}) {
        log.add_channel(e, "p");
        log.add_channel(e, "i_mag");
        log.add_channel(e, "mode");
    }
    for (std::size_t k = 0; k < p1.size(); ++k) {
        const double m1 = p1[k] > 0.4 ? 1.0 : 0.0;
        log.append_row(static_cast<double>(k), {p1[k], std::abs(p1[k]), m1, p2[k], std::abs(p2[k]), 0.0});
    }
    return log;
}

Case two_unit_case() {
    Case c = gridsim::testing::load("single_gfm_safety.case");
    GfmParams g = c.gfms.front();
    g.id = 2;
    c.gfms.push_back(g);
    return c;
}

}  // namespace

TEST(DeltaF, NadirArithmetic) {
    const auto rep = delta_f(two_bus_trace(59.85, 59.7), 60.0);
    EXPECT_NEAR(rep.bus(1).delta_f, 0.15, 1e-12);
    EXPECT_DOUBLE_EQ(rep.bus(1).t_min, 1.0);
    EXPECT_NEAR(rep.bus(2).delta_f, 0.3, 1e-12);
    EXPECT_DOUBLE_EQ(rep.bus(2).t_min, 2.0);
    EXPECT_EQ(rep.count_over_threshold, 1);
}

TEST(DeltaF, ThresholdIsStrict) {
    // 0.5 - 0.3 is exactly the double nearest 0.2.
    TraceLog log;
    log.add_channel("bus:1", "f_hz");
    log.append_row(0.0, {0.3});
    const auto rep = delta_f(log, 0.5);
    ASSERT_EQ(rep.bus(1).delta_f, kDeltaFThresholdHz);
    EXPECT_EQ(rep.count_over_threshold, 0);
}

TEST(DeltaF, FlatTraceIsZero) {
    const auto rep = delta_f(two_bus_trace(60.0, 60.0), 60.0, 1.5);
    EXPECT_NEAR(rep.bus(1).delta_f, 0.05, 1e-12);
    const auto flat = delta_f(two_bus_trace(60.0, 60.0), 60.0, 2.5);
    EXPECT_EQ(flat.stats.max, 0.0);
}

TEST(DeltaF, WindowExcludesEarlierSamples) {
    const auto rep = delta_f(two_bus_trace(59.0, 59.9), 60.0, 1.5);
    EXPECT_NEAR(rep.bus(1).delta_f, 0.05, 1e-12);
    EXPECT_DOUBLE_EQ(rep.t_start, 2.0);
    EXPECT_THROW((void)delta_f(two_bus_trace(59.0, 59.9), 60.0, 5.0), std::invalid_argument);
}

TEST(Heatmap, ColorScale) {
    EXPECT_DOUBLE_EQ(heatmap_color(0.0), 0.0);
    EXPECT_DOUBLE_EQ(heatmap_color(0.1), 0.5);
    EXPECT_DOUBLE_EQ(heatmap_color(0.2), 1.0);
    EXPECT_DOUBLE_EQ(heatmap_color(0.25), 1.0);
}

TEST(Heatmap, CsvRowsAndMissingCoordinates) {
    const auto rep = delta_f(two_bus_trace(59.9, 59.7), 60.0);
    const auto layout = parse_layout("bus,x,y\n1,0,0\n2,1.5,-2\n");
    const std::string csv = heatmap_csv(rep, layout);
    EXPECT_NE(csv.find("bus,x,y,delta_f_hz,color\n"), std::string::npos);
    EXPECT_NE(csv.find("\n2,1.5,-2,"), std::string::npos);
    EXPECT_THROW((void)heatmap_csv(rep, parse_layout("bus,x,y\n1,0,0\n")), std::invalid_argument);
    const std::string svg = heatmap_svg(rep, layout, "t");
    EXPECT_EQ(svg.rfind("<svg", 0), 0U);
    EXPECT_NE(svg.find("bus 2"), std::string::npos);
}

TEST(Heatmap, EmptyReportIsHeaderOnly) {
    EXPECT_EQ(heatmap_csv(DeltaFReport{}, {}), "bus,x,y,delta_f_hz,color\n");
}

TEST(Layout, MalformedLineNamesTheLine) {
    EXPECT_THROW((void)parse_layout("bus,x,y\n1,0\n"), std::runtime_error);
    EXPECT_EQ(gridsim::load_layout(gridsim::testing::data_path("ieee68_layout.csv")).size(), 68U);
}

TEST(BoxStats, QuartilesByInterpolation) {
    const auto b = box_stats({5.0, 1.0, 3.0, 2.0, 4.0});
    EXPECT_DOUBLE_EQ(b.min, 1.0);
    EXPECT_DOUBLE_EQ(b.q1, 2.0);
    EXPECT_DOUBLE_EQ(b.median, 3.0);
    EXPECT_DOUBLE_EQ(b.q3, 4.0);
    EXPECT_DOUBLE_EQ(b.max, 5.0);
    const auto even = box_stats({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(even.median, 2.5);
    EXPECT_DOUBLE_EQ(even.q1, 1.75);
}

TEST(BoxStats, WhiskersStopAtOutliers) {
    const auto b = box_stats({1.0, 2.0, 3.0, 4.0, 5.0, 100.0});
    EXPECT_DOUBLE_EQ(b.whisker_hi, 5.0);
    EXPECT_DOUBLE_EQ(b.whisker_lo, 1.0);
    EXPECT_DOUBLE_EQ(b.max, 100.0);
    EXPECT_THROW((void)box_stats({}), std::invalid_argument);
}

TEST(Injection, RelativeExtremes) {
    const Case c = two_unit_case();
    const double cap = c.gfms.front().p_cap;
    const auto rep = injection_report(unit_trace({0.0, 0.0, 0.0}, {0.0, -cap, 0.2}), c);
    ASSERT_EQ(rep.units.size(), 2U);
    EXPECT_EQ(rep.units[0].relative, 0.0);
    EXPECT_DOUBLE_EQ(rep.units[1].relative, 1.0);
    EXPECT_DOUBLE_EQ(rep.units[1].t_max, 1.0);
}

TEST(Injection, SumOfPeaksBoundsPeakOfSum) {
    const Case c = two_unit_case();
    const auto rep = injection_report(unit_trace({0.1, 0.45, 0.2, 0.0}, {0.3, 0.0, -0.35, 0.1}), c);
    EXPECT_DOUBLE_EQ(rep.max_total_injection, 0.55);
    EXPECT_GE(rep.units[0].max_abs_p + rep.units[1].max_abs_p, rep.max_total_injection);
    EXPECT_EQ(rep.units[0].activations, 1);
    EXPECT_DOUBLE_EQ(rep.units[0].mode_duty[1], 0.25);
}

TEST(Injection, LimiterAuditCountsExcursions) {
    const Case c = two_unit_case();
    const double cap = c.gfms.front().p_cap;
    EXPECT_EQ(limiter_violations(unit_trace({cap, 0.0}, {0.0, 0.0}), c), 0);
    EXPECT_EQ(limiter_violations(unit_trace({cap + 1e-6, 0.0}, {0.0, -cap - 1e-6}), c), 2);
}

TEST(TraceCsv, RoundTripsLongFormat) {
    const TraceLog log = two_bus_trace(59.8765432123, 59.7);
    std::stringstream ss;
    write_trace_csv(log, ss);
    EXPECT_EQ(ss.str().rfind("time,entity,variable,value\n", 0), 0U);
    const TraceLog back = read_trace_csv(ss);
    EXPECT_EQ(back.time(), log.time());
    ASSERT_EQ(back.channels().size(), log.channels().size());
    for (std::size_t k = 0; k < log.channels().size(); ++k) {
        EXPECT_EQ(back.channels()[k].entity, log.channels()[k].entity);
        EXPECT_EQ(back.channels()[k].values, log.channels()[k].values);
    }
}

TEST(TraceCsv, MalformedInputThrows) {
    std::stringstream ss("time,entity,variable,value\n0,bus:1,f_hz\n");
    EXPECT_THROW((void)read_trace_csv(ss), std::runtime_error);
}

TEST(Summary, JsonCarriesReportFields) {
    const Case c = two_unit_case();
    const auto rep = delta_f(two_bus_trace(59.85, 59.7), 60.0);
    const auto inj = injection_report(unit_trace({0.1, 0.45}, {0.3, 0.0}), c);
    const auto doc = nlohmann::json::parse(summary_json(rep, inj, 0));
    EXPECT_EQ(doc["buses_over_threshold"], 1);
    EXPECT_NEAR(doc["delta_f_stats_hz"]["max"].get<double>(), 0.3, 1e-12);
    ASSERT_EQ(doc["buses"].size(), 2U);
    EXPECT_EQ(doc["buses"][1]["bus"], 2);
    EXPECT_EQ(doc["storage"].size(), 2U);
    EXPECT_EQ(doc["limiter_violations"], 0);
}
