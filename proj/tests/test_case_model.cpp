#include "gridsim/case_model.hpp"
#include "gridsim/errors.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <string>

using namespace gridsim;
using gridsim::testing::load;

namespace {

const char* kTwoBus = R"(format_version = 1
[system]
base_mva = 100
f_nominal = 60
[bus]
id=1 kind=slack v_set=1.0
id=2 kind=pq p_load=1.0
[branch]
id=1 from=1 to=2 x=0.1
[sg]
id=1 bus=1 M=10 xd=1.8 xq=1.7 xdp=0.3 tdo=8 tch=0.5 rg=0.05
)";

bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST(CaseModel, MinimalTwoBusParses) {
    const Case c = parse_case(kTwoBus);
    EXPECT_EQ(c.buses.size(), 2U);
    EXPECT_EQ(c.sgs.size(), 1U);
    EXPECT_TRUE(c.gfms.empty());
    EXPECT_TRUE(validate_case(c).empty());
    EXPECT_DOUBLE_EQ(c.total_load(), 1.0);
}

TEST(CaseModel, ShippedCasesAreValid) {
    for (const char* name : {"two_bus.case", "three_bus_droop.case", "single_gfm_safety.case", "ieee68.case"}) {
        EXPECT_NO_THROW(load(name)) << name;
    }
}

TEST(CaseModel, Ieee68HasEqualStorageAtEveryLoadBus) {
    const Case c = load("ieee68.case");
    EXPECT_EQ(c.buses.size(), 68U);
    EXPECT_EQ(c.sgs.size(), 16U);
    ASSERT_EQ(c.gfms.size(), 35U);
    for (const auto& g : c.gfms) {
        EXPECT_DOUBLE_EQ(g.p_cap, c.gfms.front().p_cap);
        EXPECT_GT(c.bus(g.bus).p_load, 0.0);
    }
    // Independent recount of the load from the bus records.
    double load = 0.0;
    for (const auto& b : c.buses) {
        load += b.p_load;
    }
    EXPECT_NEAR(35.0 * c.gfms.front().p_cap / load, 0.15, 1e-6);
    EXPECT_NEAR(storage_capacity_fraction(c), 0.15, 1e-6);
}

TEST(CaseModel, DanglingStorageBusIsReported) {
    Case c = load("ieee68.case");
    c.gfms.front().bus = 99;
    EXPECT_TRUE(has_violation(validate_case(c), "dangling reference to bus 99"));
}

TEST(CaseModel, EvenBarrierExponentIsRejected) {
    Case c = load("single_gfm_safety.case");
    c.gfms.front().safety.p_exp = 2;
    EXPECT_TRUE(has_violation(validate_case(c), "p_exp must be odd"));
}

TEST(CaseModel, ZeroDroopIsRejected) {
    Case c = load("single_gfm_safety.case");
    c.gfms.front().m_p = 0.0;
    EXPECT_TRUE(has_violation(validate_case(c), "m_p > 0 required"));
}

TEST(CaseModel, ViolationsAreReportedTogether) {
    Case c = load("single_gfm_safety.case");
    c.gfms.front().m_p = 0.0;
    c.gfms.front().safety.p_exp = 2;
    c.branches.front().x = 0.0;
    const auto v = validate_case(c);
    EXPECT_GE(v.size(), 3U);
}

TEST(CaseModel, SecondSlackIsRejected) {
    Case c = parse_case(kTwoBus);
    c.buses[1].kind = BusKind::slack;
    EXPECT_FALSE(validate_case(c).empty());
}

TEST(CaseModel, MalformedInputNamesTheLine) {
    const std::string bad = std::string(kTwoBus) + "id=2 bus=2 M=abc xd=1 xq=1 xdp=0.3 tdo=8 tch=0.5 rg=0.05\n";
    try {
        (void)parse_case(bad, "bad.case");
        FAIL() << "expected CaseError";
    } catch (const CaseError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.case:12"), std::string::npos) << e.what();
    }
}

TEST(CaseModel, UnknownKeyIsRejected) {
    const std::string bad = std::string(kTwoBus) + "id=2 bus=2 M=1 xd=1 xq=1 xdp=0.3 tdo=8 tch=0.5 rg=0.05 foo=1\n";
    EXPECT_THROW((void)parse_case(bad), CaseError);
}

TEST(CaseModel, MissingFormatVersionIsRejected) {
    EXPECT_THROW((void)parse_case("[system]\nbase_mva = 100\n"), CaseError);
}

TEST(CaseModel, MissingFileIsCaseError) { EXPECT_THROW((void)load_case("/nonexistent/x.case"), CaseError); }

TEST(CaseModel, SerializeRoundTrips) {
    for (const char* name : {"two_bus.case", "three_bus_droop.case", "single_gfm_safety.case", "ieee68.case"}) {
        const Case c = load(name);
        const Case back = parse_case(serialize_case(c));
        EXPECT_EQ(c, back) << name;
    }
    Case gfl = with_gfl_storage(load("ieee68.case"));
    EXPECT_EQ(gfl, parse_case(serialize_case(gfl)));
}

TEST(CaseModel, CapacityFractionOfEmptyStorageIsZero) {
    EXPECT_DOUBLE_EQ(storage_capacity_fraction(parse_case(kTwoBus)), 0.0);
}

TEST(CaseModel, SingleUnitSizedToLoadIsFullFraction) {
    Case c = load("single_gfm_safety.case");
    c.gfms.front().p_cap = c.total_load();
    EXPECT_DOUBLE_EQ(storage_capacity_fraction(c), 1.0);
}

TEST(CaseModel, StorageRescaleKeepsUnitBaseQuantities) {
    const Case c = load("ieee68.case");
    const Case r = with_storage_fraction(c, 0.05);
    EXPECT_NEAR(storage_capacity_fraction(r), 0.05, 1e-12);
    const double k = r.gfms.front().p_cap / c.gfms.front().p_cap;
    EXPECT_NEAR(k, 0.05 / storage_capacity_fraction(c), 1e-12);
    for (std::size_t i = 0; i < c.gfms.size(); ++i) {
        EXPECT_NEAR(r.gfms[i].i_max / r.gfms[i].p_cap, c.gfms[i].i_max / c.gfms[i].p_cap, 1e-12);
        EXPECT_NEAR(r.gfms[i].m_p * r.gfms[i].p_cap, c.gfms[i].m_p * c.gfms[i].p_cap, 1e-12);
        EXPECT_NEAR(r.gfms[i].x_c * r.gfms[i].p_cap, c.gfms[i].x_c * c.gfms[i].p_cap, 1e-12);
    }
    EXPECT_TRUE(with_storage_fraction(c, 0.0).gfms.empty());
    EXPECT_THROW((void)with_storage_fraction(c, -0.1), CaseError);
    EXPECT_THROW((void)with_storage_fraction(parse_case(kTwoBus), 0.1), CaseError);
}

TEST(CaseModel, GflConversionKeepsRatings) {
    const Case c = load("ieee68.case");
    const Case g = with_gfl_storage(c);
    EXPECT_TRUE(g.gfms.empty());
    ASSERT_EQ(g.gfls.size(), c.gfms.size());
    for (std::size_t i = 0; i < c.gfms.size(); ++i) {
        EXPECT_EQ(g.gfls[i].bus, c.gfms[i].bus);
        EXPECT_EQ(g.gfls[i].p_cap, c.gfms[i].p_cap);
        EXPECT_EQ(g.gfls[i].i_max, c.gfms[i].i_max);
        EXPECT_EQ(g.gfls[i].m_p, c.gfms[i].m_p);
    }
    EXPECT_TRUE(validate_case(g).empty());
}
