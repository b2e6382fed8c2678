#include "gridsim/case_model.hpp"

#include "gridsim/errors.hpp"
#include "gridsim/text_format.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gridsim {

using text::format_double;

std::string_view to_string(BusKind kind) {
    switch (kind) {
    case BusKind::slack:
        return "slack";
    case BusKind::pv:
        return "pv";
    case BusKind::pq:
        return "pq";
    }
    return "pq";
}

std::optional<std::size_t> Case::bus_index(int bus_id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == bus_id) {
            return i;
        }
    }
    return std::nullopt;
}

const Bus& Case::bus(int bus_id) const {
    auto idx = bus_index(bus_id);
    if (!idx) {
        throw CaseError("unknown bus " + std::to_string(bus_id));
    }
    return buses[*idx];
}

double Case::total_load() const {
    double total = 0.0;
    for (const auto& b : buses) {
        total += b.p_load;
    }
    return total;
}

namespace {

BusKind parse_bus_kind(const text::Record& r) {
    const std::string kind = r.get_string("kind");
    if (kind == "slack") {
        return BusKind::slack;
    }
    if (kind == "pv") {
        return BusKind::pv;
    }
    if (kind == "pq") {
        return BusKind::pq;
    }
    r.fail("kind", "expected slack, pv, or pq, got '" + kind + "'");
}

Bus parse_bus(const text::Record& r) {
    r.require_known({"id", "kind", "v_set", "p_load", "q_load", "shunt_b"});
    Bus b;
    b.id = r.get_int("id");
    b.kind = parse_bus_kind(r);
    b.v_set = r.get_double("v_set", 1.0);
    b.p_load = r.get_double("p_load", 0.0);
    b.q_load = r.get_double("q_load", 0.0);
    b.shunt_b = r.get_double("shunt_b", 0.0);
    return b;
}

Branch parse_branch(const text::Record& r, int default_id) {
    r.require_known({"id", "from", "to", "r", "x", "b", "tap", "status"});
    Branch br;
    br.id = r.get_int("id", default_id);
    br.from = r.get_int("from");
    br.to = r.get_int("to");
    br.r = r.get_double("r", 0.0);
    br.x = r.get_double("x");
    br.b_charging = r.get_double("b", 0.0);
    br.tap_ratio = r.get_double("tap", 1.0);
    const std::string status = r.get_string("status", "in");
    if (status != "in" && status != "out") {
        r.fail("status", "expected in or out, got '" + status + "'");
    }
    br.in_service = status == "in";
    return br;
}

SgParams parse_sg(const text::Record& r) {
    r.require_known({"id", "bus", "M", "D", "xd", "xq", "xdp", "tdo", "tch", "rg", "p_set", "e_fd"});
    SgParams g;
    g.id = r.get_int("id");
    g.bus = r.get_int("bus");
    g.M = r.get_double("M");
    g.D = r.get_double("D", 0.0);
    g.x_d = r.get_double("xd");
    g.x_q = r.get_double("xq");
    g.x_d_prime = r.get_double("xdp");
    g.t_do_prime = r.get_double("tdo");
    g.t_ch = r.get_double("tch");
    g.r_g = r.get_double("rg");
    g.p_set = r.get_double("p_set", 0.0);
    g.e_fd = r.get_double("e_fd", 0.0);
    return g;
}

SafetyParams parse_safety(const text::Record& r) {
    SafetyParams s;
    s.enabled = r.get_bool("safety", false);
    s.omega_lo_hz = r.get_double("omega_lo", s.omega_lo_hz);
    s.omega_hi_hz = r.get_double("omega_hi", s.omega_hi_hz);
    s.alpha = r.get_double("alpha", s.alpha);
    s.p_exp = r.get_int("p_exp", s.p_exp);
    return s;
}

GfmParams parse_gfm(const text::Record& r) {
    r.require_known({"id", "bus", "tau", "m_p", "m_q", "k_p", "k_v", "x_c", "p_cap", "q_cap", "i_max", "p_star",
                     "q_star", "v_star", "safety", "omega_lo", "omega_hi", "alpha", "p_exp"});
    GfmParams g;
    g.id = r.get_int("id");
    g.bus = r.get_int("bus");
    g.tau = r.get_double("tau", g.tau);
    g.m_p = r.get_double("m_p");
    g.m_q = r.get_double("m_q", 0.0);
    g.k_p = r.get_double("k_p", g.k_p);
    g.k_v = r.get_double("k_v", g.k_v);
    g.x_c = r.get_double("x_c", g.x_c);
    g.p_cap = r.get_double("p_cap");
    g.q_cap = r.get_double("q_cap", g.p_cap);
    g.i_max = r.get_double("i_max");
    g.p_star = r.get_double("p_star", 0.0);
    g.q_star = r.get_double("q_star", 0.0);
    g.v_star = r.get_double("v_star", 0.0);
    g.safety = parse_safety(r);
    return g;
}

GflParams parse_gfl(const text::Record& r) {
    r.require_known({"id", "bus", "kp_pll", "ki_pll", "tau_c", "m_p", "p_cap", "i_max", "p_star", "q_star"});
    GflParams g;
    g.id = r.get_int("id");
    g.bus = r.get_int("bus");
    g.kp_pll = r.get_double("kp_pll", g.kp_pll);
    g.ki_pll = r.get_double("ki_pll", g.ki_pll);
    g.tau_c = r.get_double("tau_c", g.tau_c);
    g.m_p = r.get_double("m_p");
    g.p_cap = r.get_double("p_cap");
    g.i_max = r.get_double("i_max");
    g.p_star = r.get_double("p_star", 0.0);
    g.q_star = r.get_double("q_star", 0.0);
    return g;
}

const std::set<std::string> kKnownSections = {"", "system", "bus", "branch", "sg", "gfm", "gfl"};

}  // namespace

Case parse_case(std::string_view content, std::string source) {
    const text::Document doc = text::parse_document(content, source);
    Case c;

    for (const auto& section : doc.sections) {
        if (!kKnownSections.contains(section.name)) {
            throw CaseError(source + ":" + std::to_string(section.header_line) + ": unknown section [" +
                            section.name + "]");
        }
    }

    const auto preamble = text::parse_assignments(doc.sections.front(), source);
    preamble.require_known({"format_version"});
    c.format_version = preamble.get_int("format_version", -1);
    if (c.format_version == -1) {
        throw CaseError(source + ": missing 'format_version' before the first section");
    }
    if (c.format_version != kCaseFormatVersion) {
        throw CaseError(source + ": unsupported format_version " + std::to_string(c.format_version));
    }

    const auto systems = doc.find_all("system");
    if (systems.size() != 1) {
        throw CaseError(source + ": expected exactly one [system] section");
    }
    const auto sys = text::parse_assignments(*systems.front(), source);
    sys.require_known({"name", "base_mva", "f_nominal"});
    c.name = sys.get_string("name", "");
    c.base_mva = sys.get_double("base_mva", 100.0);
    c.f_nominal = sys.get_double("f_nominal", 60.0);

    for (const auto* s : doc.find_all("bus")) {
        for (const auto& line : s->lines) {
            c.buses.push_back(parse_bus(text::parse_record(line, source)));
        }
    }
    for (const auto* s : doc.find_all("branch")) {
        for (const auto& line : s->lines) {
            c.branches.push_back(
                parse_branch(text::parse_record(line, source), static_cast<int>(c.branches.size()) + 1));
        }
    }
    for (const auto* s : doc.find_all("sg")) {
        for (const auto& line : s->lines) {
            c.sgs.push_back(parse_sg(text::parse_record(line, source)));
        }
    }
    for (const auto* s : doc.find_all("gfm")) {
        for (const auto& line : s->lines) {
            c.gfms.push_back(parse_gfm(text::parse_record(line, source)));
        }
    }
    for (const auto* s : doc.find_all("gfl")) {
        for (const auto& line : s->lines) {
            c.gfls.push_back(parse_gfl(text::parse_record(line, source)));
        }
    }
    return c;
}

Case load_case(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CaseError("cannot open case file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    Case c = parse_case(buf.str(), path.string());
    const auto violations = validate_case(c);
    if (!violations.empty()) {
        std::ostringstream os;
        os << path.string() << ": " << violations.size() << " invariant violation(s):";
        for (const auto& v : violations) {
            os << "\n  " << v;
        }
        throw CaseError(os.str());
    }
    return c;
}

std::string serialize_case(const Case& c) {
    std::ostringstream os;
    os << "format_version = " << c.format_version << "\n\n[system]\n";
    if (!c.name.empty()) {
        os << "name = " << c.name << "\n";
    }
    os << "base_mva = " << format_double(c.base_mva) << "\n";
    os << "f_nominal = " << format_double(c.f_nominal) << "\n";

    os << "\n[bus]\n";
    for (const auto& b : c.buses) {
        os << "id=" << b.id << " kind=" << to_string(b.kind) << " v_set=" << format_double(b.v_set)
           << " p_load=" << format_double(b.p_load) << " q_load=" << format_double(b.q_load)
           << " shunt_b=" << format_double(b.shunt_b) << "\n";
    }
    os << "\n[branch]\n";
    for (const auto& br : c.branches) {
        os << "id=" << br.id << " from=" << br.from << " to=" << br.to << " r=" << format_double(br.r)
           << " x=" << format_double(br.x) << " b=" << format_double(br.b_charging)
           << " tap=" << format_double(br.tap_ratio) << " status=" << (br.in_service ? "in" : "out") << "\n";
    }
    os << "\n[sg]\n";
    for (const auto& g : c.sgs) {
        os << "id=" << g.id << " bus=" << g.bus << " M=" << format_double(g.M) << " D=" << format_double(g.D)
           << " xd=" << format_double(g.x_d) << " xq=" << format_double(g.x_q)
           << " xdp=" << format_double(g.x_d_prime) << " tdo=" << format_double(g.t_do_prime)
           << " tch=" << format_double(g.t_ch) << " rg=" << format_double(g.r_g)
           << " p_set=" << format_double(g.p_set) << " e_fd=" << format_double(g.e_fd) << "\n";
    }
    if (!c.gfms.empty()) {
        os << "\n[gfm]\n";
    }
    for (const auto& g : c.gfms) {
        os << "id=" << g.id << " bus=" << g.bus << " tau=" << format_double(g.tau)
           << " m_p=" << format_double(g.m_p) << " m_q=" << format_double(g.m_q)
           << " k_p=" << format_double(g.k_p) << " k_v=" << format_double(g.k_v)
           << " x_c=" << format_double(g.x_c) << " p_cap=" << format_double(g.p_cap)
           << " q_cap=" << format_double(g.q_cap) << " i_max=" << format_double(g.i_max)
           << " p_star=" << format_double(g.p_star) << " q_star=" << format_double(g.q_star)
           << " v_star=" << format_double(g.v_star) << " safety=" << (g.safety.enabled ? "on" : "off")
           << " omega_lo=" << format_double(g.safety.omega_lo_hz)
           << " omega_hi=" << format_double(g.safety.omega_hi_hz)
           << " alpha=" << format_double(g.safety.alpha) << " p_exp=" << g.safety.p_exp << "\n";
    }
    if (!c.gfls.empty()) {
        os << "\n[gfl]\n";
    }
    for (const auto& g : c.gfls) {
        os << "id=" << g.id << " bus=" << g.bus << " kp_pll=" << format_double(g.kp_pll)
           << " ki_pll=" << format_double(g.ki_pll) << " tau_c=" << format_double(g.tau_c)
           << " m_p=" << format_double(g.m_p) << " p_cap=" << format_double(g.p_cap)
           << " i_max=" << format_double(g.i_max) << " p_star=" << format_double(g.p_star)
           << " q_star=" << format_double(g.q_star) << "\n";
    }
    return os.str();
}

std::vector<std::string> validate_case(const Case& c) {
    std::vector<std::string> out;
    auto add = [&out](const std::string& entity, int id, const std::string& rule) {
        out.push_back(entity + " " + std::to_string(id) + ": " + rule);
    };

    if (!(c.base_mva > 0.0)) {
        out.emplace_back("system: base_mva > 0 required");
    }
    if (!(c.f_nominal > 0.0)) {
        out.emplace_back("system: f_nominal > 0 required");
    }

    std::set<int> bus_ids;
    int slack_count = 0;
    for (const auto& b : c.buses) {
        if (b.id < 1) {
            add("bus", b.id, "id >= 1 required");
        }
        if (!bus_ids.insert(b.id).second) {
            add("bus", b.id, "duplicate id");
        }
        if (b.kind == BusKind::slack) {
            ++slack_count;
        }
        if (b.kind != BusKind::pq && !(b.v_set > 0.0)) {
            add("bus", b.id, "v_set > 0 required");
        }
    }
    if (c.buses.empty()) {
        out.emplace_back("case: at least one bus required");
    }
    if (slack_count != 1) {
        out.emplace_back("case: exactly one slack bus required (found " + std::to_string(slack_count) + ")");
    }

    std::set<int> branch_ids;
    for (const auto& br : c.branches) {
        if (!branch_ids.insert(br.id).second) {
            add("branch", br.id, "duplicate id");
        }
        if (br.x == 0.0) {
            add("branch", br.id, "x != 0 required");
        }
        if (br.from == br.to) {
            add("branch", br.id, "from != to required");
        }
        if (!bus_ids.contains(br.from)) {
            add("branch", br.id, "dangling reference to bus " + std::to_string(br.from));
        }
        if (!bus_ids.contains(br.to)) {
            add("branch", br.id, "dangling reference to bus " + std::to_string(br.to));
        }
        if (!(br.tap_ratio > 0.0)) {
            add("branch", br.id, "tap_ratio > 0 required");
        }
    }

    if (c.sgs.empty()) {
        out.emplace_back("case: at least one sg required");
    }
    std::set<int> sg_ids;
    std::set<int> sg_buses;
    for (const auto& g : c.sgs) {
        if (!sg_ids.insert(g.id).second) {
            add("sg", g.id, "duplicate id");
        }
        if (!bus_ids.contains(g.bus)) {
            add("sg", g.id, "dangling reference to bus " + std::to_string(g.bus));
        } else if (c.bus(g.bus).kind == BusKind::pq) {
            add("sg", g.id, "must sit on a slack or pv bus");
        }
        if (!sg_buses.insert(g.bus).second) {
            add("sg", g.id, "at most one sg per bus");
        }
        if (!(g.M > 0.0)) {
            add("sg", g.id, "M > 0 required");
        }
        if (g.D < 0.0) {
            add("sg", g.id, "D >= 0 required");
        }
        if (!(g.t_do_prime > 0.0)) {
            add("sg", g.id, "t_do_prime > 0 required");
        }
        if (!(g.t_ch > 0.0)) {
            add("sg", g.id, "t_ch > 0 required");
        }
        if (!(g.r_g > 0.0)) {
            add("sg", g.id, "r_g > 0 required");
        }
        if (!(g.x_d_prime > 0.0)) {
            add("sg", g.id, "x_d_prime > 0 required");
        }
        if (!(g.x_d >= g.x_d_prime)) {
            add("sg", g.id, "x_d >= x_d_prime required");
        }
        if (!(g.x_q > 0.0)) {
            add("sg", g.id, "x_q > 0 required");
        }
    }
    for (const auto& b : c.buses) {
        if (b.kind != BusKind::pq && !sg_buses.contains(b.id)) {
            add("bus", b.id, "slack/pv bus requires an sg");
        }
    }

    std::set<int> storage_buses;
    std::set<int> gfm_ids;
    for (const auto& g : c.gfms) {
        if (!gfm_ids.insert(g.id).second) {
            add("gfm", g.id, "duplicate id");
        }
        if (!bus_ids.contains(g.bus)) {
            add("gfm", g.id, "dangling reference to bus " + std::to_string(g.bus));
        }
        if (!storage_buses.insert(g.bus).second) {
            add("gfm", g.id, "at most one storage unit per bus");
        }
        if (!(g.tau > 0.0)) {
            add("gfm", g.id, "tau > 0 required");
        }
        if (!(g.m_p > 0.0)) {
            add("gfm", g.id, "m_p > 0 required");
        }
        if (g.m_q < 0.0) {
            add("gfm", g.id, "m_q >= 0 required");
        }
        if (!(g.x_c > 0.0)) {
            add("gfm", g.id, "x_c > 0 required");
        }
        if (g.p_cap < 0.0) {
            add("gfm", g.id, "p_cap >= 0 required");
        }
        if (g.q_cap < 0.0) {
            add("gfm", g.id, "q_cap >= 0 required");
        }
        if (!(g.i_max > 0.0)) {
            add("gfm", g.id, "i_max > 0 required");
        }
        const auto& s = g.safety;
        if (!(s.omega_lo_hz < c.f_nominal && c.f_nominal < s.omega_hi_hz)) {
            add("gfm", g.id, "omega_lo < f_nominal < omega_hi required");
        }
        if (!(s.alpha > 0.0)) {
            add("gfm", g.id, "alpha > 0 required");
        }
        if (s.p_exp < 1) {
            add("gfm", g.id, "p_exp >= 1 required");
        }
        if (s.p_exp % 2 == 0) {
            add("gfm", g.id, "p_exp must be odd");
        }
    }
    std::set<int> gfl_ids;
    for (const auto& g : c.gfls) {
        if (!gfl_ids.insert(g.id).second) {
            add("gfl", g.id, "duplicate id");
        }
        if (!bus_ids.contains(g.bus)) {
            add("gfl", g.id, "dangling reference to bus " + std::to_string(g.bus));
        }
        if (!storage_buses.insert(g.bus).second) {
            add("gfl", g.id, "at most one storage unit per bus");
        }
        if (!(g.tau_c > 0.0)) {
            add("gfl", g.id, "tau_c > 0 required");
        }
        if (!(g.m_p > 0.0)) {
            add("gfl", g.id, "m_p > 0 required");
        }
        if (g.p_cap < 0.0) {
            add("gfl", g.id, "p_cap >= 0 required");
        }
        if (!(g.i_max > 0.0)) {
            add("gfl", g.id, "i_max > 0 required");
        }
        if (!(g.kp_pll > 0.0 && g.ki_pll > 0.0)) {
            add("gfl", g.id, "PLL gains > 0 required");
        }
    }
    return out;
}

double storage_capacity_fraction(const Case& c) {
    const double load = c.total_load();
    if (!(load > 0.0)) {
        throw CaseError("storage capacity fraction undefined: total load is zero");
    }
    double cap = 0.0;
    for (const auto& g : c.gfms) {
        cap += g.p_cap;
    }
    for (const auto& g : c.gfls) {
        cap += g.p_cap;
    }
    return cap / load;
}

Case with_storage_fraction(const Case& c, double target) {
    if (target < 0.0) {
        throw CaseError("storage fraction must be >= 0");
    }
    Case out = c;
    if (target == 0.0) {
        out.gfms.clear();
        out.gfls.clear();
        return out;
    }
    const double current = storage_capacity_fraction(c);
    if (!(current > 0.0)) {
        throw CaseError("cannot rescale storage: case has no storage capacity");
    }
    const double k = target / current;
    for (auto& g : out.gfms) {
        g.p_cap *= k;
        g.q_cap *= k;
        g.i_max *= k;
        g.x_c /= k;
        g.m_p /= k;
        g.m_q /= k;
    }
    for (auto& g : out.gfls) {
        g.p_cap *= k;
        g.i_max *= k;
        g.m_p /= k;
    }
    return out;
}

Case with_gfl_storage(const Case& c, double kp_pll, double ki_pll, double tau_c) {
    Case out = c;
    out.gfms.clear();
    for (const auto& g : c.gfms) {
        GflParams f;
        f.id = g.id;
        f.bus = g.bus;
        f.kp_pll = kp_pll;
        f.ki_pll = ki_pll;
        f.tau_c = tau_c;
        f.m_p = g.m_p;
        f.p_cap = g.p_cap;
        f.i_max = g.i_max;
        f.p_star = g.p_star;
        f.q_star = g.q_star;
        out.gfls.push_back(f);
    }
    return out;
}

}  // namespace gridsim
