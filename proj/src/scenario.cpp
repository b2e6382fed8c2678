#include "gridsim/scenario.hpp"

#include "gridsim/errors.hpp"
#include "gridsim/text_format.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gridsim {

namespace {

EventKind parse_event_kind(const text::Record& r) {
    const auto k = r.get_string("kind");
    if (k == "sg_trip") {
        return EventKind::sg_trip;
    }
    if (k == "load_step") {
        return EventKind::load_step;
    }
    if (k == "branch_trip") {
        return EventKind::branch_trip;
    }
    r.fail("kind", "expected sg_trip, load_step, or branch_trip");
}

Event parse_event(const text::Record& r) {
    Event e;
    e.time = r.get_double("time");
    e.kind = parse_event_kind(r);
    switch (e.kind) {
    case EventKind::sg_trip:
        r.require_known({"time", "kind", "id"});
        e.target = r.get_int("id");
        break;
    case EventKind::branch_trip:
        r.require_known({"time", "kind", "id"});
        e.target = r.get_int("id");
        break;
    case EventKind::load_step:
        r.require_known({"time", "kind", "bus", "dp", "dq"});
        e.target = r.get_int("bus");
        e.dp = r.get_double("dp", 0.0);
        e.dq = r.get_double("dq", 0.0);
        break;
    }
    if (e.time < 0.0) {
        r.fail("time", "must be >= 0");
    }
    return e;
}

std::vector<double> parse_value_list(const text::Record& r, std::string_view key) {
    std::istringstream is(r.get_string(key));
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) {
                throw std::invalid_argument(tok);
            }
        } catch (const std::exception&) {
            r.fail(key, "'" + tok + "' is not a number");
        }
    }
    if (out.empty()) {
        r.fail(key, "at least one value required");
    }
    return out;
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
    return axis == SweepAxis::capacity ? "capacity" : "droop";
}

SweepAxis parse_sweep_axis(std::string_view name) {
    if (name == "capacity") {
        return SweepAxis::capacity;
    }
    if (name == "droop") {
        return SweepAxis::droop;
    }
    throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

double Scenario::nadir_window_start() const {
    if (horizon_start) {
        return *horizon_start;
    }
    double t = 0.0;
    if (!events.empty()) {
        t = std::min_element(events.begin(), events.end(), [](const Event& a, const Event& b) {
                return a.time < b.time;
            })->time;
    }
    return t;
}

Scenario parse_scenario(std::string_view text_in, std::string source) {
    const auto doc = text::parse_document(text_in, source);
    Scenario s;
    const auto preamble = text::parse_assignments(doc.sections.front(), source);
    preamble.require_known({"format_version"});
    if (preamble.get_int("format_version", -1) != 1) {
        throw CaseError(source + ": scenario needs format_version = 1");
    }
    for (const auto& sec : doc.sections) {
        if (!sec.name.empty() && sec.name != "config" && sec.name != "options" && sec.name != "event" &&
            sec.name != "sweep") {
            throw CaseError(source + ":" + std::to_string(sec.header_line) + ": unknown section [" + sec.name + "]");
        }
    }

    bool t_end_given = false;
    for (const auto* sec : doc.find_all("config")) {
        const auto r = text::parse_assignments(*sec, source);
        r.require_known({"dt", "t_end", "log_decimation", "network_tol", "network_max_iter", "freq_filter_tf",
                         "divergence_limit", "horizon_start"});
        auto& c = s.config;
        c.dt = r.get_double("dt", c.dt);
        t_end_given = t_end_given || r.has("t_end");
        c.t_end = r.get_double("t_end", c.t_end);
        c.log_decimation = r.get_int("log_decimation", c.log_decimation);
        c.network_tol = r.get_double("network_tol", c.network_tol);
        c.network_max_iter = r.get_int("network_max_iter", c.network_max_iter);
        c.freq_filter_tf = r.get_double("freq_filter_tf", c.freq_filter_tf);
        c.divergence_limit = r.get_double("divergence_limit", c.divergence_limit);
        if (r.has("horizon_start")) {
            s.horizon_start = r.get_double("horizon_start");
        }
    }
    for (const auto* sec : doc.find_all("options")) {
        const auto r = text::parse_assignments(*sec, source);
        r.require_known({"safety", "storage", "capacity_fraction", "m_p"});
        if (r.has("safety")) {
            const auto v = r.get_string("safety");
            if (v == "on") {
                s.options.safety = SafetyOverride::on;
            } else if (v == "off") {
                s.options.safety = SafetyOverride::off;
            } else if (v == "case") {
                s.options.safety = SafetyOverride::as_case;
            } else {
                r.fail("safety", "expected on, off, or case");
            }
        }
        if (r.has("storage")) {
            const auto v = r.get_string("storage");
            if (v == "gfm") {
                s.options.storage = StorageFamily::gfm;
            } else if (v == "gfl") {
                s.options.storage = StorageFamily::gfl;
            } else if (v == "none") {
                s.options.storage = StorageFamily::none;
            } else if (v == "case") {
                s.options.storage = StorageFamily::as_case;
            } else {
                r.fail("storage", "expected gfm, gfl, none, or case");
            }
        }
        if (r.has("capacity_fraction")) {
            s.options.capacity_fraction = r.get_double("capacity_fraction");
            if (*s.options.capacity_fraction < 0.0) {
                r.fail("capacity_fraction", "must be >= 0");
            }
        }
        if (r.has("m_p")) {
            s.options.m_p = r.get_double("m_p");
            if (!(*s.options.m_p > 0.0)) {
                r.fail("m_p", "m_p > 0 required");
            }
        }
    }
    for (const auto* sec : doc.find_all("event")) {
        for (const auto& line : sec->lines) {
            s.events.push_back(parse_event(text::parse_record(line, source)));
        }
    }
    const auto sweeps = doc.find_all("sweep");
    if (sweeps.size() > 1) {
        throw CaseError(source + ": at most one [sweep] section allowed");
    }
    if (!sweeps.empty()) {
        const auto r = text::parse_assignments(*sweeps.front(), source);
        r.require_known({"axis", "values"});
        SweepSpec sw;
        try {
            sw.axis = parse_sweep_axis(r.get_string("axis"));
        } catch (const std::invalid_argument&) {
            r.fail("axis", "expected capacity or droop");
        }
        sw.values = parse_value_list(r, "values");
        s.sweep = sw;
    }

    if (!t_end_given) {
        s.config.t_end = s.nadir_window_start() + kDefaultPostEventHorizon;
    }
    if (const auto problems = validate_config(s.config); !problems.empty()) {
        throw CaseError(source + ": " + problems.front());
    }
    for (const auto& e : s.events) {
        if (e.time > s.config.t_end) {
            throw CaseError(source + ": event at t=" + text::format_double(e.time) + " s is after t_end");
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CaseError("cannot open scenario file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s) {
    using text::format_double;
    std::ostringstream os;
    const auto& c = s.config;
    os << "format_version = 1\n\n[config]\n";
    os << "dt = " << format_double(c.dt) << "\n";
    os << "t_end = " << format_double(c.t_end) << "\n";
    os << "log_decimation = " << c.log_decimation << "\n";
    os << "network_tol = " << format_double(c.network_tol) << "\n";
    os << "network_max_iter = " << c.network_max_iter << "\n";
    os << "freq_filter_tf = " << format_double(c.freq_filter_tf) << "\n";
    os << "divergence_limit = " << format_double(c.divergence_limit) << "\n";
    if (s.horizon_start) {
        os << "horizon_start = " << format_double(*s.horizon_start) << "\n";
    }
    os << "\n[options]\n";
    constexpr const char* safety[] = {"case", "on", "off"};
    constexpr const char* storage[] = {"case", "gfm", "gfl", "none"};
    os << "safety = " << safety[static_cast<int>(s.options.safety)] << "\n";
    os << "storage = " << storage[static_cast<int>(s.options.storage)] << "\n";
    if (s.options.capacity_fraction) {
        os << "capacity_fraction = " << format_double(*s.options.capacity_fraction) << "\n";
    }
    if (s.options.m_p) {
        os << "m_p = " << format_double(*s.options.m_p) << "\n";
    }
    if (!s.events.empty()) {
        os << "\n[event]\n";
        for (const auto& e : s.events) {
            os << "time=" << format_double(e.time) << " kind=" << to_string(e.kind);
            if (e.kind == EventKind::load_step) {
                os << " bus=" << e.target << " dp=" << format_double(e.dp) << " dq=" << format_double(e.dq);
            } else {
                os << " id=" << e.target;
            }
            os << "\n";
        }
    }
    if (s.sweep) {
        os << "\n[sweep]\naxis = " << to_string(s.sweep->axis) << "\nvalues =";
        for (double v : s.sweep->values) {
            os << " " << format_double(v);
        }
        os << "\n";
    }
    return os.str();
}

Case apply_options(const Case& c, const ScenarioOptions& opts) {
    Case out = c;
    switch (opts.storage) {
    case StorageFamily::as_case:
    case StorageFamily::gfm:
        break;
    case StorageFamily::gfl:
        out = with_gfl_storage(out);
        break;
    case StorageFamily::none:
        out.gfms.clear();
        out.gfls.clear();
        break;
    }
    if (opts.capacity_fraction) {
        out = with_storage_fraction(out, *opts.capacity_fraction);
    }
    if (opts.m_p) {
        for (auto& g : out.gfms) {
            g.m_p = *opts.m_p;
        }
        for (auto& g : out.gfls) {
            g.m_p = *opts.m_p;
        }
    }
    if (opts.safety != SafetyOverride::as_case) {
        for (auto& g : out.gfms) {
            g.safety.enabled = opts.safety == SafetyOverride::on;
        }
    }
    return out;
}

}  // namespace gridsim
