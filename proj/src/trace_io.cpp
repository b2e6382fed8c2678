#include "gridsim/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace gridsim {

namespace {

void append_double(std::string& buf, double v) {
    char tmp[32];
    const auto res = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf.append(tmp, res.ptr);
}

double parse_number(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("trace csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

void write_trace_csv(const TraceLog& trace, std::ostream& out) {
    std::string buf = "time,entity,variable,value\n";
    const auto& channels = trace.channels();
    for (std::size_t r = 0; r < trace.rows(); ++r) {
        for (const auto& c : channels) {
            append_double(buf, trace.time()[r]);
            buf += ',';
            buf += c.entity;
            buf += ',';
            buf += c.variable;
            buf += ',';
            append_double(buf, c.values[r]);
            buf += '\n';
        }
        if (buf.size() > (1U << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_trace_csv(const TraceLog& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_trace_csv(trace, out);
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

TraceLog read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "time,entity,variable,value") {
        throw std::runtime_error("trace csv: expected header 'time,entity,variable,value'");
    }
    std::vector<double> time;
    std::vector<Channel> channels;
    std::map<std::pair<std::string, std::string>, std::size_t, std::less<>> index;
    std::size_t number = 1;
    std::size_t cursor = 0;  // channel expected next within the current row
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        std::string_view rest(line);
        std::string_view fields[4];
        for (int i = 0; i < 3; ++i) {
            const auto comma = rest.find(',');
            if (comma == std::string_view::npos) {
                throw std::runtime_error("trace csv line " + std::to_string(number) + ": expected 4 fields");
            }
            fields[i] = rest.substr(0, comma);
            rest.remove_prefix(comma + 1);
        }
        fields[3] = rest;
        const double t = parse_number(fields[0], number);
        const double v = parse_number(fields[3], number);
        const bool new_row = time.empty() || t != time.back();
        if (new_row) {
            if (!time.empty()) {
                if (t < time.back()) {
                    throw std::runtime_error("trace csv line " + std::to_string(number) + ": time decreases");
                }
                if (cursor != channels.size()) {
                    throw std::runtime_error("trace csv line " + std::to_string(number) +
                                             ": previous time row is incomplete");
                }
            }
            time.push_back(t);
            cursor = 0;
        }
        auto key = std::make_pair(std::string(fields[1]), std::string(fields[2]));
        auto it = index.find(key);
        if (time.size() == 1) {
            if (it != index.end()) {
                throw std::runtime_error("trace csv line " + std::to_string(number) + ": duplicate channel");
            }
            index.emplace(key, channels.size());
            channels.push_back(Channel{key.first, key.second, {v}});
            ++cursor;
            continue;
        }
        if (it == index.end() || it->second != cursor) {
            throw std::runtime_error("trace csv line " + std::to_string(number) + ": channel " + key.first + "/" +
                                     key.second + " out of order");
        }
        channels[cursor].values.push_back(v);
        ++cursor;
    }
    if (!time.empty() && cursor != channels.size()) {
        throw std::runtime_error("trace csv: final time row is incomplete");
    }
    TraceLog log;
    log.set_raw(std::move(time), std::move(channels));
    return log;
}

TraceLog read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_trace_csv(in);
}

}  // namespace gridsim
