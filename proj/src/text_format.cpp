#include "gridsim/text_format.hpp"

#include "gridsim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gridsim::text {

namespace {

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::string context(const std::string& source, std::size_t line) {
    std::ostringstream os;
    os << source << ":" << line;
    return os.str();
}

bool valid_key(std::string_view key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

}  // namespace

std::vector<const Section*> Document::find_all(std::string_view name) const {
    std::vector<const Section*> out;
    for (const auto& s : sections) {
        if (s.name == name) {
            out.push_back(&s);
        }
    }
    return out;
}

Document parse_document(std::string_view text, std::string source) {
    Document doc;
    doc.source = std::move(source);
    doc.sections.push_back(Section{});

    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        ++number;
        std::string_view raw = text.substr(pos, eol - pos);
        pos = eol + 1;

        if (auto hash = raw.find('#'); hash != std::string_view::npos) {
            raw = raw.substr(0, hash);
        }
        std::string content = trim(raw);
        if (content.empty()) {
            if (eol == text.size()) {
                break;
            }
            continue;
        }
        if (content.front() == '[') {
            if (content.back() != ']') {
                throw CaseError(context(doc.source, number) + ": unterminated section header '" + content + "'");
            }
            std::string name = trim(std::string_view(content).substr(1, content.size() - 2));
            if (!valid_key(name)) {
                throw CaseError(context(doc.source, number) + ": invalid section name '" + name + "'");
            }
            doc.sections.push_back(Section{name, number, {}});
        } else {
            doc.sections.back().lines.push_back(Line{number, std::move(content)});
        }
        if (eol == text.size()) {
            break;
        }
    }
    return doc;
}

Record::Record(std::string source, std::size_t line, std::vector<std::pair<std::string, std::string>> fields)
    : source_(std::move(source)), line_(line), fields_(std::move(fields)) {}

const std::string* Record::find(std::string_view key) const {
    for (const auto& [k, v] : fields_) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

void Record::fail(std::string_view key, std::string_view message) const {
    std::ostringstream os;
    os << context(source_, line_) << ": field '" << key << "': " << message;
    throw CaseError(os.str());
}

bool Record::has(std::string_view key) const { return find(key) != nullptr; }

std::string Record::get_string(std::string_view key) const {
    const auto* v = find(key);
    if (v == nullptr) {
        fail(key, "missing required field");
    }
    return *v;
}

std::string Record::get_string(std::string_view key, std::string_view fallback) const {
    const auto* v = find(key);
    return v == nullptr ? std::string(fallback) : *v;
}

double Record::get_double(std::string_view key) const {
    const std::string v = get_string(key);
    double out = 0.0;
    const char* first = v.data();
    const char* last = v.data() + v.size();
    if (!v.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last || !std::isfinite(out)) {
        fail(key, "expected a finite decimal number, got '" + v + "'");
    }
    return out;
}

double Record::get_double(std::string_view key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Record::get_int(std::string_view key) const {
    const std::string v = get_string(key);
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        fail(key, "expected an integer, got '" + v + "'");
    }
    return out;
}

int Record::get_int(std::string_view key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Record::get_bool(std::string_view key, bool fallback) const {
    const auto* v = find(key);
    if (v == nullptr) {
        return fallback;
    }
    if (*v == "on" || *v == "true" || *v == "1" || *v == "yes") {
        return true;
    }
    if (*v == "off" || *v == "false" || *v == "0" || *v == "no") {
        return false;
    }
    fail(key, "expected on/off, got '" + *v + "'");
}

void Record::require_known(const std::vector<std::string_view>& allowed) const {
    for (const auto& [k, v] : fields_) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            fail(k, "unknown field");
        }
    }
}

Record parse_record(const Line& line, const std::string& source) {
    std::vector<std::pair<std::string, std::string>> fields;
    std::istringstream is(line.content);
    std::string token;
    while (is >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == token.size()) {
            throw CaseError(context(source, line.number) + ": expected key=value, got '" + token + "'");
        }
        std::string key = token.substr(0, eq);
        if (!valid_key(key)) {
            throw CaseError(context(source, line.number) + ": invalid field name '" + key + "'");
        }
        for (const auto& f : fields) {
            if (f.first == key) {
                throw CaseError(context(source, line.number) + ": duplicate field '" + key + "'");
            }
        }
        fields.emplace_back(std::move(key), token.substr(eq + 1));
    }
    return Record(source, line.number, std::move(fields));
}

Record parse_assignments(const Section& section, const std::string& source) {
    std::vector<std::pair<std::string, std::string>> fields;
    for (const auto& line : section.lines) {
        auto eq = line.content.find('=');
        if (eq == std::string::npos) {
            throw CaseError(context(source, line.number) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(line.content).substr(0, eq));
        std::string value = trim(std::string_view(line.content).substr(eq + 1));
        if (!valid_key(key) || value.empty()) {
            throw CaseError(context(source, line.number) + ": malformed assignment '" + line.content + "'");
        }
        for (const auto& f : fields) {
            if (f.first == key) {
                throw CaseError(context(source, line.number) + ": duplicate key '" + key + "'");
            }
        }
        fields.emplace_back(std::move(key), std::move(value));
    }
    return Record(source, section.header_line, std::move(fields));
}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        return buf;
    }
    return std::string(buf, ptr);
}

}  // namespace gridsim::text
