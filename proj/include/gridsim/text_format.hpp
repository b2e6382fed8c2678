#pragma once

// Sectioned structured-text reader shared by case and scenario files.
//
//   # comment
//   format_version = 1
//   [section]
//   key = value with spaces          (assignment line)
//   a=1 b=2 kind=pq                  (record line)

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsim::text {

struct Line {
    std::size_t number = 0;
    std::string content;  // comment stripped, trimmed
};

struct Section {
    std::string name;  // empty for the preamble before the first header
    std::size_t header_line = 0;
    std::vector<Line> lines;
};

struct Document {
    std::string source;
    std::vector<Section> sections;

    [[nodiscard]] std::vector<const Section*> find_all(std::string_view name) const;
};

/// Splits text into sections. Throws CaseError on a malformed header.
Document parse_document(std::string_view text, std::string source);

/// Ordered key=value fields of one record line, with typed accessors that
/// report source/line/field context on failure.
class Record {
public:
    Record(std::string source, std::size_t line, std::vector<std::pair<std::string, std::string>> fields);

    [[nodiscard]] bool has(std::string_view key) const;
    [[nodiscard]] std::string get_string(std::string_view key) const;
    [[nodiscard]] std::string get_string(std::string_view key, std::string_view fallback) const;
    [[nodiscard]] double get_double(std::string_view key) const;
    [[nodiscard]] double get_double(std::string_view key, double fallback) const;
    [[nodiscard]] int get_int(std::string_view key) const;
    [[nodiscard]] int get_int(std::string_view key, int fallback) const;
    [[nodiscard]] bool get_bool(std::string_view key, bool fallback) const;

    /// Throws if any field is not in `allowed`.
    void require_known(const std::vector<std::string_view>& allowed) const;

    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

    [[noreturn]] void fail(std::string_view key, std::string_view message) const;

private:
    [[nodiscard]] const std::string* find(std::string_view key) const;

    std::string source_;
    std::size_t line_;
    std::vector<std::pair<std::string, std::string>> fields_;
};

/// `a=1 b=2` tokens. Whitespace around '=' is not allowed inside a record.
Record parse_record(const Line& line, const std::string& source);

/// `key = rest of line`. Collects all assignment lines of a section into one Record.
Record parse_assignments(const Section& section, const std::string& source);

/// Number formatting that round-trips doubles exactly.
std::string format_double(double value);

}  // namespace gridsim::text
