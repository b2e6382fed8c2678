#pragma once

// Time-indexed record of named channels. Entities follow "kind:id"
// ("bus:26", "gfm:3", "sg:9", "system").

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsim {

struct Channel {
    std::string entity;
    std::string variable;
    std::vector<double> values;
};

class TraceLog {
public:
    /// Returns the channel index. Channels must be added before the first row.
    std::size_t add_channel(std::string entity, std::string variable);

    /// Appends one time row; `values` is indexed like the channels.
    void append_row(double time, const std::vector<double>& values);

    [[nodiscard]] const std::vector<double>& time() const { return time_; }
    [[nodiscard]] const std::vector<Channel>& channels() const { return channels_; }
    [[nodiscard]] std::size_t rows() const { return time_.size(); }

    [[nodiscard]] const Channel* find(std::string_view entity, std::string_view variable) const;
    /// Throws std::out_of_range when absent.
    [[nodiscard]] const std::vector<double>& values(std::string_view entity, std::string_view variable) const;

    /// Entities of a kind ("bus", "gfm", ...) in channel order, as numeric ids.
    [[nodiscard]] std::vector<int> entity_ids(std::string_view kind) const;

    /// Builds a trace from long-format rows; used by the CSV reader.
    void set_raw(std::vector<double> time, std::vector<Channel> channels);

private:
    std::vector<double> time_;
    std::vector<Channel> channels_;
};

std::string entity_name(std::string_view kind, int id);

}  // namespace gridsim
