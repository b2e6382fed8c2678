#include "gridsim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace gridsim {

std::string entity_name(std::string_view kind, int id) { return std::string(kind) + ":" + std::to_string(id); }

std::size_t TraceLog::add_channel(std::string entity, std::string variable) {
    if (!time_.empty()) {
        throw std::logic_error("trace channels must be declared before the first row");
    }
    channels_.push_back(Channel{std::move(entity), std::move(variable), {}});
    return channels_.size() - 1;
}

void TraceLog::append_row(double time, const std::vector<double>& values) {
    if (values.size() != channels_.size()) {
        throw std::logic_error("trace row width does not match channel count");
    }
    if (!time_.empty() && !(time > time_.back())) {
        throw std::logic_error("trace time must increase strictly");
    }
    time_.push_back(time);
    for (std::size_t i = 0; i < values.size(); ++i) {
        channels_[i].values.push_back(values[i]);
    }
}

const Channel* TraceLog::find(std::string_view entity, std::string_view variable) const {
    for (const auto& c : channels_) {
        if (c.entity == entity && c.variable == variable) {
            return &c;
        }
    }
    return nullptr;
}

const std::vector<double>& TraceLog::values(std::string_view entity, std::string_view variable) const {
    const auto* c = find(entity, variable);
    if (c == nullptr) {
        throw std::out_of_range("trace has no channel " + std::string(entity) + "/" + std::string(variable));
    }
    return c->values;
}

std::vector<int> TraceLog::entity_ids(std::string_view kind) const {
    std::vector<int> ids;
    const std::string prefix = std::string(kind) + ":";
    for (const auto& c : channels_) {
        if (c.entity.rfind(prefix, 0) != 0) {
            continue;
        }
        int id = 0;
        const char* first = c.entity.data() + prefix.size();
        const char* last = c.entity.data() + c.entity.size();
        if (std::from_chars(first, last, id).ec != std::errc{}) {
            continue;
        }
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
            ids.push_back(id);
        }
    }
    return ids;
}

void TraceLog::set_raw(std::vector<double> time, std::vector<Channel> channels) {
    for (const auto& c : channels) {
        if (c.values.size() != time.size()) {
            throw std::invalid_argument("channel " + c.entity + "/" + c.variable + " length mismatch");
        }
    }
    time_ = std::move(time);
    channels_ = std::move(channels);
}

}  // namespace gridsim
