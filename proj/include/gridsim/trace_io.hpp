#pragma once

// Long-format trace CSV: one `time,entity,variable,value` line per sample.

#include "gridsim/trace.hpp"

#include <filesystem>
#include <iosfwd>

namespace gridsim {

void write_trace_csv(const TraceLog& trace, std::ostream& out);
void write_trace_csv(const TraceLog& trace, const std::filesystem::path& path);

/// Throws std::runtime_error with the offending line number on malformed input.
TraceLog read_trace_csv(std::istream& in);
TraceLog read_trace_csv(const std::filesystem::path& path);

}  // namespace gridsim
