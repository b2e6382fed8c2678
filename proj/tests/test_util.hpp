#pragma once

#include "gridsim/case_model.hpp"
#include "gridsim/scenario.hpp"

#include <filesystem>
#include <string>

namespace gridsim::testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(GRIDSIM_DATA_DIR) / name; }

inline Case load(const std::string& name) { return load_case(data_path(name)); }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("gridsim_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace gridsim::testing
