#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cavity/model.hpp"

namespace cavity {

// Scripted experiment recipes.  Each returns a summary JSON with a top-level
// "pass" flag and per-check details; when out_dir is nonempty the recipe also
// writes its resolved config, CSV traces and summary there.
nlohmann::json run_experiment(const std::string& name, uint64_t seed, const std::string& out_dir,
                              int threads);
std::vector<std::string> experiment_names();

// The model zoo used by the condition matrix and operator-invariant checks.
struct ZooEntry {
    std::string name;
    Model model;
    double d;  // a representative degree for simulation checks
};
std::vector<ZooEntry> model_zoo();

}  // namespace cavity
