#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace regulus {

struct CheckReport {
    std::string name;
    std::string anchor;
    long trials = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::uint64_t seed = 0;
    double wall_clock = 0.0;
    /// Component residuals for checks made of several parts; their max_residual is then
    /// the largest residual/tolerance ratio and the tolerance is 1.
    std::string note;
};

struct CheckInfo {
    std::string name;
    std::string anchor;
    long default_trials;
};

const std::vector<CheckInfo>& check_registry();

/// Empty names runs the whole registry. trials overrides each check's default sample
/// count; checks built on whole orbits cap it.
std::vector<CheckReport> run_suite(const std::vector<std::string>& names, std::uint64_t seed,
                                   std::optional<long> trials = std::nullopt, bool parallel = true);

/// One JSON object per line. wall_clock is omitted when timing is false.
std::string report_json(const CheckReport& r, bool timing = true);
std::string summary_table(const std::vector<CheckReport>& reports);

}  // namespace regulus
