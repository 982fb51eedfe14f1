#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vdamp {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
};

/// Scenario files directly under `dir` (sorted); subdirectories are ignored.
std::vector<std::filesystem::path> bundled_scenarios(const std::filesystem::path& dir);

/// Runs the ten acceptance criteria against the bundled scenarios in
/// `scenario_dir`, writing run artifacts below `work_dir`. One line per
/// criterion goes to `log` as soon as it is decided.
std::vector<CriterionResult> run_acceptance(const std::filesystem::path& scenario_dir,
                                            const std::filesystem::path& work_dir, std::ostream& log);

std::string format_criterion(const CriterionResult& c);

} // namespace vdamp
