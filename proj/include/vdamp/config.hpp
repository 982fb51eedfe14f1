#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vdamp/damping.hpp"
#include "vdamp/potential.hpp"

namespace vdamp {

/// One simulation scenario, loaded from a single JSON document.
struct ScenarioConfig {
    std::string id;
    PotentialSpec potential = PotentialSpec::zero(1);
    DampingSpec damping = DampingSpec::over_t(4.0, 1.0);
    Vector x0;
    Vector v0;
    double t0 = 1.0;
    double T = 1e4;
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    /// Empty means "auto": derived from the potential's argmin description.
    std::optional<std::vector<Vector>> anchors;
    int points_per_decade = 200;
    double decay_window = 0.25;
    double opial_window = 0.25;
    std::filesystem::path output_dir;

    /// Checks t0 > 0, T > t0, consistent dimensions and positive tolerances.
    void validate() const;
};

/// Parses a damping descriptor {"kind": ..., ...}. Relative CSV paths resolve
/// against `base_dir`.
DampingSpec parse_damping(const nlohmann::json& j, double t0, const std::filesystem::path& base_dir);

PotentialSpec parse_potential(const nlohmann::json& j);

ScenarioConfig parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Reads and validates a scenario file; output_dir defaults to out/<id>.
ScenarioConfig load_scenario(const std::filesystem::path& file);

/// Reads a standalone damping document; t0 is taken from the document (default 1).
DampingSpec load_damping(const std::filesystem::path& file);

/// Anchors used for the anchored diagnostics: the explicit list, or the argmin
/// witness plus basepoint +- each basis vector of an affine argmin. Empty when
/// the potential carries no argmin description.
std::vector<Vector> resolve_anchors(const ScenarioConfig& cfg);

} // namespace vdamp
