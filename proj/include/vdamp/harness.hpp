#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vdamp/config.hpp"
#include "vdamp/diagnostics.hpp"

namespace vdamp {

struct CheckResult {
    std::string name;
    std::optional<double> value;  ///< empty when not evaluated or undefined (W identically 0)
    double tolerance = 0.0;
    Verdict verdict = Verdict::NotEvaluated;
    std::string paper_ref;
};

inline constexpr const char* kBannerTheorem = "theorem";
inline constexpr const char* kBannerRemark = "exploratory (Remark regime)";
inline constexpr const char* kBannerLimitCase = "exploratory (limit case K=3)";
inline constexpr const char* kBannerOutside = "outside theorem hypotheses";

/// Names of every check, in report order. Each appears exactly once per report.
const std::vector<std::string>& check_names();

struct RunReport {
    std::string scenario_id;
    std::string banner;
    AdmissibilityCertificate certificate;
    std::vector<Vector> anchors;
    std::vector<ProofConstants> constants;  ///< one per anchor
    std::vector<GronwallCheck> gronwall;    ///< one per anchor
    std::vector<FubiniCheck> fubini;        ///< one per anchor
    std::vector<KernelCheck> kernel;        ///< at s = t0, 10 t0, 100 t0
    std::vector<CheckResult> checks;
    std::optional<DecayReport> decay;
    std::optional<OpialResult> opial;
    long accepted_steps = 0;
    long rejected_steps = 0;
    double wall_seconds = 0.0;
    std::optional<std::string> failure;  ///< integration failure message

    const CheckResult& check(const std::string& name) const;
    /// 0 all evaluated checks pass, 2 some check fails, 3 integration failure.
    int exit_code() const;
};

struct RunOptions {
    bool persist = true;
    /// Keep the trajectory and series in the returned RunOutput.
    bool keep_trajectory = false;
    /// Overrides the banner chosen from the certificate.
    std::optional<std::string> banner;
};

struct RunOutput {
    RunReport report;
    std::optional<Trajectory> trajectory;
    std::vector<DiagnosticSeries> series;  ///< anchor-free series first, then one per anchor
};

/// Certify, integrate, evaluate every check and persist trajectory.csv,
/// diagnostics*.ndjson, report.json and timing.json under cfg.output_dir.
/// Integration failures are reported, not thrown.
RunOutput run_scenario_full(const ScenarioConfig& cfg, const RunOptions& opts = {});
RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// The same scenario with the damping constant replaced by 3 exactly.
RunReport explore_limit_case(const ScenarioConfig& base, const RunOptions& opts = {});

struct SweepRow {
    double K = 0.0;
    std::string label;  ///< run banner
    std::string status;  ///< "ok", "check failed" or the integration failure
    std::optional<double> slope;
    std::optional<double> t2W_end;
    std::optional<double> t2W_ratio;
    std::optional<double> sW_tail_ratio;
    std::optional<double> displacement;
    int exit_code = 0;
};

/// One run per K, each persisted under base.output_dir / "K<value>", executed on
/// up to `workers` threads. Rows keep the order of K_values.
std::vector<SweepRow> sweep_K(const ScenarioConfig& base, const std::vector<double>& K_values, int workers = 1,
                              bool persist = true);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct OracleComparison {
    double sup_error = 0.0;  ///< max over shared samples of max(|x_a - x_r|_inf, |v_a - v_r|_inf)
    double at_t = 0.0;
    double horizon = 0.0;
};

/// Adaptive run against the fixed-step RK4 reference with step h on [t0, min(T, 100)].
OracleComparison compare_oracle(const ScenarioConfig& cfg, double h);

/// Serialized report (ordered keys, no wall-clock data).
std::string report_json(const RunReport& r);

} // namespace vdamp
