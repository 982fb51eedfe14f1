#include "vdamp/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "vdamp/error.hpp"

namespace vdamp {

namespace {

using ojson = nlohmann::ordered_json;

// Report order; every entry also fixes the tolerance and the reference text.
struct CheckSpec {
    const char* name;
    double tolerance;
    const char* paper_ref;
};

const CheckSpec kChecks[] = {
    {"energy_nonincreasing", 1e-12, "energy function W is nonincreasing along trajectories"},
    {"energy_dissipation", 1e-6, "W' = -gamma ||x'||^2"},
    {"distance_identity_residual", 1e-6, "h'' + gamma h' = ||x'||^2 + <grad Phi(x), x* - x>"},
    {"scaled_energy_identity_residual", 1e-6, "(t^2 W)' = 2 t W - t^2 gamma ||x'||^2"},
    {"energy_bound_margin", 1e-8, "W <= 3/2 ||x'||^2 - h'' - gamma h' from the convexity inequality"},
    {"integrated_bound_margin", 1e-6,
     "A int sW + B t^2 W + eps h <= C0 + int [(s gamma)']_+ h after integrating on [t0, t]"},
    {"gronwall_bound_check", 1e-6, "h bounded through Gronwall's inequality"},
    {"fubini_tail_check", 1e-6, "int [h']_+ bounded through the tail kernel and Fubini"},
    {"kernel_bound", 1e-8, "int_s^inf exp(-Gamma(t, s)) dt <= s / (K - 1)"},
    {"decay_indicators", 0.0, "W(t) = o(1/t^2) and int sW finite, as trend indicators"},
    {"opial_convergence", 1e-4, "||x(t) - z|| converges for every minimizer z; limit lies in argmin"},
};

const CheckSpec& spec_of(const std::string& name) {
    for (const CheckSpec& c : kChecks) {
        if (name == c.name) {
            return c;
        }
    }
    throw std::out_of_range("unknown check " + name);
}

CheckResult make(const std::string& name, std::optional<double> value, Verdict verdict) {
    const CheckSpec& s = spec_of(name);
    return CheckResult{name, value, s.tolerance, verdict, s.paper_ref};
}

Verdict pass_if(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

double ratio(double num, double den) {
    if (num == 0.0) {
        return 0.0;
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

std::string choose_banner(const ScenarioConfig& cfg, const AdmissibilityCertificate& cert, const RunOptions& opts) {
    if (opts.banner) {
        return *opts.banner;
    }
    if (std::holds_alternative<PowerLaw>(cfg.damping.kind())) {
        return kBannerRemark;
    }
    return cert.satisfies_lower_bound && cert.satisfies_integrability ? kBannerTheorem : kBannerOutside;
}

void evaluate_checks(const ScenarioConfig& cfg, const Trajectory& traj, RunOutput& out) {
    RunReport& r = out.report;
    const PotentialSpec& p = cfg.potential;
    const DampingSpec& d = cfg.damping;
    const bool hypotheses = r.certificate.satisfies_lower_bound && r.certificate.satisfies_integrability;
    const bool theorem = hypotheses && r.banner == kBannerTheorem;
    const bool anchored = !r.anchors.empty();
    const double K = r.certificate.k_inf;

    const DiagnosticSeries& base = out.series.front();
    std::vector<const DiagnosticSeries*> per_anchor;
    for (std::size_t k = 1; k < out.series.size(); ++k) {
        per_anchor.push_back(&out.series[k]);
    }

    {
        const double inc = energy_increase(base);
        r.checks.push_back(make("energy_nonincreasing", inc, pass_if(inc <= spec_of("energy_nonincreasing").tolerance)));
    }
    {
        const double res = energy_dissipation_residual(traj, p, d);
        r.checks.push_back(make("energy_dissipation", res, pass_if(res <= spec_of("energy_dissipation").tolerance)));
    }
    if (anchored) {
        double worst = 0.0;
        for (const Vector& a : r.anchors) {
            worst = std::max(worst, distance_identity_residual(traj, p, d, a));
        }
        r.checks.push_back(
            make("distance_identity_residual", worst, pass_if(worst <= spec_of("distance_identity_residual").tolerance)));
    } else {
        r.checks.push_back(make("distance_identity_residual", std::nullopt, Verdict::Inapplicable));
    }
    {
        const double res = scaled_energy_identity_residual(traj, p, d);
        r.checks.push_back(make("scaled_energy_identity_residual", res,
                                pass_if(res <= spec_of("scaled_energy_identity_residual").tolerance)));
    }
    if (anchored) {
        double worst = std::numeric_limits<double>::infinity();
        for (const Vector& a : r.anchors) {
            worst = std::min(worst, energy_bound_margin(traj, p, d, a).min_scaled);
        }
        r.checks.push_back(
            make("energy_bound_margin", worst, pass_if(worst >= -spec_of("energy_bound_margin").tolerance)));
    } else {
        r.checks.push_back(make("energy_bound_margin", std::nullopt, Verdict::Inapplicable));
    }

    for (const DiagnosticSeries* s : per_anchor) {
        r.constants.push_back(proof_constants(*s, d, K));
    }

    // Integrated Lyapunov bound, scaled by (1 + |C0|).
    if (!anchored) {
        r.checks.push_back(make("integrated_bound_margin", std::nullopt, Verdict::Inapplicable));
    } else if (!hypotheses) {
        r.checks.push_back(make("integrated_bound_margin", std::nullopt, Verdict::SkippedHypothesis));
    } else {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < per_anchor.size(); ++k) {
            const ProofConstants& c = r.constants[k];
            worst = std::min(worst, integrated_bound_margin(*per_anchor[k], c) / (1.0 + std::abs(c.C0)));
        }
        r.checks.push_back(
            make("integrated_bound_margin", worst, pass_if(worst >= -spec_of("integrated_bound_margin").tolerance)));
    }

    // Gronwall: value is the worst sup h / bound over anchors.
    if (!anchored) {
        r.checks.push_back(make("gronwall_bound_check", std::nullopt, Verdict::Inapplicable));
    } else {
        double worst = 0.0;
        bool any_fail = false;
        bool all_inapplicable = true;
        for (std::size_t k = 0; k < per_anchor.size(); ++k) {
            const GronwallCheck g =
                gronwall_bound_check(*per_anchor[k], r.constants[k], r.certificate.positive_variation_integral);
            r.gronwall.push_back(g);
            worst = std::max(worst, ratio(g.sup_h, g.bound));
            any_fail = any_fail || g.verdict == Verdict::Fail;
            all_inapplicable = all_inapplicable && g.verdict == Verdict::Inapplicable;
        }
        Verdict v = Verdict::Pass;
        if (!hypotheses) {
            v = Verdict::SkippedHypothesis;
        } else if (any_fail) {
            v = Verdict::Fail;
        } else if (all_inapplicable) {
            v = Verdict::Inapplicable;
        }
        r.checks.push_back(make("gronwall_bound_check", hypotheses ? std::optional<double>(worst) : std::nullopt, v));
    }

    // Fubini tail bound: value is the worst lhs / rhs over anchors.
    if (!anchored) {
        r.checks.push_back(make("fubini_tail_check", std::nullopt, Verdict::Inapplicable));
    } else if (!(K > 1.0)) {
        r.checks.push_back(make("fubini_tail_check", std::nullopt, Verdict::SkippedHypothesis));
    } else {
        double worst = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k < per_anchor.size(); ++k) {
            const FubiniCheck f = fubini_tail_check(traj, *per_anchor[k], r.constants[k]);
            r.fubini.push_back(f);
            worst = std::max(worst, ratio(f.lhs, f.rhs));
            ok = ok && f.pass;
        }
        r.checks.push_back(make("fubini_tail_check", worst, pass_if(ok)));
    }

    // Tail kernel against s / (K_inf - 1); exact for gamma = K / t.
    if (!(K > 1.0)) {
        r.checks.push_back(make("kernel_bound", std::nullopt, Verdict::SkippedHypothesis));
    } else {
        const double ktol = spec_of("kernel_bound").tolerance;
        const bool exact = std::holds_alternative<OverT>(d.kind());
        double worst = 0.0;
        bool ok = true;
        for (double s : {cfg.t0, 10.0 * cfg.t0, 100.0 * cfg.t0}) {
            const KernelCheck kc = tail_kernel_check(d, s, K);
            r.kernel.push_back(kc);
            const double q = kc.numeric / kc.bound;
            worst = std::max(worst, q);
            ok = ok && q <= 1.0 + ktol && (!exact || std::abs(q - 1.0) <= ktol);
        }
        r.checks.push_back(make("kernel_bound", worst, pass_if(ok)));
    }

    // Conclusion indicators.
    try {
        r.decay = decay_report(base, cfg.decay_window);
    } catch (const InvalidInput&) {
        r.decay.reset();
    }
    if (!r.decay) {
        r.checks.push_back(make("decay_indicators", std::nullopt, Verdict::Inapplicable));
    } else {
        const DecayReport& dr = *r.decay;
        const bool ok = dr.slope.value_or(-std::numeric_limits<double>::infinity()) <= -2.05 &&
                        dr.t2W_ratio <= 0.9 && dr.sW_tail_ratio <= 0.2;
        r.checks.push_back(make("decay_indicators", dr.slope, theorem ? pass_if(ok) : Verdict::SkippedHypothesis));
    }

    if (anchored) {
        try {
            r.opial = opial_convergence_check(traj, p, r.anchors, cfg.opial_window);
        } catch (const InvalidInput&) {
            r.opial.reset();
        } catch (const Unsupported&) {
            r.opial.reset();
        }
    }
    if (!r.opial) {
        r.checks.push_back(make("opial_convergence", std::nullopt, Verdict::Inapplicable));
    } else {
        const double osc = *std::max_element(r.opial->oscillation.begin(), r.opial->oscillation.end());
        r.checks.push_back(
            make("opial_convergence", osc, theorem ? pass_if(r.opial->pass) : Verdict::SkippedHypothesis));
    }
}

// %.17g round-trips doubles; non-finite values become JSON null.
std::string num(double x) { return std::isfinite(x) ? fmt::format("{:.17g}", x) : std::string("null"); }

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << body;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    const Eigen::Index n = traj.dim();
    std::string body = "t";
    for (Eigen::Index i = 0; i < n; ++i) {
        body += fmt::format(",x_{}", i);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        body += fmt::format(",v_{}", i);
    }
    body += '\n';
    for (const State& s : traj.samples) {
        body += num(s.t);
        for (Eigen::Index i = 0; i < n; ++i) {
            body += ',' + num(s.x[i]);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            body += ',' + num(s.v[i]);
        }
        body += '\n';
    }
    write_file(path, body);
}

void write_series_ndjson(const std::filesystem::path& path, const DiagnosticSeries& s) {
    std::string body;
    for (std::size_t i = 0; i < s.size(); ++i) {
        body += fmt::format(R"({{"t":{},"W":{},"t2W":{})", num(s.t[i]), num(s.W[i]), num(s.t2W[i]));
        if (s.anchored()) {
            body += fmt::format(R"(,"h":{},"h_prime":{})", num(s.h[i]), num(s.h_prime[i]));
        }
        body += fmt::format(R"(,"speed2":{},"int_sW":{})", num(s.speed2[i]), num(s.int_sW[i]));
        if (s.anchored()) {
            body += fmt::format(R"(,"int_EQh":{},"int_hp_pos":{})", num(s.int_EQh[i]), num(s.int_hp_pos[i]));
        }
        body += "}\n";
    }
    write_file(path, body);
}

ojson vec_json(const Vector& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

ojson opt_json(const std::optional<double>& x) { return x ? ojson(*x) : ojson(nullptr); }

void persist(const ScenarioConfig& cfg, const RunOutput& out) {
    std::filesystem::create_directories(cfg.output_dir);
    if (out.trajectory) {
        write_trajectory_csv(cfg.output_dir / "trajectory.csv", *out.trajectory);
        write_series_ndjson(cfg.output_dir / "diagnostics.ndjson", out.series.front());
        for (std::size_t k = 1; k < out.series.size(); ++k) {
            write_series_ndjson(cfg.output_dir / fmt::format("diagnostics.anchor{}.ndjson", k - 1), out.series[k]);
        }
    }
    write_file(cfg.output_dir / "report.json", report_json(out.report));
    ojson timing;
    timing["wall_seconds"] = out.report.wall_seconds;
    timing["accepted_steps"] = out.report.accepted_steps;
    timing["rejected_steps"] = out.report.rejected_steps;
    write_file(cfg.output_dir / "timing.json", timing.dump(2) + "\n");
}

} // namespace

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const CheckSpec& c : kChecks) {
            v.emplace_back(c.name);
        }
        return v;
    }();
    return names;
}

const CheckResult& RunReport::check(const std::string& name) const {
    for (const CheckResult& c : checks) {
        if (c.name == name) {
            return c;
        }
    }
    throw std::out_of_range("report has no check " + name);
}

int RunReport::exit_code() const {
    if (failure) {
        return 3;
    }
    for (const CheckResult& c : checks) {
        if (c.verdict == Verdict::Fail) {
            return 2;
        }
    }
    return 0;
}

std::string report_json(const RunReport& r) {
    ojson j;
    j["scenario"] = r.scenario_id;
    j["banner"] = r.banner;
    ojson cert;
    cert["k_inf"] = r.certificate.k_inf;
    cert["satisfies_lower_bound"] = r.certificate.satisfies_lower_bound;
    cert["positive_variation_integral"] = std::isfinite(r.certificate.positive_variation_integral)
                                              ? ojson(r.certificate.positive_variation_integral)
                                              : ojson("inf");
    cert["satisfies_integrability"] = r.certificate.satisfies_integrability;
    cert["method"] = std::string(to_string(r.certificate.method));
    cert["tail_unknown"] = r.certificate.tail_unknown;
    j["certificate"] = cert;

    if (r.failure) {
        j["failure"] = *r.failure;
    }

    ojson anchors = ojson::array();
    for (std::size_t k = 0; k < r.anchors.size(); ++k) {
        ojson a;
        a["anchor"] = vec_json(r.anchors[k]);
        if (k < r.constants.size()) {
            const ProofConstants& c = r.constants[k];
            a["proof_constants"] = {{"K", c.K},   {"epsilon", c.epsilon}, {"A", c.A},
                                    {"B", c.B},   {"C0", c.C0},           {"C0_printed", c.c0_printed}};
        }
        if (k < r.gronwall.size()) {
            a["gronwall"] = {{"sup_h", r.gronwall[k].sup_h},
                             {"bound", r.gronwall[k].bound},
                             {"verdict", std::string(to_string(r.gronwall[k].verdict))}};
        }
        if (k < r.fubini.size()) {
            a["fubini"] = {{"lhs", r.fubini[k].lhs}, {"rhs", r.fubini[k].rhs}, {"pass", r.fubini[k].pass}};
        }
        anchors.push_back(a);
    }
    j["anchors"] = anchors;

    ojson kernel = ojson::array();
    for (const KernelCheck& kc : r.kernel) {
        kernel.push_back({{"numeric", kc.numeric}, {"bound", kc.bound}});
    }
    j["kernel"] = kernel;

    ojson checks = ojson::array();
    for (const CheckResult& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"value", opt_json(c.value)},
                          {"tolerance", c.tolerance},
                          {"verdict", std::string(to_string(c.verdict))},
                          {"paper_ref", c.paper_ref}});
    }
    j["checks"] = checks;

    if (r.decay) {
        j["decay_report"] = {{"slope", opt_json(r.decay->slope)},
                             {"t2W_end", r.decay->t2W_end},
                             {"t2W_ratio", r.decay->t2W_ratio},
                             {"sW_tail_ratio", r.decay->sW_tail_ratio},
                             {"m_estimate", r.decay->m_estimate}};
    } else {
        j["decay_report"] = nullptr;
    }
    if (r.opial) {
        ojson osc = ojson::array();
        for (double o : r.opial->oscillation) {
            osc.push_back(o);
        }
        j["opial"] = {{"limit_candidate", vec_json(r.opial->limit_candidate)},
                      {"oscillation", osc},
                      {"phi_gap", r.opial->phi_gap},
                      {"displacement", r.opial->displacement},
                      {"pass", r.opial->pass}};
    } else {
        j["opial"] = nullptr;
    }
    j["steps"] = {{"accepted", r.accepted_steps}, {"rejected", r.rejected_steps}};
    j["exit_code"] = r.exit_code();
    return j.dump(2) + "\n";
}

RunOutput run_scenario_full(const ScenarioConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    RunOutput out;
    RunReport& r = out.report;
    r.scenario_id = cfg.id;
    r.certificate = certify(cfg.damping);
    r.banner = choose_banner(cfg, r.certificate, opts);
    r.anchors = resolve_anchors(cfg);

    IntegratorOptions io;
    io.rel_tol = cfg.rel_tol;
    io.abs_tol = cfg.abs_tol;
    io.output_times = log_schedule(cfg.t0, cfg.T, cfg.points_per_decade);
    try {
        Trajectory traj = integrate(cfg.potential, cfg.damping, cfg.x0, cfg.v0, cfg.t0, cfg.T, io);
        r.accepted_steps = traj.accepted_steps;
        r.rejected_steps = traj.rejected_steps;
        out.series.push_back(energy_series(traj, cfg.potential, cfg.damping));
        for (const Vector& a : r.anchors) {
            out.series.push_back(anchored_series(traj, cfg.potential, cfg.damping, a));
        }
        evaluate_checks(cfg, traj, out);
        out.trajectory = std::move(traj);
    } catch (const IntegrationFailure& e) {
        r.failure = e.what();
        r.checks.clear();
        for (const std::string& name : check_names()) {
            r.checks.push_back(make(name, std::nullopt, Verdict::NotEvaluated));
        }
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (opts.persist) {
        persist(cfg, out);
    }
    if (!opts.keep_trajectory) {
        out.trajectory.reset();
        out.series.clear();
    }
    return out;
}

RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    RunOptions o = opts;
    o.keep_trajectory = false;
    return run_scenario_full(cfg, o).report;
}

RunReport explore_limit_case(const ScenarioConfig& base, const RunOptions& opts) {
    ScenarioConfig cfg = base;
    cfg.damping = base.damping.with_K(3.0);
    cfg.id = base.id + "-limit-K3";
    cfg.output_dir = base.output_dir / "limit-K3";
    RunOptions o = opts;
    o.banner = kBannerLimitCase;
    return run_scenario(cfg, o);
}

std::vector<SweepRow> sweep_K(const ScenarioConfig& base, const std::vector<double>& K_values, int workers,
                              bool persist) {
    for (double K : K_values) {
        if (!(K > 0.0) || !std::isfinite(K)) {
            throw InvalidInput("sweep: every K must be positive");
        }
    }
    // Build every config up front so invalid families fail before any thread starts.
    std::vector<ScenarioConfig> cfgs;
    for (double K : K_values) {
        ScenarioConfig cfg = base;
        cfg.damping = base.damping.with_K(K);
        cfg.id = fmt::format("{}-K{}", base.id, K);
        cfg.output_dir = base.output_dir / fmt::format("K{}", K);
        cfgs.push_back(std::move(cfg));
    }

    std::vector<SweepRow> rows(cfgs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfgs.size(); i = next++) {
            RunOptions o;
            o.persist = persist;
            const RunReport r = run_scenario(cfgs[i], o);
            SweepRow& row = rows[i];
            row.K = K_values[i];
            row.label = r.banner;
            row.exit_code = r.exit_code();
            row.status = r.failure ? *r.failure : (row.exit_code == 0 ? "ok" : "check failed");
            if (r.decay) {
                row.slope = r.decay->slope;
                row.t2W_end = r.decay->t2W_end;
                row.t2W_ratio = r.decay->t2W_ratio;
                row.sW_tail_ratio = r.decay->sW_tail_ratio;
            }
            if (r.opial) {
                row.displacement = r.opial->displacement;
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(cfgs.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    const auto quoted = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            q += c == '"' ? std::string("\"\"") : std::string(1, c);
        }
        return q + "\"";
    };
    const auto cell = [](const std::optional<double>& x) { return x ? num(*x) : std::string(); };
    std::string out = "K,label,status,slope,t2W_end,t2W_ratio,sW_tail_ratio,displacement\n";
    for (const SweepRow& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", num(r.K), quoted(r.label), quoted(r.status), cell(r.slope),
                           cell(r.t2W_end), cell(r.t2W_ratio), cell(r.sW_tail_ratio), cell(r.displacement));
    }
    return out;
}

OracleComparison compare_oracle(const ScenarioConfig& cfg, double h) {
    cfg.validate();
    OracleComparison c;
    c.horizon = std::min(cfg.T, 100.0);
    if (!(c.horizon > cfg.t0)) {
        throw InvalidInput("oracle: horizon min(T, 100) must exceed t0");
    }
    IntegratorOptions io;
    io.rel_tol = cfg.rel_tol;
    io.abs_tol = cfg.abs_tol;
    io.output_times = log_schedule(cfg.t0, c.horizon, cfg.points_per_decade);
    const Trajectory a = integrate(cfg.potential, cfg.damping, cfg.x0, cfg.v0, cfg.t0, c.horizon, io);
    const Trajectory b =
        reference_integrate(cfg.potential, cfg.damping, cfg.x0, cfg.v0, cfg.t0, c.horizon, h, io.output_times);
    c.at_t = cfg.t0;
    for (std::size_t i = 0; i < a.samples.size() && i < b.samples.size(); ++i) {
        const double e = std::max((a.samples[i].x - b.samples[i].x).lpNorm<Eigen::Infinity>(),
                                  (a.samples[i].v - b.samples[i].v).lpNorm<Eigen::Infinity>());
        if (e > c.sup_error) {
            c.sup_error = e;
            c.at_t = a.samples[i].t;
        }
    }
    return c;
}

} // namespace vdamp
