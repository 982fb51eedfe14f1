// Command-line front end: certify, run, sweep, limit-k3, oracle, selftest.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "vdamp/acceptance.hpp"
#include "vdamp/error.hpp"
#include "vdamp/harness.hpp"

namespace {

using namespace vdamp;
namespace fs = std::filesystem;

void print_summary(const RunReport& r, const fs::path& dir) {
    fmt::print("scenario {} [{}]\n", r.scenario_id, r.banner);
    if (r.failure) {
        fmt::print("  integration failure: {}\n", *r.failure);
    }
    for (const CheckResult& c : r.checks) {
        fmt::print("  {:<32} {:<26} {}\n", c.name, to_string(c.verdict),
                   c.value ? fmt::format("{:.6g}", *c.value) : std::string("-"));
    }
    fmt::print("  artifacts in {}\n", dir.string());
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw InvalidInput("--K: '" + item + "' is not a number");
        }
    }
    if (out.empty()) {
        throw InvalidInput("--K: expected a comma-separated list");
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vanishing-damping second-order flow: simulation and proof diagnostics"};
    app.require_subcommand(1);

    std::string input;
    std::string out_dir;

    auto* certify_cmd = app.add_subcommand("certify", "Certify a damping descriptor");
    certify_cmd->add_option("damping", input, "damping JSON")->required()->check(CLI::ExistingFile);

    auto* run_cmd = app.add_subcommand("run", "Run one scenario and persist its artifacts");
    run_cmd->add_option("scenario", input, "scenario JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", out_dir, "output directory");

    std::string k_list;
    int workers = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario for several damping constants");
    sweep_cmd->add_option("scenario", input, "scenario JSON")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--K", k_list, "comma-separated K values")->required();
    sweep_cmd->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", out_dir, "output directory");

    auto* limit_cmd = app.add_subcommand("limit-k3", "Run a scenario with K = 3 (exploratory)");
    limit_cmd->add_option("scenario", input, "scenario JSON")->required()->check(CLI::ExistingFile);
    limit_cmd->add_option("--out", out_dir, "output directory");

    double h = 1e-5;
    auto* oracle_cmd = app.add_subcommand("oracle", "Compare against the fixed-step RK4 reference");
    oracle_cmd->add_option("scenario", input, "scenario JSON")->required()->check(CLI::ExistingFile);
    // --h would clash with the short help flag.
    oracle_cmd->set_help_flag("--help", "Print this help message and exit");
    oracle_cmd->add_option("--h", h, "reference step")->check(CLI::PositiveNumber);

    std::string scenario_dir = VDAMP_SCENARIO_DIR;
    std::string work_dir = (fs::temp_directory_path() / "vdamp-selftest").string();
    auto* selftest_cmd = app.add_subcommand("selftest", "Run the acceptance suite on the bundled scenarios");
    selftest_cmd->add_option("--scenarios", scenario_dir, "scenario directory");
    selftest_cmd->add_option("--work", work_dir, "scratch directory for run artifacts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; usage errors share the invalid-input code.
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*certify_cmd) {
            const AdmissibilityCertificate c = certify(load_damping(input));
            fmt::print("k_inf                        {:.17g}\n", c.k_inf);
            fmt::print("satisfies_lower_bound        {}\n", c.satisfies_lower_bound);
            fmt::print("positive_variation_integral  {:.17g}\n", c.positive_variation_integral);
            fmt::print("satisfies_integrability      {}\n", c.satisfies_integrability);
            fmt::print("method                       {}\n", to_string(c.method));
            if (c.tail_unknown) {
                fmt::print("note: integral covers the knot range only\n");
            }
            return c.satisfies_lower_bound && c.satisfies_integrability ? 0 : 2;
        }

        if (*selftest_cmd) {
            const auto results = run_acceptance(scenario_dir, work_dir, std::cout);
            int failed = 0;
            for (const CriterionResult& c : results) {
                failed += c.pass ? 0 : 1;
            }
            fmt::print("{} of {} criteria passed\n", results.size() - failed, results.size());
            return failed == 0 ? 0 : 2;
        }

        ScenarioConfig cfg = load_scenario(input);
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
        }

        if (*run_cmd) {
            const RunReport r = run_scenario(cfg);
            print_summary(r, cfg.output_dir);
            return r.exit_code();
        }
        if (*limit_cmd) {
            const RunReport r = explore_limit_case(cfg);
            print_summary(r, cfg.output_dir / "limit-K3");
            return r.exit_code();
        }
        if (*sweep_cmd) {
            const auto rows = sweep_K(cfg, parse_list(k_list), workers);
            const std::string csv = sweep_csv(rows);
            fs::create_directories(cfg.output_dir);
            std::ofstream(cfg.output_dir / "sweep.csv", std::ios::binary) << csv;
            std::cout << csv;
            int code = 0;
            for (const SweepRow& r : rows) {
                code = std::max(code, r.exit_code);
            }
            return code;
        }
        if (*oracle_cmd) {
            const OracleComparison c = compare_oracle(cfg, h);
            fmt::print("sup_error {:.6g} at t = {:.6g} on [{}, {}]\n", c.sup_error, c.at_t, cfg.t0, c.horizon);
            return 0;
        }
    } catch (const IntegrationFailure& e) {
        fmt::print(stderr, "integration failure: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
