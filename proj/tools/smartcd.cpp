#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include <smartcd/run_config.hpp>
#include <smartcd/smartcd.hpp>

namespace {

using namespace smartcd;

nlohmann::json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
}

struct RunSummary {
    std::uint64_t seed;
    std::string trace_file;
    TraceRecord final_record;
    std::uint64_t column_ops;
    std::optional<double> duality_gap;
};

RunSummary execute_one(const ProblemSpec& prob, SolverConfig cfg, std::uint64_t seed,
                       const std::filesystem::path& out_dir)
{
    cfg.seed = seed;
    RunResult res = run(prob, cfg);
    const std::string name = "trace_seed" + std::to_string(seed) + ".csv";
    std::ofstream csv(out_dir / name);
    if (!csv) throw ConfigError("cannot write trace file in " + out_dir.string());
    res.trace.write_csv(csv);
    Metrics final = metrics(prob, res.x);
    return RunSummary{seed, name, res.trace.records.back(), res.column_ops,
                      final.duality_gap};
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_override,
            std::optional<std::string> out_override)
{
    RunConfig cfg = parse_run_config(load_json(config_path));
    ProblemSpec prob = build_named_problem(cfg.problem_name, cfg.problem_params);
    // the refused regime/h combinations surface here, before any run starts
    try {
        detail::validate(prob, cfg.solver);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    std::filesystem::path out_dir = out_override.value_or(cfg.output_dir);
    std::filesystem::create_directories(out_dir);

    std::vector<std::uint64_t> seeds = cfg.seeds;
    if (seed_override) seeds = {*seed_override};
    if (seeds.empty()) seeds = {cfg.solver.seed};

    std::vector<std::future<RunSummary>> jobs;
    jobs.reserve(seeds.size());
    for (std::uint64_t s : seeds) {
        jobs.push_back(std::async(seeds.size() > 1 ? std::launch::async
                                                   : std::launch::deferred,
                                  [&, s] { return execute_one(prob, cfg.solver, s, out_dir); }));
    }

    nlohmann::json summary;
    summary["problem"] = cfg.problem_name;
    summary["runs"] = nlohmann::json::array();
    for (auto& job : jobs) {
        RunSummary r = job.get();
        nlohmann::json entry{{"seed", r.seed},
                             {"trace", r.trace_file},
                             {"iterations", r.final_record.k},
                             {"objective", r.final_record.objective},
                             {"wall_ms", r.final_record.wall_ms}};
        if (std::isfinite(r.final_record.subopt)) entry["subopt"] = r.final_record.subopt;
        if (std::isfinite(r.final_record.feasibility)) {
            entry["feasibility"] = r.final_record.feasibility;
        }
        if (r.column_ops > 0) entry["column_ops"] = r.column_ops;
        if (r.duality_gap) entry["duality_gap"] = *r.duality_gap;
        summary["runs"].push_back(std::move(entry));
        std::cout << "seed " << r.seed << ": F = " << r.final_record.objective << " after "
                  << r.final_record.k << " iterations -> " << r.trace_file << "\n";
    }
    std::ofstream sum(out_dir / "summary.json");
    sum << summary.dump(2) << "\n";
    return 0;
}

int cmd_describe(const std::string& name, const std::string& params_json)
{
    nlohmann::json params = nlohmann::json::object();
    if (!params_json.empty()) {
        try {
            params = nlohmann::json::parse(params_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("params are not valid JSON: " + std::string(e.what()));
        }
    }
    ProblemSpec prob = build_named_problem(name, params);
    std::cout << "problem: " << name << "\n"
              << "n=" << prob.partition.n() << ", m=" << prob.A.rows()
              << ", p=" << prob.partition.p() << "\n";
    const Vector b0 = detail::initial_B(prob, 1.0);
    Sampler sampler = build_sampler(b0, 0.0);
    std::cout << "B_i^0 (beta1=1):";
    for (double b : b0) std::cout << " " << b;
    std::cout << "\nq:";
    for (double q : sampler.q()) std::cout << " " << q;
    std::cout << "\ntau0=" << sampler.tau0() << "\n";
    if (prob.known_fstar) {
        std::cout << "F*=" << *prob.known_fstar << " (" << prob.fstar_provenance << ")\n";
    }
    return 0;
}

// Small self-test: schedule bounds, variant agreement, and a feasibility run
// on the tiny LP. Meant as a smoke check of an installed binary, not a
// replacement for the test suite.
int cmd_check()
{
    int failures = 0;
    auto report = [&](const std::string& what, bool ok) {
        std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
        if (!ok) ++failures;
    };

    {
        double tau = 0.25;
        bool ok = true;
        for (long k = 0; k < 10000 && ok; ++k) {
            const double lo = 1.0 / (static_cast<double>(k) + 4.0);
            const double hi = 2.0 / (static_cast<double>(k) + 5.0);
            ok = tau >= lo - 1e-12 && tau <= hi + 1e-12;
            tau = next_tau(Regime::lipschitz, tau);
        }
        report("step-size schedule stays inside its bounds", ok);
    }
    {
        ProblemSpec prob = degenerate_lp(6, 20);
        SolverConfig cfg;
        cfg.regime = Regime::constrained;
        cfg.max_iterations = 500;
        cfg.seed = 7;
        cfg.variant = Variant::reference;
        RunResult ref = run(prob, cfg);
        cfg.variant = Variant::efficient;
        RunResult eff = run(prob, cfg);
        double diff = 0.0;
        for (std::size_t j = 0; j < ref.x.size(); ++j) {
            diff = std::max(diff, std::abs(ref.x[j] - eff.x[j]));
        }
        report("reference and efficient variants agree (LP, 500 iters)", diff < 1e-8);
        Metrics m0 = metrics(prob, prob.x0);
        Metrics m = metrics(prob, eff.x);
        report("LP run moves toward feasibility",
               m.feasibility && m0.feasibility && *m.feasibility < 0.1 * *m0.feasibility);
    }
    {
        ProblemSpec prob = synthetic_tv_instance(40, 20, 0.01, 0.5, 3);
        SolverConfig cfg;
        cfg.regime = Regime::lipschitz;
        cfg.max_iterations = 2000;
        RunResult res = run(prob, cfg);
        const auto& recs = res.trace.records;
        report("TV instance objective decreases",
               recs.back().objective < recs.front().objective);
    }
    std::cout << (failures == 0 ? "all checks passed\n"
                                : std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"smartcd: randomized coordinate descent benchmark runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    auto* run_cmd = app.add_subcommand("run", "execute a config and write traces");
    run_cmd->add_option("config", config_path, "JSON config file")->required();
    run_cmd->add_option("--seed", seed_override, "override the seed (single run)");
    run_cmd->add_option("--out", out_override, "override the output directory");

    auto* check_cmd = app.add_subcommand("check", "run built-in invariant checks");

    std::string describe_name;
    std::string describe_params;
    auto* desc_cmd = app.add_subcommand("describe", "print instance dimensions and constants");
    desc_cmd->add_option("problem", describe_name, "problem name")->required();
    desc_cmd->add_option("params", describe_params, "JSON parameter object");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, seed_override, out_override);
        if (check_cmd->parsed()) return cmd_check();
        if (desc_cmd->parsed()) return cmd_describe(describe_name, describe_params);
    } catch (const smartcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const smartcd::DivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
