#pragma once

#include <json.hpp>

#include "oracle.hpp"
#include "solver.hpp"

namespace smartcd {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Batch-run description: which instance to build, how to solve it, where the
// traces go. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
    std::string problem_name;
    nlohmann::json problem_params;
    SolverConfig solver;
    std::string output_dir = ".";
    std::vector<std::uint64_t> seeds; // one run per seed; empty = single run
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj,
                           const std::vector<std::string>& allowed,
                           const std::string& where)
{
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <class T>
T require(const nlohmann::json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key)) {
        throw ConfigError("missing key '" + key + "' in " + where);
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("key '" + key + "' in " + where + " has the wrong type");
    }
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback,
         const std::string& where)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("key '" + key + "' in " + where + " has the wrong type");
    }
}

} // namespace detail

inline SolverConfig parse_solver_config(const nlohmann::json& s)
{
    detail::reject_unknown(s,
                           {"beta1", "alpha", "variant", "regime", "g_zero_mode",
                            "max_iterations", "restart_period", "seed",
                            "checkpoint_every"},
                           "solver");
    SolverConfig cfg;
    cfg.beta1 = detail::get_or(s, "beta1", 1.0, "solver");
    cfg.alpha = detail::get_or(s, "alpha", 0.0, "solver");
    const auto variant = detail::get_or<std::string>(s, "variant", "efficient", "solver");
    if (variant == "efficient") cfg.variant = Variant::efficient;
    else if (variant == "reference") cfg.variant = Variant::reference;
    else throw ConfigError("key 'variant' must be 'efficient' or 'reference'");
    const auto regime = detail::require<std::string>(s, "regime", "solver");
    if (regime == "lipschitz") cfg.regime = Regime::lipschitz;
    else if (regime == "constrained") cfg.regime = Regime::constrained;
    else throw ConfigError("key 'regime' must be 'lipschitz' or 'constrained'");
    cfg.g_zero_mode = detail::get_or(s, "g_zero_mode", false, "solver");
    cfg.max_iterations = detail::require<long>(s, "max_iterations", "solver");
    if (s.contains("restart_period")) {
        cfg.restart_period = detail::require<long>(s, "restart_period", "solver");
    }
    cfg.seed = detail::get_or<std::uint64_t>(s, "seed", 0, "solver");
    cfg.checkpoint_every = detail::get_or<long>(s, "checkpoint_every", 0, "solver");
    return cfg;
}

inline RunConfig parse_run_config(const nlohmann::json& j)
{
    detail::reject_unknown(j, {"problem", "solver", "output_dir", "runs"}, "config");
    RunConfig cfg;
    const auto& prob = j.contains("problem") ? j.at("problem") : nlohmann::json::object();
    if (!j.contains("problem")) throw ConfigError("missing key 'problem' in config");
    cfg.problem_name = detail::require<std::string>(prob, "name", "problem");
    cfg.problem_params = prob;
    cfg.problem_params.erase("name");
    if (!j.contains("solver")) throw ConfigError("missing key 'solver' in config");
    cfg.solver = parse_solver_config(j.at("solver"));
    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", ".", "config");
    if (j.contains("runs")) {
        for (const auto& r : j.at("runs")) {
            detail::reject_unknown(r, {"seed"}, "runs entry");
            cfg.seeds.push_back(detail::require<std::uint64_t>(r, "seed", "runs entry"));
        }
    }
    return cfg;
}

inline ProblemSpec build_named_problem(const std::string& name,
                                       const nlohmann::json& params)
{
    using detail::get_or;
    using detail::require;
    if (name == "degenerate_lp") {
        detail::reject_unknown(params, {"p", "d"}, "problem");
        return degenerate_lp(get_or(params, "p", 10, "problem"),
                             get_or(params, "d", 200, "problem"));
    }
    if (name == "tv_l1") {
        detail::reject_unknown(params, {"p", "m", "lambda", "r", "data_seed"}, "problem");
        return synthetic_tv_instance(get_or(params, "p", 200, "problem"),
                                     get_or(params, "m", 100, "problem"),
                                     get_or(params, "lambda", 0.01, "problem"),
                                     get_or(params, "r", 0.5, "problem"),
                                     get_or<std::uint64_t>(params, "data_seed", 0, "problem"));
    }
    if (name == "svm") {
        detail::reject_unknown(params, {"path", "m", "p", "C", "lambda", "data_seed"},
                               "problem");
        if (params.contains("path")) {
            LibsvmData data = parse_libsvm(require<std::string>(params, "path", "problem"));
            const int m = data.features.cols();
            // C_i = 1 and lambda = 1/m are artifact defaults, not reported values
            const double cap = get_or(params, "C", 1.0, "problem");
            const double lambda =
                get_or(params, "lambda", 1.0 / static_cast<double>(m), "problem");
            return svm_dual(data.features, data.labels,
                            Vector(static_cast<std::size_t>(m), cap), lambda);
        }
        const int m = get_or(params, "m", 200, "problem");
        return synthetic_svm_instance(
            m, get_or(params, "p", 20, "problem"), get_or(params, "C", 1.0, "problem"),
            get_or(params, "lambda", 1.0 / static_cast<double>(m), "problem"),
            get_or<std::uint64_t>(params, "data_seed", 0, "problem"));
    }
    throw ConfigError("unknown problem name '" + name + "'");
}

} // namespace smartcd
