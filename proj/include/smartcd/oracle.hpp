#pragma once

#include <functional>

#include "solver.hpp"

namespace smartcd {

struct ReferenceSolution {
    Vector x;
    double objective;
    std::string method;
    double accuracy; // estimate, recorded with the method that produced it
};

// Repartition the problem to a single block and run the deterministic
// degeneracy of the reference variant. Exercises the same code paths as the
// randomized solver while the analytic optima provide the independent check.
inline ReferenceSolution long_run_reference(const ProblemSpec& prob, long iterations,
                                            double beta1 = 1.0)
{
    ProblemSpec single = prob;
    single.partition = BlockPartition::single_block(prob.partition.p());
    single.A = prob.A.repartitioned(single.partition);
    single.f = prob.f.repartitioned(single.partition);

    SolverConfig cfg;
    cfg.beta1 = beta1;
    cfg.alpha = 0.0;
    cfg.variant = Variant::reference;
    cfg.regime = prob.h.kind() == ConjugateProxPart::Kind::equality ? Regime::constrained
                                                                    : Regime::lipschitz;
    cfg.max_iterations = iterations;
    cfg.checkpoint_every = std::max<long>(1, iterations / 10);

    RunResult res = run(single, cfg);
    double accuracy = std::numeric_limits<double>::infinity();
    const auto& recs = res.trace.records;
    if (recs.size() >= 2) {
        accuracy = std::abs(recs.back().objective - recs[recs.size() - 2].objective);
    }
    if (!std::isfinite(recs.back().objective)) {
        throw DivergedError(iterations);
    }
    return ReferenceSolution{res.x, recs.back().objective, "long-run-deterministic",
                             accuracy};
}

// Exhaustive grid argmin; validates the closed-form scalar proxes.
inline std::pair<double, double> grid_minimize_scalar(
    const std::function<double(double)>& fn, double lo, double hi, double step)
{
    if (!(lo < hi) || !(step > 0.0)) {
        throw std::invalid_argument("grid_minimize_scalar: bad interval");
    }
    double best_u = lo;
    double best_v = fn(lo);
    for (double u = lo + step; u <= hi + 0.5 * step; u += step) {
        const double v = fn(std::min(u, hi));
        if (v < best_v) {
            best_v = v;
            best_u = std::min(u, hi);
        }
    }
    return {best_u, best_v};
}

// Central differences per coordinate.
inline Vector finite_diff_gradient(const std::function<double(const Vector&)>& fn,
                                   const Vector& x, double step = 1e-6)
{
    Vector g(x.size());
    Vector probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + step;
        const double up = fn(probe);
        probe[j] = x[j] - step;
        const double dn = fn(probe);
        probe[j] = x[j];
        if (!std::isfinite(up) || !std::isfinite(dn)) {
            throw std::invalid_argument("finite_diff_gradient: nonfinite evaluation");
        }
        g[j] = (up - dn) / (2.0 * step);
    }
    return g;
}

} // namespace smartcd
