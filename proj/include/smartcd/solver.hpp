#pragma once

#include <chrono>
#include <cstdio>
#include <ostream>

#include "problems.hpp"
#include "smoothing.hpp"

namespace smartcd {

enum class Variant { reference, efficient };

struct SolverConfig {
    double beta1 = 1.0;
    double alpha = 0.0;
    Variant variant = Variant::efficient;
    Regime regime = Regime::lipschitz;
    bool g_zero_mode = false;
    long max_iterations = 1000;
    std::optional<long> restart_period;
    std::uint64_t seed = 0;
    long checkpoint_every = 0; // 0 = once per epoch (n iterations)
};

class DivergedError : public SolverError {
public:
    DivergedError(long k)
        : SolverError("solver diverged at iteration " + std::to_string(k)), iteration(k)
    {
    }
    long iteration;
};

struct TraceRecord {
    long k;
    double epoch;
    double objective;
    double subopt; // NaN when no reference value exists
    double feasibility; // NaN for Lipschitz h
    double tau;
    double beta;
    double wall_ms;
};

struct Trace {
    std::vector<TraceRecord> records;

    void write_csv(std::ostream& out) const
    {
        out << "k,epoch,F,subopt,feas,tau,beta,wall_ms\n";
        char buf[200];
        for (const auto& r : records) {
            std::snprintf(buf, sizeof(buf),
                          "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.epoch,
                          r.objective, r.subopt, r.feasibility, r.tau, r.beta, r.wall_ms);
            out << buf;
        }
    }
};

// y*_{beta}(A xhat) = ydot + (A xhat - c) / beta for the equality kind.
inline Vector constrained_dual_step(const Vector& ydot, double beta, const Vector& ax_hat,
                                    const Vector& c)
{
    Vector y(ax_hat.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        y[j] = ydot[j] + (ax_hat[j] - c[j]) / beta;
    }
    return y;
}

namespace detail {

inline void validate(const ProblemSpec& prob, const SolverConfig& cfg)
{
    prob.audit();
    if (!(cfg.beta1 > 0.0)) throw std::invalid_argument("config: beta1 must be positive");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) {
        throw std::invalid_argument("config: alpha must lie in [0,1]");
    }
    if (cfg.max_iterations < 0) {
        throw std::invalid_argument("config: max_iterations must be nonnegative");
    }
    if (cfg.restart_period && *cfg.restart_period < 1) {
        throw std::invalid_argument("config: restart_period must be >= 1");
    }
    if (cfg.regime == Regime::lipschitz && !prob.h.lipschitz()) {
        // the lipschitz schedule's rate guarantee needs Lipschitz h; refuse, don't guess
        throw std::invalid_argument(
            "config: lipschitz regime requires a Lipschitz h (finite dom h*)");
    }
    if (cfg.regime == Regime::constrained &&
        prob.h.kind() != ConjugateProxPart::Kind::equality) {
        throw std::invalid_argument("config: constrained regime requires the equality h kind");
    }
    if (cfg.g_zero_mode) {
        if (!prob.g.all_zero_terms()) {
            throw std::invalid_argument("config: g_zero_mode requires g = 0");
        }
        if (cfg.variant != Variant::reference) {
            throw std::invalid_argument(
                "config: g_zero_mode runs in the full-vector (reference) form only");
        }
    }
    if (cfg.restart_period && cfg.variant != Variant::efficient) {
        throw std::invalid_argument("config: restart requires the efficient variant");
    }
}

inline Vector initial_B(const ProblemSpec& prob, double beta1)
{
    const auto& lhat = prob.f.lhat();
    Vector b0(lhat.size());
    for (int i = 0; i < prob.partition.n(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        b0[iu] = lipschitz_B(lhat[iu], prob.A.block_norm(i), beta1);
        if (!(b0[iu] > 0.0)) {
            // zero columns in both f and A make the block prox step degenerate
            b0[iu] = 1e-12;
        }
    }
    return b0;
}

} // namespace detail

// Algorithm state of the efficient variant. c stores the cumulative product
// c_{k-1}; iteration k forms c_k = c_{k-1} (1 - tau_k) before using it.
struct SolverState {
    Vector u;
    Vector ztilde;
    double c = 1.0;
    double tau = 0.0;
    double beta_next = 0.0;
    Vector ydot;
    Vector r_u_f, r_z_f; // M u, M ztilde (empty when f carries no matrix)
    Vector r_u_h, r_z_h; // A u, A ztilde
    long k = 0;
};

// Full-vector reference variant of the algorithm; the correctness oracle for
// the residual-maintaining implementation.
class ReferenceRun {
public:
    ReferenceRun(const ProblemSpec& prob, const SolverConfig& cfg)
        : prob_(prob), cfg_(cfg), b0_(detail::initial_B(prob, cfg.beta1)),
          sampler_(build_sampler(b0_, cfg.alpha)), rng_(cfg.seed)
    {
        detail::validate(prob, cfg);
        tau0_ = cfg.g_zero_mode ? 1.0 : sampler_.tau0();
        tau_ = tau0_;
        beta_ = cfg.beta1;
        xbar_ = prob.x0;
        xtilde_ = prob.x0;
        ydot_.assign(static_cast<std::size_t>(prob.h.dim()), 0.0);
    }

    void step()
    {
        const auto& part = prob_.partition;
        // x^hat = (1 - tau) xbar + tau xtilde
        Vector xhat(xbar_.size());
        for (std::size_t j = 0; j < xhat.size(); ++j) {
            xhat[j] = (1.0 - tau_) * xbar_[j] + tau_ * xtilde_[j];
        }
        Vector uhat = prob_.A.multiply(xhat);
        SmoothingContext ctx(beta_, ydot_, prob_.h);
        Vector ystar = smoothed_dual(ctx, uhat);

        const int i = sampler_.sample(rng_);
        const auto iu = static_cast<std::size_t>(i);
        const double bik = std::max(
            lipschitz_B(prob_.f.lhat()[iu], prob_.A.block_norm(i), beta_), 1e-12);

        Vector grad;
        if (prob_.f.has_matrix()) {
            Vector image = prob_.f.matrix().multiply(xhat);
            grad = prob_.f.grad_block(
                [&](int r) { return image[static_cast<std::size_t>(r)]; }, i, part);
        } else {
            grad = prob_.f.grad_block([](int) { return 0.0; }, i, part);
        }
        Vector aty = prob_.A.block_transpose_dot(i, ystar);
        for (std::size_t c = 0; c < grad.size(); ++c) grad[c] += aty[c];

        auto xt_i = part.block(xtilde_, i);
        Vector xt_new;
        double avg_weight;
        if (cfg_.g_zero_mode) {
            const double step_len = sampler_.q()[iu] / (tau_ * std::max(bik, 1e-300));
            xt_new.assign(xt_i.begin(), xt_i.end());
            for (std::size_t c = 0; c < xt_new.size(); ++c) {
                xt_new[c] -= step_len * grad[c];
            }
            avg_weight = tau_ / sampler_.q()[iu];
        } else {
            const double s = tau_ * bik / tau0_;
            Vector v(xt_i.begin(), xt_i.end());
            for (std::size_t c = 0; c < v.size(); ++c) v[c] -= grad[c] / s;
            xt_new = prob_.g.prox_range(part.offset(i), v, 1.0 / s);
            avg_weight = tau_ / tau0_;
        }

        xbar_ = std::move(xhat);
        auto xb_i = part.block(xbar_, i);
        for (std::size_t c = 0; c < xt_new.size(); ++c) {
            xb_i[c] += avg_weight * (xt_new[c] - xt_i[c]);
            xt_i[c] = xt_new[c];
        }

        tau_ = next_tau(cfg_.regime, tau_);
        beta_ = next_beta(cfg_.regime, beta_, tau_);
        ++k_;
    }

    const Vector& xbar() const { return xbar_; }
    const Vector& xtilde() const { return xtilde_; }
    double tau() const { return tau_; }
    double tau0() const { return tau0_; }
    double beta() const { return beta_; }
    long k() const { return k_; }
    const Sampler& sampler() const { return sampler_; }
    const Vector& b0() const { return b0_; }

private:
    const ProblemSpec& prob_;
    SolverConfig cfg_;
    Vector b0_;
    Sampler sampler_;
    Rng rng_;
    double tau0_;
    double tau_;
    double beta_; // beta_{k+1}
    Vector xbar_, xtilde_, ydot_;
    long k_ = 0;
};

// Residual-maintaining variant. Per-iteration work is proportional to the
// stored entries of the sampled column block; the dual vector is evaluated
// entrywise at exactly the rows those entries touch.
class EfficientRun {
public:
    EfficientRun(const ProblemSpec& prob, const SolverConfig& cfg)
        : prob_(prob), cfg_(cfg), b0_(detail::initial_B(prob, cfg.beta1)),
          sampler_(build_sampler(b0_, cfg.alpha)), rng_(cfg.seed)
    {
        detail::validate(prob, cfg);
        state_.tau = tau0_ = sampler_.tau0();
        if (tau0_ >= 1.0) {
            throw std::invalid_argument(
                "efficient variant is ill-defined for tau0 = 1 (single block); "
                "use the reference variant");
        }
        state_.beta_next = cfg.beta1;
        state_.u.assign(prob.x0.size(), 0.0);
        state_.ztilde = prob.x0;
        state_.c = 1.0; // c_{-1}
        state_.ydot.assign(static_cast<std::size_t>(prob.h.dim()), 0.0);
        state_.r_u_h.assign(static_cast<std::size_t>(prob.A.rows()), 0.0);
        state_.r_z_h = prob.A.multiply(state_.ztilde);
        if (prob.f.has_matrix()) {
            state_.r_u_f.assign(static_cast<std::size_t>(prob.f.matrix().rows()), 0.0);
            state_.r_z_f = prob.f.matrix().multiply(state_.ztilde);
        }
    }

    void step()
    {
        const auto& part = prob_.partition;
        const double ck = state_.c * (1.0 - state_.tau);
        const double beta = state_.beta_next;

        const int i = sampler_.sample(rng_);
        const auto iu = static_cast<std::size_t>(i);
        const double bik = std::max(
            lipschitz_B(prob_.f.lhat()[iu], prob_.A.block_norm(i), beta), 1e-12);

        // nabla_i f(c_k u + ztilde) through the f-residuals
        Vector grad;
        if (prob_.f.has_matrix()) {
            grad = prob_.f.grad_block(
                [&](int r) {
                    const auto ru = static_cast<std::size_t>(r);
                    return ck * state_.r_u_f[ru] + state_.r_z_f[ru];
                },
                i, part);
        } else {
            grad = prob_.f.grad_block([](int) { return 0.0; }, i, part);
        }
        // A_i^T y*_{beta_{k+1}}(c_k A u + A ztilde), dual entries on demand
        Vector aty = prob_.A.block_transpose_apply(i, [&](int r) {
            const auto ru = static_cast<std::size_t>(r);
            const double uhat_r = ck * state_.r_u_h[ru] + state_.r_z_h[ru];
            return smoothed_dual_entry(prob_.h, beta, state_.ydot[ru], uhat_r, r);
        });
        for (std::size_t c = 0; c < grad.size(); ++c) grad[c] += aty[c];

        // t = argmin <grad, t> + g_i(t + ztilde_i) + (s/2)||t||^2
        const double s = state_.tau * bik / tau0_;
        auto z_i = part.block(state_.ztilde, i);
        Vector v(z_i.begin(), z_i.end());
        for (std::size_t c = 0; c < v.size(); ++c) v[c] -= grad[c] / s;
        Vector z_new = prob_.g.prox_range(part.offset(i), v, 1.0 / s);
        Vector t(z_new.size());
        for (std::size_t c = 0; c < t.size(); ++c) t[c] = z_new[c] - z_i[c];

        const double coef = (1.0 - state_.tau / tau0_) / ck;
        auto u_i = part.block(state_.u, i);
        for (std::size_t c = 0; c < t.size(); ++c) {
            z_i[c] = z_new[c];
            u_i[c] -= coef * t[c];
        }
        prob_.A.add_block_times(i, t, 1.0, state_.r_z_h);
        prob_.A.add_block_times(i, t, -coef, state_.r_u_h);
        if (prob_.f.has_matrix()) {
            prob_.f.matrix().add_block_times(i, t, 1.0, state_.r_z_f);
            prob_.f.matrix().add_block_times(i, t, -coef, state_.r_u_f);
        }
        column_ops_ += prob_.A.block_nnz(i) + static_cast<std::size_t>(part.size(i));
        if (prob_.f.has_matrix()) column_ops_ += prob_.f.matrix().block_nnz(i);

        state_.c = ck;
        state_.tau = next_tau(cfg_.regime, state_.tau);
        state_.beta_next = next_beta(cfg_.regime, state_.beta_next, state_.tau);
        ++state_.k;
    }

    // xbar^k = c_{k-1} u^k + ztilde^k
    Vector xbar() const
    {
        Vector x(state_.ztilde.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = state_.c * state_.u[j] + state_.ztilde[j];
        }
        return x;
    }

    // Momentum restart: the dual center moves to the current dual point, the
    // primal bookkeeping returns to a fresh start at ztilde.
    void restart()
    {
        Vector uhat(state_.r_z_h.size());
        for (std::size_t j = 0; j < uhat.size(); ++j) {
            uhat[j] = state_.c * state_.r_u_h[j] + state_.r_z_h[j];
        }
        SmoothingContext ctx(state_.beta_next, state_.ydot, prob_.h);
        state_.ydot = smoothed_dual(ctx, uhat);
        std::fill(state_.u.begin(), state_.u.end(), 0.0);
        std::fill(state_.r_u_h.begin(), state_.r_u_h.end(), 0.0);
        std::fill(state_.r_u_f.begin(), state_.r_u_f.end(), 0.0);
        state_.beta_next = cfg_.beta1;
        state_.tau = tau0_;
        state_.c = 1.0;
    }

    // Recompute maintained residuals from scratch and swap them in if the
    // accumulated drift exceeds 1e-8 relative.
    void refresh_residuals()
    {
        auto refresh = [](Vector& held, Vector fresh) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < held.size(); ++j) {
                const double d = held[j] - fresh[j];
                num += d * d;
                den += fresh[j] * fresh[j];
            }
            if (num > 1e-16 * std::max(den, 1.0)) held = std::move(fresh);
        };
        refresh(state_.r_u_h, prob_.A.multiply(state_.u));
        refresh(state_.r_z_h, prob_.A.multiply(state_.ztilde));
        if (prob_.f.has_matrix()) {
            refresh(state_.r_u_f, prob_.f.matrix().multiply(state_.u));
            refresh(state_.r_z_f, prob_.f.matrix().multiply(state_.ztilde));
        }
    }

    const SolverState& state() const { return state_; }
    double tau0() const { return tau0_; }
    const Sampler& sampler() const { return sampler_; }
    const Vector& b0() const { return b0_; }
    std::uint64_t column_ops() const { return column_ops_; }

private:
    const ProblemSpec& prob_;
    SolverConfig cfg_;
    Vector b0_;
    Sampler sampler_;
    Rng rng_;
    double tau0_ = 0.0;
    SolverState state_;
    std::uint64_t column_ops_ = 0;
};

struct RunResult {
    Vector x;
    Trace trace;
    std::uint64_t column_ops = 0;
};

inline RunResult run(const ProblemSpec& prob, const SolverConfig& cfg)
{
    detail::validate(prob, cfg);
    const long ckpt = cfg.checkpoint_every > 0 ? cfg.checkpoint_every
                                               : std::max(1, prob.partition.n());
    const auto t_start = std::chrono::steady_clock::now();
    RunResult result;

    auto record = [&](long k, const Vector& x, double tau, double beta) {
        Metrics m = metrics(prob, x);
        if (!std::isfinite(m.objective)) throw DivergedError(k);
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      t_start)
                .count();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        result.trace.records.push_back(
            {k, static_cast<double>(k) / prob.partition.n(), m.objective,
             prob.known_fstar ? m.objective - *prob.known_fstar : nan,
             m.feasibility.value_or(nan), tau, beta, wall});
    };

    if (cfg.variant == Variant::reference) {
        ReferenceRun solver(prob, cfg);
        for (long k = 0; k < cfg.max_iterations; ++k) {
            if (k % ckpt == 0) record(k, solver.xbar(), solver.tau(), solver.beta());
            solver.step();
        }
        record(cfg.max_iterations, solver.xbar(), solver.tau(), solver.beta());
        result.x = solver.xbar();
    } else {
        EfficientRun solver(prob, cfg);
        for (long k = 0; k < cfg.max_iterations; ++k) {
            if (k % ckpt == 0) {
                solver.refresh_residuals();
                record(k, solver.xbar(), solver.state().tau, solver.state().beta_next);
            }
            if (cfg.restart_period && k > 0 && k % *cfg.restart_period == 0) {
                solver.restart();
            }
            solver.step();
        }
        solver.refresh_residuals();
        record(cfg.max_iterations, solver.xbar(), solver.state().tau,
               solver.state().beta_next);
        result.x = solver.xbar();
        result.column_ops = solver.column_ops();
    }
    return result;
}

} // namespace smartcd
