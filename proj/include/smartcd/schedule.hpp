#pragma once

#include <random>

#include "blocks.hpp"

namespace smartcd {

enum class Regime { lipschitz, constrained };

// All randomness flows through mt19937_64 (bit-reproducible across platforms)
// with an explicit 53-bit uniform; std::uniform_real_distribution is avoided
// because its output is implementation-defined.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unique positive root of tau^3 + tau^2 + tau_k^2 tau - tau_k^2 = 0 in
// (0, tau_k): bisection bracket then Newton polish to |poly| <= 1e-14.
inline double next_tau_lipschitz(double tau_k)
{
    if (!(tau_k > 0.0) || tau_k > 1.0) {
        throw std::invalid_argument("next_tau_lipschitz: tau must lie in (0, 1]");
    }
    const double tk2 = tau_k * tau_k;
    auto poly = [&](double t) { return ((t + 1.0) * t + tk2) * t - tk2; };
    auto dpoly = [&](double t) { return (3.0 * t + 2.0) * t + tk2; };

    double lo = 0.0;
    double hi = tau_k; // poly(0) < 0 and poly(tau_k) = 2 tau_k^3 > 0
    double t = tau_k * (1.0 - 0.5 * tau_k);
    t = std::clamp(t, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double ft = poly(t);
        if (std::abs(ft) <= 1e-14 * std::max(1.0, tk2)) break;
        if (ft > 0.0) hi = t; else lo = t;
        const double step = ft / dpoly(t);
        double next = t - step;
        if (!(next > lo) || !(next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (next == t) break;
        t = next;
    }
    return t;
}

inline double next_tau_constrained(double tau_k)
{
    if (!(tau_k > 0.0) || tau_k > 1.0) {
        throw std::invalid_argument("next_tau_constrained: tau must lie in (0, 1]");
    }
    return tau_k / (1.0 + tau_k);
}

inline double next_tau(Regime regime, double tau_k)
{
    return regime == Regime::lipschitz ? next_tau_lipschitz(tau_k)
                                       : next_tau_constrained(tau_k);
}

inline double next_beta(Regime regime, double beta, double tau_next)
{
    if (beta <= 0.0) {
        throw std::invalid_argument("next_beta: beta must be positive");
    }
    return regime == Regime::lipschitz ? beta / (1.0 + tau_next)
                                       : (1.0 - tau_next) * beta;
}

// tau_k and beta_{k+1} for the running iteration; advance() moves to k+1.
struct Schedule {
    Regime regime;
    double tau;
    double beta_next;
    long k = 0;

    void advance()
    {
        tau = next_tau(regime, tau);
        beta_next = next_beta(regime, beta_next, tau);
        ++k;
    }
};

// Discrete sampler over n blocks: inverse-CDF table for small n, alias table
// above. One uniform draw per sample either way, so the consumed random
// stream is identical across variants.
class Sampler {
public:
    static constexpr int kAliasThreshold = 1024;

    explicit Sampler(Vector q) : q_(std::move(q))
    {
        const int n = static_cast<int>(q_.size());
        if (n == 0) throw std::invalid_argument("Sampler: empty distribution");
        double total = 0.0;
        tau0_ = q_[0];
        for (double qi : q_) {
            if (!(qi > 0.0)) throw std::invalid_argument("Sampler: probabilities must be positive");
            total += qi;
            tau0_ = std::min(tau0_, qi);
        }
        // rounding in the running sum grows with n
        if (std::abs(total - 1.0) > 1e-14 * std::max(100.0, static_cast<double>(n))) {
            throw std::invalid_argument("Sampler: probabilities must sum to 1");
        }
        if (n <= kAliasThreshold) {
            cum_.resize(q_.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < q_.size(); ++i) {
                acc += q_[i];
                cum_[i] = acc;
            }
            cum_.back() = 1.0;
        } else {
            build_alias();
        }
    }

    const Vector& q() const { return q_; }
    double tau0() const { return tau0_; }
    int n() const { return static_cast<int>(q_.size()); }

    int sample(Rng& rng) const
    {
        const double r = uniform01(rng);
        if (!cum_.empty()) {
            auto it = std::upper_bound(cum_.begin(), cum_.end(), r);
            if (it == cum_.end()) --it;
            return static_cast<int>(it - cum_.begin());
        }
        const double scaled = r * static_cast<double>(q_.size());
        auto cell = static_cast<std::size_t>(scaled);
        if (cell >= q_.size()) cell = q_.size() - 1;
        const double frac = scaled - static_cast<double>(cell);
        return frac < alias_prob_[cell] ? static_cast<int>(cell) : alias_[cell];
    }

private:
    void build_alias()
    {
        const std::size_t n = q_.size();
        alias_prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        Vector scaled(n);
        std::vector<std::size_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = q_[i] * static_cast<double>(n);
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const std::size_t s = small.back(); small.pop_back();
            const std::size_t l = large.back(); large.pop_back();
            alias_prob_[s] = scaled[s];
            alias_[s] = static_cast<int>(l);
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (std::size_t i : large) alias_prob_[i] = 1.0;
        for (std::size_t i : small) alias_prob_[i] = 1.0;
    }

    Vector q_;
    double tau0_ = 0.0;
    Vector cum_;
    Vector alias_prob_;
    std::vector<int> alias_;
};

// q_i = (B_i^0)^alpha / S_alpha
inline Sampler build_sampler(const Vector& b0, double alpha)
{
    if (b0.empty()) throw std::invalid_argument("build_sampler: empty constants");
    Vector q(b0.size());
    double s = 0.0;
    for (std::size_t i = 0; i < b0.size(); ++i) {
        if (!(b0[i] > 0.0)) {
            throw std::invalid_argument("build_sampler: constants must be positive");
        }
        q[i] = std::pow(b0[i], alpha);
        s += q[i];
    }
    for (auto& qi : q) qi /= s;
    // renormalize exactly so the sum-to-one invariant survives rounding
    double total = 0.0;
    for (double qi : q) total += qi;
    for (auto& qi : q) qi /= total;
    return Sampler(std::move(q));
}

inline int sample(const Sampler& s, Rng& rng)
{
    return s.sample(rng);
}

} // namespace smartcd
