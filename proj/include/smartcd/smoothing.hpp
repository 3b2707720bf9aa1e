#pragma once

#include "functions.hpp"

namespace smartcd {

// Smoothing of h around the center ydot with parameter beta:
//   h_beta(u) = max_y { <u, y> - h*(y) - (beta/2) ||y - ydot||^2 }.
struct SmoothingContext {
    double beta;
    const Vector& ydot;
    const ConjugateProxPart& h;

    SmoothingContext(double beta_, const Vector& ydot_, const ConjugateProxPart& h_)
        : beta(beta_), ydot(ydot_), h(h_)
    {
        if (beta <= 0.0) {
            throw std::invalid_argument("SmoothingContext: beta must be positive");
        }
    }
};

// Maximizer y*_beta(u) = prox_{beta^-1 h*}(ydot + beta^-1 u).
inline Vector smoothed_dual(const SmoothingContext& ctx, const Vector& u)
{
    Vector v(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        v[j] = ctx.ydot[j] + u[j] / ctx.beta;
    }
    return ctx.h.prox_conj(v, 1.0 / ctx.beta);
}

// One entry of y*_beta(u); all the solver's block work goes through this.
inline double smoothed_dual_entry(const ConjugateProxPart& h, double beta, double ydot_j,
                                  double u_j, int j)
{
    return h.prox_conj_entry(ydot_j + u_j / beta, 1.0 / beta, j);
}

inline double h_beta_value(const SmoothingContext& ctx, const Vector& u)
{
    Vector y = smoothed_dual(ctx, u);
    double v = dot(u, y) - ctx.h.conj_value(y);
    double d = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double e = y[j] - ctx.ydot[j];
        d += e * e;
    }
    return v - 0.5 * ctx.beta * d;
}

// B_i(beta) = Lhat_i + ||A_i||^2 / beta
inline double lipschitz_B(double lhat_i, double norm_a_i, double beta)
{
    if (beta <= 0.0) {
        throw std::invalid_argument("lipschitz_B: beta must be positive");
    }
    return lhat_i + norm_a_i * norm_a_i / beta;
}

} // namespace smartcd
