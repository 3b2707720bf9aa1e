#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "blocks.hpp"

namespace smartcd {

// Smooth part f(x) = (1/2)||Mx - b||^2 + <w, x>, with any of the pieces
// absent. Per-block gradient Lipschitz constants are fixed at construction.
class SmoothPart {
public:
    enum class Kind { zero, linear, least_squares };

    static SmoothPart zero(const BlockPartition& part)
    {
        SmoothPart f;
        f.kind_ = Kind::zero;
        f.lhat_.assign(static_cast<std::size_t>(part.n()), 0.0);
        f.p_ = part.p();
        return f;
    }

    static SmoothPart linear(Vector w, const BlockPartition& part)
    {
        if (static_cast<int>(w.size()) != part.p()) {
            throw std::invalid_argument("SmoothPart::linear: dimension mismatch");
        }
        SmoothPart f;
        f.kind_ = Kind::linear;
        f.w_ = std::move(w);
        f.lhat_.assign(static_cast<std::size_t>(part.n()), 0.0);
        f.p_ = part.p();
        return f;
    }

    // Optional linear term rides along with the quadratic (dual SVM needs it).
    static SmoothPart least_squares(BlockSparseMatrix m, Vector b,
                                    std::optional<Vector> w = std::nullopt)
    {
        if (static_cast<int>(b.size()) != m.rows()) {
            throw std::invalid_argument("SmoothPart::least_squares: rhs dimension mismatch");
        }
        SmoothPart f;
        f.kind_ = Kind::least_squares;
        f.p_ = m.cols();
        f.b_ = std::move(b);
        f.lhat_.resize(static_cast<std::size_t>(m.partition().n()));
        for (int i = 0; i < m.partition().n(); ++i) {
            const double nrm = m.block_norm(i);
            f.lhat_[static_cast<std::size_t>(i)] = nrm * nrm;
        }
        if (w) {
            if (static_cast<int>(w->size()) != m.cols()) {
                throw std::invalid_argument("SmoothPart::least_squares: linear term mismatch");
            }
            f.w_ = std::move(*w);
        }
        f.m_ = std::move(m);
        return f;
    }

    Kind kind() const { return kind_; }
    const Vector& lhat() const { return lhat_; }
    bool has_matrix() const { return kind_ == Kind::least_squares; }
    const BlockSparseMatrix& matrix() const { return m_; }
    const Vector& rhs() const { return b_; }
    int dim() const { return p_; }

    SmoothPart repartitioned(const BlockPartition& part) const
    {
        switch (kind_) {
        case Kind::zero: return zero(part);
        case Kind::linear: return linear(w_, part);
        case Kind::least_squares: {
            std::optional<Vector> w;
            if (!w_.empty()) w = w_;
            return least_squares(m_.repartitioned(part), b_, std::move(w));
        }
        }
        throw std::logic_error("unreachable");
    }

    double value(const Vector& x) const
    {
        double v = 0.0;
        if (kind_ == Kind::least_squares) {
            Vector r = m_.multiply(x);
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double d = r[j] - b_[j];
                v += 0.5 * d * d;
            }
        }
        if (!w_.empty()) v += dot(w_, x);
        return v;
    }

    Vector grad_full(const Vector& x) const
    {
        if (static_cast<int>(x.size()) != p_) {
            throw std::invalid_argument("grad_f_full: dimension mismatch");
        }
        Vector g(x.size(), 0.0);
        if (kind_ == Kind::least_squares) {
            Vector r = m_.multiply(x);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] -= b_[j];
            for (int i = 0; i < m_.partition().n(); ++i) {
                Vector gi = m_.block_transpose_dot(i, r);
                const int off = m_.partition().offset(i);
                for (std::size_t c = 0; c < gi.size(); ++c) {
                    g[static_cast<std::size_t>(off) + c] = gi[c];
                }
            }
        }
        if (!w_.empty()) {
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += w_[j];
        }
        return g;
    }

    // Partial gradient evaluated through the maintained image Mx. The caller
    // supplies a row functor so lazily combined residuals work too.
    template <class RowValue>
    Vector grad_block(RowValue&& image_at, int i, const BlockPartition& part) const
    {
        Vector g(static_cast<std::size_t>(part.size(i)), 0.0);
        if (kind_ == Kind::least_squares) {
            g = m_.block_transpose_apply(
                i, [&](int r) { return image_at(r) - b_[static_cast<std::size_t>(r)]; });
        }
        if (!w_.empty()) {
            const int off = part.offset(i);
            for (std::size_t c = 0; c < g.size(); ++c) {
                g[c] += w_[static_cast<std::size_t>(off) + c];
            }
        }
        return g;
    }

    Vector grad_block(const Vector& image, int i, const BlockPartition& part) const
    {
        return grad_block([&](int r) { return image[static_cast<std::size_t>(r)]; }, i, part);
    }

private:
    Kind kind_ = Kind::zero;
    BlockSparseMatrix m_;
    Vector b_;
    Vector w_;
    Vector lhat_;
    int p_ = 0;
};

// Separable part g(x) = sum g_i(x_i). Every built-in term is coordinatewise
// separable, so g carries its own per-coordinate terms and applies to any
// block partition the solver happens to use.
class SeparablePart {
public:
    enum class Kind { zero, l1, box, nonneg };

    struct Term {
        Kind kind = Kind::zero;
        double weight = 0.0; // l1
        double lo = 0.0;     // box
        double hi = 0.0;     // box
    };

    static SeparablePart all_zero(int p) { return uniform({Kind::zero, 0, 0, 0}, p); }

    static SeparablePart l1(double weight, int p)
    {
        return uniform({Kind::l1, weight, 0, 0}, p);
    }

    static SeparablePart box(double lo, double hi, int p)
    {
        return uniform({Kind::box, 0, lo, hi}, p);
    }

    static SeparablePart from_terms(std::vector<Term> terms)
    {
        SeparablePart g;
        g.terms_ = std::move(terms);
        return g;
    }

    int dim() const { return static_cast<int>(terms_.size()); }
    const Term& term(int coord) const { return terms_[static_cast<std::size_t>(coord)]; }

    bool all_zero_terms() const
    {
        for (const auto& t : terms_) {
            if (t.kind != Kind::zero) return false;
        }
        return true;
    }

    // argmin_u { g(u) + (1/(2 step)) ||u - v||^2 } over the coordinate range
    // starting at `offset`.
    Vector prox_range(int offset, std::span<const double> v, double step) const
    {
        if (step <= 0.0) {
            throw std::invalid_argument("prox_g_block: step must be positive");
        }
        Vector out(v.begin(), v.end());
        for (std::size_t c = 0; c < out.size(); ++c) {
            const Term& t = terms_.at(static_cast<std::size_t>(offset) + c);
            double& u = out[c];
            switch (t.kind) {
            case Kind::zero:
                break;
            case Kind::l1: {
                const double thr = t.weight * step;
                u = (u > thr) ? u - thr : (u < -thr) ? u + thr : 0.0;
                break;
            }
            case Kind::box:
                u = std::clamp(u, t.lo, t.hi);
                break;
            case Kind::nonneg:
                u = std::max(u, 0.0);
                break;
            }
        }
        return out;
    }

    double value_range(int offset, std::span<const double> xi) const
    {
        double s = 0.0;
        for (std::size_t c = 0; c < xi.size(); ++c) {
            const Term& t = terms_.at(static_cast<std::size_t>(offset) + c);
            const double u = xi[c];
            switch (t.kind) {
            case Kind::zero:
                break;
            case Kind::l1:
                s += t.weight * std::abs(u);
                break;
            case Kind::box:
                if (u < t.lo - 1e-12 || u > t.hi + 1e-12) {
                    return std::numeric_limits<double>::infinity();
                }
                break;
            case Kind::nonneg:
                if (u < -1e-12) return std::numeric_limits<double>::infinity();
                break;
            }
        }
        return s;
    }

    double value(const Vector& x) const
    {
        return value_range(0, {x.data(), x.size()});
    }

private:
    static SeparablePart uniform(Term t, int p)
    {
        SeparablePart g;
        g.terms_.assign(static_cast<std::size_t>(p), t);
        return g;
    }

    std::vector<Term> terms_;
};

// Nonsmooth part h, given through the prox of its conjugate. Two kinds:
//   l1:       h(u) = lambda * ||u||_1, so h* is the indicator of the
//             inf-ball of radius lambda (clamp prox, sigma-independent);
//   equality: h(u) = indicator of {u = c}, so h*(y) = <c, y>.
class ConjugateProxPart {
public:
    enum class Kind { l1, equality };

    static ConjugateProxPart l1(double lambda, int m)
    {
        if (lambda < 0.0) {
            throw std::invalid_argument("ConjugateProxPart::l1: negative weight");
        }
        ConjugateProxPart h;
        h.kind_ = Kind::l1;
        h.lambda_ = lambda;
        h.m_ = m;
        h.d_hstar_ = lambda * std::sqrt(static_cast<double>(m));
        return h;
    }

    static ConjugateProxPart equality(Vector c)
    {
        ConjugateProxPart h;
        h.kind_ = Kind::equality;
        h.m_ = static_cast<int>(c.size());
        h.c_ = std::move(c);
        h.d_hstar_ = std::numeric_limits<double>::infinity();
        return h;
    }

    Kind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    const Vector& target() const { return c_; }
    double d_hstar() const { return d_hstar_; }
    int dim() const { return m_; }
    bool lipschitz() const { return std::isfinite(d_hstar_); }

    // prox_{sigma h*}(v)
    Vector prox_conj(const Vector& v, double sigma) const
    {
        if (sigma <= 0.0) {
            throw std::invalid_argument("prox_h_conj: sigma must be positive");
        }
        Vector out(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) {
            out[j] = prox_conj_entry(v[j], sigma, static_cast<int>(j));
        }
        return out;
    }

    double prox_conj_entry(double vj, double sigma, int j) const
    {
        if (kind_ == Kind::l1) {
            return std::clamp(vj, -lambda_, lambda_);
        }
        return vj - sigma * c_[static_cast<std::size_t>(j)];
    }

    // h*(y) on dom h*; finite by construction for both kinds.
    double conj_value(const Vector& y) const
    {
        if (kind_ == Kind::l1) return 0.0;
        return dot(c_, y);
    }

    // The finite part of h: lambda*||u||_1 for the l1 kind, 0 for equality
    // (feasibility is reported separately, never folded into +inf).
    double finite_value(const Vector& u) const
    {
        if (kind_ == Kind::equality) return 0.0;
        double s = 0.0;
        for (double v : u) s += std::abs(v);
        return lambda_ * s;
    }

private:
    Kind kind_ = Kind::l1;
    double lambda_ = 0.0;
    Vector c_;
    double d_hstar_ = 0.0;
    int m_ = 0;
};

inline Vector grad_f_full(const SmoothPart& f, const Vector& x) { return f.grad_full(x); }

inline Vector grad_f_block(const SmoothPart& f, const Vector& image, int i,
                           const BlockPartition& part)
{
    return f.grad_block(image, i, part);
}

inline Vector prox_g_block(const SeparablePart& g, const BlockPartition& part, int i,
                           std::span<const double> v, double step)
{
    return g.prox_range(part.offset(i), v, step);
}

inline Vector prox_h_conj(const ConjugateProxPart& h, const Vector& v, double sigma)
{
    return h.prox_conj(v, sigma);
}

} // namespace smartcd
