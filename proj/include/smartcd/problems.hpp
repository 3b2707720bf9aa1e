#pragma once

#include <fstream>
#include <sstream>

#include "functions.hpp"
#include "schedule.hpp"

namespace smartcd {

// Extra data kept by the dual-SVM builder so metrics can evaluate the primal
// objective and the duality gap.
struct SvmInfo {
    BlockSparseMatrix features; // p x m, examples as columns, unscaled
    Vector labels;              // +-1
    Vector caps;                // C_i
    double lambda;
};

struct ProblemSpec {
    SmoothPart f;
    SeparablePart g;
    ConjugateProxPart h;
    BlockSparseMatrix A;
    BlockPartition partition;
    Vector x0;
    std::optional<double> known_fstar;
    std::string fstar_provenance;
    std::optional<Vector> known_xstar;
    std::optional<SvmInfo> svm;

    void audit() const
    {
        if (static_cast<int>(x0.size()) != partition.p()) {
            throw std::invalid_argument("ProblemSpec: x0 dimension mismatch");
        }
        if (A.cols() != partition.p() || A.rows() != h.dim()) {
            throw std::invalid_argument("ProblemSpec: A dimensions inconsistent");
        }
        if (g.dim() != partition.p()) {
            throw std::invalid_argument("ProblemSpec: g dimension mismatch");
        }
        if (f.has_matrix() && f.matrix().cols() != partition.p()) {
            throw std::invalid_argument("ProblemSpec: smooth matrix dimension mismatch");
        }
    }
};

// Forward differences along every axis; one row per coordinate pair, each row
// carrying exactly (-1, +1).
inline BlockSparseMatrix build_difference_operator(const std::vector<int>& dims)
{
    if (dims.empty() || dims.size() > 3) {
        throw std::invalid_argument("difference operator: 1D, 2D or 3D shapes only");
    }
    int p = 1;
    for (int d : dims) {
        if (d < 1) throw std::invalid_argument("difference operator: nonpositive extent");
        p *= d;
    }
    std::vector<int> stride(dims.size(), 1);
    for (std::size_t a = 1; a < dims.size(); ++a) {
        stride[a] = stride[a - 1] * dims[a - 1];
    }
    std::vector<Triplet> entries;
    int row = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) {
        for (int idx = 0; idx < p; ++idx) {
            const int coord = (idx / stride[a]) % dims[a];
            if (coord + 1 >= dims[a]) continue;
            entries.push_back({row, idx, -1.0});
            entries.push_back({row, idx + stride[a], 1.0});
            ++row;
        }
    }
    return BlockSparseMatrix(row, BlockPartition::scalar_blocks(p), entries);
}

// min 2 x_p subject to sum_{k<p} x_k = 1, the constraint x_p - sum_{k<p} x_k = 0
// repeated d times, and x_p >= 0. Every feasible point has x_p = 1, so F* = 2.
inline ProblemSpec degenerate_lp(int p, int d)
{
    if (p < 2) throw std::invalid_argument("degenerate_lp: p must be >= 2");
    if (d < 1) throw std::invalid_argument("degenerate_lp: d must be >= 1");

    std::vector<Triplet> entries;
    for (int k = 0; k + 1 < p; ++k) entries.push_back({0, k, 1.0});
    for (int j = 1; j <= d; ++j) {
        for (int k = 0; k + 1 < p; ++k) entries.push_back({j, k, -1.0});
        entries.push_back({j, p - 1, 1.0});
    }
    auto part = BlockPartition::scalar_blocks(p);
    BlockSparseMatrix a(d + 1, part, entries);

    Vector c(static_cast<std::size_t>(d) + 1, 0.0);
    c[0] = 1.0;
    Vector w(static_cast<std::size_t>(p), 0.0);
    w.back() = 2.0;

    std::vector<SeparablePart::Term> terms(static_cast<std::size_t>(p));
    terms.back().kind = SeparablePart::Kind::nonneg;

    Vector xstar(static_cast<std::size_t>(p), 1.0 / static_cast<double>(p - 1));
    xstar.back() = 1.0;

    ProblemSpec prob{SmoothPart::linear(std::move(w), part),
                     SeparablePart::from_terms(std::move(terms)),
                     ConjugateProxPart::equality(std::move(c)),
                     std::move(a),
                     part,
                     Vector(static_cast<std::size_t>(p), 0.0),
                     2.0,
                     "analytic: every feasible point has x_p = 1",
                     std::move(xstar),
                     std::nullopt};
    prob.audit();
    return prob;
}

// min (1/2)||Mx - b||^2 + lambda r ||x||_1 + lambda (1-r) ||Dx||_1
inline ProblemSpec tv_l1_least_squares(BlockSparseMatrix m, Vector b, double lambda,
                                       double r, const std::vector<int>& dims)
{
    if (lambda < 0.0) throw std::invalid_argument("tv_l1: lambda must be nonnegative");
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("tv_l1: r must lie in [0,1]");
    BlockSparseMatrix d_op = build_difference_operator(dims);
    if (d_op.cols() != m.cols()) {
        throw std::invalid_argument("tv_l1: dims inconsistent with design matrix");
    }
    const int p = m.cols();
    auto part = BlockPartition::scalar_blocks(p);
    const int m_rows = d_op.rows();

    ProblemSpec prob{SmoothPart::least_squares(m.repartitioned(part), std::move(b)),
                     SeparablePart::l1(lambda * r, p),
                     ConjugateProxPart::l1(lambda * (1.0 - r), m_rows),
                     std::move(d_op),
                     part,
                     Vector(static_cast<std::size_t>(p), 0.0),
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    prob.audit();
    return prob;
}

// Dual soft-margin SVM with bias:
//   min (1/(2 lambda)) ||M D(b) x||^2 - sum_i x_i
//   s.t. 0 <= x_i <= C_i,  b^T x = 0.
// The quadratic is folded into the canonical least-squares form by scaling
// column j of M with b_j / sqrt(lambda).
inline ProblemSpec svm_dual(const BlockSparseMatrix& features, const Vector& labels,
                            Vector caps, double lambda)
{
    const int m = features.cols();  // examples
    if (static_cast<int>(labels.size()) != m) {
        throw std::invalid_argument("svm_dual: label count mismatch");
    }
    for (double b : labels) {
        if (b != 1.0 && b != -1.0) {
            throw std::invalid_argument("svm_dual: labels must be +-1");
        }
    }
    if (static_cast<int>(caps.size()) != m) {
        throw std::invalid_argument("svm_dual: one cap per example required");
    }
    for (double c : caps) {
        if (!(c > 0.0)) throw std::invalid_argument("svm_dual: caps must be positive");
    }
    if (!(lambda > 0.0)) throw std::invalid_argument("svm_dual: lambda must be positive");

    auto part = BlockPartition::scalar_blocks(m);
    const double s = 1.0 / std::sqrt(lambda);
    std::vector<Triplet> scaled = features.triplets();
    for (auto& t : scaled) {
        t.value *= s * labels[static_cast<std::size_t>(t.col)];
    }
    BlockSparseMatrix m_scaled(features.rows(), part, scaled);

    std::vector<Triplet> row;
    row.reserve(labels.size());
    for (int j = 0; j < m; ++j) {
        row.push_back({0, j, labels[static_cast<std::size_t>(j)]});
    }
    BlockSparseMatrix a(1, part, row);

    std::vector<SeparablePart::Term> terms(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        terms[static_cast<std::size_t>(i)] = {SeparablePart::Kind::box, 0.0, 0.0,
                                              caps[static_cast<std::size_t>(i)]};
    }

    ProblemSpec prob{SmoothPart::least_squares(std::move(m_scaled),
                                               Vector(static_cast<std::size_t>(features.rows()), 0.0),
                                               Vector(static_cast<std::size_t>(m), -1.0)),
                     SeparablePart::from_terms(std::move(terms)),
                     ConjugateProxPart::equality({0.0}),
                     std::move(a),
                     part,
                     Vector(static_cast<std::size_t>(m), 0.0),
                     std::nullopt,
                     "",
                     std::nullopt,
                     SvmInfo{features, labels, std::move(caps), lambda}};
    prob.audit();
    return prob;
}

// libsvm interchange text: one example per line, "label idx:val idx:val ...",
// 1-based indices. Examples become columns of the returned matrix.
struct LibsvmData {
    BlockSparseMatrix features; // p x m
    Vector labels;
};

inline LibsvmData parse_libsvm(std::istream& in)
{
    std::vector<Triplet> entries;
    Vector labels;
    int max_feature = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        double raw_label;
        if (!(ls >> raw_label)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw std::invalid_argument("libsvm parse error at line " + std::to_string(line_no));
        }
        double label;
        if (raw_label == 1.0) label = 1.0;
        else if (raw_label == -1.0 || raw_label == 0.0) label = -1.0;
        else {
            throw std::invalid_argument("libsvm label at line " + std::to_string(line_no) +
                                        " is not mappable to +-1");
        }
        const int col = static_cast<int>(labels.size());
        labels.push_back(label);
        std::string tok;
        while (ls >> tok) {
            const auto sep = tok.find(':');
            if (sep == std::string::npos) {
                throw std::invalid_argument("libsvm parse error at line " + std::to_string(line_no));
            }
            int idx;
            double val;
            try {
                idx = std::stoi(tok.substr(0, sep));
                val = std::stod(tok.substr(sep + 1));
            } catch (const std::exception&) {
                throw std::invalid_argument("libsvm parse error at line " + std::to_string(line_no));
            }
            if (idx < 1) {
                throw std::invalid_argument("libsvm feature index at line " +
                                            std::to_string(line_no) + " must be >= 1");
            }
            max_feature = std::max(max_feature, idx);
            entries.push_back({idx - 1, col, val});
        }
    }
    if (labels.empty()) {
        throw std::invalid_argument("libsvm input contains no examples");
    }
    const int m = static_cast<int>(labels.size());
    return LibsvmData{
        BlockSparseMatrix(max_feature, BlockPartition::scalar_blocks(m), entries),
        std::move(labels)};
}

inline LibsvmData parse_libsvm(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open libsvm file: " + path);
    return parse_libsvm(in);
}

struct Metrics {
    double objective;
    std::optional<double> feasibility;
    std::optional<double> duality_gap;
};

namespace detail {

// Bias recovery for the SVM primal: the hinge sum is piecewise linear in w0,
// so a minimizer sits at one of the kink locations w0 = b_i - s_i.
inline double svm_primal_value(const SvmInfo& info, const Vector& x)
{
    Vector dual_scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        dual_scaled[i] = info.labels[i] * x[i] / info.lambda;
    }
    Vector w = info.features.multiply(dual_scaled); // (1/lambda) M D(b) x
    // scores s_i = <a_i, w> via w^T M
    const int m = info.features.cols();
    Vector scores(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        Vector col = info.features.block_transpose_dot(i, w);
        scores[static_cast<std::size_t>(i)] = col[0];
    }
    auto hinge_sum = [&](double w0) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            s += info.caps[iu] *
                 std::max(0.0, 1.0 - info.labels[iu] * (scores[iu] + w0));
        }
        return s;
    };
    double best = hinge_sum(0.0);
    for (int i = 0; i < m; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        best = std::min(best, hinge_sum(info.labels[iu] - scores[iu]));
    }
    return best + 0.5 * info.lambda * dot(w, w);
}

} // namespace detail

inline Metrics metrics(const ProblemSpec& prob, const Vector& x)
{
    Metrics out{};
    Vector ax = prob.A.multiply(x);
    out.objective = prob.f.value(x) + prob.g.value(x) + prob.h.finite_value(ax);
    if (prob.h.kind() == ConjugateProxPart::Kind::equality) {
        double sq = 0.0;
        for (std::size_t j = 0; j < ax.size(); ++j) {
            const double d = ax[j] - prob.h.target()[j];
            sq += d * d;
        }
        out.feasibility = std::sqrt(sq);
    }
    if (prob.svm) {
        // gap = primal(w(x), w0) - dual(x); the dual objective is -f(x)
        out.duality_gap = detail::svm_primal_value(*prob.svm, x) + prob.f.value(x);
    }
    return out;
}

// Piecewise-constant signal plus Gaussian noise; stands in for the imaging
// data the TV experiments need.
inline Vector piecewise_constant_signal(int p, int segments, Rng& rng)
{
    Vector x(static_cast<std::size_t>(p), 0.0);
    int start = 0;
    for (int s = 0; s < segments; ++s) {
        int end = (s == segments - 1) ? p : (p * (s + 1)) / segments;
        const double level = 2.0 * uniform01(rng) - 1.0;
        for (int i = start; i < end; ++i) x[static_cast<std::size_t>(i)] = level;
        start = end;
    }
    return x;
}

inline double gaussian(Rng& rng)
{
    // Box-Muller on the explicit uniform; keeps draws platform-stable
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline ProblemSpec synthetic_tv_instance(int p, int m, double lambda, double r,
                                         std::uint64_t seed)
{
    Rng rng(seed);
    Vector truth = piecewise_constant_signal(p, 8, rng);
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < m; ++i) {
            entries.push_back({i, j, gaussian(rng) / std::sqrt(static_cast<double>(m))});
        }
    }
    BlockSparseMatrix design(m, BlockPartition::scalar_blocks(p), entries);
    Vector b = design.multiply(truth);
    for (auto& v : b) v += 0.01 * gaussian(rng);
    return tv_l1_least_squares(std::move(design), std::move(b), lambda, r, {p});
}

inline ProblemSpec synthetic_svm_instance(int m, int p, double cap, double lambda,
                                          std::uint64_t seed)
{
    Rng rng(seed);
    Vector w_true(static_cast<std::size_t>(p));
    for (auto& v : w_true) v = gaussian(rng);
    const double w_norm = norm2(w_true);
    std::vector<Triplet> entries;
    Vector labels(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        Vector a(static_cast<std::size_t>(p));
        for (auto& v : a) v = gaussian(rng);
        // imbalanced classes and an off-center separator keep the bias
        // multiplier away from zero
        const double margin = dot(a, w_true) / w_norm + 0.75;
        const double label = (j % 3 != 0) ? 1.0 : -1.0;
        const double shift = label * std::max(0.0, 1.0 - label * margin) + label * 0.1;
        for (int i = 0; i < p; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            a[iu] += shift * w_true[iu] / w_norm;
            entries.push_back({i, j, a[iu]});
        }
        labels[static_cast<std::size_t>(j)] = label;
    }
    BlockSparseMatrix features(p, BlockPartition::scalar_blocks(m), entries);
    return svm_dual(features, labels, Vector(static_cast<std::size_t>(m), cap), lambda);
}

} // namespace smartcd
