#pragma once

#include <smartcd/smartcd.hpp>

namespace smartcd::testing {

inline BlockPartition random_partition(Rng& rng, int n, bool multi)
{
    std::vector<int> sizes(static_cast<std::size_t>(n), 1);
    if (multi) {
        for (auto& s : sizes) s = 1 + static_cast<int>(uniform01(rng) * 3.0);
    }
    return BlockPartition::make(std::move(sizes));
}

inline BlockSparseMatrix random_matrix(Rng& rng, int m, const BlockPartition& part,
                                       double density = 0.7)
{
    std::vector<Triplet> entries;
    for (int j = 0; j < part.p(); ++j) {
        bool any = false;
        for (int r = 0; r < m; ++r) {
            if (uniform01(rng) < density) {
                entries.push_back({r, j, gaussian(rng)});
                any = true;
            }
        }
        if (!any) entries.push_back({static_cast<int>(rng() % static_cast<std::uint64_t>(m)), j, gaussian(rng)});
    }
    return BlockSparseMatrix(m, part, entries);
}

enum class HCase { l1, equality, l1_zero };

// Random three-composite instance: least-squares f, l1 g, and one of the
// three h configurations. Regime follows the h kind.
inline ProblemSpec random_instance(Rng& rng, int n, bool multi_blocks, HCase h_case)
{
    BlockPartition part = random_partition(rng, n, multi_blocks);
    const int p = part.p();
    const int m_f = 4 + static_cast<int>(uniform01(rng) * 8.0);
    const int m_a = 3 + static_cast<int>(uniform01(rng) * 8.0);

    BlockSparseMatrix mf = random_matrix(rng, m_f, part);
    Vector b(static_cast<std::size_t>(m_f));
    for (auto& v : b) v = gaussian(rng);
    BlockSparseMatrix a = random_matrix(rng, m_a, part);

    ConjugateProxPart h = ConjugateProxPart::l1(0.3, m_a);
    if (h_case == HCase::l1_zero) h = ConjugateProxPart::l1(0.0, m_a);
    if (h_case == HCase::equality) {
        Vector c(static_cast<std::size_t>(m_a));
        for (auto& v : c) v = gaussian(rng);
        h = ConjugateProxPart::equality(std::move(c));
    }

    Vector x0(static_cast<std::size_t>(p));
    for (auto& v : x0) v = gaussian(rng);

    ProblemSpec prob{SmoothPart::least_squares(std::move(mf), std::move(b)),
                     SeparablePart::l1(0.1, p),
                     std::move(h),
                     std::move(a),
                     part,
                     std::move(x0),
                     std::nullopt,
                     "",
                     std::nullopt,
                     std::nullopt};
    prob.audit();
    return prob;
}

inline Regime regime_for(const ProblemSpec& prob)
{
    return prob.h.kind() == ConjugateProxPart::Kind::equality ? Regime::constrained
                                                              : Regime::lipschitz;
}

inline double max_rel_diff(const Vector& a, const Vector& b)
{
    double scale = 1.0;
    for (double v : b) scale = std::max(scale, std::abs(v));
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        d = std::max(d, std::abs(a[j] - b[j]) / scale);
    }
    return d;
}

} // namespace smartcd::testing
