#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smartcd {

using Vector = std::vector<double>;

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Partition of the p coordinates into n contiguous blocks.
class BlockPartition {
public:
    static BlockPartition make(std::vector<int> sizes)
    {
        if (sizes.empty()) {
            throw std::invalid_argument("BlockPartition: empty size list");
        }
        BlockPartition part;
        part.sizes_ = std::move(sizes);
        part.offsets_.reserve(part.sizes_.size());
        int off = 0;
        for (int s : part.sizes_) {
            if (s < 1) {
                throw std::invalid_argument("BlockPartition: block size must be >= 1");
            }
            part.offsets_.push_back(off);
            off += s;
        }
        part.p_ = off;
        return part;
    }

    static BlockPartition scalar_blocks(int p)
    {
        return make(std::vector<int>(static_cast<std::size_t>(p), 1));
    }

    static BlockPartition single_block(int p)
    {
        return make({p});
    }

    int n() const { return static_cast<int>(sizes_.size()); }
    int p() const { return p_; }
    int size(int i) const { return sizes_[check(i)]; }
    int offset(int i) const { return offsets_[check(i)]; }

    std::span<double> block(Vector& x, int i) const
    {
        return {x.data() + offset(i), static_cast<std::size_t>(size(i))};
    }
    std::span<const double> block(const Vector& x, int i) const
    {
        return {x.data() + offset(i), static_cast<std::size_t>(size(i))};
    }

private:
    std::size_t check(int i) const
    {
        if (i < 0 || i >= n()) {
            throw std::out_of_range("BlockPartition: block index " + std::to_string(i));
        }
        return static_cast<std::size_t>(i);
    }

    std::vector<int> sizes_;
    std::vector<int> offsets_;
    int p_ = 0;
};

inline BlockPartition make_partition(std::vector<int> sizes)
{
    return BlockPartition::make(std::move(sizes));
}

// Sum_i L_i^alpha * ||x_i||^2 with identity block metrics.
inline double weighted_norm_sq(const Vector& x, const BlockPartition& part,
                               const Vector& L, double alpha)
{
    if (static_cast<int>(x.size()) != part.p()) {
        throw std::invalid_argument("weighted_norm_sq: dimension mismatch");
    }
    if (static_cast<int>(L.size()) != part.n()) {
        throw std::invalid_argument("weighted_norm_sq: one weight per block required");
    }
    double total = 0.0;
    for (int i = 0; i < part.n(); ++i) {
        double sq = 0.0;
        for (double v : part.block(x, i)) {
            sq += v * v;
        }
        total += std::pow(L[static_cast<std::size_t>(i)], alpha) * sq;
    }
    return total;
}

struct Triplet {
    int row;
    int col;
    double value;
};

// Column-major sparse matrix with a block partition over columns and cached
// per-block operator norms. Immutable after construction.
class BlockSparseMatrix {
public:
    BlockSparseMatrix() : partition_(BlockPartition::single_block(1)), m_(0) {}

    BlockSparseMatrix(int m, BlockPartition partition, const std::vector<Triplet>& entries)
        : partition_(std::move(partition)), m_(m)
    {
        const int p = partition_.p();
        col_ptr_.assign(static_cast<std::size_t>(p) + 1, 0);
        for (const auto& t : entries) {
            if (t.row < 0 || t.row >= m || t.col < 0 || t.col >= p) {
                throw std::invalid_argument("BlockSparseMatrix: entry out of range");
            }
            ++col_ptr_[static_cast<std::size_t>(t.col) + 1];
        }
        std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
        rows_.resize(entries.size());
        values_.resize(entries.size());
        std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
        for (const auto& t : entries) {
            std::size_t pos = fill[static_cast<std::size_t>(t.col)]++;
            rows_[pos] = t.row;
            values_[pos] = t.value;
        }
        compute_block_norms();
    }

    int rows() const { return m_; }
    int cols() const { return partition_.p(); }
    std::size_t nnz() const { return values_.size(); }
    const BlockPartition& partition() const { return partition_; }

    // Same entries regrouped under a different column partition.
    BlockSparseMatrix repartitioned(BlockPartition partition) const
    {
        if (partition.p() != cols()) {
            throw std::invalid_argument("repartitioned: column count mismatch");
        }
        BlockSparseMatrix out;
        out.m_ = m_;
        out.partition_ = std::move(partition);
        out.col_ptr_ = col_ptr_;
        out.rows_ = rows_;
        out.values_ = values_;
        out.compute_block_norms();
        return out;
    }

    double block_norm(int i) const
    {
        if (i < 0 || i >= partition_.n()) {
            throw std::out_of_range("block_norm: block index out of range");
        }
        return block_norms_[static_cast<std::size_t>(i)];
    }

    const Vector& block_norms() const { return block_norms_; }

    std::size_t block_nnz(int i) const
    {
        const int lo = partition_.offset(i);
        const int hi = lo + partition_.size(i);
        return col_ptr_[static_cast<std::size_t>(hi)] - col_ptr_[static_cast<std::size_t>(lo)];
    }

    Vector multiply(const Vector& x) const
    {
        if (static_cast<int>(x.size()) != cols()) {
            throw std::invalid_argument("multiply: dimension mismatch");
        }
        Vector y(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < cols(); ++j) {
            const double xj = x[static_cast<std::size_t>(j)];
            if (xj == 0.0) continue;
            for (std::size_t e = col_ptr_[static_cast<std::size_t>(j)];
                 e < col_ptr_[static_cast<std::size_t>(j) + 1]; ++e) {
                y[static_cast<std::size_t>(rows_[e])] += values_[e] * xj;
            }
        }
        return y;
    }

    // y += coef * A_i * t, touching only the stored entries of block i.
    void add_block_times(int i, std::span<const double> t, double coef, Vector& y) const
    {
        const int lo = partition_.offset(i);
        const int sz = partition_.size(i);
        for (int c = 0; c < sz; ++c) {
            const double s = coef * t[static_cast<std::size_t>(c)];
            if (s == 0.0) continue;
            const auto j = static_cast<std::size_t>(lo + c);
            for (std::size_t e = col_ptr_[j]; e < col_ptr_[j + 1]; ++e) {
                y[static_cast<std::size_t>(rows_[e])] += values_[e] * s;
            }
        }
    }

    // A_i^T y for a dense vector y.
    Vector block_transpose_dot(int i, const Vector& y) const
    {
        return block_transpose_apply(i, [&](int r) { return y[static_cast<std::size_t>(r)]; });
    }

    // A_i^T applied to a row-indexed functor; the functor is evaluated only at
    // rows where block i has stored entries.
    template <class RowValue>
    Vector block_transpose_apply(int i, RowValue&& value_at) const
    {
        const int lo = partition_.offset(i);
        const int sz = partition_.size(i);
        Vector out(static_cast<std::size_t>(sz), 0.0);
        for (int c = 0; c < sz; ++c) {
            const auto j = static_cast<std::size_t>(lo + c);
            double acc = 0.0;
            for (std::size_t e = col_ptr_[j]; e < col_ptr_[j + 1]; ++e) {
                acc += values_[e] * value_at(rows_[e]);
            }
            out[static_cast<std::size_t>(c)] = acc;
        }
        return out;
    }

    std::vector<Triplet> triplets() const
    {
        std::vector<Triplet> out;
        out.reserve(values_.size());
        for (int j = 0; j < cols(); ++j) {
            for (std::size_t e = col_ptr_[static_cast<std::size_t>(j)];
                 e < col_ptr_[static_cast<std::size_t>(j) + 1]; ++e) {
                out.push_back({rows_[e], j, values_[e]});
            }
        }
        return out;
    }

private:
    void compute_block_norms()
    {
        block_norms_.resize(static_cast<std::size_t>(partition_.n()));
        for (int i = 0; i < partition_.n(); ++i) {
            block_norms_[static_cast<std::size_t>(i)] = compute_block_norm(i);
        }
    }

    double compute_block_norm(int i) const
    {
        const int lo = partition_.offset(i);
        const int sz = partition_.size(i);
        if (sz == 1) {
            // exact Euclidean norm for a single column
            double sq = 0.0;
            const auto j = static_cast<std::size_t>(lo);
            for (std::size_t e = col_ptr_[j]; e < col_ptr_[j + 1]; ++e) {
                sq += values_[e] * values_[e];
            }
            return std::sqrt(sq);
        }
        // power iteration on A_i^T A_i, rel tol 1e-10, max 1000 iterations
        double fro_sq = 0.0;
        for (int c = 0; c < sz; ++c) {
            const auto j = static_cast<std::size_t>(lo + c);
            for (std::size_t e = col_ptr_[j]; e < col_ptr_[j + 1]; ++e) {
                fro_sq += values_[e] * values_[e];
            }
        }
        if (fro_sq == 0.0) return 0.0;

        Vector v(static_cast<std::size_t>(sz));
        std::uint64_t s = 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(i);
        for (auto& vi : v) {
            // splitmix64 mix keeps the start vector deterministic and generic
            s += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            vi = 0.5 + static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
        }
        double lambda = 0.0;
        Vector img(static_cast<std::size_t>(m_));
        for (int it = 0; it < 1000; ++it) {
            double nrm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
            for (auto& vi : v) vi /= nrm;
            std::fill(img.begin(), img.end(), 0.0);
            add_block_times(i, v, 1.0, img);
            Vector w = block_transpose_dot(i, img);
            double new_lambda = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
            v = std::move(w);
            if (it > 0 && std::abs(new_lambda - lambda) <= 1e-10 * std::abs(new_lambda)) {
                lambda = new_lambda;
                break;
            }
            lambda = new_lambda;
        }
        return std::min(std::sqrt(std::max(lambda, 0.0)), std::sqrt(fro_sq));
    }

    BlockPartition partition_;
    int m_ = 0;
    std::vector<std::size_t> col_ptr_;
    std::vector<int> rows_;
    Vector values_;
    Vector block_norms_;
};

inline double block_norm(const BlockSparseMatrix& a, int i)
{
    return a.block_norm(i);
}

inline double dot(const Vector& a, const Vector& b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(const Vector& a)
{
    return std::sqrt(dot(a, a));
}

} // namespace smartcd
