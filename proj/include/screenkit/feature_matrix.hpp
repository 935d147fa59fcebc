#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace screenkit {

/// Sorted (index, value) entries of one feature vector.
struct SparseVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }
};

/// Row-major compressed sparse matrix of citation feature vectors. Dense
/// embeddings are stored with every column present.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}

    static FeatureMatrix from_dense(std::span<const double> data, std::size_t rows, std::size_t cols);
    static FeatureMatrix from_rows(std::span<const SparseVector> rows, std::size_t cols);

    void append_row(const SparseVector& row);
    void append_row(std::span<const std::uint32_t> idx, std::span<const double> val);

    std::size_t rows() const { return row_ptr_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return idx_.size(); }

    std::span<const std::uint32_t> row_indices(std::size_t r) const {
        return {idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    double dot(std::size_t r, std::span<const double> w) const {
        double s = 0.0;
        const auto ix = row_indices(r);
        const auto vx = row_values(r);
        for (std::size_t k = 0; k < ix.size(); ++k) {
            s += vx[k] * w[ix[k]];
        }
        return s;
    }

    /// w += a * x_r
    void axpy(std::size_t r, double a, std::span<double> w) const {
        const auto ix = row_indices(r);
        const auto vx = row_values(r);
        for (std::size_t k = 0; k < ix.size(); ++k) {
            w[ix[k]] += a * vx[k];
        }
    }

    double squared_norm(std::size_t r) const;

    /// Rows at the given positions, in order.
    FeatureMatrix select_rows(std::span<const std::size_t> positions) const;

    FeatureMatrix scaled(double factor) const;

    std::vector<double> to_dense() const;

private:
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> idx_;
    std::vector<double> val_;
};

} // namespace screenkit
