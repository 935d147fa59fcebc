#include "screenkit/feature_matrix.hpp"

#include "screenkit/error.hpp"

namespace screenkit {

FeatureMatrix FeatureMatrix::from_dense(std::span<const double> data, std::size_t rows, std::size_t cols) {
    if (data.size() != rows * cols) {
        throw UsageError("dense data size does not match rows*cols");
    }
    FeatureMatrix m(cols);
    m.row_ptr_.reserve(rows + 1);
    m.idx_.reserve(rows * cols);
    m.val_.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m.idx_.push_back(static_cast<std::uint32_t>(c));
            m.val_.push_back(data[r * cols + c]);
        }
        m.row_ptr_.push_back(m.idx_.size());
    }
    return m;
}

FeatureMatrix FeatureMatrix::from_rows(std::span<const SparseVector> rows, std::size_t cols) {
    FeatureMatrix m(cols);
    for (const auto& r : rows) {
        m.append_row(r);
    }
    return m;
}

void FeatureMatrix::append_row(const SparseVector& row) {
    append_row(row.indices, row.values);
}

void FeatureMatrix::append_row(std::span<const std::uint32_t> idx, std::span<const double> val) {
    if (idx.size() != val.size()) {
        throw UsageError("sparse row index/value length mismatch");
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= cols_ || (k > 0 && idx[k] <= idx[k - 1])) {
            throw UsageError("sparse row indices must be strictly increasing and < cols");
        }
    }
    idx_.insert(idx_.end(), idx.begin(), idx.end());
    val_.insert(val_.end(), val.begin(), val.end());
    row_ptr_.push_back(idx_.size());
}

double FeatureMatrix::squared_norm(std::size_t r) const {
    double s = 0.0;
    for (double v : row_values(r)) {
        s += v * v;
    }
    return s;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> positions) const {
    FeatureMatrix m(cols_);
    for (auto p : positions) {
        if (p >= rows()) {
            throw UsageError("row position out of range");
        }
        const auto ix = row_indices(p);
        const auto vx = row_values(p);
        m.idx_.insert(m.idx_.end(), ix.begin(), ix.end());
        m.val_.insert(m.val_.end(), vx.begin(), vx.end());
        m.row_ptr_.push_back(m.idx_.size());
    }
    return m;
}

FeatureMatrix FeatureMatrix::scaled(double factor) const {
    FeatureMatrix m = *this;
    for (auto& v : m.val_) {
        v *= factor;
    }
    return m;
}

std::vector<double> FeatureMatrix::to_dense() const {
    std::vector<double> out(rows() * cols_, 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
        const auto ix = row_indices(r);
        const auto vx = row_values(r);
        for (std::size_t k = 0; k < ix.size(); ++k) {
            out[r * cols_ + ix[k]] = vx[k];
        }
    }
    return out;
}

} // namespace screenkit
