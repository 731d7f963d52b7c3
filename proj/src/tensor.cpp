// Copyright 2026 The samlp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "samlp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "samlp/errors.hpp"

namespace samlp {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

std::string Tensor::shape_str() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::gather_rows(std::span<const Index> indices) const {
  Tensor out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw DimensionError("gather_rows index " + std::to_string(indices[i]) +
                           " out of range for " + shape_str());
    }
    std::copy_n(data_.data() + indices[i] * cols_, cols_, out.data_.data() + i * cols_);
  }
  return out;
}

SparseRows::SparseRows(std::size_t n_rows, std::size_t n_cols)
    : n_cols_(n_cols), row_ptr_(n_rows + 1, 0) {}

SparseRows::SparseRows(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
                       std::vector<Index> col_idx, std::vector<double> weights)
    : n_cols_(n_cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      weights_(std::move(weights)) {
  if (row_ptr_.size() != n_rows + 1) throw DimensionError("row_ptr length must be n_rows + 1");
  validate();
}

SparseRows SparseRows::from_row_lists(
    std::size_t n_cols, const std::vector<std::vector<std::pair<Index, double>>>& rows) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> weights;
  std::vector<std::pair<Index, double>> scratch;
  for (const auto& row : rows) {
    scratch.assign(row.begin(), row.end());
    std::stable_sort(scratch.begin(), scratch.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, w] : scratch) {
      if (c >= n_cols) {
        throw DimensionError("column " + std::to_string(c) + " out of range for " +
                             std::to_string(n_cols) + " columns");
      }
      if (cols.size() > row_ptr.back() && cols.back() == c) {
        weights.back() += w;
      } else {
        cols.push_back(c);
        weights.push_back(w);
      }
    }
    row_ptr.push_back(cols.size());
  }
  return SparseRows(rows.size(), n_cols, std::move(row_ptr), std::move(cols), std::move(weights));
}

SparseRows SparseRows::from_binary_lists(std::size_t n_cols,
                                         const std::vector<std::vector<Index>>& rows) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<Index> scratch;
  for (const auto& row : rows) {
    scratch.assign(row.begin(), row.end());
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    cols.insert(cols.end(), scratch.begin(), scratch.end());
    row_ptr.push_back(cols.size());
  }
  std::vector<double> weights(cols.size(), 1.0);
  return SparseRows(rows.size(), n_cols, std::move(row_ptr), std::move(cols), std::move(weights));
}

SparseRows SparseRows::from_dense(const Tensor& dense) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> weights;
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      if (dense(r, c) != 0.0) {
        cols.push_back(static_cast<Index>(c));
        weights.push_back(dense(r, c));
      }
    }
    row_ptr.push_back(cols.size());
  }
  return SparseRows(dense.rows(), dense.cols(), std::move(row_ptr), std::move(cols),
                    std::move(weights));
}

double SparseRows::at(std::size_t r, Index c) const {
  const auto cs = row_cols(r);
  const auto it = std::lower_bound(cs.begin(), cs.end(), c);
  if (it == cs.end() || *it != c) return 0.0;
  return row_weights(r)[static_cast<std::size_t>(it - cs.begin())];
}

Tensor SparseRows::densify() const {
  Tensor out(n_rows(), n_cols_);
  for (std::size_t r = 0; r < n_rows(); ++r) {
    const auto cs = row_cols(r);
    const auto ws = row_weights(r);
    for (std::size_t k = 0; k < cs.size(); ++k) out(r, cs[k]) += ws[k];
  }
  return out;
}

SparseRows SparseRows::select_rows(std::span<const Index> rows) const {
  std::vector<std::size_t> row_ptr;
  row_ptr.reserve(rows.size() + 1);
  row_ptr.push_back(0);
  std::size_t total = 0;
  for (Index r : rows) {
    if (r >= n_rows()) {
      throw DimensionError("select_rows index " + std::to_string(r) + " out of range for " +
                           std::to_string(n_rows()) + " rows");
    }
    total += row_nnz(r);
    row_ptr.push_back(total);
  }
  std::vector<Index> cols(total);
  std::vector<double> weights(total);
  std::size_t pos = 0;
  for (Index r : rows) {
    const std::size_t begin = row_ptr_[r];
    const std::size_t len = row_nnz(r);
    std::copy_n(col_idx_.data() + begin, len, cols.data() + pos);
    std::copy_n(weights_.data() + begin, len, weights.data() + pos);
    pos += len;
  }
  SparseRows out;
  out.n_cols_ = n_cols_;
  out.row_ptr_ = std::move(row_ptr);
  out.col_idx_ = std::move(cols);
  out.weights_ = std::move(weights);
  return out;
}

void SparseRows::validate() const {
  if (row_ptr_.empty() || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != weights_.size()) {
    throw ConfigError("sparse rows: inconsistent CSR arrays");
  }
  for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) throw ConfigError("sparse rows: row_ptr not monotone");
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] >= n_cols_) {
        throw ConfigError("sparse rows: column " + std::to_string(col_idx_[k]) +
                          " out of range in row " + std::to_string(r));
      }
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1]) {
        throw ConfigError("sparse rows: columns not strictly increasing in row " +
                          std::to_string(r));
      }
      if (!std::isfinite(weights_[k])) throw ConfigError("sparse rows: non-finite weight");
    }
  }
}

Index argmax(std::span<const double> values) {
  if (values.empty()) throw DimensionError("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return static_cast<Index>(best);
}

double accuracy(const Tensor& scores, std::span<const Index> labels) {
  if (scores.rows() != labels.size()) {
    throw DimensionError("accuracy: " + scores.shape_str() + " scores for " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += argmax(scores.row(i)) == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

std::uint64_t hash_parameters(std::span<const NamedParameter> params) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& np : params) {
    mix(np.name.data(), np.name.size());
    const auto data = np.param->value.data();
    mix(data.data(), data.size_bytes());
  }
  return h;
}

}  // namespace samlp
