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

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace samlp {

using Index = std::uint32_t;

/// Dense row-major 2-D matrix of doubles.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds a tensor from nested literal rows; all rows must have equal length.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  void fill(double v);
  bool all_finite() const noexcept;

  /// Rows `indices` stacked in order.
  Tensor gather_rows(std::span<const Index> indices) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Compressed sparse rows with real weights. Column indices are strictly
/// increasing inside each row.
class SparseRows {
 public:
  SparseRows() = default;
  /// Empty matrix: every row has no entries.
  SparseRows(std::size_t n_rows, std::size_t n_cols);
  SparseRows(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_ptr,
             std::vector<Index> col_idx, std::vector<double> weights);

  /// Sorts each row, merges duplicate columns by summing their weights, and
  /// validates bounds.
  static SparseRows from_row_lists(std::size_t n_cols,
                                   const std::vector<std::vector<std::pair<Index, double>>>& rows);
  /// Binary rows (all weights 1); duplicates collapse to a single entry.
  static SparseRows from_binary_lists(std::size_t n_cols,
                                      const std::vector<std::vector<Index>>& rows);
  static SparseRows from_dense(const Tensor& dense);

  std::size_t n_rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }
  std::size_t row_nnz(std::size_t r) const { return row_ptr_[r + 1] - row_ptr_[r]; }
  bool row_empty(std::size_t r) const { return row_nnz(r) == 0; }

  std::span<const Index> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_nnz(r)};
  }
  std::span<const double> row_weights(std::size_t r) const {
    return {weights_.data() + row_ptr_[r], row_nnz(r)};
  }
  /// Weight at (r, c), 0 when absent.
  double at(std::size_t r, Index c) const;

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<Index>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  Tensor densify() const;
  SparseRows select_rows(std::span<const Index> rows) const;
  /// Throws ConfigError if any invariant (ordering, bounds, finiteness) fails.
  void validate() const;

  friend bool operator==(const SparseRows&, const SparseRows&) = default;

 private:
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> weights_;
};

/// A learnable tensor and its gradient accumulator.
struct Parameter {
  Parameter() = default;
  explicit Parameter(Tensor init) : value(std::move(init)), grad(value.rows(), value.cols()) {}

  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

struct NamedParameter {
  std::string name;
  Parameter* param;
};

/// Position of the largest entry; ties go to the lowest index.
Index argmax(std::span<const double> values);
/// Fraction of `rows` of `scores` whose argmax equals the matching label.
double accuracy(const Tensor& scores, std::span<const Index> labels);

// 64-bit FNV-1a over the raw bytes of every parameter value, in order.
std::uint64_t hash_parameters(std::span<const NamedParameter> params);

}  // namespace samlp
