#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "feig/fpcore.hpp"

namespace feig {

/// Real matrix in dense row-major or CSR storage.
///
/// Both storages keep the entries in one contiguous `values()` array with each
/// row's entries contiguous, so row-wise elementwise transforms (splitting,
/// sums of slices with a shared pattern) are written once for both.
class Matrix {
 public:
  enum class Storage { kDense, kCsr };

  Matrix() = default;

  static Matrix zeros(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<Fp>> rows);
  /// Row-major values, size rows*cols.
  static Matrix dense(std::size_t rows, std::size_t cols, std::vector<Fp> values);
  /// Column indices must be sorted within each row and unique.
  static Matrix csr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                    std::vector<std::size_t> col_idx, std::vector<Fp> values);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] Storage storage() const { return storage_; }
  [[nodiscard]] bool is_sparse() const { return storage_ == Storage::kCsr; }
  [[nodiscard]] bool is_square() const { return rows_ == cols_; }
  [[nodiscard]] std::size_t nnz() const { return values_.size(); }

  /// Element access; O(log row_nnz) for CSR, 0 outside the pattern.
  [[nodiscard]] Fp operator()(std::size_t i, std::size_t j) const;
  /// Mutable dense element. Precondition: dense storage.
  Fp& at(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  [[nodiscard]] Fp at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  [[nodiscard]] std::span<Fp> values() { return values_; }
  [[nodiscard]] std::span<const Fp> values() const { return values_; }
  [[nodiscard]] std::span<Fp> row_values(std::size_t i);
  [[nodiscard]] std::span<const Fp> row_values(std::size_t i) const;
  /// Column indices of row i. Precondition: CSR storage.
  [[nodiscard]] std::span<const std::size_t> row_cols(std::size_t i) const;
  [[nodiscard]] std::size_t row_begin(std::size_t i) const;
  [[nodiscard]] std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  [[nodiscard]] std::span<const std::size_t> col_idx() const { return col_idx_; }

  /// Same shape and pattern, new values.
  [[nodiscard]] Matrix with_values(std::vector<Fp> values) const;
  /// Same shape and pattern, all values zero.
  [[nodiscard]] Matrix zeros_like() const;
  [[nodiscard]] Matrix to_dense() const;
  /// Keeps every stored position of a dense matrix whose value is nonzero.
  [[nodiscard]] Matrix to_csr() const;
  [[nodiscard]] Matrix transposed() const;

  /// Bit-exact a_ij == a_ji for all i, j.
  [[nodiscard]] bool is_symmetric() const;
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] std::size_t max_row_nnz() const;
  [[nodiscard]] bool is_zero() const;

  /// Same shape, storage, pattern and bit-identical values.
  friend bool operator==(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Storage storage_ = Storage::kDense;
  std::vector<Fp> values_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_idx_;
};

/// Dense matrix of double-word entries.
class DwMatrix {
 public:
  DwMatrix() = default;
  DwMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  explicit DwMatrix(const Matrix& a);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  DoubleWord& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const DoubleWord& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  [[nodiscard]] std::span<DoubleWord> data() { return data_; }
  [[nodiscard]] std::span<const DoubleWord> data() const { return data_; }

  /// fl(hi + lo) per entry.
  [[nodiscard]] Matrix rounded() const;
  [[nodiscard]] Matrix hi() const;
  [[nodiscard]] Matrix lo() const;
  [[nodiscard]] bool all_normalized() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<DoubleWord> data_;
};

/// Throws InvalidArgument naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& a, const char* what);
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

/// Frobenius norm, accumulated in double-word.
Fp frobenius_norm(const Matrix& a);
Fp frobenius_norm(const DwMatrix& a);

/// Elementwise max |a_ij|.
Fp max_abs(const Matrix& a);

/// a - b, dense result.
Matrix subtract(const Matrix& a, const Matrix& b);

}  // namespace feig
