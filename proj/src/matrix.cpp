#include "feig/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace feig {

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) {
  return dense(rows, cols, std::vector<Fp>(rows * cols, 0.0));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<Fp>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<Fp> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidArgument("Matrix::from_rows: ragged rows");
    v.insert(v.end(), row.begin(), row.end());
  }
  return dense(r, c, std::move(v));
}

Matrix Matrix::dense(std::size_t rows, std::size_t cols, std::vector<Fp> values) {
  if (values.size() != rows * cols) throw InvalidArgument("Matrix::dense: value count mismatch");
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.storage_ = Storage::kDense;
  m.values_ = std::move(values);
  return m;
}

Matrix Matrix::csr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                   std::vector<std::size_t> col_idx, std::vector<Fp> values) {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 || row_ptr.back() != values.size() ||
      col_idx.size() != values.size()) {
    throw InvalidArgument("Matrix::csr: inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) throw InvalidArgument("Matrix::csr: row_ptr not monotone");
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col_idx[k] >= cols) throw InvalidArgument("Matrix::csr: column index out of range");
      if (k > row_ptr[i] && col_idx[k] <= col_idx[k - 1]) {
        throw InvalidArgument("Matrix::csr: column indices not strictly increasing");
      }
    }
  }
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.storage_ = Storage::kCsr;
  m.row_ptr_ = std::move(row_ptr);
  m.col_idx_ = std::move(col_idx);
  m.values_ = std::move(values);
  return m;
}

Fp Matrix::operator()(std::size_t i, std::size_t j) const {
  if (storage_ == Storage::kDense) return values_[i * cols_ + j];
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

std::size_t Matrix::row_begin(std::size_t i) const {
  return storage_ == Storage::kDense ? i * cols_ : row_ptr_[i];
}

std::span<Fp> Matrix::row_values(std::size_t i) {
  if (storage_ == Storage::kDense) return {values_.data() + i * cols_, cols_};
  return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

std::span<const Fp> Matrix::row_values(std::size_t i) const {
  if (storage_ == Storage::kDense) return {values_.data() + i * cols_, cols_};
  return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

std::span<const std::size_t> Matrix::row_cols(std::size_t i) const {
  return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

Matrix Matrix::with_values(std::vector<Fp> values) const {
  if (values.size() != values_.size()) throw InvalidArgument("Matrix::with_values: size mismatch");
  Matrix m = *this;
  m.values_ = std::move(values);
  return m;
}

Matrix Matrix::zeros_like() const { return with_values(std::vector<Fp>(values_.size(), 0.0)); }

Matrix Matrix::to_dense() const {
  if (storage_ == Storage::kDense) return *this;
  Matrix d = zeros(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d.at(i, col_idx_[k]) = values_[k];
  }
  return d;
}

Matrix Matrix::to_csr() const {
  if (storage_ == Storage::kCsr) return *this;
  std::vector<std::size_t> rp(rows_ + 1, 0);
  std::vector<std::size_t> ci;
  std::vector<Fp> v;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      const Fp x = at(i, j);
      if (x != 0.0) {
        ci.push_back(j);
        v.push_back(x);
      }
    }
    rp[i + 1] = v.size();
  }
  return csr(rows_, cols_, std::move(rp), std::move(ci), std::move(v));
}

Matrix Matrix::transposed() const {
  if (storage_ == Storage::kDense) {
    Matrix t = zeros(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
    return t;
  }
  std::vector<std::size_t> rp(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++rp[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) rp[j + 1] += rp[j];
  std::vector<std::size_t> next(rp.begin(), rp.end() - 1);
  std::vector<std::size_t> ci(values_.size());
  std::vector<Fp> v(values_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t dst = next[col_idx_[k]]++;
      ci[dst] = i;
      v[dst] = values_[k];
    }
  }
  return csr(cols_, rows_, std::move(rp), std::move(ci), std::move(v));
}

bool Matrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  if (storage_ == Storage::kDense) {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        if (at(i, j) != at(j, i)) return false;
    return true;
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if ((*this)(col_idx_[k], i) != values_[k]) return false;
    }
  }
  return true;
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](Fp x) { return std::isfinite(x); });
}

std::size_t Matrix::max_row_nnz() const {
  if (storage_ == Storage::kDense) return rows_ == 0 ? 0 : cols_;
  std::size_t k = 0;
  for (std::size_t i = 0; i < rows_; ++i) k = std::max(k, row_ptr_[i + 1] - row_ptr_[i]);
  return k;
}

bool Matrix::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](Fp x) { return x == 0.0; });
}

bool operator==(const Matrix& a, const Matrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.storage_ != b.storage_) return false;
  if (a.row_ptr_ != b.row_ptr_ || a.col_idx_ != b.col_idx_) return false;
  if (a.values_.size() != b.values_.size()) return false;
  for (std::size_t k = 0; k < a.values_.size(); ++k) {
    // Bitwise: distinguishes -0.0 from 0.0.
    if (a.values_[k] != b.values_[k] ||
        std::signbit(a.values_[k]) != std::signbit(b.values_[k])) {
      return false;
    }
  }
  return true;
}

DwMatrix::DwMatrix(const Matrix& a) : DwMatrix(a.rows(), a.cols()) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = DoubleWord(a(i, j));
}

Matrix DwMatrix::rounded() const {
  std::vector<Fp> v(data_.size());
  for (std::size_t k = 0; k < data_.size(); ++k) v[k] = data_[k].hi + data_[k].lo;
  return Matrix::dense(rows_, cols_, std::move(v));
}

Matrix DwMatrix::hi() const {
  std::vector<Fp> v(data_.size());
  for (std::size_t k = 0; k < data_.size(); ++k) v[k] = data_[k].hi;
  return Matrix::dense(rows_, cols_, std::move(v));
}

Matrix DwMatrix::lo() const {
  std::vector<Fp> v(data_.size());
  for (std::size_t k = 0; k < data_.size(); ++k) v[k] = data_[k].lo;
  return Matrix::dense(rows_, cols_, std::move(v));
}

bool DwMatrix::all_normalized() const {
  return std::all_of(data_.begin(), data_.end(), [](const DoubleWord& d) { return d.normalized(); });
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.all_finite()) throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch");
  }
}

Fp frobenius_norm(const Matrix& a) {
  DoubleWord s;
  for (Fp x : a.values()) s = raw::add(s, raw::mul(x, x));
  return std::sqrt(s.to_fp());
}

Fp frobenius_norm(const DwMatrix& a) {
  DoubleWord s;
  for (const DoubleWord& x : a.data()) s = raw::add(s, raw::mul(x, x));
  return std::sqrt(s.to_fp());
}

Fp max_abs(const Matrix& a) {
  Fp m = 0.0;
  for (Fp x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix r = Matrix::zeros(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r.at(i, j) = a(i, j) - b(i, j);
  return r;
}

}  // namespace feig
