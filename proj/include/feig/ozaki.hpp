#pragma once

// Error-free slicing of matrices and accurate matrix products built from
// ordinary working-precision products of the slices.

#include <cstddef>
#include <optional>
#include <vector>

#include "feig/fpcore.hpp"
#include "feig/matrix.hpp"

namespace feig {

enum class SplitAxis { kRows, kCols };

/// A == slices[0] + ... + slices[m-2] + remainder, elementwise and exactly.
///
/// Slice r is extracted with shift sigma^(r) per row (kRows) or tau^(r) per
/// column (kCols): slice = fl((shift + a) - shift), a <- fl(a - slice).
struct SplitMatrix {
  std::vector<Matrix> slices;
  Matrix remainder;
  /// shifts[r][i]: the shift used for slice r on row/column i.
  std::vector<std::vector<Fp>> shifts;
  SplitAxis axis = SplitAxis::kRows;
  int exponent = 0;

  /// Number of products an accurate multiply with this split needs: the
  /// slices plus the remainder when it is nonzero.
  [[nodiscard]] std::size_t term_count() const;
  /// Sum of the slices and remainder in slice order (exact).
  [[nodiscard]] Matrix reconstruct() const;
  /// Degenerate split: no slices, remainder == a.
  static SplitMatrix unsplit(const Matrix& a, SplitAxis axis);
};

/// When to stop extracting slices before max_slices is reached.
enum class SplitStop {
  /// Only when the remainder is exactly zero.
  kExactZero,
  /// Also when every row (column) of the remainder is at most u times the
  /// largest magnitude of the same row (column) of the input.
  kBelowWorkingPrecision,
};

/// 0.75 * 2^ceil(log2 v) * 2^exponent, or 0 for v == 0. Exact.
Fp shift_constant(Fp v, int exponent);

SplitMatrix split_rows(const Matrix& a, int alpha, std::size_t max_slices,
                       SplitStop stop = SplitStop::kExactZero);
SplitMatrix split_cols(const Matrix& x, int beta, std::size_t max_slices,
                       SplitStop stop = SplitStop::kExactZero);

/// Two-sided exponent used by the fixed-k scheme: alpha = beta =
/// ceil((53 + ceil(log2 n)) / 2) for inner dimension n.
int fixed_k_exponent(std::size_t inner_dim);

/// Accurate A*B from k(k+1)/2 slice products (k in {2, 3, 4}), accumulated
/// with pair_add in the fixed written order:
///   k=2: A1B1 + A1B2 + A_2 B
///   k=3: A1B1 + A1B2 + A2B1 + A2B2 + A_3 B + (A1+A2) B_3
///   k=4: A1B1 + A1B2 + A2B1 + A1B3 + A2B2 + A3B1 + (A - A_4) B_4
///        + (A2+A3) B3 + A3B2 + A_4 B
/// where A_r, B_s denote remainders.
DwMatrix accmul_fixed_k(const Matrix& a, const Matrix& b, int k);

/// fl(A1 X) + ... + fl(A_{m-1} X) + fl(A_m X) accumulated with pair_add in
/// slice order. Precondition: row split.
DwMatrix accmul_one_sided(const SplitMatrix& a_split, const Matrix& x);

/// Number of non-remainder slice products fl(A^(r) X) for which the
/// significand widths of the operands do not guarantee an exact result.
std::size_t count_unsafe_slice_products(const SplitMatrix& a_split, const Matrix& x);

/// Spectral quantities that drive the choice of beta.
struct SpectralStats {
  Fp min_gap = 0.0;      ///< min_{i != j} |lambda_j - lambda_i|
  Fp max_abs_eig = 0.0;  ///< max_k |lambda_k|
  std::vector<Fp> colmax;  ///< max_i |x_ij| per column
  std::size_t max_row_nnz = 0;
  std::size_t n = 0;
};

/// Stats from approximate eigenvalues (any order), eigenvector matrix and the
/// row-nonzero count of A.
SpectralStats compute_stats(const std::vector<Fp>& lambda, const Matrix& x,
                            std::size_t max_row_nnz);

/// sum_j 2^(2 ceil(log2 w_j)) over the nonzero column maxima.
DoubleWord colmax_power_sum(const std::vector<Fp>& colmax);

struct SplitParams {
  int alpha = 0;
  int beta = 0;
  /// Requested A term count; nullopt splits until the remainder is negligible.
  std::optional<std::size_t> n_a;
  std::size_t n_x = 1;
  /// True if alpha or beta was clamped into [kMinExponent, kMaxExponent].
  bool clamped = false;
};

inline constexpr int kMinExponent = 2;
inline constexpr int kMaxExponent = 52;

/// beta = ceil(log2(sqrt(delta xi gap / (max|lambda| S)) / (0.75u))),
/// alpha = ceil(-log2 u + log2 n - beta), S = colmax_power_sum.
SplitParams choose_beta_theoretical(const SpectralStats& stats, Fp delta, Fp xi);

/// Tuned dense rule: beta = floor(log2(sqrt(n delta gap / (max|lambda| S)) / (0.75u))),
/// alpha = -log2 u - beta + ceil(log2 sqrt n).
SplitParams choose_beta_dense(const SpectralStats& stats, Fp delta);

/// Tuned sparse rule with gamma = sqrt(delta gap / max|lambda|):
/// beta = floor(log2(gamma min(k, sqrt n) / (0.75u) / sqrt S)),
/// alpha = -log2 u - beta + ceil(log2 k).
SplitParams choose_beta_sparse(const SpectralStats& stats, Fp delta);

}  // namespace feig
