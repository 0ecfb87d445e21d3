#pragma once

// Ground truth for tests and reports: double-word reference eigenpairs,
// exact rational matrix products and forward/backward error metrics.

#include <cstddef>
#include <vector>

#include <gmpxx.h>

#include "feig/matrix.hpp"
#include "feig/refine.hpp"

namespace feig::oracle {

inline constexpr std::size_t kMaxReferenceDim = 2048;
inline constexpr std::size_t kMaxRationalDim = 128;

/// Eigenpairs carried in double-word (~106-bit) precision.
struct Reference {
  DwMatrix x;
  std::vector<DoubleWord> lambda;  ///< ascending
  int sweeps = 0;                  ///< double-word Jacobi sweeps used

  [[nodiscard]] std::vector<Fp> lambda_rounded() const;
  [[nodiscard]] Fp min_gap() const;
};

/// Reference eigendecomposition of the working-precision matrix A.
///
/// A working-precision Jacobi solve gives Q0; Q0 is re-orthonormalized in
/// double-word (modified Gram-Schmidt, twice), B = Q^T A Q is formed in
/// double-word and diagonalized by cyclic double-word Jacobi. X = Q V.
Reference reference_eig(const Matrix& a, int max_sweeps = 60);

/// ||A X - X D||_F and ||X^T X - I||_F of a reference, in double-word.
struct ReferenceResiduals {
  Fp residual = 0.0;
  Fp orthogonality = 0.0;
};
ReferenceResiduals reference_residuals(const Matrix& a, const Reference& ref);

using RationalMatrix = std::vector<std::vector<mpq_class>>;

mpq_class to_rational(Fp x);
mpq_class to_rational(const DoubleWord& x);

/// Exact product over the rationals. Throws InvalidArgument above 128.
RationalMatrix rational_matmul(const Matrix& a, const Matrix& b);

/// Exact product by scaling both operands to integers (big-integer GEMM) and
/// rescaling; an independent route to the same value as rational_matmul.
RationalMatrix scaled_integer_matmul(const Matrix& a, const Matrix& b);

/// ||X_ref - X_hat||_2 after per-column sign matching, estimated by power
/// iteration on the rounded difference.
Fp forward_error(const Reference& ref, const EigenApprox& approx);

struct BackwardErrors {
  Fp orth = 0.0;  ///< ||I - X^T X||_2
  Fp diag = 0.0;  ///< ||X^T A X - D||_2
};

/// Both residuals formed in double-word, norms by power iteration.
BackwardErrors backward_errors(const Matrix& a, const EigenApprox& approx);

/// Double-word products used by the oracle paths.
DwMatrix dw_multiply(const Matrix& a, const DwMatrix& b);
DwMatrix dw_multiply(const DwMatrix& a, const DwMatrix& b);
DwMatrix dw_multiply_tn(const DwMatrix& a, const DwMatrix& b);

}  // namespace feig::oracle
