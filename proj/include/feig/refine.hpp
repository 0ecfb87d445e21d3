#pragma once

// Ogita-Aishima refinement of approximate eigenvectors of a real symmetric
// matrix, driven towards a prescribed forward error delta.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "feig/matrix.hpp"
#include "feig/ozaki.hpp"

namespace feig {

/// Approximate eigenpairs: column i of x belongs to lambda[i], lambda
/// ascending.
struct EigenApprox {
  Matrix x;
  std::vector<Fp> lambda;
};

/// Throws InvalidArgument unless lambda is ascending, sizes agree and every
/// column has 2-norm in [0.5, 1.5].
void validate_eigen_approx(const EigenApprox& e);

/// Flips each column so that its largest-magnitude entry is positive.
void normalize_column_signs(Matrix& x);

/// Cyclic Jacobi in working precision. Rotations are skipped once
/// |a_pq| <= u sqrt(|a_pp a_qq|); stops after a sweep with no rotation.
/// Throws NonConvergence after `max_sweeps`.
EigenApprox baseline_eig(const Matrix& a, int max_sweeps = 30);

enum class RefineMode { kTheoretical, kDense, kSparse, kFixedK };

const char* to_string(RefineMode m);
RefineMode parse_refine_mode(const std::string& s);

struct RefineConfig {
  Fp delta = 1e-10;
  RefineMode mode = RefineMode::kDense;
  /// Slice count per operand for kFixedK.
  int k = 3;
  std::size_t max_iter = 10;
  /// Defaults to n.
  std::optional<Fp> xi;
  /// Minimum |lambda_j - lambda_i| / max|lambda| accepted by the correction.
  Fp gap_floor = 1e-12;
  /// Fixed number of A terms (slices + remainder); nullopt = automatic.
  std::optional<std::size_t> n_a;

  void validate() const;
};

/// Automatic A splitting stops after this many slices.
inline constexpr std::size_t kMaxAutoSlices = 8;

/// Quantities from one pass of the residual computation.
struct ResidualTerms {
  std::vector<Fp> r;       ///< 1 - x_i^T x_i
  std::vector<Fp> lambda;  ///< Rayleigh quotients x_i^T v_i / (1 - r_i)
  Matrix w;                ///< X^T (V - X diag(lambda))
};

/// Accurate product A*X as a double-word matrix.
using AccurateProduct = std::function<DwMatrix(const Matrix& x)>;

/// Lines 1-4 of one refinement pass for the (already split) approximation x.
ResidualTerms residual_terms(const Matrix& a, const Matrix& x, const AccurateProduct& accmul);

/// e_ii = r_i / 2, e_ij = w_ij / (lambda_j - lambda_i). Throws
/// ClusteredEigenvalues if two lambdas are closer than gap_floor * max|lambda|.
Matrix build_correction(const std::vector<Fp>& r, const Matrix& w, const std::vector<Fp>& lambda,
                        Fp gap_floor);

struct StepReport {
  std::size_t iter = 0;
  Fp correction_norm = 0.0;  ///< ||E~||_F
  Fp step_norm = 0.0;        ///< ||X_new - X_old||_F
  Fp x2_norm = 0.0;          ///< ||X - X^(1)||_F, the dropped tail
  int alpha = 0;
  int beta = 0;
  std::size_t n_a = 0;       ///< products of the A operand actually formed
  std::size_t unsafe_slice_products = 0;
  bool params_clamped = false;
  bool slice_cap_hit = false;
  std::optional<Fp> forward_error;
  Fp elapsed_seconds = 0.0;
  SpectralStats stats;
};

enum class RefineStatus { kConverged, kNoiseFloor, kMaxIterations, kStagnated, kSliceCapReached, kFixedIterations };

const char* to_string(RefineStatus s);

struct ConvergenceHistory {
  std::vector<StepReport> steps;
  RefineStatus status = RefineStatus::kMaxIterations;
  std::optional<Fp> initial_forward_error;
  /// Set when the dropped tail ||X^(2)|| of the final step exceeds delta/10.
  bool tail_exceeds_delta = false;
};

/// Maps an approximation to its true forward error (oracle-backed).
using ForwardErrorFn = std::function<Fp(const EigenApprox&)>;

/// Split constants for the configured mode from the current approximation.
SplitParams choose_params(const RefineConfig& cfg, const SpectralStats& stats);

/// One refinement pass. For the proposed modes X is truncated to its leading
/// slice X^(1) with `params.beta`, A is split by rows with `params.alpha` and
/// A X^(1) is formed with one-sided products. kFixedK uses the two-sided
/// k(k+1)/2-product scheme and keeps X whole.
std::pair<EigenApprox, StepReport> refine_step(const Matrix& a, const EigenApprox& x,
                                               const RefineConfig& cfg, const SplitParams& params);

/// Iterates refine_step until ||X_new - X_old||_F <= delta/2 (kConverged),
/// the step stops contracting inside 10 sqrt(n) delta (kNoiseFloor),
/// stagnation, or cfg.max_iter. Spectral stats and split constants are recomputed from
/// the current approximation each pass.
std::pair<EigenApprox, ConvergenceHistory> refine_to_delta(const Matrix& a, const EigenApprox& x0,
                                                           const RefineConfig& cfg,
                                                           const ForwardErrorFn& oracle = {});

/// Exactly `iters` passes with the fixed-k product (k in {2, 3, 4}).
std::pair<EigenApprox, ConvergenceHistory> refine_fixed_k(const Matrix& a, const EigenApprox& x0, int k,
                                                          std::size_t iters,
                                                          const ForwardErrorFn& oracle = {});

}  // namespace feig
