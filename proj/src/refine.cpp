#include "feig/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "feig/gemm.hpp"

namespace feig {

namespace {

void require_symmetric_square(const Matrix& a, const char* what) {
  if (!a.is_square()) throw InvalidArgument(std::string(what) + ": matrix must be square");
  require_finite(a, what);
  if (!a.is_symmetric()) throw InvalidArgument(std::string(what) + ": matrix must be symmetric");
}

/// Permutes columns so lambda is ascending (stable for ties).
EigenApprox sorted_approx(const Matrix& x, const std::vector<Fp>& lambda) {
  const std::size_t n = lambda.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return lambda[i] < lambda[j]; });
  EigenApprox out;
  out.x = Matrix::zeros(x.rows(), n);
  out.lambda.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    out.lambda[c] = lambda[order[c]];
    for (std::size_t r = 0; r < x.rows(); ++r) out.x.at(r, c) = x(r, order[c]);
  }
  return out;
}

Fp seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<Fp>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void validate_eigen_approx(const EigenApprox& e) {
  if (e.x.cols() != e.lambda.size()) throw InvalidArgument("eigen approximation: column/eigenvalue count mismatch");
  for (std::size_t i = 1; i < e.lambda.size(); ++i) {
    if (e.lambda[i] < e.lambda[i - 1]) throw InvalidArgument("eigen approximation: eigenvalues not ascending");
  }
  for (std::size_t j = 0; j < e.x.cols(); ++j) {
    Fp s = 0.0;
    for (std::size_t i = 0; i < e.x.rows(); ++i) s += e.x(i, j) * e.x(i, j);
    const Fp nrm = std::sqrt(s);
    if (!(nrm >= 0.5 && nrm <= 1.5)) {
      throw InvalidArgument("eigen approximation: column " + std::to_string(j) + " has norm " +
                            std::to_string(nrm));
    }
  }
}

void normalize_column_signs(Matrix& x) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    Fp best = 0.0;
    Fp sign = 1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const Fp v = x.at(i, j);
      if (std::abs(v) > best) {
        best = std::abs(v);
        sign = v < 0.0 ? -1.0 : 1.0;
      }
    }
    if (sign < 0.0) {
      for (std::size_t i = 0; i < x.rows(); ++i) x.at(i, j) = -x.at(i, j);
    }
  }
}

EigenApprox baseline_eig(const Matrix& a_in, int max_sweeps) {
  require_symmetric_square(a_in, "baseline_eig");
  const std::size_t n = a_in.rows();
  const Matrix ad = a_in.to_dense();
  std::vector<Fp> a(ad.values().begin(), ad.values().end());
  // Rows of vt are the eigenvector estimates.
  std::vector<Fp> vt(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = 1.0;

  constexpr Fp kFloor = std::numeric_limits<Fp>::min();
  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Fp apq = a[p * n + q];
        const Fp app = a[p * n + p];
        const Fp aqq = a[q * n + q];
        if (std::abs(apq) <= kFloor ||
            std::abs(apq) <= kUnitRoundoff * std::sqrt(std::abs(app)) * std::sqrt(std::abs(aqq))) {
          continue;
        }
        rotated = true;
        const Fp theta = (aqq - app) / (2.0 * apq);
        Fp t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        }
        const Fp c = 1.0 / std::sqrt(1.0 + t * t);
        const Fp s = t * c;
        const Fp tau = s / (1.0 + c);
        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const Fp arp = a[r * n + p];
          const Fp arq = a[r * n + q];
          const Fp nrp = arp - s * (arq + tau * arp);
          const Fp nrq = arq + s * (arp - tau * arq);
          a[r * n + p] = nrp;
          a[p * n + r] = nrp;
          a[r * n + q] = nrq;
          a[q * n + r] = nrq;
        }
        Fp* vp = vt.data() + p * n;
        Fp* vq = vt.data() + q * n;
        for (std::size_t r = 0; r < n; ++r) {
          const Fp xp = vp[r];
          const Fp xq = vq[r];
          vp[r] = xp - s * (xq + tau * xp);
          vq[r] = xq + s * (xp - tau * xq);
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NonConvergence("baseline_eig: Jacobi did not converge in " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<Fp> lambda(n);
  Matrix x = Matrix::zeros(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    lambda[j] = a[j * n + j];
    for (std::size_t i = 0; i < n; ++i) x.at(i, j) = vt[j * n + i];
  }
  EigenApprox out = sorted_approx(x, lambda);
  normalize_column_signs(out.x);
  return out;
}

const char* to_string(RefineMode m) {
  switch (m) {
    case RefineMode::kTheoretical: return "theoretical";
    case RefineMode::kDense: return "dense";
    case RefineMode::kSparse: return "sparse";
    case RefineMode::kFixedK: return "fixed-k";
  }
  return "?";
}

RefineMode parse_refine_mode(const std::string& s) {
  if (s == "theoretical") return RefineMode::kTheoretical;
  if (s == "dense") return RefineMode::kDense;
  if (s == "sparse") return RefineMode::kSparse;
  if (s == "fixed-k" || s == "fixed_k") return RefineMode::kFixedK;
  throw InvalidArgument("unknown refine mode '" + s + "'");
}

const char* to_string(RefineStatus s) {
  switch (s) {
    case RefineStatus::kConverged: return "converged";
    case RefineStatus::kMaxIterations: return "max-iterations";
    case RefineStatus::kStagnated: return "stagnated";
    case RefineStatus::kNoiseFloor: return "noise-floor";
    case RefineStatus::kSliceCapReached: return "slice-cap-reached";
    case RefineStatus::kFixedIterations: return "fixed-iterations";
  }
  return "?";
}

void RefineConfig::validate() const {
  if (!(delta > kUnitRoundoff) || !std::isfinite(delta)) throw InvalidArgument("delta below unit roundoff");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (mode == RefineMode::kFixedK && (k < 2 || k > 4)) throw InvalidArgument("k must be 2, 3 or 4");
  if (xi && !(*xi > 0.0)) throw InvalidArgument("xi must be positive");
  if (!(gap_floor >= 0.0)) throw InvalidArgument("gap_floor must be >= 0");
  if (n_a && *n_a < 1) throw InvalidArgument("n_a must be >= 1");
}

ResidualTerms residual_terms(const Matrix& a, const Matrix& x, const AccurateProduct& accmul) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  if (a.rows() != n || a.cols() != n) throw InvalidArgument("residual_terms: dimension mismatch");
  const DwMatrix v = accmul(x);
  if (v.rows() != n || v.cols() != m) throw InvalidArgument("residual_terms: product has wrong shape");

  ResidualTerms out;
  out.r.resize(m);
  out.lambda.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    DoubleWord xx;
    DoubleWord xv;
    for (std::size_t i = 0; i < n; ++i) {
      const Fp xi = x(i, j);
      xx = raw::add(xx, raw::mul(xi, xi));
      xv = raw::add(xv, raw::mul(v(i, j), xi));
    }
    out.r[j] = raw::sub(DoubleWord(1.0), xx).to_fp();
    if (!(out.r[j] < 1.0)) throw InvalidArgument("residual_terms: column " + std::to_string(j) + " has zero norm");
    out.lambda[j] = raw::div(xv, xx).to_fp();
  }

  // V - X D with V's low word folded in, rounded once.
  Matrix t = Matrix::zeros(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      t.at(i, j) = raw::sub(v(i, j), raw::mul(x(i, j), out.lambda[j])).to_fp();
    }
  }
  out.w = multiply_tn(x, t);
  return out;
}

Matrix build_correction(const std::vector<Fp>& r, const Matrix& w, const std::vector<Fp>& lambda, Fp gap_floor) {
  const std::size_t n = lambda.size();
  if (r.size() != n || w.rows() != n || w.cols() != n) throw InvalidArgument("build_correction: dimension mismatch");
  Fp max_abs = 0.0;
  for (Fp l : lambda) max_abs = std::max(max_abs, std::abs(l));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return lambda[i] < lambda[j]; });
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t i = order[k - 1];
    const std::size_t j = order[k];
    if (std::abs(lambda[j] - lambda[i]) <= gap_floor * max_abs) {
      throw ClusteredEigenvalues("clustered eigenvalues: lambda[" + std::to_string(i) + "] and lambda[" +
                                     std::to_string(j) + "] are closer than the gap floor",
                                 i, j);
    }
  }
  Matrix e = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      e.at(i, j) = i == j ? r[i] / 2.0 : w(i, j) / (lambda[j] - lambda[i]);
    }
  }
  return e;
}

SplitParams choose_params(const RefineConfig& cfg, const SpectralStats& stats) {
  SplitParams p;
  switch (cfg.mode) {
    case RefineMode::kTheoretical:
      p = choose_beta_theoretical(stats, cfg.delta, cfg.xi.value_or(static_cast<Fp>(stats.n)));
      break;
    case RefineMode::kDense: p = choose_beta_dense(stats, cfg.delta); break;
    case RefineMode::kSparse: p = choose_beta_sparse(stats, cfg.delta); break;
    case RefineMode::kFixedK: {
      const int e = fixed_k_exponent(stats.n);
      p.alpha = e;
      p.beta = e;
      p.n_x = static_cast<std::size_t>(cfg.k);
      p.n_a = static_cast<std::size_t>(cfg.k);
      return p;
    }
  }
  p.n_a = cfg.n_a;
  return p;
}

std::pair<EigenApprox, StepReport> refine_step(const Matrix& a, const EigenApprox& xa, const RefineConfig& cfg,
                                               const SplitParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const Matrix& x = xa.x;
  const std::size_t n = x.rows();
  if (a.rows() != n || a.cols() != n || x.cols() != n) throw InvalidArgument("refine_step: dimension mismatch");

  StepReport rep;
  rep.alpha = params.alpha;
  rep.beta = params.beta;
  rep.params_clamped = params.clamped;

  Matrix x1;
  AccurateProduct accmul;
  if (cfg.mode == RefineMode::kFixedK) {
    x1 = x;
    accmul = [&](const Matrix& xs) { return accmul_fixed_k(a, xs, cfg.k); };
    rep.n_a = static_cast<std::size_t>(cfg.k);
  } else {
    const SplitMatrix xs = split_cols(x, params.beta, 1);
    if (xs.slices.empty()) throw InvalidArgument("refine_step: eigenvector matrix is zero");
    x1 = xs.slices.front();
    rep.x2_norm = frobenius_norm(xs.remainder);
    const bool automatic = !params.n_a.has_value();
    const std::size_t max_slices = automatic ? kMaxAutoSlices : std::max<std::size_t>(*params.n_a, 2) - 1;
    SplitMatrix as = !automatic && *params.n_a == 1
                         ? SplitMatrix::unsplit(a, SplitAxis::kRows)
                         : split_rows(a, params.alpha, max_slices,
                                      automatic ? SplitStop::kBelowWorkingPrecision : SplitStop::kExactZero);
    if (automatic && as.slices.size() == kMaxAutoSlices) {
      // Cap reached unless the last slice already left a negligible remainder.
      const SplitMatrix probe = split_rows(a, params.alpha, kMaxAutoSlices + 1, SplitStop::kBelowWorkingPrecision);
      rep.slice_cap_hit = probe.slices.size() > kMaxAutoSlices;
    }
    rep.n_a = as.term_count();
    rep.unsafe_slice_products = count_unsafe_slice_products(as, x1);
    accmul = [as = std::move(as)](const Matrix& xs) { return accmul_one_sided(as, xs); };
  }

  const ResidualTerms rt = residual_terms(a, x1, accmul);
  const Matrix e = build_correction(rt.r, rt.w, rt.lambda, cfg.gap_floor);
  rep.correction_norm = frobenius_norm(e);

  const Matrix xe = multiply(x1, e);
  Matrix xn = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      xn.at(i, j) = raw::pair_add(xe.at(i, j), DoubleWord(x1.at(i, j))).to_fp();
    }
  }
  require_finite(xn, "refine_step");

  EigenApprox out = sorted_approx(xn, rt.lambda);
  normalize_column_signs(out.x);
  rep.step_norm = frobenius_norm(subtract(out.x, x));
  rep.elapsed_seconds = seconds_since(t0);
  return {std::move(out), rep};
}

namespace {

std::pair<EigenApprox, ConvergenceHistory> run(const Matrix& a, const EigenApprox& x0, const RefineConfig& cfg,
                                               const ForwardErrorFn& oracle, bool stop_rule) {
  require_symmetric_square(a, "refine");
  if (x0.x.rows() != a.rows() || x0.x.cols() != a.rows()) throw InvalidArgument("refine: X0 has wrong shape");
  validate_eigen_approx(x0);

  ConvergenceHistory hist;
  if (oracle) hist.initial_forward_error = oracle(x0);
  EigenApprox cur = x0;
  const std::size_t k = a.max_row_nnz();
  hist.status = stop_rule ? RefineStatus::kMaxIterations : RefineStatus::kFixedIterations;

  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    const SpectralStats stats = compute_stats(cur.lambda, cur.x, k);
    const SplitParams params = choose_params(cfg, stats);
    auto [next, rep] = refine_step(a, cur, cfg, params);
    rep.iter = it;
    rep.stats = stats;
    if (oracle) rep.forward_error = oracle(next);
    hist.steps.push_back(std::move(rep));
    cur = std::move(next);
    if (!stop_rule) continue;

    const StepReport& last = hist.steps.back();
    if (last.step_norm <= cfg.delta / 2.0) {
      hist.status = RefineStatus::kConverged;
      break;
    }
    // Each pass re-rounds the product at a level set by beta to about delta,
    // so successive iterates differ by that noise even once converged. A step
    // that stops contracting while inside the delta band (Frobenius, hence the
    // sqrt(n)) means the floor has been reached.
    const std::size_t s = hist.steps.size();
    const Fp band = 10.0 * std::sqrt(static_cast<Fp>(a.rows())) * cfg.delta;
    if (s >= 2 && last.step_norm > hist.steps[s - 2].step_norm / 4.0 && last.step_norm <= band) {
      hist.status = RefineStatus::kNoiseFloor;
      break;
    }
    if (last.slice_cap_hit) {
      hist.status = RefineStatus::kSliceCapReached;
      break;
    }
    if (s >= 3 && hist.steps[s - 3].step_norm <= hist.steps[s - 2].step_norm &&
        hist.steps[s - 2].step_norm <= hist.steps[s - 1].step_norm) {
      hist.status = RefineStatus::kStagnated;
      break;
    }
  }
  if (!hist.steps.empty()) hist.tail_exceeds_delta = hist.steps.back().x2_norm > cfg.delta / 10.0;
  return {std::move(cur), std::move(hist)};
}

}  // namespace

std::pair<EigenApprox, ConvergenceHistory> refine_to_delta(const Matrix& a, const EigenApprox& x0,
                                                           const RefineConfig& cfg, const ForwardErrorFn& oracle) {
  cfg.validate();
  return run(a, x0, cfg, oracle, true);
}

std::pair<EigenApprox, ConvergenceHistory> refine_fixed_k(const Matrix& a, const EigenApprox& x0, int k,
                                                          std::size_t iters, const ForwardErrorFn& oracle) {
  if (k < 2 || k > 4) throw InvalidArgument("refine_fixed_k: k must be 2, 3 or 4");
  if (iters == 0) {
    ConvergenceHistory hist;
    hist.status = RefineStatus::kFixedIterations;
    if (oracle) hist.initial_forward_error = oracle(x0);
    return {x0, hist};
  }
  RefineConfig cfg;
  cfg.mode = RefineMode::kFixedK;
  cfg.k = k;
  cfg.max_iter = iters;
  return run(a, x0, cfg, oracle, false);
}

}  // namespace feig
