#include "feig/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "feig/gemm.hpp"
#include "feig/norms.hpp"

namespace feig::oracle {

namespace {

constexpr Fp kU2 = kUnitRoundoff * kUnitRoundoff;

bool dw_less(const DoubleWord& a, const DoubleWord& b) {
  return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}

DoubleWord dot(const DoubleWord* a, const DoubleWord* b, std::size_t n) {
  DoubleWord s;
  for (std::size_t k = 0; k < n; ++k) s = raw::add(s, raw::mul(a[k], b[k]));
  return s;
}

/// Columns of q (stored as rows of qt) orthonormalized in place.
void mgs_rows(std::vector<DoubleWord>& qt, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    DoubleWord* qj = qt.data() + j * n;
    for (std::size_t i = 0; i < j; ++i) {
      const DoubleWord* qi = qt.data() + i * n;
      const DoubleWord r = dot(qi, qj, n);
      for (std::size_t k = 0; k < n; ++k) qj[k] = raw::sub(qj[k], raw::mul(qi[k], r));
    }
    const DoubleWord nrm = raw::sqrt(dot(qj, qj, n));
    if (nrm.hi == 0.0) throw NonConvergence("reference_eig: rank-deficient start basis");
    for (std::size_t k = 0; k < n; ++k) qj[k] = raw::div(qj[k], nrm);
  }
}

}  // namespace

std::vector<Fp> Reference::lambda_rounded() const {
  std::vector<Fp> out(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) out[i] = lambda[i].to_fp();
  return out;
}

Fp Reference::min_gap() const {
  Fp g = std::numeric_limits<Fp>::infinity();
  for (std::size_t i = 1; i < lambda.size(); ++i) g = std::min(g, raw::sub(lambda[i], lambda[i - 1]).to_fp());
  return g;
}

DwMatrix dw_multiply(const Matrix& a, const DwMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("dw_multiply: inner dimensions differ");
  DwMatrix c(a.rows(), b.cols());
  const std::size_t p = b.cols();
  parallel_rows(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      DoubleWord* ci = &c(i, 0);
      const auto vals = a.row_values(i);
      for (std::size_t t = 0; t < vals.size(); ++t) {
        const Fp aik = vals[t];
        if (aik == 0.0) continue;
        const std::size_t k = a.is_sparse() ? a.row_cols(i)[t] : t;
        const DoubleWord* bk = &b(k, 0);
        for (std::size_t j = 0; j < p; ++j) ci[j] = raw::add(ci[j], raw::mul(bk[j], aik));
      }
    }
  });
  return c;
}

DwMatrix dw_multiply(const DwMatrix& a, const DwMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("dw_multiply: inner dimensions differ");
  DwMatrix c(a.rows(), b.cols());
  const std::size_t p = b.cols();
  parallel_rows(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      DoubleWord* ci = &c(i, 0);
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const DoubleWord aik = a(i, k);
        if (aik.hi == 0.0) continue;
        const DoubleWord* bk = &b(k, 0);
        for (std::size_t j = 0; j < p; ++j) ci[j] = raw::add(ci[j], raw::mul(bk[j], aik));
      }
    }
  });
  return c;
}

DwMatrix dw_multiply_tn(const DwMatrix& a, const DwMatrix& b) {
  DwMatrix at(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) at(j, i) = a(i, j);
  return dw_multiply(at, b);
}

Reference reference_eig(const Matrix& a_in, int max_sweeps) {
  if (!a_in.is_square()) throw InvalidArgument("reference_eig: matrix must be square");
  const std::size_t n = a_in.rows();
  if (n > kMaxReferenceDim) {
    throw InvalidArgument("reference_eig: n = " + std::to_string(n) + " exceeds the oracle cap of " +
                          std::to_string(kMaxReferenceDim));
  }
  const EigenApprox start = baseline_eig(a_in);

  // Orthonormal basis Q (rows of qt are its columns).
  std::vector<DoubleWord> qt(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) qt[j * n + i] = DoubleWord(start.x(i, j));
  mgs_rows(qt, n);
  mgs_rows(qt, n);
  DwMatrix q(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) q(i, j) = qt[j * n + i];

  // B = Q^T A Q, symmetric by construction.
  const DwMatrix aq = dw_multiply(a_in, q);
  const DwMatrix bfull = dw_multiply_tn(q, aq);
  std::vector<DoubleWord> b(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i * n + i] = bfull(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      b[i * n + j] = bfull(i, j);
      b[j * n + i] = bfull(i, j);
    }
  }

  std::vector<DoubleWord> vt(n * n);
  for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = DoubleWord(1.0);

  constexpr Fp kFloor = std::numeric_limits<Fp>::min();
  Reference ref;
  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t qq = p + 1; qq < n; ++qq) {
        const DoubleWord bpq = b[p * n + qq];
        const DoubleWord bpp = b[p * n + p];
        const DoubleWord bqq = b[qq * n + qq];
        const Fp mag = std::abs(bpq.hi);
        if (mag <= kFloor || mag <= kU2 * std::sqrt(std::abs(bpp.hi)) * std::sqrt(std::abs(bqq.hi))) continue;
        rotated = true;
        const DoubleWord theta = raw::div(raw::sub(bqq, bpp), raw::mul(bpq, 2.0));
        DoubleWord t;
        if (std::abs(theta.hi) > 1e100) {
          t = raw::div(DoubleWord(0.5), theta);
        } else {
          const DoubleWord root = raw::sqrt(raw::add(raw::mul(theta, theta), 1.0));
          t = raw::div(DoubleWord(1.0), raw::add(raw::abs(theta), root));
          if (theta.hi < 0.0) t = raw::neg(t);
        }
        const DoubleWord c = raw::div(DoubleWord(1.0), raw::sqrt(raw::add(raw::mul(t, t), 1.0)));
        const DoubleWord s = raw::mul(t, c);
        const DoubleWord tau = raw::div(s, raw::add(c, 1.0));
        const DoubleWord tb = raw::mul(t, bpq);
        b[p * n + p] = raw::sub(bpp, tb);
        b[qq * n + qq] = raw::add(bqq, tb);
        b[p * n + qq] = DoubleWord();
        b[qq * n + p] = DoubleWord();
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == qq) continue;
          const DoubleWord brp = b[r * n + p];
          const DoubleWord brq = b[r * n + qq];
          const DoubleWord nrp = raw::sub(brp, raw::mul(s, raw::add(brq, raw::mul(tau, brp))));
          const DoubleWord nrq = raw::add(brq, raw::mul(s, raw::sub(brp, raw::mul(tau, brq))));
          b[r * n + p] = nrp;
          b[p * n + r] = nrp;
          b[r * n + qq] = nrq;
          b[qq * n + r] = nrq;
        }
        DoubleWord* vp = vt.data() + p * n;
        DoubleWord* vq = vt.data() + qq * n;
        for (std::size_t r = 0; r < n; ++r) {
          const DoubleWord xp = vp[r];
          const DoubleWord xq = vq[r];
          vp[r] = raw::sub(xp, raw::mul(s, raw::add(xq, raw::mul(tau, xp))));
          vq[r] = raw::add(xq, raw::mul(s, raw::sub(xp, raw::mul(tau, xq))));
        }
      }
    }
    ++ref.sweeps;
    converged = !rotated;
  }
  if (!converged) throw NonConvergence("reference_eig: double-word Jacobi did not converge");

  // X = Q V, columns of V are rows of vt.
  DwMatrix v(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) v(i, j) = vt[j * n + i];
  const DwMatrix x = dw_multiply(q, v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return dw_less(b[i * n + i], b[j * n + j]); });
  ref.x = DwMatrix(n, n);
  ref.lambda.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    ref.lambda[c] = b[src * n + src];
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(x(i, src).hi) > std::abs(x(arg, src).hi)) arg = i;
    }
    const bool flip = x(arg, src).hi < 0.0;
    for (std::size_t i = 0; i < n; ++i) ref.x(i, c) = flip ? raw::neg(x(i, src)) : x(i, src);
  }
  return ref;
}

ReferenceResiduals reference_residuals(const Matrix& a, const Reference& ref) {
  const std::size_t n = ref.x.rows();
  const DwMatrix ax = dw_multiply(a, ref.x);
  DwMatrix res(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) res(i, j) = raw::sub(ax(i, j), raw::mul(ref.x(i, j), ref.lambda[j]));
  const DwMatrix xtx = dw_multiply_tn(ref.x, ref.x);
  DwMatrix orth(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) orth(i, j) = i == j ? raw::sub(xtx(i, j), DoubleWord(1.0)) : xtx(i, j);
  return {frobenius_norm(res), frobenius_norm(orth)};
}

mpq_class to_rational(Fp x) {
  if (!std::isfinite(x)) throw InvalidArgument("to_rational: non-finite value");
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), x);
  return q;
}

mpq_class to_rational(const DoubleWord& x) { return to_rational(x.hi) + to_rational(x.lo); }

RationalMatrix rational_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("rational_matmul: inner dimensions differ");
  if (std::max({a.rows(), a.cols(), b.cols()}) > kMaxRationalDim) {
    throw InvalidArgument("rational_matmul: dimension exceeds the cap of 128");
  }
  RationalMatrix c(a.rows(), std::vector<mpq_class>(b.cols()));
  std::vector<std::vector<mpq_class>> bq(b.rows(), std::vector<mpq_class>(b.cols()));
  for (std::size_t k = 0; k < b.rows(); ++k)
    for (std::size_t j = 0; j < b.cols(); ++j) bq[k][j] = to_rational(b(k, j));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Fp aik = a(i, k);
      if (aik == 0.0) continue;
      const mpq_class aq = to_rational(aik);
      for (std::size_t j = 0; j < b.cols(); ++j) c[i][j] += aq * bq[k][j];
    }
  }
  return c;
}

namespace {

/// x = mant * 2^exp with mant an odd-or-zero 53-bit integer.
void decompose(Fp x, std::int64_t& mant, int& exp) {
  if (x == 0.0) {
    mant = 0;
    exp = 0;
    return;
  }
  int e = 0;
  const Fp m = std::frexp(x, &e);
  mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  exp = e - 53;
}

std::vector<std::vector<mpz_class>> to_integers(const Matrix& a, int& scale) {
  scale = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      std::int64_t m;
      int e;
      decompose(a(i, j), m, e);
      if (m != 0) scale = std::min(scale, e);
    }
  }
  if (scale == std::numeric_limits<int>::max()) scale = 0;
  std::vector<std::vector<mpz_class>> out(a.rows(), std::vector<mpz_class>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      std::int64_t m;
      int e;
      decompose(a(i, j), m, e);
      mpz_class z(static_cast<long>(m));
      mpz_mul_2exp(z.get_mpz_t(), z.get_mpz_t(), static_cast<mp_bitcnt_t>(m == 0 ? 0 : e - scale));
      out[i][j] = z;
    }
  }
  return out;
}

}  // namespace

RationalMatrix scaled_integer_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("scaled_integer_matmul: inner dimensions differ");
  if (std::max({a.rows(), a.cols(), b.cols()}) > kMaxRationalDim) {
    throw InvalidArgument("scaled_integer_matmul: dimension exceeds the cap of 128");
  }
  int sa = 0;
  int sb = 0;
  const auto ai = to_integers(a, sa);
  const auto bi = to_integers(b, sb);
  RationalMatrix c(a.rows(), std::vector<mpq_class>(b.cols()));
  const int scale = sa + sb;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      mpz_class acc = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[i][k] * bi[k][j];
      mpq_class q(acc);
      if (scale >= 0) {
        mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(scale));
      } else {
        mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-scale));
      }
      c[i][j] = q;
    }
  }
  return c;
}

Fp forward_error(const Reference& ref, const EigenApprox& approx) {
  const std::size_t n = ref.x.rows();
  if (approx.x.rows() != n || approx.x.cols() != n || approx.lambda.size() != n) {
    throw InvalidArgument("forward_error: dimension mismatch");
  }
  const Fp half_gap = n > 1 ? ref.min_gap() / 2.0 : std::numeric_limits<Fp>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(approx.lambda[j] - ref.lambda[j].to_fp()) > half_gap) {
      throw InvalidArgument("forward_error: eigenvalue " + std::to_string(j) +
                            " cannot be matched unambiguously to the reference");
    }
  }
  Matrix d = Matrix::zeros(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    DoubleWord ip;
    for (std::size_t i = 0; i < n; ++i) ip = raw::add(ip, raw::mul(ref.x(i, j), approx.x(i, j)));
    const Fp sign = ip.hi < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) d.at(i, j) = raw::sub(ref.x(i, j), DoubleWord(sign * approx.x(i, j))).to_fp();
  }
  return norm2_estimate(d);
}

BackwardErrors backward_errors(const Matrix& a, const EigenApprox& approx) {
  const std::size_t n = approx.x.rows();
  if (a.rows() != n || a.cols() != n || approx.x.cols() != n || approx.lambda.size() != n) {
    throw InvalidArgument("backward_errors: dimension mismatch");
  }
  const DwMatrix x(approx.x);
  const DwMatrix xtx = dw_multiply_tn(x, x);
  Matrix orth = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      orth.at(i, j) = (i == j ? raw::sub(DoubleWord(1.0), xtx(i, j)) : raw::neg(xtx(i, j))).to_fp();

  const DwMatrix ax = dw_multiply(a, x);
  const DwMatrix xtax = dw_multiply_tn(x, ax);
  Matrix diag = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      diag.at(i, j) = (i == j ? raw::sub(xtax(i, j), DoubleWord(approx.lambda[i])) : xtax(i, j)).to_fp();

  return {norm2_estimate_symmetric(orth), norm2_estimate(diag)};
}

}  // namespace feig::oracle
