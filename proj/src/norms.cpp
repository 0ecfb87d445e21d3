#include "feig/norms.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace feig {

namespace {

std::vector<Fp> random_unit(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Fp> v(n);
  Fp s = 0.0;
  for (auto& x : v) {
    // Uniform in [-1, 1) from the top 53 bits; avoids the unspecified
    // std:: distributions so the start vector is portable.
    x = static_cast<Fp>(rng() >> 11) * 0x1p-52 - 1.0;
    s += x * x;
  }
  s = std::sqrt(s);
  for (auto& x : v) x /= s;
  return v;
}

std::vector<Fp> apply(const Matrix& m, const std::vector<Fp>& x) {
  std::vector<Fp> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto vals = m.row_values(i);
    Fp s = 0.0;
    for (std::size_t t = 0; t < vals.size(); ++t) {
      const std::size_t j = m.is_sparse() ? m.row_cols(i)[t] : t;
      s += vals[t] * x[j];
    }
    y[i] = s;
  }
  return y;
}

std::vector<Fp> apply_t(const Matrix& m, const std::vector<Fp>& x) {
  std::vector<Fp> y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto vals = m.row_values(i);
    for (std::size_t t = 0; t < vals.size(); ++t) {
      const std::size_t j = m.is_sparse() ? m.row_cols(i)[t] : t;
      y[j] += vals[t] * x[i];
    }
  }
  return y;
}

Fp norm(const std::vector<Fp>& v) {
  Fp s = 0.0;
  for (Fp x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Fp norm2_estimate(const Matrix& m, int steps, std::uint64_t seed) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  std::vector<Fp> x = random_unit(m.cols(), seed);
  Fp est = 0.0;
  for (int k = 0; k < steps; ++k) {
    const std::vector<Fp> y = apply(m, x);
    est = norm(y);
    if (est == 0.0) return 0.0;
    std::vector<Fp> z = apply_t(m, y);
    const Fp nz = norm(z);
    if (nz == 0.0) break;
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] / nz;
  }
  return est;
}

Fp norm2_estimate_symmetric(const Matrix& m, int steps, std::uint64_t seed) {
  if (m.rows() == 0) return 0.0;
  std::vector<Fp> x = random_unit(m.cols(), seed);
  Fp est = 0.0;
  for (int k = 0; k < steps; ++k) {
    std::vector<Fp> y = apply(m, x);
    est = norm(y);
    if (est == 0.0) return 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] / est;
  }
  return est;
}

}  // namespace feig
