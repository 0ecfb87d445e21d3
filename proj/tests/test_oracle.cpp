#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "feig/matgen.hpp"
#include "feig/oracle.hpp"

using namespace feig;
using oracle::to_rational;

namespace {

mpq_class abs_q(const mpq_class& x) { return x < 0 ? mpq_class(-x) : x; }

/// Number of eigenvalues of the symmetric tridiagonal (d, e) below x.
int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    q = d[i] - x - (i ? e[i - 1] * e[i - 1] / q : 0.0);
    if (q == 0.0) q = -1e-300;
    if (q < 0) ++count;
  }
  return count;
}

/// k-th smallest eigenvalue by bisection on the Sturm count.
double sturm_eig(const std::vector<double>& d, const std::vector<double>& e, int k) {
  double lo = -100, hi = 100;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (sturm_count(d, e, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

Matrix random_wide(std::size_t r, std::size_t c, std::mt19937_64& g) {
  Matrix m = Matrix::zeros(r, c);
  for (auto& v : m.values()) {
    if (g() % 5 == 0) continue;
    const double mant = static_cast<double>(g() >> 11) * 0x1p-53;
    const int e = static_cast<int>(g() % 80) - 40;
    v = std::ldexp((g() & 1) ? -mant : mant, e);
  }
  return m;
}

Matrix abs_of(const Matrix& m) {
  std::vector<double> v(m.values().begin(), m.values().end());
  for (auto& x : v) x = std::abs(x);
  return m.with_values(std::move(v));
}

}  // namespace

TEST_CASE("diagonal input gives an exact permutation") {
  const Matrix a = Matrix::from_rows({{3, 0, 0}, {0, 1, 0}, {0, 0, 2}});
  const oracle::Reference r = oracle::reference_eig(a);
  CHECK(r.lambda_rounded() == std::vector<double>{1, 2, 3});
  CHECK(r.x.rounded() == Matrix::from_rows({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}));
  CHECK(r.min_gap() == 1.0);
}

TEST_CASE("2x2 closed form to double-word accuracy") {
  const Matrix a = Matrix::from_rows({{2, 1}, {1, 2}});
  const oracle::Reference r = oracle::reference_eig(a);
  const mpq_class tol(mpz_class(1), mpz_class(1) << 90);
  CHECK(abs_q(to_rational(r.lambda[0]) - 1) <= tol);
  CHECK(abs_q(to_rational(r.lambda[1]) - 3) <= tol);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const mpq_class x = to_rational(r.x(i, j));
      CHECK(abs_q(x * x - mpq_class(1, 2)) <= tol);
    }
  }
  CHECK(r.x(0, 0).hi * r.x(1, 0).hi < 0);
  CHECK(r.x(0, 1).hi * r.x(1, 1).hi > 0);
}

TEST_CASE("Wilkinson W21+ against Sturm bisection") {
  const std::size_t n = 21;
  std::vector<double> d(n), e(n - 1, 1.0);
  Matrix a = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = std::abs(10.0 - static_cast<double>(i));
    a.at(i, i) = d[i];
    if (i + 1 < n) a.at(i, i + 1) = a.at(i + 1, i) = 1.0;
  }
  const oracle::Reference r = oracle::reference_eig(a);
  const auto lam = r.lambda_rounded();
  for (int k = 0; k < static_cast<int>(n); ++k) {
    CAPTURE(k);
    CHECK(std::abs(lam[k] - sturm_eig(d, e, k)) <= 1e-13);
  }
  // The top pair agrees to about 1e-14 but is resolved.
  CHECK(lam[20] - lam[19] > 0.0);
  CHECK(lam[20] - lam[19] < 1e-12);
}

TEST_CASE("path Laplacian closed form") {
  const std::size_t n = 24;
  Matrix a = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a.at(i, i) = 2.0;
    if (i + 1 < n) a.at(i, i + 1) = a.at(i + 1, i) = -1.0;
  }
  const oracle::Reference r = oracle::reference_eig(a);
  const double h = std::numbers::pi / static_cast<double>(n + 1);
  EigenApprox exact{Matrix::zeros(n, n), std::vector<double>(n)};
  const double scale = std::sqrt(2.0 / static_cast<double>(n + 1));
  for (std::size_t k = 0; k < n; ++k) {
    exact.lambda[k] = 2.0 - 2.0 * std::cos(static_cast<double>(k + 1) * h);
    for (std::size_t i = 0; i < n; ++i) {
      exact.x.at(i, k) = scale * std::sin(static_cast<double>((i + 1) * (k + 1)) * h);
    }
    CHECK(std::abs(r.lambda[k].to_fp() - exact.lambda[k]) <= 1e-14);
  }
  CHECK(oracle::forward_error(r, exact) <= 1e-13);
}

TEST_CASE("reference residuals are at double-word level") {
  GenSpec g;
  g.n = 50;
  g.cond = 1e6;
  const Matrix a = randsvd_sym(g);
  const oracle::Reference r = oracle::reference_eig(a);
  const auto res = oracle::reference_residuals(a, r);
  const double bound = 1e3 * 50 * kUnitRoundoff * kUnitRoundoff * 1.0;
  CHECK(res.residual <= bound);
  CHECK(res.orthogonality <= bound);
}

TEST_CASE("reference rejects oversized and asymmetric input") {
  CHECK_THROWS_AS(oracle::reference_eig(Matrix::zeros(oracle::kMaxReferenceDim + 1, oracle::kMaxReferenceDim + 1)),
                  InvalidArgument);
  CHECK_THROWS_AS(oracle::reference_eig(Matrix::from_rows({{1, 2}, {0, 1}})), InvalidArgument);
}

TEST_CASE("exact products") {
  const double third = 1.0 / 3.0;
  const auto p = oracle::rational_matmul(Matrix::from_rows({{third}}), Matrix::from_rows({{3.0}}));
  const mpq_class expect = 1 - mpq_class(mpz_class(1), mpz_class(1) << 54);
  CHECK(p[0][0] == expect);
  CHECK(oracle::scaled_integer_matmul(Matrix::from_rows({{third}}), Matrix::from_rows({{3.0}}))[0][0] == expect);
  CHECK_THROWS_AS(oracle::rational_matmul(Matrix::zeros(129, 1), Matrix::zeros(1, 1)), InvalidArgument);
}

TEST_CASE("rational and scaled-integer products agree") {
  std::mt19937_64 g(21);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 1 + g() % 12, k = 1 + g() % 12, n = 1 + g() % 12;
    const Matrix a = random_wide(m, k, g);
    const Matrix b = random_wide(k, n, g);
    REQUIRE(oracle::rational_matmul(a, b) == oracle::scaled_integer_matmul(a, b));
  }
}

TEST_CASE("double-word products match the rational product") {
  std::mt19937_64 g(22);
  const Matrix a = random_wide(10, 10, g);
  const Matrix b = random_wide(10, 10, g);
  DwMatrix bd(10, 10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) bd(i, j) = DoubleWord(b(i, j));
  const DwMatrix p = oracle::dw_multiply(a, bd);
  const auto exact = oracle::rational_matmul(a, b);
  const auto absp = oracle::rational_matmul(abs_of(a), abs_of(b));
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      // Generous double-word bound: 20 n u^2 sum |a||b|.
      const mpq_class tol = absp[i][j] * 200 * mpq_class(mpz_class(1), mpz_class(1) << 106);
      REQUIRE(abs_q(to_rational(p(i, j)) - exact[i][j]) <= tol);
    }
  }
}

TEST_CASE("forward error") {
  GenSpec g;
  g.n = 30;
  g.cond = 1e4;
  const Matrix a = randsvd_sym(g);
  const oracle::Reference r = oracle::reference_eig(a);
  EigenApprox x{r.x.rounded(), r.lambda_rounded()};
  const double base = oracle::forward_error(r, x);
  CHECK(base <= 30 * kUnitRoundoff);

  // Column signs do not matter.
  EigenApprox flipped = x;
  for (std::size_t i = 0; i < 30; ++i) flipped.x.at(i, 4) = -flipped.x(i, 4);
  CHECK(oracle::forward_error(r, flipped) == base);

  // A single perturbed entry is measured as its size.
  EigenApprox bumped = x;
  bumped.x.at(3, 7) += 1e-8;
  CHECK(oracle::forward_error(r, bumped) == doctest::Approx(1e-8).epsilon(1e-6));

  // An eigenvalue far from its reference makes the pairing ambiguous.
  EigenApprox off = x;
  off.lambda[10] += r.min_gap();
  CHECK_THROWS_AS(oracle::forward_error(r, off), InvalidArgument);
}

TEST_CASE("backward errors of a scaled identity") {
  const Matrix a = Matrix::identity(3);
  const EigenApprox x{Matrix::from_rows({{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}), {1, 1, 1}};
  const auto be = oracle::backward_errors(a, x);
  CHECK(be.orth == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(be.diag == doctest::Approx(3.0).epsilon(1e-12));
  const auto exact = oracle::backward_errors(a, EigenApprox{Matrix::identity(3), {1, 1, 1}});
  CHECK(exact.orth == 0.0);
  CHECK(exact.diag == 0.0);
}
