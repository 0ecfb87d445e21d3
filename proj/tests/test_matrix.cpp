#include <doctest.h>

#include <cmath>
#include <random>

#include "feig/gemm.hpp"
#include "feig/matrix.hpp"
#include "feig/norms.hpp"

using namespace feig;

namespace {

Matrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed, double zero_fraction = 0.0) {
  std::mt19937_64 g(seed);
  Matrix m = Matrix::zeros(r, c);
  for (auto& v : m.values()) {
    const double u = static_cast<double>(g() >> 11) * 0x1p-53;
    v = u < zero_fraction ? 0.0 : static_cast<double>(g() >> 11) * 0x1p-52 - 1.0;
  }
  return m;
}

}  // namespace

TEST_CASE("dense and CSR agree element by element") {
  const Matrix d = random_dense(7, 5, 1, 0.5);
  const Matrix s = d.to_csr();
  CHECK(s.is_sparse());
  CHECK(s.nnz() < d.nnz());
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) REQUIRE(s(i, j) == d(i, j));
  CHECK(s.to_dense() == d);
  CHECK(s.transposed().transposed() == s);
  CHECK(d.transposed()(3, 6) == d(6, 3));
}

TEST_CASE("CSR construction validates its pattern") {
  CHECK_THROWS_AS(Matrix::csr(2, 2, {0, 2, 3}, {1, 0, 1}, {1.0, 2.0, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(Matrix::csr(2, 2, {0, 1, 2}, {0, 2}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(Matrix::csr(2, 2, {0, 1}, {0}, {1.0}), InvalidArgument);
  const Matrix ok = Matrix::csr(2, 2, {0, 1, 2}, {1, 0}, {5.0, 5.0});
  CHECK(ok.is_symmetric());
  CHECK(ok.max_row_nnz() == 1);
}

TEST_CASE("explicit zeros stay in a CSR pattern") {
  const Matrix m = Matrix::csr(2, 2, {0, 2, 3}, {0, 1, 1}, {1.0, 0.0, 2.0});
  CHECK(m.nnz() == 3);
  CHECK(m(0, 1) == 0.0);
  CHECK(m.row_cols(0).size() == 2);
}

TEST_CASE("symmetry is bit-exact") {
  Matrix m = Matrix::from_rows({{1.0, 0.5}, {0.5, 2.0}});
  CHECK(m.is_symmetric());
  m.at(1, 0) = std::nextafter(0.5, 1.0);
  CHECK_FALSE(m.is_symmetric());
}

TEST_CASE("equality sees the sign of zero") {
  const Matrix a = Matrix::from_rows({{0.0}});
  const Matrix b = Matrix::from_rows({{-0.0}});
  CHECK_FALSE(a == b);
}

TEST_CASE("multiply matches a naive triple loop for dense and CSR operands") {
  const Matrix a = random_dense(9, 6, 2, 0.4);
  const Matrix b = random_dense(6, 4, 3);
  Matrix ref = Matrix::zeros(9, 4);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t k = 0; k < 6; ++k)
      for (std::size_t j = 0; j < 4; ++j)
        if (a(i, k) != 0.0) ref.at(i, j) += a(i, k) * b(k, j);
  CHECK(multiply(a, b) == ref);
  CHECK(multiply(a.to_csr(), b) == ref);
  CHECK(multiply_tn(a.transposed(), b) == ref);
  CHECK_THROWS_AS(multiply(b, b), InvalidArgument);
}

TEST_CASE("thread count does not change products") {
  const Matrix a = random_dense(70, 70, 4);
  const Matrix b = random_dense(70, 70, 5);
  set_num_threads(1);
  const Matrix one = multiply(a, b);
  set_num_threads(4);
  const Matrix four = multiply(a, b);
  set_num_threads(1);
  CHECK(one == four);
}

TEST_CASE("Frobenius and 2-norm estimates") {
  const Matrix m = Matrix::from_rows({{3.0, 0.0}, {0.0, -4.0}});
  CHECK(frobenius_norm(m) == 5.0);
  CHECK(norm2_estimate(m) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(norm2_estimate_symmetric(m) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(norm2_estimate(Matrix::zeros(3, 3)) == 0.0);
  // Rank one u v^T has 2-norm |u||v|.
  Matrix r = Matrix::zeros(4, 3);
  const double u[4] = {1, 2, 2, 0};
  const double v[3] = {2, 1, 2};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) r.at(i, j) = u[i] * v[j];
  CHECK(norm2_estimate(r) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(norm2_estimate(r) == norm2_estimate(r));
}

TEST_CASE("double-word matrix rounding") {
  DwMatrix d(1, 2);
  d(0, 0) = DoubleWord(1.0, 0x1p-60);
  d(0, 1) = DoubleWord(2.0, -0x1p-55);
  CHECK(d.all_normalized());
  const Matrix r = d.rounded();
  CHECK(r(0, 0) == 1.0);
  CHECK(r(0, 1) == 2.0);
  CHECK(d.lo()(0, 1) == -0x1p-55);
}

TEST_CASE("non-finite entries are rejected") {
  Matrix m = Matrix::zeros(2, 2);
  m.at(1, 1) = NAN;
  CHECK_FALSE(m.all_finite());
  CHECK_THROWS_AS(require_finite(m, "test"), InvalidArgument);
}
