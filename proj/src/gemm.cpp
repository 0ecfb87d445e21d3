#include "feig/gemm.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace feig {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_num_threads(unsigned n) { g_threads.store(std::max(1u, n)); }
unsigned num_threads() { return g_threads.load(); }

void parallel_rows(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t t = std::min<std::size_t>(num_threads(), n);
  if (t <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(t);
  const std::size_t chunk = (n + t - 1) / t;
  for (std::size_t b = 0; b < n; b += chunk) {
    workers.emplace_back([&body, b, e = std::min(n, b + chunk)] { body(b, e); });
  }
}

Matrix multiply(const Matrix& a, const Matrix& b_in) {
  if (a.cols() != b_in.rows()) throw InvalidArgument("multiply: inner dimensions differ");
  const Matrix b = b_in.to_dense();
  const std::size_t m = a.rows();
  const std::size_t p = b.cols();
  Matrix c = Matrix::zeros(m, p);
  const Fp* bv = b.values().data();
  Fp* cv = c.values().data();
  parallel_rows(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Fp* ci = cv + i * p;
      const auto vals = a.row_values(i);
      for (std::size_t t = 0; t < vals.size(); ++t) {
        const Fp aik = vals[t];
        if (aik == 0.0) continue;
        const std::size_t k = a.is_sparse() ? a.row_cols(i)[t] : t;
        const Fp* bk = bv + k * p;
        for (std::size_t j = 0; j < p; ++j) ci[j] += aik * bk[j];
      }
    }
  });
  return c;
}

Matrix multiply_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("multiply_tn: inner dimensions differ");
  return multiply(a.transposed(), b);
}

Matrix add_same_pattern(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add_same_pattern");
  if (a.storage() != b.storage() || a.nnz() != b.nnz()) {
    throw InvalidArgument("add_same_pattern: patterns differ");
  }
  std::vector<Fp> v(a.nnz());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = av[k] + bv[k];
  return a.with_values(std::move(v));
}

}  // namespace feig
