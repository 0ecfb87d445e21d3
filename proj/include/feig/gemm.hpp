#pragma once

#include <cstddef>
#include <functional>

#include "feig/matrix.hpp"

namespace feig {

/// Worker threads used by the row-parallel kernels. Each output row is
/// produced by exactly one thread with a fixed inner order, so the thread
/// count never changes a result bit.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs body(begin, end) over [0, n) split into contiguous blocks.
void parallel_rows(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// fl(A*B) with the inner sum in ascending index order. A dense or CSR;
/// B is densified if needed. Result dense.
Matrix multiply(const Matrix& a, const Matrix& b);

/// fl(A^T * B), dense result.
Matrix multiply_tn(const Matrix& a, const Matrix& b);

/// Elementwise fl(a + b) for matrices sharing shape and pattern.
Matrix add_same_pattern(const Matrix& a, const Matrix& b);

}  // namespace feig
