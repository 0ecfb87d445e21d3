#pragma once

// Property suites checked against exact rational arithmetic. Shared by
// `feig verify` and the acceptance binary.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "feig/fpcore.hpp"

namespace feig::cli {

struct VerifyResult {
  std::string suite;
  std::size_t checks = 0;
  std::size_t failures = 0;
  /// First failure, if any.
  std::string first_failure;

  [[nodiscard]] bool ok() const { return failures == 0 && checks > 0; }
};

/// two_sum on `count` pairs with exponents in [-300, 300]: x == fl(a+b) and
/// x + y == a + b over the rationals.
VerifyResult verify_eft(std::size_t count, std::uint64_t seed);

/// Row and column splits of `count` random matrices (n <= 64, entry exponents
/// in [-20, 20], alpha in {17, 27, 40}): exact reconstruction, every slice on
/// its grid, every intermediate remainder within u * ufp(shift).
VerifyResult verify_split(std::size_t count, std::uint64_t seed);

/// For n in {4, 16, 64} and alpha + beta = 53 + ceil(log2 n): every product of
/// non-remainder slices fl(A^(r) X^(s)) equals the rational product.
VerifyResult verify_slice_products(std::uint64_t seed);

/// Frobenius errors of accmul_fixed_k for k = 2, 3, 4 against the rational
/// product, relative to ||AB||_F.
struct GemmCase {
  std::size_t n = 0;
  std::string operands;
  std::array<Fp, 3> rel_error{};
};

/// Fixed suite of cond-1e10 operands (n <= 64). Fails a case if the k = 3
/// error exceeds 8u or the error grows with k.
VerifyResult verify_gemm(std::uint64_t seed, std::vector<GemmCase>* cases = nullptr);

}  // namespace feig::cli
