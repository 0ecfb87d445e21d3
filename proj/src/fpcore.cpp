#include "feig/fpcore.hpp"

#include <cfenv>
#include <limits>

namespace feig {

namespace detail {
void throw_non_finite(const char* op) {
  throw FloatingPointError(std::string(op) + ": non-finite operand or overflow");
}
}  // namespace detail

void check_fp_environment() {
  if (std::fegetround() != FE_TONEAREST) {
    throw FloatingPointError("rounding mode is not round-to-nearest");
  }
  volatile Fp tiny = std::numeric_limits<Fp>::denorm_min();
  volatile Fp one = 1.0;
  if (!(tiny * one > 0.0)) {
    throw FloatingPointError("subnormal numbers are flushed to zero");
  }
  volatile Fp big = 0x1p53;
  const SumAndError r = two_sum(big, one);
  if (r.sum != 0x1p53 || r.err != 1.0) {
    throw FloatingPointError("TwoSum canary failed: expression contraction or excess precision");
  }
}

std::string two_prod_kernel_name() {
#if defined(FEIG_HAVE_FMA)
  return "fma";
#else
  return "dekker";
#endif
}

}  // namespace feig
