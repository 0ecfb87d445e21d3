#pragma once

// Error-free transformations and double-word (pair) arithmetic on binary64.
//
// The kernels assume round-to-nearest ties-to-even, no excess precision and
// no contraction of a*b+c into an FMA. The build passes -ffp-contract=off;
// `check_fp_environment()` verifies the rest at runtime.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "feig/error.hpp"

namespace feig {

/// Working precision. Everything below is written against these constants.
using Fp = double;

/// Unit roundoff u = 2^-53 and its base-2 logarithm.
inline constexpr int kLog2UnitRoundoff = -std::numeric_limits<Fp>::digits;
inline constexpr Fp kUnitRoundoff = 0x1p-53;

/// Unevaluated sum hi + lo. Normalized pairs satisfy hi == fl(hi + lo).
struct DoubleWord {
  Fp hi = 0.0;
  Fp lo = 0.0;

  constexpr DoubleWord() = default;
  constexpr DoubleWord(Fp h) : hi(h), lo(0.0) {}  // NOLINT(implicit)
  constexpr DoubleWord(Fp h, Fp l) : hi(h), lo(l) {}

  [[nodiscard]] Fp to_fp() const { return hi + lo; }
  [[nodiscard]] bool normalized() const { return hi + lo == hi; }
  friend bool operator==(const DoubleWord&, const DoubleWord&) = default;
};

/// Unit in the first place: 2^floor(log2|x|), 0 for 0. Exact.
inline Fp ufp(Fp x) {
  if (!std::isfinite(x)) throw FloatingPointError("ufp: non-finite input");
  if (x == 0.0) return 0.0;
  int e = 0;
  std::frexp(x, &e);  // |x| = m * 2^e, m in [0.5, 1)
  return std::ldexp(1.0, e - 1);
}

/// ceil(log2 x) for finite x > 0, read off the exponent field.
inline int ceil_log2(Fp x) {
  int e = 0;
  const Fp m = std::frexp(x, &e);
  return m == 0.5 ? e - 1 : e;
}

/// ceil(log2 n) for an integer n >= 1.
inline int ceil_log2(std::uint64_t n) {
  int c = 0;
  while ((std::uint64_t{1} << c) < n) ++c;
  return c;
}

/// ceil(log2 sqrt(n)): smallest c with 4^c >= n.
inline int ceil_log2_sqrt(std::uint64_t n) {
  int c = 0;
  while (c < 32 && (std::uint64_t{1} << (2 * c)) < n) ++c;
  return c;
}

namespace raw {

// Unchecked kernels for inner loops. Callers validate finiteness in bulk.

/// Knuth's TwoSum, no magnitude precondition.
inline void two_sum(Fp a, Fp b, Fp& x, Fp& y) {
  x = a + b;
  const Fp z = x - a;
  y = (a - (x - z)) + (b - z);
}

/// Dekker's FastTwoSum, requires |a| >= |b| or a == 0.
inline void fast_two_sum(Fp a, Fp b, Fp& x, Fp& y) {
  x = a + b;
  y = b - (x - a);
}

/// Exact product a*b = p + e.
inline void two_prod(Fp a, Fp b, Fp& p, Fp& e) {
  p = a * b;
#if defined(FEIG_HAVE_FMA)
  e = std::fma(a, b, -p);
#else
  constexpr Fp kSplitter = 134217729.0;  // 2^27 + 1
  Fp t = kSplitter * a;
  const Fp ah = t - (t - a);
  const Fp al = a - ah;
  t = kSplitter * b;
  const Fp bh = t - (t - b);
  const Fp bl = b - bh;
  e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
#endif
}

inline DoubleWord pair_add(Fp a, const DoubleWord& b) {
  DoubleWord c;
  Fp t;
  two_sum(a, b.hi, c.hi, t);
  c.lo = b.lo + t;
  return c;
}

/// DWPlusFP, relative error <= 2u^2.
inline DoubleWord add(const DoubleWord& x, Fp y) {
  Fp sh, sl, zh, zl;
  two_sum(x.hi, y, sh, sl);
  const Fp v = x.lo + sl;
  fast_two_sum(sh, v, zh, zl);
  return {zh, zl};
}

/// AccurateDWPlusDW, relative error <= 3u^2 + 13u^3.
inline DoubleWord add(const DoubleWord& x, const DoubleWord& y) {
  Fp sh, sl, th, tl, vh, vl, zh, zl;
  two_sum(x.hi, y.hi, sh, sl);
  two_sum(x.lo, y.lo, th, tl);
  const Fp c = sl + th;
  fast_two_sum(sh, c, vh, vl);
  const Fp w = tl + vl;
  fast_two_sum(vh, w, zh, zl);
  return {zh, zl};
}

inline DoubleWord neg(const DoubleWord& x) { return {-x.hi, -x.lo}; }

inline DoubleWord sub(const DoubleWord& x, const DoubleWord& y) {
  return add(x, neg(y));
}

/// Exact product of two working-precision numbers.
inline DoubleWord mul(Fp a, Fp b) {
  DoubleWord r;
  two_prod(a, b, r.hi, r.lo);
  return r;
}

/// DWTimesFP, relative error <= 1.5u^2 + 4u^3.
inline DoubleWord mul(const DoubleWord& x, Fp y) {
  Fp ch, cl1, th, tl1, zh, zl;
  two_prod(x.hi, y, ch, cl1);
  const Fp cl2 = x.lo * y;
  fast_two_sum(ch, cl2, th, tl1);
  const Fp tl2 = tl1 + cl1;
  fast_two_sum(th, tl2, zh, zl);
  return {zh, zl};
}

/// DWTimesDW without FMA in the correction terms, relative error <= 7u^2.
inline DoubleWord mul(const DoubleWord& x, const DoubleWord& y) {
  Fp ch, cl1, zh, zl;
  two_prod(x.hi, y.hi, ch, cl1);
  const Fp tl1 = x.hi * y.lo;
  const Fp tl2 = x.lo * y.hi;
  const Fp cl2 = tl1 + tl2;
  const Fp cl3 = cl1 + cl2;
  fast_two_sum(ch, cl3, zh, zl);
  return {zh, zl};
}

/// DWDivFP, relative error <= 3.5u^2.
inline DoubleWord div(const DoubleWord& x, Fp y) {
  const Fp th = x.hi / y;
  Fp ph, pl, zh, zl;
  two_prod(th, y, ph, pl);
  const Fp dh = x.hi - ph;
  const Fp dt = dh - pl;
  const Fp d = dt + x.lo;
  const Fp tl = d / y;
  fast_two_sum(th, tl, zh, zl);
  return {zh, zl};
}

/// DWDivDW, relative error <= 15u^2 + 56u^3.
inline DoubleWord div(const DoubleWord& x, const DoubleWord& y) {
  const Fp th = x.hi / y.hi;
  const DoubleWord r = mul(y, th);
  const Fp ph = x.hi - r.hi;
  const Fp dl = x.lo - r.lo;
  const Fp d = ph + dl;
  const Fp tl = d / y.hi;
  Fp zh, zl;
  fast_two_sum(th, tl, zh, zl);
  return {zh, zl};
}

/// One Newton correction on the working-precision root; relative error
/// <= 3.125u^2 for x > 0.
inline DoubleWord sqrt(const DoubleWord& x) {
  if (x.hi == 0.0) return {0.0, 0.0};
  const Fp s = std::sqrt(x.hi);
  Fp ph, pl, zh, zl;
  two_prod(s, s, ph, pl);
  const Fp r = ((x.hi - ph) - pl + x.lo) / (2.0 * s);
  fast_two_sum(s, r, zh, zl);
  return {zh, zl};
}

inline DoubleWord abs(const DoubleWord& x) { return x.hi < 0.0 ? neg(x) : x; }

}  // namespace raw

// Checked public kernels: non-finite inputs or results raise
// FloatingPointError.

namespace detail {
[[noreturn]] void throw_non_finite(const char* op);

inline void require_finite(Fp a, const char* op) {
  if (!std::isfinite(a)) throw_non_finite(op);
}
inline void require_finite(const DoubleWord& a, const char* op) {
  if (!std::isfinite(a.hi) || !std::isfinite(a.lo)) throw_non_finite(op);
}
}  // namespace detail

struct SumAndError {
  Fp sum;
  Fp err;
  friend bool operator==(const SumAndError&, const SumAndError&) = default;
};

/// x = fl(a+b), y = a+b-x exactly.
inline SumAndError two_sum(Fp a, Fp b) {
  detail::require_finite(a, "two_sum");
  detail::require_finite(b, "two_sum");
  SumAndError r{};
  raw::two_sum(a, b, r.sum, r.err);
  detail::require_finite(r.sum, "two_sum");
  detail::require_finite(r.err, "two_sum");
  return r;
}

/// a*b = p + e exactly (barring underflow).
inline SumAndError two_prod(Fp a, Fp b) {
  detail::require_finite(a, "two_prod");
  detail::require_finite(b, "two_prod");
  SumAndError r{};
  raw::two_prod(a, b, r.sum, r.err);
  detail::require_finite(r.sum, "two_prod");
  detail::require_finite(r.err, "two_prod");
  return r;
}

/// Approximates a + b.hi + b.lo, dropping the error of b.lo + t.
inline DoubleWord pair_add(Fp a, const DoubleWord& b) {
  detail::require_finite(a, "pair_add");
  detail::require_finite(b, "pair_add");
  const DoubleWord c = raw::pair_add(a, b);
  detail::require_finite(c, "pair_add");
  return c;
}

#define FEIG_DW_CHECKED_BINARY(name, A, B)             \
  inline DoubleWord dw_##name(const A& a, const B& b) { \
    detail::require_finite(a, "dw_" #name);             \
    detail::require_finite(b, "dw_" #name);             \
    const DoubleWord c = raw::name(a, b);               \
    detail::require_finite(c, "dw_" #name);             \
    return c;                                           \
  }

FEIG_DW_CHECKED_BINARY(add, DoubleWord, DoubleWord)
FEIG_DW_CHECKED_BINARY(sub, DoubleWord, DoubleWord)
FEIG_DW_CHECKED_BINARY(mul, DoubleWord, DoubleWord)
FEIG_DW_CHECKED_BINARY(div, DoubleWord, DoubleWord)

#undef FEIG_DW_CHECKED_BINARY

inline DoubleWord dw_sqrt(const DoubleWord& a) {
  detail::require_finite(a, "dw_sqrt");
  if (a.hi < 0.0) throw FloatingPointError("dw_sqrt: negative argument");
  return raw::sqrt(a);
}

/// Throws FloatingPointError unless rounding is to-nearest, subnormals are
/// preserved and TwoSum is evaluated without fusion or reassociation.
void check_fp_environment();

/// Human-readable name of the exact-product kernel compiled in.
std::string two_prod_kernel_name();

}  // namespace feig
