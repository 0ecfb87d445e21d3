#include "feig/ozaki.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "feig/gemm.hpp"

namespace feig {

namespace {

constexpr int kMaxShiftExponent = std::numeric_limits<Fp>::max_exponent - 2;  // 1022

/// Index of the row (kRows) or column (kCols) each stored value belongs to.
std::vector<std::size_t> group_of_values(const Matrix& a, SplitAxis axis) {
  std::vector<std::size_t> g(a.nnz());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const std::size_t b = a.row_begin(i);
    const std::size_t len = a.row_values(i).size();
    for (std::size_t t = 0; t < len; ++t) {
      if (axis == SplitAxis::kRows) {
        g[b + t] = i;
      } else {
        g[b + t] = a.is_sparse() ? a.row_cols(i)[t] : t;
      }
    }
  }
  return g;
}

std::vector<Fp> group_max(std::span<const Fp> v, const std::vector<std::size_t>& group,
                          std::size_t groups) {
  std::vector<Fp> m(groups, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) m[group[k]] = std::max(m[group[k]], std::abs(v[k]));
  return m;
}

SplitMatrix split_impl(const Matrix& a, int exponent, std::size_t max_slices, SplitStop stop,
                       SplitAxis axis) {
  if (max_slices < 1) throw InvalidArgument("split: max_slices must be >= 1");
  if (exponent < 1) throw InvalidArgument("split: exponent must be >= 1");
  require_finite(a, "split");

  const std::size_t groups = axis == SplitAxis::kRows ? a.rows() : a.cols();
  const std::vector<std::size_t> group = group_of_values(a, axis);

  SplitMatrix out;
  out.axis = axis;
  out.exponent = exponent;

  std::vector<Fp> cur(a.values().begin(), a.values().end());
  const std::vector<Fp> first_max = group_max(cur, group, groups);

  for (std::size_t r = 0; r < max_slices; ++r) {
    const std::vector<Fp> v = group_max(cur, group, groups);
    if (std::all_of(v.begin(), v.end(), [](Fp x) { return x == 0.0; })) break;

    std::vector<Fp> shift(groups);
    for (std::size_t g = 0; g < groups; ++g) shift[g] = shift_constant(v[g], exponent);

    std::vector<Fp> slice(cur.size());
    for (std::size_t k = 0; k < cur.size(); ++k) {
      const Fp s = shift[group[k]];
      slice[k] = (s + cur[k]) - s;
      cur[k] = cur[k] - slice[k];
    }
    out.slices.push_back(a.with_values(std::move(slice)));
    out.shifts.push_back(std::move(shift));

    const std::vector<Fp> rest = group_max(cur, group, groups);
    bool done = true;
    for (std::size_t g = 0; g < groups && done; ++g) {
      if (rest[g] == 0.0) continue;
      done = stop == SplitStop::kBelowWorkingPrecision && rest[g] <= kUnitRoundoff * first_max[g];
    }
    if (done) break;
  }
  out.remainder = a.with_values(std::move(cur));
  return out;
}

/// Largest |entry| / 2^(lowest set bit exponent) over the entries of one
/// group, i.e. the integer magnitude of the group on its own grid.
struct GroupGrid {
  int bottom = std::numeric_limits<int>::max();
  Fp max_abs = 0.0;
};

int lowest_bit_exponent(Fp x) {
  int e = 0;
  const Fp m = std::frexp(std::abs(x), &e);  // x = m * 2^e, m in [0.5, 1)
  const auto mant = static_cast<std::uint64_t>(std::ldexp(m, 53));
  return e - 53 + std::countr_zero(mant);
}

std::vector<GroupGrid> group_grids(const Matrix& a, SplitAxis axis) {
  const std::size_t groups = axis == SplitAxis::kRows ? a.rows() : a.cols();
  const std::vector<std::size_t> group = group_of_values(a, axis);
  std::vector<GroupGrid> out(groups);
  const auto v = a.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0.0) continue;
    GroupGrid& g = out[group[k]];
    g.bottom = std::min(g.bottom, lowest_bit_exponent(v[k]));
    g.max_abs = std::max(g.max_abs, std::abs(v[k]));
  }
  return out;
}

Fp max_integer_magnitude(const std::vector<GroupGrid>& grids) {
  Fp m = 0.0;
  for (const GroupGrid& g : grids) {
    if (g.max_abs == 0.0) continue;
    m = std::max(m, std::ldexp(g.max_abs, -g.bottom));
  }
  return m;
}

void accumulate(DwMatrix& acc, const Matrix& product) {
  auto out = acc.data();
  const auto p = product.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = raw::pair_add(p[k], out[k]);
}

}  // namespace

std::size_t SplitMatrix::term_count() const {
  return slices.size() + (remainder.is_zero() ? 0 : 1);
}

Matrix SplitMatrix::reconstruct() const {
  std::vector<Fp> v(remainder.values().begin(), remainder.values().end());
  std::fill(v.begin(), v.end(), 0.0);
  for (const Matrix& s : slices) {
    const auto sv = s.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += sv[k];
  }
  const auto rv = remainder.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += rv[k];
  return remainder.with_values(std::move(v));
}

SplitMatrix SplitMatrix::unsplit(const Matrix& a, SplitAxis axis) {
  SplitMatrix s;
  s.remainder = a;
  s.axis = axis;
  return s;
}

Fp shift_constant(Fp v, int exponent) {
  if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("shift_constant: input must be finite and >= 0");
  if (v == 0.0) return 0.0;
  const int e = ceil_log2(v) + exponent;
  if (e > kMaxShiftExponent) {
    throw FloatingPointError("shift_constant: shift 0.75*2^" + std::to_string(e) + " overflows");
  }
  return std::ldexp(0.75, e);
}

SplitMatrix split_rows(const Matrix& a, int alpha, std::size_t max_slices, SplitStop stop) {
  return split_impl(a, alpha, max_slices, stop, SplitAxis::kRows);
}

SplitMatrix split_cols(const Matrix& x, int beta, std::size_t max_slices, SplitStop stop) {
  return split_impl(x, beta, max_slices, stop, SplitAxis::kCols);
}

int fixed_k_exponent(std::size_t inner_dim) {
  const int need = -kLog2UnitRoundoff + ceil_log2(static_cast<std::uint64_t>(std::max<std::size_t>(inner_dim, 1)));
  return (need + 1) / 2;
}

DwMatrix accmul_fixed_k(const Matrix& a, const Matrix& b_in, int k) {
  if (k < 2 || k > 4) throw InvalidArgument("accmul_fixed_k: k must be 2, 3 or 4");
  if (a.cols() != b_in.rows()) throw InvalidArgument("accmul_fixed_k: inner dimensions differ");
  const Matrix b = b_in.to_dense();
  const int e = fixed_k_exponent(a.cols());
  const auto slices = static_cast<std::size_t>(k == 2 ? 1 : k - 1);
  const SplitMatrix as = split_rows(a, e, slices);
  const SplitMatrix bs = split_cols(b, e, k == 2 ? 2 : slices);

  // Missing slices (early exact termination) are zero.
  const Matrix a_zero = a.zeros_like();
  const Matrix b_zero = b.zeros_like();
  auto A = [&](std::size_t r) -> const Matrix& { return r <= as.slices.size() ? as.slices[r - 1] : a_zero; };
  auto B = [&](std::size_t s) -> const Matrix& { return s <= bs.slices.size() ? bs.slices[s - 1] : b_zero; };

  DwMatrix acc(a.rows(), b.cols());
  auto term = [&](const Matrix& l, const Matrix& r) { accumulate(acc, multiply(l, r)); };

  switch (k) {
    case 2:
      term(A(1), B(1));
      term(A(1), B(2));
      term(as.remainder, b);
      break;
    case 3:
      term(A(1), B(1));
      term(A(1), B(2));
      term(A(2), B(1));
      term(A(2), B(2));
      term(as.remainder, b);
      term(add_same_pattern(A(1), A(2)), bs.remainder);
      break;
    default: {
      term(A(1), B(1));
      term(A(1), B(2));
      term(A(2), B(1));
      term(A(1), B(3));
      term(A(2), B(2));
      term(A(3), B(1));
      std::vector<Fp> head(a.nnz());
      const auto av = a.values();
      const auto rv = as.remainder.values();
      for (std::size_t t = 0; t < head.size(); ++t) head[t] = av[t] - rv[t];
      term(a.with_values(std::move(head)), bs.remainder);
      term(add_same_pattern(A(2), A(3)), B(3));
      term(A(3), B(2));
      term(as.remainder, b);
      break;
    }
  }
  return acc;
}

DwMatrix accmul_one_sided(const SplitMatrix& a_split, const Matrix& x) {
  if (a_split.axis != SplitAxis::kRows) throw InvalidArgument("accmul_one_sided: A must be split by rows");
  if (a_split.remainder.cols() != x.rows()) throw InvalidArgument("accmul_one_sided: inner dimensions differ");
  DwMatrix acc(a_split.remainder.rows(), x.cols());
  for (const Matrix& s : a_split.slices) accumulate(acc, multiply(s, x));
  if (!a_split.remainder.is_zero()) accumulate(acc, multiply(a_split.remainder, x));
  return acc;
}

std::size_t count_unsafe_slice_products(const SplitMatrix& a_split, const Matrix& x) {
  const Fp mx = max_integer_magnitude(group_grids(x, SplitAxis::kCols));
  std::size_t unsafe = 0;
  for (const Matrix& s : a_split.slices) {
    const Fp ma = max_integer_magnitude(group_grids(s, SplitAxis::kRows));
    if (ma == 0.0 || mx == 0.0) continue;
    // ma * mx * nnz <= 2^53 makes every partial sum an exact integer multiple
    // of the combined grid.
    const DoubleWord prod = raw::mul(raw::mul(ma, mx), static_cast<Fp>(s.max_row_nnz()));
    if (prod.hi > 0x1p53 || (prod.hi == 0x1p53 && prod.lo > 0.0)) ++unsafe;
  }
  return unsafe;
}

SpectralStats compute_stats(const std::vector<Fp>& lambda, const Matrix& x, std::size_t max_row_nnz) {
  SpectralStats st;
  st.n = x.cols();
  st.max_row_nnz = max_row_nnz;
  std::vector<Fp> sorted = lambda;
  std::sort(sorted.begin(), sorted.end());
  st.min_gap = std::numeric_limits<Fp>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) st.min_gap = std::min(st.min_gap, sorted[i] - sorted[i - 1]);
  if (sorted.size() < 2) st.min_gap = 0.0;
  for (Fp l : sorted) st.max_abs_eig = std::max(st.max_abs_eig, std::abs(l));
  st.colmax.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) st.colmax[j] = std::max(st.colmax[j], std::abs(x(i, j)));
  }
  return st;
}

DoubleWord colmax_power_sum(const std::vector<Fp>& colmax) {
  DoubleWord s;
  for (Fp w : colmax) {
    if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("colmax entries must be finite and >= 0");
    if (w == 0.0) continue;
    s = raw::add(s, std::ldexp(1.0, 2 * ceil_log2(w)));
  }
  return s;
}

namespace {

void validate(const SpectralStats& stats, Fp delta) {
  if (!(delta > kUnitRoundoff) || !std::isfinite(delta)) {
    throw InvalidArgument("delta below unit roundoff");
  }
  if (!(stats.min_gap > 0.0)) throw InvalidArgument("minimum eigenvalue gap is zero");
  if (!(stats.max_abs_eig > 0.0)) throw InvalidArgument("all eigenvalues are zero");
  if (stats.n == 0) throw InvalidArgument("empty problem");
}

/// Returns q = num / (max|lambda| * S) in double-word, with num given.
DoubleWord ratio_over_stats(const DoubleWord& num, const SpectralStats& stats) {
  const DoubleWord s = colmax_power_sum(stats.colmax);
  if (s.hi == 0.0) throw InvalidArgument("eigenvector matrix is zero (column maxima sum vanishes)");
  const DoubleWord q = raw::div(raw::div(num, stats.max_abs_eig), s);
  // The exponent searches below need a finite positive ratio.
  if (!(q.hi > 0.0) || !std::isfinite(q.hi)) throw InvalidArgument("split ratio underflows or overflows");
  return q;
}

/// Compares q against 9 * 2^(2b - 110) = (0.75 u 2^b)^2 exactly.
bool q_le_threshold(const DoubleWord& q, int b) {
  const Fp t = std::ldexp(9.0, 2 * b - 110);
  return q.hi < t || (q.hi == t && q.lo <= 0.0);
}

/// ceil / floor of log2(sqrt(q) / (0.75 u)), evaluated by exact comparisons.
int log2_ceil_beta(const DoubleWord& q) {
  int b = ceil_log2(q.hi) / 2 + 53;
  while (!q_le_threshold(q, b)) ++b;
  while (q_le_threshold(q, b - 1)) --b;
  return b;
}

int log2_floor_beta(const DoubleWord& q) {
  // Largest b with (0.75 u 2^b)^2 <= q.
  int b = ceil_log2(q.hi) / 2 + 53;
  auto le = [&](int bb) {
    const Fp t = std::ldexp(9.0, 2 * bb - 110);
    return t < q.hi || (t == q.hi && q.lo >= 0.0);
  };
  while (!le(b)) --b;
  while (le(b + 1)) ++b;
  return b;
}

SplitParams finish(int alpha, int beta) {
  SplitParams p;
  p.clamped = beta < kMinExponent || beta > kMaxExponent || alpha < kMinExponent || alpha > kMaxExponent;
  p.beta = std::clamp(beta, kMinExponent, kMaxExponent);
  p.alpha = std::clamp(alpha, kMinExponent, kMaxExponent);
  p.n_x = 1;
  return p;
}

}  // namespace

SplitParams choose_beta_theoretical(const SpectralStats& stats, Fp delta, Fp xi) {
  validate(stats, delta);
  if (!(xi > 0.0) || !std::isfinite(xi)) throw InvalidArgument("xi must be positive");
  const DoubleWord num = raw::mul(raw::mul(delta, xi), stats.min_gap);
  const int beta = log2_ceil_beta(ratio_over_stats(num, stats));
  const int alpha = -kLog2UnitRoundoff + ceil_log2(static_cast<std::uint64_t>(stats.n)) - beta;
  return finish(alpha, beta);
}

SplitParams choose_beta_dense(const SpectralStats& stats, Fp delta) {
  validate(stats, delta);
  const DoubleWord num = raw::mul(raw::mul(delta, static_cast<Fp>(stats.n)), stats.min_gap);
  const int beta = log2_floor_beta(ratio_over_stats(num, stats));
  const int alpha = -kLog2UnitRoundoff - beta + ceil_log2_sqrt(stats.n);
  return finish(alpha, beta);
}

SplitParams choose_beta_sparse(const SpectralStats& stats, Fp delta) {
  validate(stats, delta);
  if (stats.max_row_nnz < 1) throw InvalidArgument("max_row_nnz must be >= 1");
  const auto k = static_cast<std::uint64_t>(stats.max_row_nnz);
  const std::uint64_t k2 = k * k;
  const auto min_sq = static_cast<Fp>(std::min<std::uint64_t>(k2, stats.n));
  const DoubleWord num = raw::mul(raw::mul(delta, stats.min_gap), min_sq);
  const int beta = log2_floor_beta(ratio_over_stats(num, stats));
  const int alpha = -kLog2UnitRoundoff - beta + ceil_log2(k);
  return finish(alpha, beta);
}

}  // namespace feig
