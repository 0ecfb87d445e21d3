#include "verify.hpp"

#include <cmath>
#include <sstream>

#include "feig/gemm.hpp"
#include "feig/matgen.hpp"
#include "feig/oracle.hpp"
#include "feig/ozaki.hpp"
#include "feig/refine.hpp"

namespace feig::cli {

namespace {

using oracle::to_rational;

Fp random_binade(Rng& rng, int emin, int emax) {
  const std::uint64_t mant = (rng.next() >> 11) | (std::uint64_t{1} << 52);
  const int e = emin + static_cast<int>(rng.next() % static_cast<std::uint64_t>(emax - emin + 1));
  const Fp v = std::ldexp(static_cast<Fp>(mant), e - 52);
  return (rng.next() & 1) ? -v : v;
}

Matrix random_spread(std::size_t rows, std::size_t cols, Rng& rng, int emin, int emax) {
  Matrix m = Matrix::zeros(rows, cols);
  for (auto& v : m.values()) v = random_binade(rng, emin, emax);
  return m;
}

void fail(VerifyResult& r, const std::string& what) {
  if (r.failures++ == 0) r.first_failure = what;
}

/// Checks one split against the rational oracle.
void check_split(VerifyResult& r, const Matrix& a, const SplitMatrix& s, const std::string& tag) {
  const bool by_rows = s.axis == SplitAxis::kRows;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      ++r.checks;
      const std::size_t g = by_rows ? i : j;
      mpq_class sum = to_rational(s.remainder(i, j));
      Fp rem = a(i, j);
      for (std::size_t t = 0; t < s.slices.size(); ++t) {
        const Fp piece = s.slices[t](i, j);
        sum += to_rational(piece);
        const Fp shift = s.shifts[t][g];
        const mpq_class exact_rem = to_rational(rem) - to_rational(piece);
        rem = rem - piece;
        if (to_rational(rem) != exact_rem) {
          fail(r, tag + ": remainder update not exact");
          return;
        }
        const Fp bound = kUnitRoundoff * ufp(shift);
        if (std::abs(rem) > bound) {
          fail(r, tag + ": remainder exceeds u*ufp(shift)");
          return;
        }
        const Fp grid = 2.0 * kUnitRoundoff * ufp(shift);
        if (shift == 0.0 ? piece != 0.0 : std::fmod(piece, grid) != 0.0) {
          fail(r, tag + ": slice entry off its grid");
          return;
        }
      }
      if (sum != to_rational(a(i, j))) {
        fail(r, tag + ": slices + remainder != original");
        return;
      }
    }
  }
}

}  // namespace

VerifyResult verify_eft(std::size_t count, std::uint64_t seed) {
  VerifyResult r{"eft"};
  Rng rng(seed);
  mpq_class qa, qb, qx, qy;
  for (std::size_t t = 0; t < count; ++t) {
    const Fp a = random_binade(rng, -300, 300);
    // Half the pairs sit within 60 binades of each other so cancellation and
    // nontrivial residuals are common.
    int ea = 0;
    std::frexp(a, &ea);
    const Fp b = (t & 1) ? random_binade(rng, std::max(-300, ea - 60), std::min(300, ea + 60))
                         : random_binade(rng, -300, 300);
    const SumAndError s = two_sum(a, b);
    ++r.checks;
    mpq_set_d(qa.get_mpq_t(), a);
    mpq_set_d(qb.get_mpq_t(), b);
    mpq_set_d(qx.get_mpq_t(), s.sum);
    mpq_set_d(qy.get_mpq_t(), s.err);
    if (s.sum != a + b || qx + qy != qa + qb) {
      std::ostringstream os;
      os << std::hexfloat << "two_sum(" << a << ", " << b << ")";
      fail(r, os.str());
    }
  }
  return r;
}

VerifyResult verify_split(std::size_t count, std::uint64_t seed) {
  VerifyResult r{"split"};
  Rng rng(seed);
  constexpr int kAlphas[] = {17, 27, 40};
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t rows = 1 + rng.next() % 64;
    const std::size_t cols = 1 + rng.next() % 64;
    const Matrix a = random_spread(rows, cols, rng, -20, 20);
    const int alpha = kAlphas[t % 3];
    const std::size_t max_slices = 1 + rng.next() % 4;
    const std::string tag = "matrix " + std::to_string(t) + " alpha " + std::to_string(alpha);
    check_split(r, a, split_rows(a, alpha, max_slices), tag + " rows");
    check_split(r, a, split_cols(a, alpha, max_slices), tag + " cols");
  }
  return r;
}

VerifyResult verify_slice_products(std::uint64_t seed) {
  VerifyResult r{"slice-products"};
  Rng rng(seed);
  struct Size {
    std::size_t n;
    int trials;
  };
  for (const Size sz : {Size{4, 30}, Size{16, 10}, Size{64, 3}}) {
    const int total = 53 + ceil_log2(static_cast<std::uint64_t>(sz.n));
    for (int t = 0; t < sz.trials; ++t) {
      const int beta = 12 + static_cast<int>(rng.next() % 30);
      const int alpha = total - beta;
      const Matrix a = random_spread(sz.n, sz.n, rng, -20, 20);
      const Matrix x = random_spread(sz.n, sz.n, rng, -20, 20);
      const SplitMatrix as = split_rows(a, alpha, 3);
      const SplitMatrix xs = split_cols(x, beta, 3);
      for (std::size_t p = 0; p < as.slices.size(); ++p) {
        for (std::size_t q = 0; q < xs.slices.size(); ++q) {
          const Matrix fl = multiply(as.slices[p], xs.slices[q]);
          const oracle::RationalMatrix exact = oracle::rational_matmul(as.slices[p], xs.slices[q]);
          ++r.checks;
          bool same = true;
          for (std::size_t i = 0; i < sz.n && same; ++i)
            for (std::size_t j = 0; j < sz.n && same; ++j) same = to_rational(fl(i, j)) == exact[i][j];
          if (!same) {
            fail(r, "n=" + std::to_string(sz.n) + " alpha=" + std::to_string(alpha) + " beta=" +
                        std::to_string(beta) + " slices (" + std::to_string(p + 1) + "," +
                        std::to_string(q + 1) + ") inexact");
          }
        }
      }
    }
  }
  return r;
}

namespace {

Fp frobenius_distance(const DwMatrix& c, const oracle::RationalMatrix& exact) {
  mpq_class s = 0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const mpq_class d = to_rational(c(i, j)) - exact[i][j];
      s += d * d;
    }
  }
  return std::sqrt(s.get_d());
}

Fp frobenius(const oracle::RationalMatrix& m) {
  mpq_class s = 0;
  for (const auto& row : m)
    for (const auto& v : row) s += v * v;
  return std::sqrt(s.get_d());
}

}  // namespace

VerifyResult verify_gemm(std::uint64_t seed, std::vector<GemmCase>* cases) {
  VerifyResult r{"gemm"};
  std::uint64_t s = seed;
  for (const std::size_t n : {8, 16, 32, 64}) {
    GenSpec g;
    g.n = n;
    g.cond = 1e10;
    g.seed = s++;
    const Matrix a = randsvd_sym(g);
    const Matrix x = baseline_eig(a).x;
    g.seed = s++;
    const Matrix b = randsvd_sym(g);
    const std::pair<const char*, const Matrix*> rhs[] = {{"A*X", &x}, {"A*B", &b}};
    for (const auto& [name, other] : rhs) {
      const oracle::RationalMatrix exact = oracle::rational_matmul(a, *other);
      const Fp norm = frobenius(exact);
      GemmCase gc{n, name, {}};
      for (int k = 2; k <= 4; ++k) {
        gc.rel_error[static_cast<std::size_t>(k - 2)] = frobenius_distance(accmul_fixed_k(a, *other, k), exact) / norm;
      }
      ++r.checks;
      const std::string tag = "n=" + std::to_string(n) + " " + name;
      if (!(gc.rel_error[1] <= 8.0 * kUnitRoundoff)) fail(r, tag + ": k=3 error above 8u");
      if (gc.rel_error[1] > gc.rel_error[0] || gc.rel_error[2] > gc.rel_error[1]) {
        fail(r, tag + ": error grows with k");
      }
      if (cases) cases->push_back(gc);
    }
  }
  return r;
}

}  // namespace feig::cli
