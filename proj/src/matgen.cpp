#include "feig/matgen.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include "feig/gemm.hpp"

namespace feig {

const char* to_string(SpectrumMode m) {
  switch (m) {
    case SpectrumMode::kGeometric: return "geometric";
    case SpectrumMode::kOneLarge: return "one-large";
    case SpectrumMode::kOneSmall: return "one-small";
    case SpectrumMode::kArithmetic: return "arithmetic";
  }
  return "?";
}

SpectrumMode parse_spectrum_mode(const std::string& s) {
  if (s == "geometric") return SpectrumMode::kGeometric;
  if (s == "one-large") return SpectrumMode::kOneLarge;
  if (s == "one-small") return SpectrumMode::kOneSmall;
  if (s == "arithmetic") return SpectrumMode::kArithmetic;
  throw InvalidArgument("unknown spectrum mode '" + s + "'");
}

void GenSpec::validate() const {
  if (kind == MatrixKind::kFromFile) return;
  if (!(cond >= 1.0) || !std::isfinite(cond)) throw InvalidArgument("cond must be a finite value >= 1");
  if (n < 2) throw InvalidArgument("n must be at least 2");
  if (kind == MatrixKind::kBanded && bandwidth >= n) throw InvalidArgument("bandwidth must be below n");
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

Fp Rng::uniform() { return static_cast<Fp>(engine_() >> 11) * 0x1p-53; }

Fp Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  const Fp u1 = static_cast<Fp>((engine_() >> 11) + 1) * 0x1p-53;
  const Fp u2 = uniform();
  const Fp r = std::sqrt(-2.0 * std::log(u1));
  const Fp t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  have_spare_ = true;
  return r * std::cos(t);
}

std::vector<Fp> intended_spectrum(std::size_t n, Fp cond, SpectrumMode mode) {
  if (!(cond >= 1.0)) throw InvalidArgument("cond must be >= 1");
  if (n < 2) throw InvalidArgument("n must be at least 2");
  std::vector<Fp> d(n, 1.0);
  const Fp small = 1.0 / cond;
  const auto last = static_cast<Fp>(n - 1);
  switch (mode) {
    case SpectrumMode::kGeometric:
      for (std::size_t i = 1; i < n; ++i) d[i] = std::pow(cond, -static_cast<Fp>(i) / last);
      break;
    case SpectrumMode::kOneLarge:
      for (std::size_t i = 1; i < n; ++i) d[i] = small;
      break;
    case SpectrumMode::kOneSmall:
      d[n - 1] = small;
      break;
    case SpectrumMode::kArithmetic:
      for (std::size_t i = 1; i < n; ++i) d[i] = 1.0 - (1.0 - small) * static_cast<Fp>(i) / last;
      break;
  }
  d[n - 1] = mode == SpectrumMode::kGeometric ? small : d[n - 1];
  return d;
}

Matrix random_orthogonal(std::size_t n, Rng& rng) {
  // Columns stored as rows for contiguous access.
  std::vector<Fp> qt(n * n);
  for (auto& v : qt) v = rng.normal();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < n; ++j) {
      Fp* qj = qt.data() + j * n;
      for (std::size_t i = 0; i < j; ++i) {
        const Fp* qi = qt.data() + i * n;
        Fp r = 0.0;
        for (std::size_t k = 0; k < n; ++k) r += qi[k] * qj[k];
        for (std::size_t k = 0; k < n; ++k) qj[k] -= r * qi[k];
      }
      Fp nrm = 0.0;
      for (std::size_t k = 0; k < n; ++k) nrm += qj[k] * qj[k];
      nrm = std::sqrt(nrm);
      for (std::size_t k = 0; k < n; ++k) qj[k] /= nrm;
    }
  }
  Matrix q = Matrix::zeros(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) q.at(i, j) = qt[j * n + i];
  return q;
}

Matrix randsvd_sym(const GenSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const std::vector<Fp> d = intended_spectrum(n, spec.cond, spec.mode);
  Rng rng(spec.seed);
  const Matrix q = random_orthogonal(n, rng);

  // a_ij = sum_k q_ik d_k q_jk over the upper triangle, mirrored, so the
  // result is symmetric bit for bit.
  Matrix a = Matrix::zeros(n, n);
  parallel_rows(n, [&](std::size_t begin, std::size_t end) {
    std::vector<DoubleWord> row(n);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(row.begin(), row.end(), DoubleWord());
      for (std::size_t k = 0; k < n; ++k) {
        const DoubleWord qd = raw::mul(q.at(i, k), d[k]);
        for (std::size_t j = i; j < n; ++j) row[j] = raw::add(row[j], raw::mul(qd, q.at(j, k)));
      }
      for (std::size_t j = i; j < n; ++j) a.at(i, j) = row[j].to_fp();
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a.at(i, j) = a.at(j, i);
  return a;
}

Matrix banded_sym(std::size_t n, std::size_t bandwidth, Fp cond, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("n must be at least 2");
  if (bandwidth >= n) throw InvalidArgument("bandwidth must be below n");
  const std::vector<Fp> d = intended_spectrum(n, cond, SpectrumMode::kGeometric);
  Rng rng(seed);
  Matrix a = Matrix::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = d[i];

  // Each layer applies disjoint rotations on (i, i+1). The first layer gives
  // bandwidth 1 and every later one widens the band by two, so only as many
  // layers as fit inside the requested band are applied.
  const std::size_t layers = (bandwidth + 1) / 2;
  std::size_t band = 0;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    for (std::size_t i = layer % 2; i + 1 < n; i += 2) {
      const Fp theta = 2.0 * std::numbers::pi * rng.uniform();
      const Fp c = std::cos(theta);
      const Fp s = std::sin(theta);
      // Earlier pairs of this layer have already widened their rows by one.
      const std::size_t lo = i >= band + 2 ? i - band - 2 : 0;
      const std::size_t hi = std::min(n, i + band + 4);
      for (std::size_t j = lo; j < hi; ++j) {
        const Fp x = a.at(i, j);
        const Fp y = a.at(i + 1, j);
        a.at(i, j) = c * x - s * y;
        a.at(i + 1, j) = s * x + c * y;
      }
      for (std::size_t j = lo; j < hi; ++j) {
        const Fp x = a.at(j, i);
        const Fp y = a.at(j, i + 1);
        a.at(j, i) = c * x - s * y;
        a.at(j, i + 1) = s * x + c * y;
      }
      for (std::size_t j = lo; j < hi; ++j) {
        a.at(j, i) = a.at(i, j);
        a.at(j, i + 1) = a.at(i + 1, j);
      }
    }
    band = std::min(n - 1, band == 0 ? std::size_t{1} : band + 2);
  }

  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<Fp> vals;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= bandwidth ? i - bandwidth : 0;
    const std::size_t hi = std::min(n, i + bandwidth + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      cols.push_back(j);
      vals.push_back(a.at(std::min(i, j), std::max(i, j)));
    }
    row_ptr.push_back(cols.size());
  }
  return Matrix::csr(n, n, std::move(row_ptr), std::move(cols), std::move(vals));
}

Matrix generate(const GenSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case MatrixKind::kDenseSym: return randsvd_sym(spec);
    case MatrixKind::kBanded: return banded_sym(spec.n, spec.bandwidth, spec.cond, spec.seed);
    case MatrixKind::kFromFile: {
      if (spec.path.extension() == ".bin") return read_binary_fixture(spec.path);
      return load_matrix_market(spec.path);
    }
  }
  throw InvalidArgument("unknown matrix kind");
}

// ---- MatrixMarket ---------------------------------------------------------

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Tokenizer {
  std::string_view rest;
  std::size_t line;

  std::string_view word() {
    const auto b = rest.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
      rest = {};
      return {};
    }
    rest.remove_prefix(b);
    const auto e = rest.find_first_of(" \t\r");
    const auto w = rest.substr(0, e);
    rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
    return w;
  }

  std::size_t index(const char* what) {
    const auto w = word();
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (w.empty() || ec != std::errc() || p != w.data() + w.size()) {
      throw ParseError("expected " + std::string(what) + ", got '" + std::string(w) + "'", line);
    }
    return v;
  }

  Fp value() {
    const auto w = word();
    Fp v = 0.0;
    const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (w.empty() || ec != std::errc() || p != w.data() + w.size()) {
      throw ParseError("expected a real value, got '" + std::string(w) + "'", line);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite value", line);
    return v;
  }

  void end() {
    if (!word().empty()) throw ParseError("trailing tokens", line);
  }
};

struct Triplet {
  std::size_t i, j;
  Fp v;
};

}  // namespace

Matrix parse_matrix_market(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  if (!std::getline(in, text)) throw ParseError("empty file", 1);
  ++line_no;
  std::istringstream header(lower(text));
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket") throw ParseError("missing %%MatrixMarket banner", line_no);
  if (object != "matrix") throw ParseError("unsupported object '" + object + "'", line_no);
  if (format != "coordinate" && format != "array") throw ParseError("unsupported format '" + format + "'", line_no);
  if (field == "pattern") throw ParseError("pattern-only files carry no values", line_no);
  if (field != "real" && field != "integer" && field != "double") {
    throw ParseError("unsupported field '" + field + "' (real or integer required)", line_no);
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError("unsupported symmetry '" + symmetry + "'", line_no);
  }
  const bool symmetric = symmetry == "symmetric";
  const bool coordinate = format == "coordinate";

  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      const auto b = out.find_first_not_of(" \t\r");
      if (b == std::string::npos || out[b] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_data_line(text)) throw ParseError("missing size line", line_no + 1);
  Tokenizer size_tok{text, line_no};
  const std::size_t rows = size_tok.index("row count");
  const std::size_t cols = size_tok.index("column count");
  const std::size_t count = coordinate ? size_tok.index("entry count")
                                       : (symmetric ? rows * (rows + 1) / 2 : rows * cols);
  size_tok.end();
  if (symmetric && rows != cols) throw ParseError("symmetric matrix must be square", line_no);

  std::vector<Triplet> entries;
  entries.reserve(symmetric ? 2 * count : count);
  std::size_t ai = 0;
  std::size_t aj = 0;
  for (std::size_t e = 0; e < count; ++e) {
    if (!next_data_line(text)) {
      throw ParseError("expected " + std::to_string(count) + " entries, found " + std::to_string(e), line_no + 1);
    }
    Tokenizer tok{text, line_no};
    std::size_t i;
    std::size_t j;
    if (coordinate) {
      i = tok.index("row index");
      j = tok.index("column index");
      if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError("index out of range", line_no);
      --i;
      --j;
    } else {
      // Column-major; symmetric arrays list the lower triangle only.
      i = ai;
      j = aj;
      if (++ai == rows) {
        ++aj;
        ai = symmetric ? aj : 0;
      }
    }
    const Fp v = tok.value();
    tok.end();
    if (symmetric && i < j) throw ParseError("entry above the diagonal in symmetric storage", line_no);
    entries.push_back({i, j, v});
    if (symmetric && i != j) entries.push_back({j, i, v});
  }
  while (next_data_line(text)) throw ParseError("more entries than declared", line_no);

  std::stable_sort(entries.begin(), entries.end(),
                   [](const Triplet& a, const Triplet& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<Fp> vals;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (e > 0 && entries[e].i == entries[e - 1].i && entries[e].j == entries[e - 1].j) {
      vals.back() += entries[e].v;
      continue;
    }
    col_idx.push_back(entries[e].j);
    vals.push_back(entries[e].v);
    ++row_ptr[entries[e].i + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
  return Matrix::csr(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(vals));
}

Matrix load_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "': file not found or unreadable");
  return parse_matrix_market(in);
}

namespace {

std::string shortest(Fp v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool stored(const Matrix& a, std::size_t i, std::size_t j) {
  if (!a.is_sparse()) return true;
  const auto c = a.row_cols(i);
  return std::binary_search(c.begin(), c.end(), j);
}

bool symmetric_storage(const Matrix& a) {
  if (!a.is_square() || !a.is_symmetric()) return false;
  if (!a.is_sparse()) return true;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (const std::size_t j : a.row_cols(i))
      if (!stored(a, j, i)) return false;
  return true;
}

}  // namespace

void write_matrix_market(std::ostream& out, const Matrix& a) {
  const bool sym = symmetric_storage(a);
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto vals = a.row_values(i);
    for (std::size_t t = 0; t < vals.size(); ++t) {
      const std::size_t j = a.is_sparse() ? a.row_cols(i)[t] : t;
      if (!sym || j <= i) ++count;
    }
  }
  out << "%%MatrixMarket matrix coordinate real " << (sym ? "symmetric" : "general") << '\n';
  out << a.rows() << ' ' << a.cols() << ' ' << count << '\n';
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto vals = a.row_values(i);
    for (std::size_t t = 0; t < vals.size(); ++t) {
      const std::size_t j = a.is_sparse() ? a.row_cols(i)[t] : t;
      if (sym && j > i) continue;
      out << i + 1 << ' ' << j + 1 << ' ' << shortest(vals[t]) << '\n';
    }
  }
}

void write_matrix_market(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  write_matrix_market(out, a);
  if (!out) throw InvalidArgument("write failed for '" + path.string() + "'");
}

// ---- binary fixtures ------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'F', 'E', 'I', 'G', 'M', 'A', 'T', '1'};
constexpr std::uint64_t kFlagSymmetric = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("truncated binary fixture", 0);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

}  // namespace

void write_binary_fixture(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put_u64(out, a.rows());
  put_u64(out, a.cols());
  put_u64(out, a.is_symmetric() ? kFlagSymmetric : 0);
  const Matrix d = a.to_dense();
  for (const Fp v : d.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw InvalidArgument("write failed for '" + path.string() + "'");
}

Matrix read_binary_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "': file not found or unreadable");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("bad fixture magic", 0);
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  const std::uint64_t flags = get_u64(in);
  if (rows > (1u << 16) || cols > (1u << 16)) throw ParseError("fixture dimensions implausible", 0);
  std::vector<Fp> vals(rows * cols);
  for (auto& v : vals) v = std::bit_cast<Fp>(get_u64(in));
  Matrix a = Matrix::dense(rows, cols, std::move(vals));
  if ((flags & kFlagSymmetric) && !a.is_symmetric()) throw ParseError("fixture flagged symmetric but is not", 0);
  return a;
}

}  // namespace feig
