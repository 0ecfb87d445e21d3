#pragma once

// Test matrices: randsvd-style symmetric matrices with a prescribed spectrum,
// banded stand-ins for the sparse collection, MatrixMarket and binary I/O.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "feig/matrix.hpp"

namespace feig {

enum class SpectrumMode { kGeometric, kOneLarge, kOneSmall, kArithmetic };
enum class MatrixKind { kDenseSym, kBanded, kFromFile };

const char* to_string(SpectrumMode m);
SpectrumMode parse_spectrum_mode(const std::string& s);

struct GenSpec {
  std::size_t n = 100;
  Fp cond = 1e10;
  SpectrumMode mode = SpectrumMode::kGeometric;
  std::uint64_t seed = 1;
  MatrixKind kind = MatrixKind::kDenseSym;
  std::size_t bandwidth = 0;
  std::filesystem::path path;

  /// Throws InvalidArgument unless cond >= 1 and n >= 2 (generated kinds).
  void validate() const;
};

/// Seeded source used by every generator: std::mt19937_64, uniforms from the
/// top 53 bits, normals by Box-Muller. Fixed algorithm, so streams are stable
/// across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Uniform on [0, 1).
  Fp uniform();
  Fp normal();
  std::uint64_t next();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  Fp spare_ = 0.0;
};

/// Intended spectrum, descending from 1 (geometric: cond^(-(i-1)/(n-1))).
std::vector<Fp> intended_spectrum(std::size_t n, Fp cond, SpectrumMode mode);

/// Q from modified Gram-Schmidt (twice) on a seeded Gaussian matrix.
Matrix random_orthogonal(std::size_t n, Rng& rng);

/// A = Q D Q^T formed in double-word and rounded once; exactly symmetric.
Matrix randsvd_sym(const GenSpec& spec);

/// D rotated by layers of adjacent Givens rotations, (bandwidth + 1) / 2 of
/// them so the result stays inside the band. Stored as CSR with the full band
/// pattern; bandwidth 0 gives the diagonal itself.
Matrix banded_sym(std::size_t n, std::size_t bandwidth, Fp cond, std::uint64_t seed);

/// Dispatches on spec.kind.
Matrix generate(const GenSpec& spec);

/// Coordinate or array, real or integer, general or symmetric. Returns CSR.
/// Symmetric storage is expanded, duplicates are summed, explicit zeros kept.
Matrix load_matrix_market(const std::filesystem::path& path);
Matrix parse_matrix_market(std::istream& in);

/// Coordinate format, shortest round-trip values. Uses symmetric storage when
/// both the pattern and the values are symmetric.
void write_matrix_market(const std::filesystem::path& path, const Matrix& a);
void write_matrix_market(std::ostream& out, const Matrix& a);

/// "FEIGMAT1", u64 rows, u64 cols, u64 flags, then little-endian binary64
/// entries in row-major order. Always dense.
void write_binary_fixture(const std::filesystem::path& path, const Matrix& a);
Matrix read_binary_fixture(const std::filesystem::path& path);

}  // namespace feig
