#pragma once

// Figure and table drivers behind `feig figure` and `feig table-sparse`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "feig/refine.hpp"

namespace feig::cli {

/// Shortest round-trip decimal; empty for nullopt.
std::string fmt(Fp v);
std::string fmt(const std::optional<Fp>& v);

struct Fig1Row {
  Fp cond = 0.0;
  Fp forward = 0.0;
  Fp orth = 0.0;
  Fp diag = 0.0;
};

/// Baseline solver errors on randsvd matrices, one row per cond.
std::vector<Fig1Row> figure1(std::size_t n, const std::vector<Fp>& conds, std::uint64_t seed);
void write_fig1_csv(std::ostream& out, const std::vector<Fig1Row>& rows);

struct Fig23Row {
  Fp cond = 0.0;
  Fp delta = 0.0;
  std::string status;
  std::size_t iters = 0;
  std::optional<Fp> forward;
  std::optional<Fp> orth;
  std::optional<Fp> diag;
  std::size_t n_a = 0;
  int beta = 0;
};

/// Final refined errors per (cond, delta). Clustered spectra are reported as
/// status "clustered" with empty error columns.
std::vector<Fig23Row> figure23(std::size_t n, const std::vector<Fp>& conds, const std::vector<Fp>& deltas,
                               RefineMode mode, std::uint64_t seed);
void write_fig23_csv(std::ostream& out, const std::vector<Fig23Row>& rows);

struct HistoryRow {
  std::size_t n = 0;
  Fp delta = 0.0;
  std::string method;  ///< "auto", "nA=<m>" or "fixed-k3"
  std::size_t iter = 0;
  std::optional<Fp> forward;
  Fp correction = 0.0;
  Fp step = 0.0;
  std::size_t n_a = 0;
  int beta = 0;
  std::string status;
};

struct HistoryOptions {
  std::vector<std::size_t> sizes{256, 512, 1024};
  std::vector<Fp> deltas{1e-8, 1e-10, 1e-12};
  Fp cond = 1e10;
  std::vector<std::size_t> fixed_n_a{2, 3, 4, 5, 6};
  bool include_auto = true;
  bool include_fixed_k = true;
  std::size_t max_iter = 5;
  /// Without the oracle only the surrogate columns are filled.
  bool oracle = true;
};

/// Convergence histories on randsvd matrices; iteration 0 is the baseline.
std::vector<HistoryRow> figure45(const HistoryOptions& opt, std::uint64_t seed);
void write_fig45_csv(std::ostream& out, const std::vector<HistoryRow>& rows);

struct SparseRow {
  std::string name;
  std::size_t n = 0;
  Fp delta = 0.0;
  Fp initial = 0.0;
  std::vector<Fp> forward;  ///< per iteration
  std::string status;
};

/// Every *.mtx under dir (sorted by name), sparse mode with a fixed n_A.
/// Unreadable files and n above the oracle cap are skipped with a line on
/// `log`.
std::vector<SparseRow> table_sparse(const std::filesystem::path& dir, const std::vector<Fp>& deltas,
                                    std::size_t n_a, std::size_t iters, std::ostream& log);
void write_sparse_csv(std::ostream& out, const std::vector<SparseRow>& rows, std::size_t iters);

}  // namespace feig::cli
