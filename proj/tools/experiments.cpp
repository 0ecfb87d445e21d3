#include "experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "feig/matgen.hpp"
#include "feig/oracle.hpp"

namespace feig::cli {

std::string fmt(Fp v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt(const std::optional<Fp>& v) { return v ? fmt(*v) : std::string(); }

namespace {

Matrix randsvd(std::size_t n, Fp cond, std::uint64_t seed) {
  GenSpec g;
  g.n = n;
  g.cond = cond;
  g.seed = seed;
  return randsvd_sym(g);
}

oracle::Reference checked_reference(const Matrix& a) {
  if (a.rows() > oracle::kMaxReferenceDim) {
    throw InvalidArgument("n = " + std::to_string(a.rows()) + " exceeds the oracle cap of " +
                          std::to_string(oracle::kMaxReferenceDim));
  }
  return oracle::reference_eig(a);
}

}  // namespace

std::vector<Fig1Row> figure1(std::size_t n, const std::vector<Fp>& conds, std::uint64_t seed) {
  std::vector<Fig1Row> rows;
  for (const Fp cond : conds) {
    const Matrix a = randsvd(n, cond, seed);
    const EigenApprox x0 = baseline_eig(a);
    const oracle::Reference ref = checked_reference(a);
    const oracle::BackwardErrors be = oracle::backward_errors(a, x0);
    rows.push_back({cond, oracle::forward_error(ref, x0), be.orth, be.diag});
  }
  return rows;
}

void write_fig1_csv(std::ostream& out, const std::vector<Fig1Row>& rows) {
  out << "# feig fig1 v1: baseline Jacobi errors against the double-word reference\n";
  out << "cond,forward_error,orth_backward,diag_backward,delta,n_A,beta\n";
  for (const auto& r : rows) {
    out << fmt(r.cond) << ',' << fmt(r.forward) << ',' << fmt(r.orth) << ',' << fmt(r.diag) << ",,,\n";
  }
}

std::vector<Fig23Row> figure23(std::size_t n, const std::vector<Fp>& conds, const std::vector<Fp>& deltas,
                               RefineMode mode, std::uint64_t seed) {
  std::vector<Fig23Row> rows;
  for (const Fp cond : conds) {
    const Matrix a = randsvd(n, cond, seed);
    const EigenApprox x0 = baseline_eig(a);
    const oracle::Reference ref = checked_reference(a);
    for (const Fp delta : deltas) {
      Fig23Row row{cond, delta};
      RefineConfig cfg;
      cfg.delta = delta;
      cfg.mode = mode;
      try {
        const auto [x, hist] = refine_to_delta(a, x0, cfg);
        row.status = to_string(hist.status);
        row.iters = hist.steps.size();
        row.forward = oracle::forward_error(ref, x);
        const oracle::BackwardErrors be = oracle::backward_errors(a, x);
        row.orth = be.orth;
        row.diag = be.diag;
        row.n_a = hist.steps.back().n_a;
        row.beta = hist.steps.back().beta;
      } catch (const ClusteredEigenvalues&) {
        row.status = "clustered";
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_fig23_csv(std::ostream& out, const std::vector<Fig23Row>& rows) {
  out << "# feig fig23 v1: final errors of delta-targeted refinement\n";
  out << "cond,forward_error,orth_backward,diag_backward,delta,n_A,beta,iterations,status\n";
  for (const auto& r : rows) {
    out << fmt(r.cond) << ',' << fmt(r.forward) << ',' << fmt(r.orth) << ',' << fmt(r.diag) << ','
        << fmt(r.delta) << ',';
    if (r.iters > 0) out << r.n_a << ',' << r.beta;
    else out << ',';
    out << ',' << r.iters << ',' << r.status << '\n';
  }
}

std::vector<HistoryRow> figure45(const HistoryOptions& opt, std::uint64_t seed) {
  std::vector<HistoryRow> rows;
  for (const std::size_t n : opt.sizes) {
    const Matrix a = randsvd(n, opt.cond, seed);
    const EigenApprox x0 = baseline_eig(a);
    std::optional<oracle::Reference> ref;
    ForwardErrorFn fe;
    if (opt.oracle) {
      ref = checked_reference(a);
      fe = [&ref](const EigenApprox& e) { return oracle::forward_error(*ref, e); };
    }
    const std::optional<Fp> initial = fe ? std::optional<Fp>(fe(x0)) : std::nullopt;

    for (const Fp delta : opt.deltas) {
      std::vector<std::pair<std::string, RefineConfig>> methods;
      RefineConfig base;
      base.delta = delta;
      base.max_iter = opt.max_iter;
      if (opt.include_auto) methods.emplace_back("auto", base);
      for (const std::size_t m : opt.fixed_n_a) {
        RefineConfig c = base;
        c.n_a = m;
        methods.emplace_back("nA=" + std::to_string(m), c);
      }
      if (opt.include_fixed_k) {
        RefineConfig c = base;
        c.mode = RefineMode::kFixedK;
        c.k = 3;
        methods.emplace_back("fixed-k3", c);
      }

      for (const auto& [name, cfg] : methods) {
        HistoryRow head{n, delta, name, 0, initial};
        std::vector<HistoryRow> block;
        try {
          const auto [x, hist] = cfg.mode == RefineMode::kFixedK
                                     ? refine_fixed_k(a, x0, cfg.k, cfg.max_iter, fe)
                                     : refine_to_delta(a, x0, cfg, fe);
          head.status = to_string(hist.status);
          block.push_back(head);
          for (const StepReport& s : hist.steps) {
            block.push_back({n, delta, name, s.iter, s.forward_error, s.correction_norm, s.step_norm, s.n_a,
                             s.beta, head.status});
          }
        } catch (const ClusteredEigenvalues&) {
          head.status = "clustered";
          block = {head};
        }
        rows.insert(rows.end(), block.begin(), block.end());
      }
    }
  }
  return rows;
}

void write_fig45_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << "# feig fig45 v1: convergence histories, iteration 0 is the baseline solver\n";
  out << "n,delta,method,iter,forward_error,correction_norm,step_norm,n_A,beta,status\n";
  for (const auto& r : rows) {
    out << r.n << ',' << fmt(r.delta) << ',' << r.method << ',' << r.iter << ',' << fmt(r.forward) << ',';
    if (r.iter > 0) out << fmt(r.correction) << ',' << fmt(r.step) << ',' << r.n_a << ',' << r.beta;
    else out << ",,,";
    out << ',' << r.status << '\n';
  }
}

std::vector<SparseRow> table_sparse(const std::filesystem::path& dir, const std::vector<Fp>& deltas,
                                    std::size_t n_a, std::size_t iters, std::ostream& log) {
  if (!std::filesystem::is_directory(dir)) throw InvalidArgument("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mtx") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<SparseRow> rows;
  for (const auto& path : files) {
    const std::string name = path.stem().string();
    Matrix a;
    try {
      a = load_matrix_market(path);
      if (!a.is_square() || !a.is_symmetric()) throw InvalidArgument("matrix is not symmetric");
    } catch (const Error& e) {
      log << "skipping " << path.filename().string() << ": " << e.what() << '\n';
      continue;
    }
    if (a.rows() > oracle::kMaxReferenceDim) {
      log << "skipping " << path.filename().string() << ": n = " << a.rows() << " exceeds the oracle cap\n";
      continue;
    }
    const EigenApprox x0 = baseline_eig(a);
    const oracle::Reference ref = oracle::reference_eig(a);
    const ForwardErrorFn fe = [&ref](const EigenApprox& e) { return oracle::forward_error(ref, e); };
    const Fp initial = fe(x0);
    for (const Fp delta : deltas) {
      SparseRow row{name, a.rows(), delta, initial};
      RefineConfig cfg;
      cfg.delta = delta;
      cfg.mode = RefineMode::kSparse;
      cfg.n_a = n_a;
      cfg.max_iter = iters;
      try {
        const auto [x, hist] = refine_to_delta(a, x0, cfg, fe);
        for (const StepReport& s : hist.steps) row.forward.push_back(*s.forward_error);
        row.status = to_string(hist.status);
      } catch (const ClusteredEigenvalues&) {
        row.status = "clustered";
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_sparse_csv(std::ostream& out, const std::vector<SparseRow>& rows, std::size_t iters) {
  out << "# feig table-sparse v1: forward errors per iteration, sparse mode with fixed n_A\n";
  out << "name,n,delta,initial";
  for (std::size_t k = 1; k <= iters; ++k) out << ",iter" << k;
  out << ",status\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.n << ',' << fmt(r.delta) << ',' << fmt(r.initial);
    for (std::size_t k = 0; k < iters; ++k) out << ',' << (k < r.forward.size() ? fmt(r.forward[k]) : "");
    out << ',' << r.status << '\n';
  }
}

}  // namespace feig::cli
