#include "commands.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "experiments.hpp"
#include "feig/gemm.hpp"
#include "feig/matgen.hpp"
#include "feig/oracle.hpp"
#include "feig/refine.hpp"
#include "verify.hpp"

namespace feig::cli {

using nlohmann::ordered_json;

std::uint64_t default_seed() {
  const char* env = std::getenv("FORWARD_EIG_SEED");
  if (env == nullptr || *env == '\0') return 1;
  std::uint64_t v = 0;
  const std::string s(env);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw InvalidArgument("FORWARD_EIG_SEED must be an unsigned integer, got '" + s + "'");
  }
  return v;
}

namespace {

/// Writes through `fn` to `path`, or to `fallback` when path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  fn(f);
  if (!f) throw InvalidArgument("write failed for '" + path + "'");
}

Fp parse_fp(const std::string& s, const std::string& what) {
  Fp v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw InvalidArgument("bad value for " + what + ": '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw InvalidArgument("bad value for " + what + ": '" + s + "'");
  }
  return v;
}

/// "n=100,cond=1e10,seed=1[,mode=geometric][,bandwidth=3]"
GenSpec parse_gen(const std::string& text, std::uint64_t seed) {
  GenSpec g;
  g.seed = seed;
  bool have_n = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--gen expects key=value pairs, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "n") {
      g.n = parse_u64(val, "n");
      have_n = true;
    } else if (key == "cond") {
      g.cond = parse_fp(val, "cond");
    } else if (key == "seed") {
      g.seed = parse_u64(val, "seed");
    } else if (key == "mode") {
      g.mode = parse_spectrum_mode(val);
    } else if (key == "bandwidth") {
      g.kind = MatrixKind::kBanded;
      g.bandwidth = parse_u64(val, "bandwidth");
    } else {
      throw InvalidArgument("unknown --gen key '" + key + "'");
    }
  }
  if (!have_n) throw InvalidArgument("--gen requires n=<n>");
  g.validate();
  return g;
}

ordered_json stats_json(const SpectralStats& s) {
  ordered_json j;
  j["n"] = s.n;
  j["min_gap"] = s.min_gap;
  j["max_abs_eig"] = s.max_abs_eig;
  j["max_row_nnz"] = s.max_row_nnz;
  j["colmax_power_sum"] = colmax_power_sum(s.colmax).to_fp();
  return j;
}

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

bool target_met(RefineStatus s) {
  return s == RefineStatus::kConverged || s == RefineStatus::kNoiseFloor || s == RefineStatus::kFixedIterations;
}

std::vector<Fp> default_conds() { return {1e2, 1e4, 1e6, 1e8, 1e10, 1e12, 1e14}; }

// ---- refine ---------------------------------------------------------------

struct RefineArgs {
  std::string input;
  std::string gen;
  Fp delta = 1e-10;
  std::string mode = "dense";
  int k = 3;
  std::size_t max_iter = 10;
  std::size_t n_a = 0;
  std::string oracle = "off";
  std::string out;
  std::string csv;
  std::optional<std::uint64_t> seed;
};

int cmd_refine(const RefineArgs& args, bool timings, std::ostream& out) {
  const auto t_start = std::chrono::steady_clock::now();
  RefineConfig cfg;
  cfg.delta = args.delta;
  cfg.mode = parse_refine_mode(args.mode);
  cfg.k = args.k;
  cfg.max_iter = args.max_iter;
  if (args.n_a > 0) cfg.n_a = args.n_a;
  cfg.validate();
  if (args.oracle != "on" && args.oracle != "off") throw InvalidArgument("--oracle must be on or off");
  const bool use_oracle = args.oracle == "on";
  if (args.input.empty() == args.gen.empty()) throw InvalidArgument("exactly one of --input and --gen is required");

  ordered_json report;
  report["schema"] = "feig-report v1";
  ordered_json config;
  Matrix a;
  if (!args.input.empty()) {
    config["input"] = args.input;
    GenSpec g;
    g.kind = MatrixKind::kFromFile;
    g.path = args.input;
    a = generate(g);
  } else {
    const GenSpec g = parse_gen(args.gen, args.seed.value_or(default_seed()));
    config["gen"] = {{"n", g.n},       {"cond", g.cond}, {"seed", g.seed}, {"mode", to_string(g.mode)},
                     {"kind", g.kind == MatrixKind::kBanded ? "banded" : "dense-sym"},
                     {"bandwidth", g.bandwidth}};
    a = generate(g);
  }
  config["delta"] = cfg.delta;
  config["mode"] = to_string(cfg.mode);
  config["k"] = cfg.k;
  config["max_iter"] = cfg.max_iter;
  config["n_a"] = cfg.n_a ? ordered_json(*cfg.n_a) : ordered_json("auto");
  config["gap_floor"] = cfg.gap_floor;
  config["oracle"] = use_oracle;
  report["config"] = config;
  report["matrix"] = {{"n", a.rows()},
                      {"nnz", a.nnz()},
                      {"max_row_nnz", a.max_row_nnz()},
                      {"storage", a.is_sparse() ? "csr" : "dense"}};
  report["two_prod_kernel"] = two_prod_kernel_name();

  const auto t_base = std::chrono::steady_clock::now();
  const EigenApprox x0 = baseline_eig(a);
  const auto t_oracle = std::chrono::steady_clock::now();
  std::optional<oracle::Reference> ref;
  ForwardErrorFn fe;
  if (use_oracle) {
    if (a.rows() > oracle::kMaxReferenceDim) throw InvalidArgument("n exceeds the oracle cap of 2048");
    ref = oracle::reference_eig(a);
    fe = [&ref](const EigenApprox& e) { return oracle::forward_error(*ref, e); };
  }
  const auto t_refine = std::chrono::steady_clock::now();
  const auto [x, hist] = cfg.mode == RefineMode::kFixedK ? refine_fixed_k(a, x0, cfg.k, cfg.max_iter, fe)
                                                         : refine_to_delta(a, x0, cfg, fe);
  const auto t_end = std::chrono::steady_clock::now();

  ordered_json h;
  h["status"] = to_string(hist.status);
  h["iterations"] = hist.steps.size();
  h["tail_exceeds_delta"] = hist.tail_exceeds_delta;
  h["initial_forward_error"] = opt_json(hist.initial_forward_error);
  ordered_json steps = ordered_json::array();
  for (const StepReport& s : hist.steps) {
    ordered_json j;
    j["iter"] = s.iter;
    j["correction_norm"] = s.correction_norm;
    j["step_norm"] = s.step_norm;
    j["x2_norm"] = s.x2_norm;
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
    j["n_a"] = s.n_a;
    j["unsafe_slice_products"] = s.unsafe_slice_products;
    j["params_clamped"] = s.params_clamped;
    j["slice_cap_hit"] = s.slice_cap_hit;
    j["forward_error"] = opt_json(s.forward_error);
    j["stats"] = stats_json(s.stats);
    if (timings) j["elapsed_seconds"] = s.elapsed_seconds;
    steps.push_back(j);
  }
  h["steps"] = steps;
  report["history"] = h;

  ordered_json fin;
  fin["forward_error"] = ref ? ordered_json(oracle::forward_error(*ref, x)) : ordered_json(nullptr);
  if (use_oracle) {
    const oracle::BackwardErrors be = oracle::backward_errors(a, x);
    fin["orth_backward"] = be.orth;
    fin["diag_backward"] = be.diag;
    const oracle::ReferenceResiduals rr = oracle::reference_residuals(a, *ref);
    fin["reference_residual"] = rr.residual;
    fin["reference_orthogonality"] = rr.orthogonality;
  }
  report["final"] = fin;
  const int code = target_met(hist.status) ? kExitOk : kExitNonConvergence;
  report["exit_code"] = code;
  if (timings) {
    using secs = std::chrono::duration<double>;
    report["timings"] = {{"baseline_seconds", secs(t_oracle - t_base).count()},
                         {"oracle_seconds", secs(t_refine - t_oracle).count()},
                         {"refine_seconds", secs(t_end - t_refine).count()},
                         {"total_seconds", secs(t_end - t_start).count()},
                         {"threads", num_threads()}};
  }

  emit(args.out, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (!args.csv.empty()) {
    emit(args.csv, out, [&](std::ostream& os) {
      os << "# feig refine v1: per-iteration history\n";
      os << "iter,forward_error,correction_norm,step_norm,x2_norm,alpha,beta,n_A,unsafe_slice_products\n";
      if (hist.initial_forward_error) os << "0," << fmt(*hist.initial_forward_error) << ",,,,,,,\n";
      for (const StepReport& s : hist.steps) {
        os << s.iter << ',' << fmt(s.forward_error) << ',' << fmt(s.correction_norm) << ',' << fmt(s.step_norm)
           << ',' << fmt(s.x2_norm) << ',' << s.alpha << ',' << s.beta << ',' << s.n_a << ','
           << s.unsafe_slice_products << '\n';
      }
    });
  }
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forward-error-targeted refinement of symmetric eigenvectors"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 1;
  bool timings = false;
  app.add_option("--threads", threads, "Worker threads for matrix products (results do not depend on it)")
      ->check(CLI::Range(1u, 256u));
  app.add_flag("--timings", timings, "Include wall-clock timings in reports");

  RefineArgs ra;
  std::uint64_t seed_flag = 0;
  auto* refine = app.add_subcommand("refine", "Refine eigenvectors of one matrix to a forward error");
  auto* in_opt = refine->add_option("--input", ra.input, "MatrixMarket (.mtx) or binary fixture (.bin)");
  auto* gen_opt = refine->add_option("--gen", ra.gen, "Generated matrix: n=<n>,cond=<c>,seed=<s>");
  in_opt->excludes(gen_opt);
  refine->add_option("--delta", ra.delta, "Target forward error")->capture_default_str();
  refine->add_option("--mode", ra.mode, "theoretical|dense|sparse|fixed-k")->capture_default_str();
  refine->add_option("--k", ra.k, "Slices per operand for fixed-k")->capture_default_str();
  refine->add_option("--max-iter", ra.max_iter, "Iteration cap")->capture_default_str();
  refine->add_option("--n-a", ra.n_a, "Fixed number of A terms (0 = automatic)")->capture_default_str();
  refine->add_option("--oracle", ra.oracle, "on|off: compute true errors with the reference")->capture_default_str();
  refine->add_option("--out", ra.out, "JSON report path (default stdout)");
  refine->add_option("--csv", ra.csv, "Per-iteration CSV path");
  auto* refine_seed = refine->add_option("--seed", seed_flag, "Seed for --gen without seed=");

  std::string which;
  std::size_t fig_n = 100;
  std::vector<std::size_t> sizes;
  std::vector<Fp> conds;
  std::vector<Fp> deltas;
  std::string fig_mode = "dense";
  std::string fig_out;
  bool large = false;
  std::size_t fig_iters = 5;
  auto* figure = app.add_subcommand("figure", "Reproduce a figure as CSV");
  figure->add_option("--which", which, "fig1|fig23|fig45")->required()->check(CLI::IsMember({"fig1", "fig23", "fig45"}));
  figure->add_option("--n", fig_n, "Dimension for fig1/fig23")->capture_default_str();
  figure->add_option("--sizes", sizes, "Dimensions for fig45 (default 256 512 1024)");
  figure->add_option("--conds", conds, "Condition numbers");
  figure->add_option("--deltas", deltas, "Targets for fig23/fig45");
  figure->add_option("--mode", fig_mode, "Refinement mode for fig23")->capture_default_str();
  figure->add_option("--max-iter", fig_iters, "Iterations shown in fig45")->capture_default_str();
  figure->add_flag("--large", large, "fig45 at n = 1024, 4096, 8192 without the oracle");
  figure->add_option("--out", fig_out, "CSV path (default stdout)");
  auto* figure_seed = figure->add_option("--seed", seed_flag, "Generator seed");

  std::string suite = "all";
  std::size_t eft_count = 1000000;
  auto* verify = app.add_subcommand("verify", "Run the exact-arithmetic property suites");
  verify->add_option("--suite", suite, "eft|split|slice|gemm|all")
      ->capture_default_str()
      ->check(CLI::IsMember({"eft", "split", "slice", "gemm", "all"}));
  verify->add_option("--count", eft_count, "two_sum pairs for the eft suite")->capture_default_str();
  auto* verify_seed = verify->add_option("--seed", seed_flag, "Suite seed");

  std::string dir;
  std::vector<Fp> table_deltas;
  std::size_t table_na = 2;
  std::size_t table_iters = 3;
  std::string table_out;
  auto* table = app.add_subcommand("table-sparse", "Forward errors on a directory of MatrixMarket files");
  table->add_option("--dir", dir, "Directory of .mtx files")->required();
  table->add_option("--delta", table_deltas, "Targets (default 1e-6 1e-10)");
  table->add_option("--na", table_na, "Fixed number of A terms")->capture_default_str();
  table->add_option("--iters", table_iters, "Iterations per run")->capture_default_str();
  table->add_option("--out", table_out, "CSV path (default stdout)");

  std::size_t gen_n = 100;
  Fp gen_cond = 1e10;
  std::string gen_mode = "geometric";
  std::optional<std::size_t> gen_bw;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Write a generated test matrix");
  gen->add_option("--n", gen_n, "Dimension")->capture_default_str();
  gen->add_option("--cond", gen_cond, "Condition number")->capture_default_str();
  gen->add_option("--spectrum", gen_mode, "geometric|one-large|one-small|arithmetic")->capture_default_str();
  gen->add_option("--bandwidth", gen_bw, "Banded CSR output with this bandwidth");
  gen->add_option("--out", gen_out, "Output path, .mtx or .bin")->required();
  auto* gen_seed = gen->add_option("--seed", seed_flag, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    set_num_threads(threads);
    check_fp_environment();
    auto seed_of = [&](CLI::Option* opt) { return opt->count() > 0 ? seed_flag : default_seed(); };

    if (refine->parsed()) {
      if (refine_seed->count() > 0) ra.seed = seed_flag;
      return cmd_refine(ra, timings, out);
    }
    if (figure->parsed()) {
      const std::uint64_t seed = seed_of(figure_seed);
      if (which == "fig1") {
        const auto rows = figure1(fig_n, conds.empty() ? default_conds() : conds, seed);
        emit(fig_out, out, [&](std::ostream& os) { write_fig1_csv(os, rows); });
      } else if (which == "fig23") {
        const auto rows = figure23(fig_n, conds.empty() ? default_conds() : conds,
                                   deltas.empty() ? std::vector<Fp>{1e-6, 1e-10} : deltas,
                                   parse_refine_mode(fig_mode), seed);
        emit(fig_out, out, [&](std::ostream& os) { write_fig23_csv(os, rows); });
      } else {
        HistoryOptions opt;
        if (large) {
          opt.sizes = {1024, 4096, 8192};
          opt.oracle = false;
        }
        if (!sizes.empty()) opt.sizes = sizes;
        if (!deltas.empty()) opt.deltas = deltas;
        if (!conds.empty()) opt.cond = conds.front();
        opt.max_iter = fig_iters;
        const auto rows = figure45(opt, seed);
        emit(fig_out, out, [&](std::ostream& os) { write_fig45_csv(os, rows); });
      }
      return kExitOk;
    }
    if (verify->parsed()) {
      const std::uint64_t seed = seed_of(verify_seed);
      std::vector<VerifyResult> results;
      if (suite == "eft" || suite == "all") results.push_back(verify_eft(eft_count, seed));
      if (suite == "split" || suite == "all") results.push_back(verify_split(200, seed));
      if (suite == "slice" || suite == "all") results.push_back(verify_slice_products(seed));
      if (suite == "gemm" || suite == "all") results.push_back(verify_gemm(seed));
      bool ok = true;
      for (const auto& r : results) {
        out << r.suite << ": " << (r.ok() ? "PASS" : "FAIL") << " checks=" << r.checks << " failures=" << r.failures;
        if (!r.first_failure.empty()) out << " first=\"" << r.first_failure << '"';
        out << '\n';
        ok = ok && r.ok();
      }
      return ok ? kExitOk : kExitUsage;
    }
    if (table->parsed()) {
      const auto rows = table_sparse(dir, table_deltas.empty() ? std::vector<Fp>{1e-6, 1e-10} : table_deltas,
                                     table_na, table_iters, err);
      emit(table_out, out, [&](std::ostream& os) { write_sparse_csv(os, rows, table_iters); });
      return kExitOk;
    }
    if (gen->parsed()) {
      GenSpec g;
      g.n = gen_n;
      g.cond = gen_cond;
      g.mode = parse_spectrum_mode(gen_mode);
      g.seed = seed_of(gen_seed);
      if (gen_bw) {
        g.kind = MatrixKind::kBanded;
        g.bandwidth = *gen_bw;
      }
      const std::filesystem::path p(gen_out);
      if (p.extension() != ".bin" && p.extension() != ".mtx") {
        throw InvalidArgument("--out must end in .mtx or .bin");
      }
      const Matrix a = generate(g);
      if (p.extension() == ".bin") write_binary_fixture(p, a);
      else write_matrix_market(p, a);
      return kExitOk;
    }
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const ClusteredEigenvalues& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const ParseError& e) {
    err << "error: line " << e.line << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace feig::cli
