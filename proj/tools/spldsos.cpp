#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "spldsos/bsos.hpp"
#include "spldsos/convex.hpp"
#include "spldsos/problems.hpp"
#include "spldsos/regress.hpp"
#include "spldsos/report.hpp"

using namespace spldsos;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSolver = 2, kNoRank1 = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// Write to a sibling temp file, then rename over the target.
void write_atomic(const std::string& path, const std::string& content) {
  fs::path p(path);
  fs::path tmp = p;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw UsageError("write failed for " + path);
    }
  }
  fs::rename(tmp, p);
}

// All artifacts are collected first and written only once everything succeeded.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  std::string stdout_text;
  void add(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
      stdout_text += content;
    else
      files.emplace_back(path, content);
  }
  void flush() const {
    for (const auto& [p, c] : files) write_atomic(p, c);
    std::cout << stdout_text << std::flush;
  }
};

struct Source {
  std::string problem_file;
  std::string gen;
  int n = 6, q = 6, N = 20, sep_degree = 6, lower_degree = 2;
  std::uint64_t seed = 1;
  double lambda = 0.02;
  std::string label;
};

void add_source(CLI::App* app, Source& s) {
  auto* pf = app->add_option("--problem", s.problem_file, "Problem JSON file");
  auto* g = app->add_option("--gen", s.gen, "Generator: pnq | spm | portfolio | random")->check(CLI::IsMember({"pnq", "spm", "portfolio", "random"}));
  pf->excludes(g);
  app->add_option("--n", s.n, "Variables (pnq, portfolio, random)");
  app->add_option("--q", s.q, "Degree q of P_{n,q}");
  app->add_option("--N", s.N, "Degree N of SPM");
  app->add_option("--seed", s.seed, "Generator seed");
  app->add_option("--lambda", s.lambda, "Portfolio diversification weight");
  app->add_option("--sep-degree", s.sep_degree, "Random instance separable degree");
  app->add_option("--lower-degree", s.lower_degree, "Random instance lower degree");
  app->add_option("--label", s.label, "Row label");
}

SemialgebraicProblem load_problem(const Source& s) {
  if (!s.problem_file.empty()) {
    try {
      return problem_from_json(read_json(s.problem_file));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(s.problem_file + ": " + e.what());
    }
  }
  if (s.gen == "pnq") return gen_pnq(s.n, s.q);
  if (s.gen == "spm") return gen_spm(s.N);
  if (s.gen == "portfolio") {
    PortfolioSpec ps;
    ps.n = s.n;
    ps.seed = s.seed;
    ps.lambda = s.lambda;
    return gen_portfolio(ps).second;
  }
  if (s.gen == "random") return gen_random_spld(s.n, s.sep_degree, s.lower_degree, s.seed);
  throw UsageError("exactly one of --problem or --gen is required");
}

struct SolverOpts {
  double tol_gap = 1e-8, tol_feas = 1e-8;
  int max_iter = 200;
  bool verbose = false;
  SolverSettings settings() const {
    SolverSettings s;
    s.tol_gap = tol_gap;
    s.tol_feas = tol_feas;
    s.max_iter = max_iter;
    s.verbose = verbose;
    return s;
  }
};

void add_solver(CLI::App* app, SolverOpts& o) {
  app->add_option("--tol-gap", o.tol_gap, "Relative gap tolerance");
  app->add_option("--tol-feas", o.tol_feas, "Relative feasibility tolerance");
  app->add_option("--max-iter", o.max_iter, "Interior point iteration limit");
  app->add_flag("--verbose", o.verbose, "Print solver iterations to stderr");
}

// "auto", "r=K" (plan rule with given r) or "D,R" (uniform d_j = D).
DegreePlan parse_plan(const std::string& spec, const SemialgebraicProblem& pb) {
  if (spec == "auto") return plan_degrees(pb, min_lower_half_degree(pb));
  if (spec.rfind("r=", 0) == 0) return plan_degrees(pb, std::stoi(spec.substr(2)));
  auto comma = spec.find(',');
  if (comma == std::string::npos) throw UsageError("--plan expects auto, r=K or D,R");
  int D = std::stoi(spec.substr(0, comma)), R = std::stoi(spec.substr(comma + 1));
  return plan_degrees(pb, R, PlanMode::UserOverride, {D});
}

struct RelaxOpts {
  std::string plan = "auto";
  std::string mode = "spld";
  int d = 0;
  int kmax = 2;
  bool oracle = false;
};

void add_relax(CLI::App* app, RelaxOpts& o) {
  app->add_option("--plan", o.plan, "SPLD degree plan: auto | r=K | D,R");
  app->add_option("--mode", o.mode, "spld | bsos")->check(CLI::IsMember({"spld", "bsos"}));
  app->add_option("--d", o.d, "Gram half degree for bsos mode");
  app->add_option("--kmax", o.kmax, "Largest relaxation order")->check(CLI::PositiveNumber);
  app->add_flag("--oracle", o.oracle, "Also compute a feasible upper bound");
}

RelaxConfig relax_config(const RelaxOpts& o, const SemialgebraicProblem& pb, const SolverOpts& so, RelaxMode mode) {
  RelaxConfig cfg;
  cfg.mode = mode;
  cfg.solver = so.settings();
  if (mode == RelaxMode::Spld)
    cfg.plan = parse_plan(o.plan, pb);
  else {
    if (o.d <= 0) throw UsageError("bsos mode needs --d");
    cfg.bsos_d = o.d;
  }
  return cfg;
}

int exit_for(const std::vector<RelaxationResult>& L) {
  if (L.empty()) return kSolver;
  const auto& r = L.back();
  bool solved = r.dual_status == SolverStatus::Optimal || r.dual_status == SolverStatus::NearOptimal;
  if (!solved) return kSolver;
  return (r.cert.max_rnk == 1 && r.cert.point_feasible) ? kOk : kNoRank1;
}

std::string label_for(const Source& s, const SemialgebraicProblem& pb) {
  if (!s.label.empty()) return s.label;
  return pb.name.empty() ? "problem" : pb.name;
}

template <class T, class F>
std::vector<T> run_jobs(int count, int jobs, F f) {
  std::vector<T> out(count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  for (int start = 0; start < count; start += jobs) {
    std::vector<std::future<T>> fut;
    for (int i = start; i < std::min(count, start + jobs); ++i) fut.push_back(std::async(std::launch::async, f, i));
    for (int i = start; i < std::min(count, start + jobs); ++i) out[i] = fut[i - start].get();
  }
  return out;
}

struct OutOpts {
  std::string json_path, csv_path;
  void add(CLI::App* app) {
    app->add_option("--json", json_path, "JSON result file (- for stdout)");
    app->add_option("--csv", csv_path, "CSV table file (- for stdout, the default)");
  }
};

// ---- solve / ladder ------------------------------------------------------

int cmd_ladder(const Source& src, const RelaxOpts& ro, const SolverOpts& so, const OutOpts& out, bool stop_on_rank1) {
  SemialgebraicProblem pb = load_problem(src);
  RelaxConfig cfg = relax_config(ro, pb, so, ro.mode == "bsos" ? RelaxMode::Bsos : RelaxMode::Spld);
  std::optional<double> oracle;
  if (ro.oracle) oracle = upper_bound_oracle(pb).value;
  std::vector<RelaxationResult> L;
  for (int k = 1; k <= ro.kmax; ++k) {
    L.push_back(solve_order(pb, k, cfg, oracle));
    if (stop_on_rank1 && L.back().cert.max_rnk == 1 && L.back().cert.point_feasible) break;
  }
  std::string label = label_for(src, pb);
  std::vector<ReportRow> rows;
  nlohmann::json jl = nlohmann::json::array();
  for (const auto& r : L) {
    rows.push_back(report_row(label, cfg, r));
    jl.push_back(r.json());
  }
  nlohmann::json j = {{"problem", label}, {"mode", ro.mode}, {"results", jl}};
  if (cfg.mode == RelaxMode::Spld) j["plan"] = cfg.plan.json();
  if (oracle) j["oracle"] = *oracle;
  Artifacts a;
  if (!out.json_path.empty()) a.add(out.json_path, j.dump(2) + "\n");
  a.add(out.csv_path, to_csv(rows));
  a.flush();
  return exit_for(L);
}

int cmd_exact(const std::string& file, const SolverOpts& so, const OutOpts& out) {
  ConvexSpldProblem pb;
  try {
    pb = convex_problem_from_json(read_json(file));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(file + ": " + e.what());
  }
  ExactRelaxationResult res = solve_exact(pb, so.settings());
  int code = kOk;
  nlohmann::json j = res.json();
  std::string err;
  if (res.status != SolverStatus::Optimal && res.status != SolverStatus::NearOptimal)
    code = kSolver;
  else if (!res.recovered_point) {
    code = kNoRank1;
    try {
      recover(res, pb);
    } catch (const FeasibilityCheckFail& e) {
      err = e.what();
    }
    j["recover_error"] = err;
  }
  ReportRow row;
  row.label = pb.name.empty() ? "convex" : pb.name;
  row.mode = "exact";
  DegreePlan plan = convex_plan(pb);
  row.d0 = plan.d0();
  row.r = plan.r;
  row.opt = res.value;
  row.opt_primal = res.value_primal;
  row.status = to_string(res.status);
  row.time_solve_ms = res.solve_ms;
  row.max_ms = res.max_block;
  if (res.recovered_point) row.point.assign(res.recovered_point->data(), res.recovered_point->data() + res.recovered_point->size());
  Artifacts a;
  if (!out.json_path.empty()) a.add(out.json_path, j.dump(2) + "\n");
  a.add(out.csv_path, to_csv(std::vector<ReportRow>{row}));
  a.flush();
  return code;
}

// ---- compare -------------------------------------------------------------

int cmd_compare(const Source& src, const RelaxOpts& ro, const SolverOpts& so, const OutOpts& out, int jobs) {
  SemialgebraicProblem pb = load_problem(src);
  RelaxConfig cs = relax_config(ro, pb, so, RelaxMode::Spld);
  RelaxConfig cb = relax_config(ro, pb, so, RelaxMode::Bsos);
  int K = ro.kmax;
  auto res = run_jobs<RelaxationResult>(2 * K, jobs, [&](int i) { return solve_order(pb, i / 2 + 1, i % 2 ? cb : cs); });
  std::string label = label_for(src, pb);
  std::vector<ReportRow> rows;
  nlohmann::json jl = nlohmann::json::array();
  std::ostringstream table;
  table << "k  spld_opt          bsos_opt          diff       spld_ms  bsos_ms  spld_rnk  bsos_rnk\n";
  int code = kOk;
  for (int k = 1; k <= K; ++k) {
    const auto& a = res[2 * (k - 1)];
    const auto& b = res[2 * (k - 1) + 1];
    rows.push_back(report_row(label, cs, a));
    rows.push_back(report_row(label, cb, b));
    jl.push_back({{"k", k}, {"spld", a.json()}, {"bsos", b.json()}});
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-2d %+.8e  %+.8e  %.2e  %7d  %7d  %8d  %8d\n", k, a.value, b.value, std::abs(a.value - b.value), a.max_ms,
                  b.max_ms, a.cert.max_rnk, b.cert.max_rnk);
    table << buf;
    for (const auto* r : {&a, &b})
      if (r->dual_status != SolverStatus::Optimal && r->dual_status != SolverStatus::NearOptimal) code = kSolver;
  }
  Artifacts art;
  if (!out.json_path.empty()) art.add(out.json_path, nlohmann::json{{"problem", label}, {"plan", cs.plan.json()}, {"d", cb.bsos_d}, {"orders", jl}}.dump(2) + "\n");
  if (out.csv_path.empty() || out.csv_path == "-")
    art.add("-", table.str());
  else
    art.add(out.csv_path, to_csv(rows));
  art.flush();
  return code;
}

// ---- generators ----------------------------------------------------------

int cmd_gen(const SemialgebraicProblem& pb, const std::string& path) {
  Artifacts a;
  a.add(path, to_json(pb).dump(2) + "\n");
  a.flush();
  return kOk;
}

// ---- portfolio -----------------------------------------------------------

struct PortfolioOpts {
  int n = 6, T = 300, p = 4, kmax = 2;
  double eta = 0.25, theta = 0.2;
  std::uint64_t seed = 1;
  std::vector<double> lambdas{0.02, 0.2, 2.0};
  std::string plan = "r=2";
  std::string data_path;
};

int cmd_portfolio(const PortfolioOpts& po, const SolverOpts& so, const OutOpts& out, int jobs) {
  struct Run {
    PortfolioData data;
    std::vector<RelaxationResult> L;
    RelaxConfig cfg;
  };
  int count = static_cast<int>(po.lambdas.size());
  auto runs = run_jobs<Run>(count, jobs, [&](int i) {
    PortfolioSpec ps;
    ps.n = po.n;
    ps.T = po.T;
    ps.p = po.p;
    ps.eta = po.eta;
    ps.theta = po.theta;
    ps.seed = po.seed;
    ps.lambda = po.lambdas[i];
    auto [data, pb] = gen_portfolio(ps);
    Run r;
    r.data = data;
    r.cfg.solver = so.settings();
    r.cfg.plan = parse_plan(po.plan, pb);
    r.L = ladder(pb, po.kmax, r.cfg, true);
    return r;
  });
  std::ostringstream csv;
  csv << "lambda,k,opt,max_rnk,mean_return,variance,risk,n_eff,max_weight,count_ge_5pct,count_ge_1pct,sum_x,min_x,time_ms\n";
  nlohmann::json jl = nlohmann::json::array();
  int code = kOk;
  for (int i = 0; i < count; ++i) {
    const auto& R = runs[i].L.back();
    code = std::max(code, exit_for(runs[i].L));
    nlohmann::json jr = {{"lambda", po.lambdas[i]}, {"result", R.json()}};
    csv << format_double(po.lambdas[i]) << ',' << R.k << ',' << format_double(R.value) << ',' << R.cert.max_rnk;
    if (R.cert.extracted_point) {
      const Eigen::VectorXd& x = *R.cert.extracted_point;
      PortfolioStats st = portfolio_stats(x, runs[i].data);
      jr["stats"] = st.json();
      csv << ',' << format_double(st.mean_return) << ',' << format_double(st.variance) << ',' << format_double(st.risk) << ','
          << format_double(st.n_eff) << ',' << format_double(st.max_weight) << ',' << st.count_ge_5pct << ',' << st.count_ge_1pct << ','
          << format_double(x.sum()) << ',' << format_double(x.minCoeff());
    } else
      csv << ",,,,,,,,,";
    double ms = 0;
    for (const auto& r : runs[i].L) ms += r.build_ms + r.solve_ms;
    csv << ',' << format_double(ms) << '\n';
    jl.push_back(jr);
  }
  Artifacts a;
  if (!out.json_path.empty()) a.add(out.json_path, nlohmann::json{{"n", po.n}, {"seed", po.seed}, {"sweep", jl}}.dump(2) + "\n");
  if (!po.data_path.empty()) a.add(po.data_path, runs[0].data.json().dump(2) + "\n");
  a.add(out.csv_path, csv.str());
  a.flush();
  return code;
}

// ---- regress -------------------------------------------------------------

struct RegressOpts {
  std::string model = "spld";
  int d0 = 3, r = 2;
  std::string train, test;
  std::vector<long long> synthetic;  // n m seed
  bool standardize = false;
  std::string model_path, metrics_path;
};

Dataset load_dataset(const std::string& path) {
  std::string text = read_file(path);
  if (fs::path(path).extension() == ".csv") return dataset_from_csv(text);
  try {
    return dataset_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

int cmd_regress(const RegressOpts& ro, const SolverOpts& so) {
  RegressionSpec spec;
  spec.model = regression_model_from_string(ro.model);
  spec.d0 = ro.d0;
  spec.r = ro.r;
  spec.standardize = ro.standardize;
  spec.solver = so.settings();
  Dataset train;
  Eigen::MatrixXd test;
  TruthFn truth;
  Dataset test_set;
  if (!ro.synthetic.empty()) {
    if (ro.synthetic.size() != 3) throw UsageError("--synthetic expects n m seed");
    SyntheticData S = gen_synthetic(static_cast<int>(ro.synthetic[0]), static_cast<int>(ro.synthetic[1]), static_cast<std::uint64_t>(ro.synthetic[2]));
    train = S.train;
    test = S.test;
    truth = S.truth;
  } else {
    if (ro.train.empty()) throw UsageError("regress needs --train or --synthetic");
    train = load_dataset(ro.train);
    if (!ro.test.empty()) {
      test_set = load_dataset(ro.test);
      test = test_set.X;
      // Test responses are taken as the truth at the test points.
      truth = [&test_set](const Eigen::VectorXd& x) {
        for (int i = 0; i < test_set.m(); ++i)
          if ((test_set.X.row(i).transpose() - x).lpNorm<Eigen::Infinity>() == 0.0) return test_set.y[i];
        return std::nan("");
      };
    }
  }
  FittedModel fm = fit(train, spec);
  nlohmann::json metrics = {{"train_loss", fm.train_loss}, {"solver_loss", fm.solver_loss}, {"hessian_residual", fm.hessian_residual}};
  if (test.rows() > 0) {
    Deviation d = evaluate(fm, test, truth);
    metrics["avg_dev"] = d.avg_dev;
    metrics["max_dev"] = d.max_dev;
  }
  Artifacts a;
  a.add(ro.model_path.empty() ? "-" : ro.model_path, fm.json().dump(2) + "\n");
  a.add(ro.metrics_path.empty() ? "-" : ro.metrics_path, metrics.dump(2) + "\n");
  a.flush();
  return kOk;
}

// ---- check ---------------------------------------------------------------

struct CheckOpts {
  std::string what = "spld";
  std::string file;
  int piece = 0;  // 0 objective, i constraint i
  std::string plan = "auto";
};

Polynomial load_piece(const CheckOpts& co, SemialgebraicProblem* holder) {
  nlohmann::json j = read_json(co.file);
  try {
    if (j.contains("objective")) {
      *holder = problem_from_json(j);
      if (co.piece == 0) return holder->f0;
      if (co.piece < 0 || co.piece > static_cast<int>(holder->constraints.size())) throw UsageError("--piece out of range");
      return holder->constraints[co.piece - 1];
    }
    Polynomial p = poly_from_json(j);
    holder->n_vars = p.n_vars();
    holder->f0 = p;
    holder->constraints = {Polynomial::constant(p.n_vars(), 0.5)};
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(co.file + ": " + e.what());
  }
}

int cmd_check(const CheckOpts& co) {
  SemialgebraicProblem holder;
  Polynomial p = load_piece(co, &holder);
  nlohmann::json j = {{"check", co.what}};
  bool ok = false;
  if (co.what == "spld") {
    try {
      SpldDecomposition D = decompose(p);
      ok = true;
      j["separable_degree"] = D.separable_degree();
      j["lower_degree"] = D.lower.is_zero() ? -1 : D.lower.degree();
    } catch (const NotSpld& e) {
      j["reason"] = e.what();
      j["offending"] = e.offending.e;
    } catch (const ConstantInput& e) {
      j["reason"] = e.what();
    }
  } else if (co.what == "sos-convex") {
    SosCheckResult r = sos_convexity_check(p);
    ok = r.status == CheckStatus::Feasible;
    j["status"] = to_string(r.status);
  } else {
    DegreePlan plan;
    if (co.plan == "auto") {
      SpldDecomposition D = split_separable(p);
      plan.r = std::max(1, (D.lower.degree() + 1) / 2);
      plan.d.assign(p.n_vars(), std::max(plan.r + 1, (D.separable_degree() + 1) / 2));
    } else {
      plan = parse_plan(co.plan, holder);
    }
    StructuredHessianResult r = structured_hessian_check(p, plan);
    ok = r.status == CheckStatus::Feasible;
    j["status"] = to_string(r.status);
    j["plan"] = plan.json();
    j["residual"] = r.residual;
  }
  j["holds"] = ok;
  std::cout << j.dump(2) << "\n";
  return ok ? kOk : kNoRank1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPLD bounded-degree SOS relaxations, exact convex relaxations and convex regression"};
  app.set_config("--config", "", "TOML or INI file with default option values");
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "Parallel independent solves (compare, portfolio)")->check(CLI::PositiveNumber);

  Source src;
  RelaxOpts ro;
  SolverOpts so;
  OutOpts out;
  std::string exact_file;

  auto* solve = app.add_subcommand("solve", "Run the ladder until a rank-1 certificate, or solve a convex problem exactly");
  add_source(solve, src);
  add_relax(solve, ro);
  add_solver(solve, so);
  out.add(solve);
  solve->add_option("--exact", exact_file, "Convex SPLD problem JSON (exact relaxation)");

  auto* lad = app.add_subcommand("ladder", "Solve orders k = 1..kmax");
  add_source(lad, src);
  add_relax(lad, ro);
  add_solver(lad, so);
  out.add(lad);

  auto* cmp = app.add_subcommand("compare", "SPLD and BSOS side by side at matched orders");
  add_source(cmp, src);
  add_relax(cmp, ro);
  add_solver(cmp, so);
  out.add(cmp);

  std::string gen_out;
  int gn = 6, gq = 6, gN = 20;
  auto* gpnq = app.add_subcommand("gen-pnq", "Write the P_{n,q} problem JSON");
  gpnq->add_option("--n", gn, "Variables")->required();
  gpnq->add_option("--q", gq, "Degree")->required();
  gpnq->add_option("--out", gen_out, "Output file (- for stdout)");
  auto* gspm = app.add_subcommand("gen-spm", "Write the SPM problem JSON");
  gspm->add_option("--N", gN, "Even degree")->required();
  gspm->add_option("--out", gen_out, "Output file (- for stdout)");

  PortfolioOpts po;
  auto* gport = app.add_subcommand("gen-portfolio", "Write the portfolio problem JSON and its data");
  auto add_port = [&](CLI::App* a) {
    a->add_option("--n", po.n, "Assets");
    a->add_option("--T", po.T, "Samples");
    a->add_option("--seed", po.seed, "Seed");
    a->add_option("--eta", po.eta, "Spread penalty weight");
    a->add_option("--p", po.p, "Half power of the separable penalty");
    a->add_option("--theta", po.theta, "Shift fraction");
    a->add_option("--data", po.data_path, "Data JSON (S, Sigma0, Q, alpha*)");
  };
  add_port(gport);
  double glambda = 0.02;
  gport->add_option("--lambda", glambda, "Diversification weight");
  gport->add_option("--out", gen_out, "Problem output file (- for stdout)");

  auto* port = app.add_subcommand("portfolio", "Portfolio pipeline over a lambda sweep");
  add_port(port);
  port->add_option("--lambda", po.lambdas, "Lambda values");
  port->add_option("--kmax", po.kmax, "Largest relaxation order");
  port->add_option("--plan", po.plan, "Degree plan: auto | r=K | D,R");
  add_solver(port, so);
  out.add(port);

  RegressOpts rg;
  auto* reg = app.add_subcommand("regress", "Convex polynomial l1 regression");
  reg->add_option("--model", rg.model, "spld | spq | dense")->check(CLI::IsMember({"spld", "spq", "dense"}));
  reg->add_option("--d0", rg.d0, "Half degree of the separable part");
  reg->add_option("--r", rg.r, "Half degree of the lower part");
  reg->add_option("--train", rg.train, "Training data (.json or .csv)");
  reg->add_option("--test", rg.test, "Test data (.json or .csv), responses taken as truth");
  reg->add_option("--synthetic", rg.synthetic, "Generate data: n m seed")->expected(3);
  reg->add_flag("--standardize", rg.standardize, "Standardize features before fitting");
  reg->add_option("--model-out", rg.model_path, "Fitted model JSON (- for stdout)");
  reg->add_option("--metrics-out", rg.metrics_path, "Metrics JSON (- for stdout)");
  add_solver(reg, so);

  CheckOpts co;
  auto* chk = app.add_subcommand("check", "Structure checks on one polynomial");
  chk->add_option("what", co.what, "spld | sos-convex | hessian")->required()->check(CLI::IsMember({"spld", "sos-convex", "hessian"}));
  chk->add_option("--file", co.file, "Polynomial or problem JSON")->required();
  chk->add_option("--piece", co.piece, "0 objective, i constraint i (problem files)");
  chk->add_option("--plan", co.plan, "Plan for the hessian check: auto | r=K | D,R");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return exact_file.empty() ? cmd_ladder(src, ro, so, out, true) : cmd_exact(exact_file, so, out);
    if (*lad) return cmd_ladder(src, ro, so, out, false);
    if (*cmp) return cmd_compare(src, ro, so, out, jobs);
    if (*gpnq) return cmd_gen(gen_pnq(gn, gq), gen_out);
    if (*gspm) return cmd_gen(gen_spm(gN), gen_out);
    if (*gport) {
      PortfolioSpec ps;
      ps.n = po.n;
      ps.T = po.T;
      ps.p = po.p;
      ps.eta = po.eta;
      ps.theta = po.theta;
      ps.seed = po.seed;
      ps.lambda = glambda;
      auto [data, pb] = gen_portfolio(ps);
      Artifacts a;
      a.add(gen_out, to_json(pb).dump(2) + "\n");
      if (!po.data_path.empty()) a.add(po.data_path, data.json().dump(2) + "\n");
      a.flush();
      return kOk;
    }
    if (*port) return cmd_portfolio(po, so, out, jobs);
    if (*reg) return cmd_regress(rg, so);
    if (*chk) return cmd_check(co);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NotSosConvex& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SlaterFail& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const RegressionFail& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
