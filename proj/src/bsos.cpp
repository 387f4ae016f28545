#include "spldsos/bsos.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "spldsos/rng.hpp"

namespace spldsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

int PQ::order() const {
  int s = 0;
  for (int v : p) s += v;
  for (int v : q) s += v;
  return s;
}

std::string PQ::str() const {
  std::ostringstream os;
  os << "p=(";
  for (size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ") q=(";
  for (size_t i = 0; i < q.size(); ++i) os << (i ? "," : "") << q[i];
  os << ")";
  return os.str();
}

std::map<PQ, Polynomial> krivine_products(const std::vector<Polynomial>& f, int k) {
  if (k < 1) throw std::invalid_argument("krivine_products needs k >= 1");
  int m = static_cast<int>(f.size());
  int n = f.empty() ? 1 : f.front().n_vars();
  std::vector<std::vector<Polynomial>> fp(m), gp(m);
  for (int i = 0; i < m; ++i) {
    Polynomial g = Polynomial::constant(n, 1.0) - f[i];
    fp[i].push_back(Polynomial::constant(n, 1.0));
    gp[i].push_back(Polynomial::constant(n, 1.0));
    for (int t = 1; t <= k; ++t) {
      fp[i].push_back(fp[i].back() * f[i]);
      gp[i].push_back(gp[i].back() * g);
    }
  }
  std::map<PQ, Polynomial> out;
  PQ cur{std::vector<int>(m, 0), std::vector<int>(m, 0)};
  // prefix products are carried down the recursion
  std::function<void(int, int, const Polynomial&)> rec = [&](int i, int rem, const Polynomial& pre) {
    if (i == m) {
      out.emplace(cur, pre);
      return;
    }
    for (int a = 0; a <= rem; ++a)
      for (int b = 0; a + b <= rem; ++b) {
        cur.p[i] = a;
        cur.q[i] = b;
        if (a == 0 && b == 0)
          rec(i + 1, rem, pre);
        else
          rec(i + 1, rem - a - b, pre * fp[i][a] * gp[i][b]);
      }
    cur.p[i] = cur.q[i] = 0;
  };
  rec(0, k, Polynomial::constant(n, 1.0));
  return out;
}

int compute_d_max(const SemialgebraicProblem& problem, int k) {
  int dg = problem.f0.degree();
  int mg = 0;
  for (const auto& g : problem.constraints) mg = std::max(mg, g.degree());
  int need = std::max(dg, k * mg);
  return std::max(1, (need + 1) / 2);
}

int BuiltProgram::max_block() const {
  int m = 0;
  for (const auto& b : blocks) m = std::max(m, b.size());
  return m;
}

BuiltProgram build_sos_program(const SosProgram& prog, std::optional<double> margin_mu) {
  BuiltProgram B;
  B.blocks = prog.blocks;
  ConicModel& M = B.model;
  auto row = [&](const MultiIndex& a) {
    auto it = B.rows.find(a);
    if (it != B.rows.end()) return it->second;
    int r = M.add_row(0.0);
    B.rows.emplace(a, r);
    return r;
  };
  for (const auto& [a, c] : prog.f0.terms()) {
    if (a.is_zero())
      B.f0_const = c;
    else
      M.set_rhs(row(a), c);
  }
  // With a fixed mu the constant monomial becomes an ordinary row and the
  // objective maximizes a uniform margin t: c = c' + t, X = X' + t I.
  int crow = -1;
  std::map<int, double> tcoef;
  if (margin_mu) {
    crow = M.add_row(B.f0_const - *margin_mu);
    B.margin = M.add_free();
    M.cost(*B.margin, -1.0);
  }
  for (const auto& h : prog.h) {
    auto v = M.add_nonneg();
    B.mult.push_back(v);
    for (const auto& [a, c] : h.terms()) {
      int r = a.is_zero() ? crow : row(a);
      if (r < 0)
        M.cost(v, c);
      else
        M.coef(r, v, c);
      if (margin_mu) tcoef[r] += c;
    }
  }
  for (const auto& basis : prog.blocks) {
    int b = M.add_psd(basis.size());
    B.blk.push_back(b);
    for (int i = 0; i < basis.size(); ++i)
      for (int j = 0; j <= i; ++j) {
        MultiIndex a = basis[i] + basis[j];
        int r = a.is_zero() ? crow : row(a);
        if (r < 0)
          M.cost_psd(b, i, j, 1.0);
        else
          M.coef_psd(r, b, i, j, i == j ? 1.0 : 2.0);
        if (margin_mu && i == j) tcoef[r] += 1.0;
      }
  }
  if (margin_mu) {
    for (const auto& [r, c] : tcoef) M.coef(r, *B.margin, c);
    int cap = M.add_row(1.0);
    M.coef(cap, *B.margin, 1.0);
    M.coef(cap, M.add_nonneg(), 1.0);
  }
  B.problem = M.build();
  return B;
}

double program_value_primal(const BuiltProgram& b, const ConicSolution& s) { return b.f0_const - s.pobj; }
double program_value_dual(const BuiltProgram& b, const ConicSolution& s) { return b.f0_const - s.dobj; }

MomentSolution program_moments(const BuiltProgram& b, const ConicSolution& s) {
  MomentSolution y;
  int n = b.blocks.empty() ? (b.rows.empty() ? 1 : b.rows.begin()->first.size()) : b.blocks.front().n_vars;
  y.values[MultiIndex(n)] = 1.0;
  int dm = 0;
  for (const auto& [a, r] : b.rows) {
    y.values[a] = -s.y[r];
    dm = std::max(dm, a.deg);
  }
  y.d_max = (dm + 1) / 2;
  return y;
}

std::vector<MonomialBasis> spld_blocks(int n, const DegreePlan& plan) {
  std::vector<MonomialBasis> out;
  out.push_back(canonical_basis(n, plan.r));
  for (int j = 0; j < n; ++j)
    if (plan.d[j] > plan.r) out.push_back(univariate_basis(n, j, plan.d[j]));
  return out;
}

namespace {
// variable index if a is a pure power of one variable, else -1
int pure_var(const MultiIndex& a) {
  int j = -1;
  for (int i = 0; i < a.size(); ++i)
    if (a.e[i]) {
      if (j >= 0) return -1;
      j = i;
    }
  return j;
}

bool is_univariate_block(const MonomialBasis& B, int& var) {
  var = -1;
  for (const auto& a : B.entries) {
    if (a.is_zero()) continue;
    int j = pure_var(a);
    if (j < 0 || (var >= 0 && j != var)) return false;
    var = j;
  }
  return var >= 0;
}
}  // namespace

std::vector<MonomialBasis> reduce_univariate_blocks(const std::vector<MonomialBasis>& blocks, const Polynomial& f0,
                                                    const std::vector<Polynomial>& h) {
  int n = f0.n_vars();
  std::vector<int> reach(n, 0);
  auto see = [&](const MultiIndex& a) {
    int j = pure_var(a);
    if (j >= 0) reach[j] = std::max(reach[j], a.deg);
  };
  for (const auto& [a, c] : f0.terms()) see(a);
  for (const auto& p : h)
    for (const auto& [a, c] : p.terms()) see(a);
  std::vector<int> univ(blocks.size());
  for (size_t b = 0; b < blocks.size(); ++b) {
    int v;
    univ[b] = is_univariate_block(blocks[b], v) ? v : -1;
    if (univ[b] < 0)
      for (const auto& x : blocks[b].entries)
        for (const auto& y : blocks[b].entries) see(x + y);
  }
  std::vector<MonomialBasis> out;
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (univ[b] < 0) {
      out.push_back(blocks[b]);
      continue;
    }
    MonomialBasis R;
    R.n_vars = n;
    for (const auto& a : blocks[b].entries)
      if (2 * a.deg <= reach[univ[b]]) {
        R.entries.push_back(a);
        R.max_degree = std::max(R.max_degree, a.deg);
      }
    if (R.size() > 0) out.push_back(R);
  }
  return out;
}


FacialStep facial_reduction_step(const SosProgram& prog, const SolverSettings& settings) {
  FacialStep step;
  std::set<MultiIndex, GrlexLess> offdiag;
  for (const auto& B : prog.blocks)
    for (int i = 0; i < B.size(); ++i)
      for (int j = 0; j < i; ++j) offdiag.insert(B[i] + B[j]);
  // y lives on rows no off-diagonal Gram entry reaches (others must be 0)
  std::set<MultiIndex, GrlexLess> ys;
  auto consider = [&](const MultiIndex& a) {
    if (!a.is_zero() && !offdiag.count(a)) ys.insert(a);
  };
  for (const auto& h : prog.h)
    for (const auto& [a, c] : h.terms()) consider(a);
  for (const auto& B : prog.blocks)
    for (int i = 0; i < B.size(); ++i) consider(B[i] + B[i]);
  if (ys.empty()) return step;
  // Posed as the dual of a standard-form LP with one row per y:
  //   max sum_t a_t'y  s.t.  0 <= a_t'y <= 1,  f0'y = 0
  // where a_t is column t of A restricted to these rows.
  std::map<MultiIndex, int, GrlexLess> row;
  ConicModel M;
  for (const auto& a : ys) row.emplace(a, M.add_row(0.0));
  std::vector<std::vector<std::pair<int, double>>> cols;
  for (const auto& h : prog.h) {
    cols.emplace_back();
    for (const auto& [a, c] : h.terms())
      if (row.count(a)) cols.back().emplace_back(row.at(a), c);
  }
  std::vector<std::pair<int, int>> diag_id;
  for (size_t b = 0; b < prog.blocks.size(); ++b)
    for (int i = 0; i < prog.blocks[b].size(); ++i) {
      MultiIndex a = prog.blocks[b][i] + prog.blocks[b][i];
      if (!row.count(a)) continue;
      cols.push_back({{row.at(a), 1.0}});
      diag_id.emplace_back(static_cast<int>(b), i);
    }
  for (const auto& col : cols) {
    if (col.empty()) continue;
    auto lo = M.add_nonneg(), hi = M.add_nonneg();
    M.cost(hi, 1.0);
    for (const auto& [r, c] : col) {
      M.coef(r, lo, -c);
      M.coef(r, hi, c);
      M.add_rhs(r, c);
    }
  }
  auto fv = M.add_free();
  for (const auto& [a, c] : prog.f0.terms())
    if (row.count(a)) M.coef(row.at(a), fv, c);
  ConicSolution sol = solve(M.build(), settings);
  if (!sol.ok()) return step;
  auto slack = [&](const std::vector<std::pair<int, double>>& col) {
    double v = 0;
    for (const auto& [r, c] : col) v += c * sol.y[r];
    return v;
  };
  size_t nh = prog.h.size();
  for (size_t t = 0; t < cols.size(); ++t) {
    if (cols[t].empty() || slack(cols[t]) <= 1e-6) continue;
    if (t < nh)
      step.zero_mult.push_back(static_cast<int>(t));
    else
      step.zero_basis.push_back(diag_id[t - nh]);
  }
  return step;
}

SosProgram reduce_sos_program(const SosProgram& prog, const SolverSettings& settings, std::vector<int>* kept) {
  SosProgram out = prog;
  out.blocks = reduce_univariate_blocks(prog.blocks, out.f0, out.h);
  std::vector<int> idx(prog.h.size());
  for (size_t t = 0; t < idx.size(); ++t) idx[t] = static_cast<int>(t);
  for (int round = 0; round < 8; ++round) {
    FacialStep st = facial_reduction_step(out, settings);
    if (st.zero_mult.empty() && st.zero_basis.empty()) break;
    std::set<int> z(st.zero_mult.begin(), st.zero_mult.end());
    SosProgram next = out;
    next.h.clear();
    std::vector<int> nidx;
    for (size_t t = 0; t < out.h.size(); ++t)
      if (!z.count(static_cast<int>(t))) {
        next.h.push_back(out.h[t]);
        nidx.push_back(idx[t]);
      }
    std::set<std::pair<int, int>> zb(st.zero_basis.begin(), st.zero_basis.end());
    next.blocks.clear();
    for (size_t b = 0; b < out.blocks.size(); ++b) {
      MonomialBasis B;
      B.n_vars = out.blocks[b].n_vars;
      for (int i = 0; i < out.blocks[b].size(); ++i)
        if (!zb.count({static_cast<int>(b), i})) {
          B.entries.push_back(out.blocks[b][i]);
          B.max_degree = std::max(B.max_degree, out.blocks[b][i].deg);
        }
      if (B.size() > 0) next.blocks.push_back(B);
    }
    out = next;
    idx = nidx;
  }
  if (kept) *kept = idx;
  return out;
}

RelaxationProgram relaxation_program(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg) {
  RelaxationProgram rp;
  rp.prog.n = problem.n_vars;
  rp.prog.f0 = problem.f0;
  for (auto& [pq, h] : krivine_products(problem.constraints, k)) {
    if (pq.order() == 0) continue;
    double s = h.max_abs_coeff();
    if (s == 0.0) continue;
    rp.prog.h.push_back(h * (1.0 / s));
    rp.labels.push_back(pq);
    rp.h_scale.push_back(s);
  }
  if (cfg.mode == RelaxMode::Spld) {
    if (static_cast<int>(cfg.plan.d.size()) != problem.n_vars) throw std::invalid_argument("plan length differs from variable count");
    rp.prog.blocks = spld_blocks(problem.n_vars, cfg.plan);
    rp.max_ms = static_cast<int>(basis_size(problem.n_vars, cfg.plan.r));
    for (int d : cfg.plan.d) rp.max_ms = std::max(rp.max_ms, d + 1);
  } else {
    if (cfg.bsos_d < 1) throw std::invalid_argument("bsos mode needs d >= 1");
    rp.prog.blocks = {canonical_basis(problem.n_vars, cfg.bsos_d)};
    rp.max_ms = rp.prog.blocks[0].size();
  }
  // every monomial of f0 and of the products must be reachable, otherwise the plan is too small
  int dmax = compute_d_max(problem, k);
  (void)dmax;
  return rp;
}

BuiltProgram build_primal(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg) {
  RelaxationProgram rp = relaxation_program(problem, k, cfg);
  SosProgram p = rp.prog;
  return build_sos_program(reduce_sos_program(p, cfg.solver));
}

BuiltProgram build_moment_dual(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg) {
  return build_sos_program(relaxation_program(problem, k, cfg).prog);
}

namespace {
bool same_blocks(const std::vector<MonomialBasis>& a, const std::vector<MonomialBasis>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].entries != b[i].entries) return false;
  return true;
}
}  // namespace

double identity_residual(const SemialgebraicProblem& problem, const RelaxationResult& r, int k) {
  auto prods = krivine_products(problem.constraints, k);
  Polynomial res = problem.f0 - Polynomial::constant(problem.n_vars, r.value_primal);
  for (const auto& [pq, c] : r.multipliers) res = res - prods.at(pq) * c;
  res = res - reconstruct(r.certificate.blocks, problem.n_vars);
  return res.max_abs_coeff();
}

CertificateReport rank_certificate(const MomentSolution& y, const SemialgebraicProblem& problem, double ratio) {
  int n = problem.n_vars;
  CertificateReport rep;
  int sdeg = 0, ldeg = 0;
  auto upd = [&](const Polynomial& p) {
    if (p.degree() == 0) return;
    SpldDecomposition D = split_separable(p);
    sdeg = std::max(sdeg, D.separable_degree());
    ldeg = std::max(ldeg, D.lower.degree());
  };
  upd(problem.f0);
  for (const auto& g : problem.constraints) upd(g);
  rep.s_bar = std::max(1, (sdeg + 1) / 2);
  rep.l_bar = std::max(1, (ldeg + 1) / 2);
  rep.max_rnk = 0;
  for (int j = 0; j < n; ++j) {
    int r = numerical_rank(moment_matrix(y, univariate_basis(n, j, rep.s_bar)), ratio);
    rep.univariate_ranks.push_back(r);
    rep.max_rnk = std::max(rep.max_rnk, r);
  }
  rep.multivariate_rank = numerical_rank(moment_matrix(y, canonical_basis(n, rep.l_bar)), ratio);
  rep.max_rnk = std::max(rep.max_rnk, rep.multivariate_rank);
  if (rep.max_rnk == 1) {
    VectorXd x = y.first_order(n);
    rep.extracted_point = x;
    rep.max_violation = max_violation(problem, x);
    rep.point_feasible = rep.max_violation <= 1e-6;
    rep.point_value = evaluate(problem.f0, x);
  }
  return rep;
}


namespace {
// Least-norm correction of x onto {A x = b, constant row = f0_0 - mu}.
VectorXd project_identity(const BuiltProgram& P, const VectorXd& x, double mu) {
  const ConicProblem& cp = P.problem;
  int m = static_cast<int>(cp.A.rows()), nx = static_cast<int>(cp.A.cols());
  std::vector<Eigen::Triplet<double>> tr;
  for (int k = 0; k < cp.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(cp.A, k); it; ++it) tr.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < nx; ++j)
    if (cp.c[j] != 0.0) tr.emplace_back(m, j, cp.c[j]);
  SpMat A(m + 1, nx);
  A.setFromTriplets(tr.begin(), tr.end());
  VectorXd b(m + 1);
  b.head(m) = cp.b;
  b[m] = P.f0_const - mu;
  SpMat AAt = A * A.transpose();
  double reg = 1e-13 * std::max(1.0, AAt.diagonal().maxCoeff());
  for (int i = 0; i <= m; ++i) AAt.coeffRef(i, i) += reg;
  Eigen::SimplicialLDLT<SpMat> ldlt(AAt);
  VectorXd out = x;
  if (ldlt.info() != Eigen::Success) return out;
  for (int it = 0; it < 4; ++it) {
    VectorXd r = b - A * out;
    if (r.lpNorm<Eigen::Infinity>() < 1e-15) break;
    out += A.transpose() * ldlt.solve(r);
  }
  return out;
}

struct CertCheck {
  bool ok = false;
  double min_eig = 0, min_c = 0;
};

CertCheck check_cones(const BuiltProgram& P, const VectorXd& x) {
  CertCheck c;
  c.min_c = std::numeric_limits<double>::infinity();
  c.min_eig = std::numeric_limits<double>::infinity();
  for (const auto& v : P.mult) c.min_c = std::min(c.min_c, P.model.value(x, v));
  for (int b : P.blk) c.min_eig = std::min(c.min_eig, min_eigenvalue(P.model.block(x, b)));
  c.ok = c.min_c >= 0.0 && c.min_eig >= 0.0;
  return c;
}

// x from a margin solve, mapped to the layout of the plain program.
VectorXd unshift_margin(const BuiltProgram& Mg, const VectorXd& xm, const BuiltProgram& P) {
  double t = Mg.model.value(xm, *Mg.margin);
  VectorXd x = VectorXd::Zero(P.problem.A.cols());
  for (size_t i = 0; i < P.mult.size(); ++i) x[P.model.column(P.mult[i])] = Mg.model.value(xm, Mg.mult[i]) + t;
  for (size_t b = 0; b < P.blk.size(); ++b) {
    MatrixXd X = Mg.model.block(xm, Mg.blk[b]);
    X.diagonal().array() += t;
    x.segment(P.problem.cones.psd_offset(P.blk[b]), svec_len(X.rows())) = svec(X);
  }
  return x;
}
}  // namespace

CertifiedPrimal certify_primal(const SosProgram& prog, const BuiltProgram& P, const ConicSolution& sol, const SolverSettings& settings) {
  CertifiedPrimal out;
  double mu0 = program_value_primal(P, sol);
  out.mu = mu0;
  out.x = sol.x;
  VectorXd xp = project_identity(P, sol.x, mu0);
  CertCheck c = check_cones(P, xp);
  out.min_eig = c.min_eig;
  out.min_mult = c.min_c;
  if (c.ok) {
    out.x = xp;
    out.valid = true;
    return out;
  }
  for (double delta : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2}) {
    double mu = mu0 - delta * (1.0 + std::abs(mu0));
    BuiltProgram Mg = build_sos_program(prog, mu);
    ConicSolution s = solve(Mg.problem, settings);
    if (s.status != SolverStatus::Optimal && s.status != SolverStatus::NearOptimal) continue;
    if (Mg.model.value(s.x, *Mg.margin) <= 0.0) continue;
    VectorXd x = project_identity(P, unshift_margin(Mg, s.x, P), mu);
    CertCheck cc = check_cones(P, x);
    if (cc.ok) {
      out.x = x;
      out.mu = mu;
      out.min_eig = cc.min_eig;
      out.min_mult = cc.min_c;
      out.valid = true;
      out.backoff = mu0 - mu;
      return out;
    }
  }
  return out;
}

RelaxationResult solve_order(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg, std::optional<double> oracle) {
  auto t0 = std::chrono::steady_clock::now();
  RelaxationResult R;
  R.k = k;
  RelaxationProgram rp = relaxation_program(problem, k, cfg);
  R.max_ms = rp.max_ms;
  R.num_products = static_cast<int>(rp.prog.h.size());
  std::vector<int> kept;
  SosProgram reduced = reduce_sos_program(rp.prog, cfg.solver, &kept);
  bool split = !same_blocks(reduced.blocks, rp.prog.blocks) || reduced.h.size() != rp.prog.h.size();
  BuiltProgram P = build_sos_program(reduced);
  std::optional<BuiltProgram> D;
  if (split) D = build_sos_program(rp.prog);
  R.rows = static_cast<int>((split ? D->problem : P.problem).A.rows());
  R.build_ms = ms_since(t0);

  auto t1 = std::chrono::steady_clock::now();
  ConicSolution sp = solve(P.problem, cfg.solver);
  R.primal_status = sp.status;
  R.raw_value_primal = program_value_primal(P, sp);
  CertifiedPrimal cp = certify_primal(reduced, P, sp, cfg.solver);
  R.value_primal = cp.mu;
  R.certificate_psd = cp.valid;
  R.certificate_min_eig = cp.min_eig;
  R.certificate_backoff = cp.backoff;
  for (size_t t = 0; t < P.mult.size(); ++t) {
    double c = P.model.value(cp.x, P.mult[t]);
    if (c != 0.0) R.multipliers[rp.labels[kept[t]]] = c / rp.h_scale[kept[t]];
  }
  for (size_t b = 0; b < P.blk.size(); ++b) R.certificate.blocks.emplace_back(P.blocks[b], P.model.block(cp.x, P.blk[b]));
  R.certificate.reconstructed = reconstruct(R.certificate.blocks, problem.n_vars);
  if (split) {
    ConicSolution sd = solve(D->problem, cfg.solver);
    R.dual_status = sd.status;
    R.value_dual = program_value_dual(*D, sd);
    R.moments = program_moments(*D, sd);
  } else {
    R.dual_status = sp.status;
    R.value_dual = program_value_dual(P, sp);
    R.moments = program_moments(P, sp);
  }
  R.solve_ms = ms_since(t1);
  R.value = R.value_dual;
  R.identity_residual = identity_residual(problem, R, k);
  try {
    R.cert = rank_certificate(R.moments, problem);
  } catch (const std::out_of_range&) {
    R.cert.max_rnk = -1;
  }
  R.oracle = oracle;
  R.sandwich_ok = R.value_primal <= R.value_dual + 1e-6;
  if (oracle) R.sandwich_ok = R.sandwich_ok && R.value_dual <= *oracle + 1e-3;
  return R;
}

std::vector<RelaxationResult> ladder(const SemialgebraicProblem& problem, int k_max, const RelaxConfig& cfg, bool stop_on_rank1) {
  if (k_max < 1) throw std::invalid_argument("ladder needs k_max >= 1");
  std::vector<RelaxationResult> out;
  for (int k = 1; k <= k_max; ++k) {
    out.push_back(solve_order(problem, k, cfg));
    if (stop_on_rank1 && out.back().cert.max_rnk == 1) break;
  }
  return out;
}

nlohmann::json RelaxationResult::json() const {
  nlohmann::json j = {{"k", k},
                      {"value", value},
                      {"value_primal", value_primal},
                      {"value_dual", value_dual},
                      {"primal_status", to_string(primal_status)},
                      {"dual_status", to_string(dual_status)},
                      {"max_ms", max_ms},
                      {"num_products", num_products},
                      {"max_rnk", cert.max_rnk},
                      {"build_ms", build_ms},
                      {"solve_ms", solve_ms},
                      {"time_ms", build_ms + solve_ms},
                      {"identity_residual", identity_residual},
                      {"raw_value_primal", raw_value_primal},
                      {"certificate_backoff", certificate_backoff},
                      {"certificate_min_eig", certificate_min_eig},
                      {"certificate_psd", certificate_psd}};
  if (cert.extracted_point) {
    const VectorXd& x = *cert.extracted_point;
    j["point"] = std::vector<double>(x.data(), x.data() + x.size());
    j["point_feasible"] = cert.point_feasible;
    j["point_value"] = cert.point_value;
  } else
    j["point"] = nullptr;
  return j;
}

double max_violation(const SemialgebraicProblem& problem, const VectorXd& x) {
  double v = 0;
  for (const auto& g : problem.constraints) {
    double f = evaluate(g, x);
    v = std::max({v, -f, f - 1.0});
  }
  return v;
}

namespace {

struct Box {
  VectorXd lo, hi;
};

Box infer_box(const SemialgebraicProblem& problem) {
  int n = problem.n_vars;
  const double inf = std::numeric_limits<double>::infinity();
  Box B{VectorXd::Constant(n, -inf), VectorXd::Constant(n, inf)};
  for (const auto& g : problem.constraints) {
    if (g.degree() != 1) continue;
    int j = -1;
    double a = 0, b = 0;
    bool single = true;
    for (const auto& [e, c] : g.terms()) {
      if (e.is_zero()) {
        b = c;
        continue;
      }
      int v = pure_var(e);
      if (j >= 0 && v != j) single = false;
      j = v;
      a = c;
    }
    if (!single || j < 0) continue;
    double l = -b / a, h = (1.0 - b) / a;
    if (l > h) std::swap(l, h);
    B.lo[j] = std::max(B.lo[j], l);
    B.hi[j] = std::min(B.hi[j], h);
  }
  for (int j = 0; j < n; ++j)
    if (!std::isfinite(B.lo[j]) || !std::isfinite(B.hi[j])) throw std::invalid_argument("oracle: no box bound inferable for x" + std::to_string(j + 1));
  return B;
}

struct Penalized {
  const SemialgebraicProblem& P;
  std::vector<Polynomial> df0;
  std::vector<std::vector<Polynomial>> dg;

  explicit Penalized(const SemialgebraicProblem& p) : P(p) {
    for (int i = 0; i < p.n_vars; ++i) df0.push_back(differentiate(p.f0, i));
    for (const auto& g : p.constraints) {
      dg.emplace_back();
      for (int i = 0; i < p.n_vars; ++i) dg.back().push_back(differentiate(g, i));
    }
  }
  double value(const VectorXd& x, double rho) const {
    double v = evaluate(P.f0, x);
    for (const auto& g : P.constraints) {
      double f = evaluate(g, x);
      double e = f < 0 ? f : (f > 1 ? f - 1 : 0.0);
      v += rho * e * e;
    }
    return v;
  }
  VectorXd grad(const VectorXd& x, double rho) const {
    int n = P.n_vars;
    VectorXd gr(n);
    for (int i = 0; i < n; ++i) gr[i] = evaluate(df0[i], x);
    for (size_t t = 0; t < P.constraints.size(); ++t) {
      double f = evaluate(P.constraints[t], x);
      double e = f < 0 ? f : (f > 1 ? f - 1 : 0.0);
      if (e == 0.0) continue;
      for (int i = 0; i < n; ++i) gr[i] += 2.0 * rho * e * evaluate(dg[t][i], x);
    }
    return gr;
  }
};

VectorXd clampv(const VectorXd& x, const Box& B) { return x.cwiseMax(B.lo).cwiseMin(B.hi); }

VectorXd descend(const Penalized& F, VectorXd x, const Box& B) {
  for (double rho = 10; rho <= 1e9; rho *= 10) {
    double step = 1e-1;
    double fx = F.value(x, rho);
    for (int it = 0; it < 400; ++it) {
      VectorXd g = F.grad(x, rho);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        VectorXd xn = clampv(x - step * g, B);
        double fn = F.value(xn, rho);
        if (fn <= fx - 1e-4 * g.dot(x - xn)) {
          moved = (xn - x).norm() > 1e-14;
          x = xn;
          fx = fn;
          step *= 2.0;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
  }
  return x;
}

// Pull x toward a feasible anchor until it is feasible.
std::optional<VectorXd> restore(const SemialgebraicProblem& P, const VectorXd& x, const VectorXd& anchor, double tol) {
  if (max_violation(P, x) <= tol) return x;
  double lo = 0, hi = 1;
  for (int it = 0; it < 60; ++it) {
    double t = 0.5 * (lo + hi);
    if (max_violation(P, anchor + t * (x - anchor)) <= tol)
      lo = t;
    else
      hi = t;
  }
  VectorXd z = anchor + lo * (x - anchor);
  if (max_violation(P, z) <= tol) return z;
  return std::nullopt;
}

}  // namespace

OracleResult upper_bound_oracle(const SemialgebraicProblem& problem, const OracleSettings& st) {
  int n = problem.n_vars;
  Box B = infer_box(problem);
  Penalized F(problem);
  Rng rng(st.seed);
  OracleResult best{std::numeric_limits<double>::infinity(), VectorXd()};
  std::optional<VectorXd> anchor;
  auto offer = [&](const VectorXd& x) {
    if (max_violation(problem, x) > st.feas_tol) return;
    if (!anchor) anchor = x;
    double v = evaluate(problem.f0, x);
    if (v < best.value) best = {v, x};
  };
  std::vector<VectorXd> seeds;
  if (n <= 3) {
    int g = n == 3 ? std::min(st.grid_per_dim, 120) : st.grid_per_dim;
    std::vector<std::pair<double, VectorXd>> top;
    std::vector<int> idx(n, 0);
    VectorXd x(n);
    while (true) {
      for (int i = 0; i < n; ++i) x[i] = B.lo[i] + (B.hi[i] - B.lo[i]) * idx[i] / (g - 1);
      if (max_violation(problem, x) <= st.feas_tol) {
        offer(x);
        top.emplace_back(evaluate(problem.f0, x), x);
        if (top.size() > 64) {
          std::nth_element(top.begin(), top.begin() + 8, top.end(), [](auto& a, auto& b) { return a.first < b.first; });
          top.resize(8);
        }
      }
      int i = 0;
      while (i < n && ++idx[i] == g) idx[i++] = 0;
      if (i == n) break;
    }
    std::sort(top.begin(), top.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (size_t t = 0; t < std::min<size_t>(top.size(), 8); ++t) seeds.push_back(top[t].second);
  } else {
    for (int t = 0; t < 4000 && !anchor; ++t) {
      VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(B.lo[i], B.hi[i]);
      offer(x);
    }
    for (int s = 0; s < st.starts; ++s) {
      VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(B.lo[i], B.hi[i]);
      seeds.push_back(x);
    }
  }
  for (const auto& x0 : seeds) {
    VectorXd x = descend(F, x0, B);
    if (max_violation(problem, x) <= st.feas_tol)
      offer(x);
    else if (anchor) {
      auto z = restore(problem, x, *anchor, st.feas_tol);
      if (z) offer(*z);
    }
  }
  if (!std::isfinite(best.value)) throw std::runtime_error("oracle: no feasible point found");
  return best;
}

}  // namespace spldsos
