#include "spldsos/convex.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "spldsos/rng.hpp"

namespace spldsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

nlohmann::json to_json(const ConvexSpldProblem& p) {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& q : p.g) g.push_back(to_json(q));
  nlohmann::json j = {{"name", p.name}, {"n", p.n_vars}, {"objective", to_json(p.f)}, {"constraints", g}};
  if (!p.separable.empty()) {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& q : p.separable) s.push_back(to_json(q));
    j["separable"] = s;
  }
  if (p.plan) j["plan"] = p.plan->json();
  if (p.slater_point) j["slater_point"] = std::vector<double>(p.slater_point->data(), p.slater_point->data() + p.slater_point->size());
  return j;
}

ConvexSpldProblem convex_problem_from_json(const nlohmann::json& j) {
  ConvexSpldProblem p;
  p.name = j.value("name", "");
  p.n_vars = j.at("n").get<int>();
  p.f = poly_from_json(j.at("objective"));
  if (p.f.n_vars() != p.n_vars) throw DimensionError("objective variable count differs from n");
  for (const auto& c : j.value("constraints", nlohmann::json::array())) {
    p.g.push_back(poly_from_json(c));
    if (p.g.back().n_vars() != p.n_vars) throw DimensionError("constraint variable count differs from n");
  }
  if (j.contains("separable")) {
    for (const auto& c : j.at("separable")) p.separable.push_back(poly_from_json(c));
    if (p.separable.size() != p.g.size() + 1) throw std::invalid_argument("separable split needs one entry per piece");
  }
  if (j.contains("plan")) {
    DegreePlan pl;
    pl.d = j["plan"].at("d").get<std::vector<int>>();
    pl.r = j["plan"].at("r").get<int>();
    p.plan = pl;
  }
  if (j.contains("slater_point")) {
    auto v = j["slater_point"].get<std::vector<double>>();
    p.slater_point = Eigen::Map<VectorXd>(v.data(), v.size());
  }
  return p;
}

namespace {

std::vector<Polynomial> pieces(const ConvexSpldProblem& p) {
  std::vector<Polynomial> out{p.f};
  out.insert(out.end(), p.g.begin(), p.g.end());
  return out;
}

bool is_separable(const Polynomial& s) {
  for (const auto& [a, c] : s.terms()) {
    int nz = 0;
    for (int v : a.e) nz += v > 0;
    if (nz > 1) return false;
  }
  return true;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

VectorXd find_slater(const ConvexSpldProblem& p) {
  int n = p.n_vars;
  auto strictly = [&](const VectorXd& x) {
    for (const auto& g : p.g)
      if (!(evaluate(g, x) < -1e-9)) return false;
    return true;
  };
  if (p.slater_point) {
    if (!strictly(*p.slater_point)) throw SlaterFail("given point is not strictly feasible");
    return *p.slater_point;
  }
  Rng rng(p.search_seed);
  VectorXd x = VectorXd::Zero(n);
  if (strictly(x)) return x;
  for (int t = 0; t < 20000; ++t) {
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(-p.search_radius, p.search_radius);
    if (strictly(x)) return x;
  }
  throw SlaterFail("no strictly feasible point found in the search box");
}

bool sol_usable(SolverStatus s) { return s == SolverStatus::Optimal || s == SolverStatus::NearOptimal; }

}  // namespace

DegreePlan convex_plan(const ConvexSpldProblem& p) {
  if (p.plan) return *p.plan;
  int n = p.n_vars;
  auto pc = pieces(p);
  std::vector<int> sep(n, 0);
  int low = 0;
  for (size_t i = 0; i < pc.size(); ++i) {
    if (!p.separable.empty()) {
      SpldDecomposition D = split_separable(p.separable[i]);
      for (int j = 0; j < n; ++j) sep[j] = std::max(sep[j], D.separable_degree(j));
      low = std::max(low, (pc[i] - p.separable[i]).degree());
    } else {
      SpldDecomposition D = split_separable(pc[i]);
      for (int j = 0; j < n; ++j) sep[j] = std::max(sep[j], D.separable_degree(j));
      low = std::max(low, D.lower.degree());
    }
  }
  DegreePlan plan;
  plan.r = std::max(1, (low + 1) / 2);
  for (int j = 0; j < n; ++j) plan.d.push_back(std::max(1, (sep[j] + 1) / 2));
  return plan;
}

ValidationReport validate(const ConvexSpldProblem& p) {
  ValidationReport rep;
  int n = p.n_vars;
  rep.plan = convex_plan(p);
  if (static_cast<int>(rep.plan.d.size()) != n) throw DimensionError("plan length differs from variable count");
  if (rep.plan.d0() <= rep.plan.r)
    throw DegreeOrderFail("d0 = " + std::to_string(rep.plan.d0()) + " must exceed r = " + std::to_string(rep.plan.r));

  rep.slater_point = find_slater(p);

  auto pc = pieces(p);
  if (!p.separable.empty()) {
    if (p.separable.size() != pc.size()) throw std::invalid_argument("separable split needs one entry per piece");
    rep.user_split = true;
    for (size_t i = 0; i < pc.size(); ++i) {
      if (!is_separable(p.separable[i])) throw NotSosConvex("separable part has mixed monomials", static_cast<int>(i));
      SpldDecomposition D = split_separable(p.separable[i]);
      for (int j = 0; j < n; ++j) {
        const Polynomial& u = D.separable[j];
        if (u.degree() <= 1) continue;
        Polynomial u2 = differentiate(differentiate(u, j), j);
        if (u2.degree() == 0) {
          if (u2.coeff(MultiIndex(n)) < 0) throw NotSosConvex("u_" + std::to_string(i) + "^" + std::to_string(j + 1) + " is concave", static_cast<int>(i));
          continue;
        }
        if (u2.degree() % 2) throw NotSosConvex("odd degree second derivative in x" + std::to_string(j + 1), static_cast<int>(i));
        auto chk = sos_check(u2, univariate_basis(n, j, u2.degree() / 2));
        if (chk.status != CheckStatus::Feasible)
          throw NotSosConvex("u_" + std::to_string(i) + "^" + std::to_string(j + 1) + " not certified convex", static_cast<int>(i));
      }
      Polynomial rest = pc[i] - p.separable[i];
      rest.prune(1e-13);
      if (rest.degree() >= 2) {
        auto chk = sos_convexity_check(rest);
        if (chk.status != CheckStatus::Feasible) throw NotSosConvex("p_" + std::to_string(i) + " not certified SOS-convex", static_cast<int>(i));
      }
    }
  } else {
    for (size_t i = 0; i < pc.size(); ++i) {
      if (pc[i].degree() <= 1) continue;
      auto chk = structured_hessian_check(pc[i], rep.plan);
      if (chk.status != CheckStatus::Feasible) throw NotSosConvex("structured Hessian check failed for piece " + std::to_string(i), static_cast<int>(i));
    }
    rep.notes.push_back("auto split certified by structured Hessian check");
  }
  return rep;
}

SosProgram exact_program(const ConvexSpldProblem& p, const DegreePlan& plan) {
  SosProgram prog;
  prog.n = p.n_vars;
  prog.f0 = p.f;
  for (const auto& g : p.g) prog.h.push_back(-g);
  prog.blocks = spld_blocks(p.n_vars, plan);
  return prog;
}

BuiltProgram build_exact(const ConvexSpldProblem& p) { return build_sos_program(exact_program(p, convex_plan(p))); }

namespace {
ExactRelaxationResult solve_program(const ConvexSpldProblem& p, SosProgram prog, const SolverSettings& settings) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<double> scale;
  for (auto& h : prog.h) {
    double s = std::max(h.max_abs_coeff(), 1e-300);
    scale.push_back(s);
    h = h * (1.0 / s);
  }
  BuiltProgram B = build_sos_program(prog);
  ConicSolution sol = solve(B.problem, settings);
  ExactRelaxationResult r;
  r.status = sol.status;
  r.value_primal = program_value_primal(B, sol);
  r.value_dual = program_value_dual(B, sol);
  r.value = r.value_dual;
  for (size_t t = 0; t < B.mult.size(); ++t) r.lambdas.push_back(B.model.value(sol.x, B.mult[t]) / scale[t]);
  for (size_t b = 0; b < B.blk.size(); ++b) r.certificate.blocks.emplace_back(B.blocks[b], B.model.block(sol.x, B.blk[b]));
  r.certificate.reconstructed = reconstruct(r.certificate.blocks, p.n_vars);
  r.moments = program_moments(B, sol);
  r.max_block = B.max_block();
  r.solve_ms = ms_since(t0);
  return r;
}
}  // namespace

ExactRelaxationResult solve_exact(const ConvexSpldProblem& p, const SolverSettings& settings) {
  ValidationReport v = validate(p);
  ExactRelaxationResult r = solve_program(p, exact_program(p, v.plan), settings);
  if (!sol_usable(r.status)) return r;
  if (std::abs(r.value_primal - r.value_dual) > 1e-6 * (1.0 + std::abs(r.value)))
    throw std::runtime_error("solve_exact: primal " + std::to_string(r.value_primal) + " and dual " + std::to_string(r.value_dual) + " disagree");
  try {
    r.recovered_point = recover(r, p);
  } catch (const FeasibilityCheckFail&) {
  }
  return r;
}

ExactRelaxationResult solve_dense_sos(const ConvexSpldProblem& p, const SolverSettings& settings) {
  DegreePlan plan = convex_plan(p);
  SosProgram prog = exact_program(p, plan);
  prog.blocks = {canonical_basis(p.n_vars, plan.d0())};
  return solve_program(p, prog, settings);
}

VectorXd recover(const ExactRelaxationResult& r, const ConvexSpldProblem& p) {
  VectorXd x = r.moments.first_order(p.n_vars);
  double viol = 0;
  for (const auto& g : p.g) viol = std::max(viol, evaluate(g, x));
  double gap = std::abs(evaluate(p.f, x) - r.value);
  if (viol > 1e-6 || gap > 1e-4 * (1.0 + std::abs(r.value)))
    throw FeasibilityCheckFail("recovered point fails: violation " + std::to_string(viol) + ", value gap " + std::to_string(gap), viol, gap);
  return x;
}

nlohmann::json ExactRelaxationResult::json() const {
  nlohmann::json j = {{"value", value},   {"value_primal", value_primal}, {"value_dual", value_dual},
                      {"lambdas", lambdas}, {"status", to_string(status)}, {"max_block", max_block},
                      {"time_ms", solve_ms}};
  if (recovered_point)
    j["recovered_point"] = std::vector<double>(recovered_point->data(), recovered_point->data() + recovered_point->size());
  else
    j["recovered_point"] = nullptr;
  return j;
}

ConvexSpldProblem gen_random_instance(int n, const DegreePlan& plan, std::uint64_t seed) {
  if (static_cast<int>(plan.d.size()) != n) throw DimensionError("plan length differs from n");
  if (plan.d0() <= plan.r) throw DegreeOrderFail("gen_random_instance needs d0 > r");
  Rng rng(seed);
  ConvexSpldProblem P;
  P.name = "convex_spld_" + std::to_string(seed);
  P.n_vars = n;
  P.plan = plan;
  auto xp = [&](int j, int k, double c) { return Polynomial::monomial(MultiIndex::unit(n, j, k), c); };
  auto linear_form = [&]() {
    Polynomial l(n);
    for (int j = 0; j < n; ++j) l += xp(j, 1, rng.normal());
    return l;
  };

  // s_0: even powers with nonnegative weights plus a linear term
  Polynomial s0(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 1; k < plan.d[j]; ++k) s0 += xp(j, 2 * k, rng.uniform(0.0, 1.0));
    s0 += xp(j, 2 * plan.d[j], rng.uniform(0.5, 1.5));
    s0 += xp(j, 1, rng.uniform(-1.0, 1.0));
  }
  // p_0: sum of even powers of linear forms, degree <= 2r
  Polynomial p0(n);
  for (int s = 1; s <= plan.r; ++s)
    for (int k = 0; k < 2; ++k) p0 += power(linear_form(), 2 * s) * rng.uniform(0.05, 0.5);
  p0 += linear_form() * 0.5;
  P.f = s0 + p0;

  // ball and one more convex constraint, both strictly satisfied at 0
  Polynomial ball(n), s1(n), s2(n);
  for (int j = 0; j < n; ++j) s1 += xp(j, 2, 1.0);
  ball = s1 - Polynomial::constant(n, 2.25);
  for (int j = 0; j < n; ++j) s2 += xp(j, 2 * plan.d[j], rng.uniform(0.2, 1.0));
  Polynomial l = linear_form();
  Polynomial g2 = s2 + l * l * 0.5 + linear_form() * 0.3 - Polynomial::constant(n, 1.0);
  P.g = {ball, g2};
  P.separable = {s0, s1, s2};
  P.slater_point = VectorXd::Zero(n);
  for (auto& q : P.separable) q.prune();
  P.f.prune();
  for (auto& q : P.g) q.prune();
  return P;
}

DescentOracleResult descent_oracle(const ConvexSpldProblem& p, int starts, std::uint64_t seed) {
  int n = p.n_vars;
  int m = static_cast<int>(p.g.size());
  VectorXd anchor;
  anchor = find_slater(p);
  std::vector<Polynomial> gf(n);
  for (int i = 0; i < n; ++i) gf[i] = differentiate(p.f, i);
  PolynomialMatrix Hf = hessian(p.f);
  std::vector<std::vector<Polynomial>> gg(m);
  std::vector<PolynomialMatrix> Hg(m);
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < n; ++i) gg[k].push_back(differentiate(p.g[k], i));
    Hg[k] = hessian(p.g[k]);
  }
  auto grad = [&](const std::vector<Polynomial>& G, const VectorXd& x) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = evaluate(G[i], x);
    return v;
  };
  auto interior = [&](const VectorXd& x) {
    for (const auto& g : p.g)
      if (!(evaluate(g, x) < 0)) return false;
    return true;
  };
  auto phi = [&](const VectorXd& x, double t) {
    double v = t * evaluate(p.f, x);
    for (const auto& g : p.g) v -= std::log(-evaluate(g, x));
    return v;
  };
  Rng rng(seed);
  DescentOracleResult best{std::numeric_limits<double>::infinity(), anchor};
  for (int s = 0; s < starts; ++s) {
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = anchor[i] + rng.uniform(-p.search_radius, p.search_radius);
    for (int it = 0; it < 60 && !interior(x); ++it) x = anchor + 0.5 * (x - anchor);
    if (!interior(x)) x = anchor;
    double t = 1.0;
    for (int outer = 0; outer < 40; ++outer) {
      for (int it = 0; it < 100; ++it) {
        VectorXd gr = t * grad(gf, x);
        MatrixXd H = t * evaluate(Hf, x);
        for (int k = 0; k < m; ++k) {
          double gv = evaluate(p.g[k], x);
          VectorXd dg = grad(gg[k], x);
          gr -= dg / gv;
          H += dg * dg.transpose() / (gv * gv) - evaluate(Hg[k], x) / gv;
        }
        H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
        VectorXd dx = -H.ldlt().solve(gr);
        double dec = -gr.dot(dx);
        if (dec < 1e-14) break;
        double step = 1.0, f0 = phi(x, t);
        while (step > 1e-12) {
          VectorXd xn = x + step * dx;
          if (interior(xn) && phi(xn, t) <= f0 - 0.25 * step * dec) break;
          step *= 0.5;
        }
        if (step <= 1e-12) break;
        x += step * dx;
      }
      if (m == 0 || m / t < 1e-11 * (1.0 + std::abs(evaluate(p.f, x)))) break;
      t *= 10.0;
    }
    double v = evaluate(p.f, x);
    if (v < best.value) best = {v, x};
  }
  return best;
}

}  // namespace spldsos
