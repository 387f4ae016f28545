#include "spldsos/spld.hpp"

#include <algorithm>

namespace spldsos {

nlohmann::json to_json(const SemialgebraicProblem& p) {
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& g : p.constraints) cons.push_back(to_json(g));
  return {{"name", p.name}, {"n", p.n_vars}, {"objective", to_json(p.f0)}, {"constraints", cons}};
}

SemialgebraicProblem problem_from_json(const nlohmann::json& j) {
  SemialgebraicProblem p;
  p.name = j.value("name", "");
  p.n_vars = j.at("n").get<int>();
  p.f0 = poly_from_json(j.at("objective"));
  if (p.f0.n_vars() != p.n_vars) throw DimensionError("objective variable count differs from n");
  for (const auto& c : j.at("constraints")) {
    p.constraints.push_back(poly_from_json(c));
    if (p.constraints.back().n_vars() != p.n_vars) throw DimensionError("constraint variable count differs from n");
  }
  if (p.constraints.empty()) throw std::invalid_argument("problem needs at least one constraint");
  return p;
}

int SpldDecomposition::separable_degree(int j) const { return separable[j].degree(); }

int SpldDecomposition::separable_degree() const {
  int d = 0;
  for (const auto& u : separable) d = std::max(d, u.degree());
  return d;
}

Polynomial SpldDecomposition::reassemble() const {
  int n = lower.n_vars();
  Polynomial r = lower;
  for (const auto& u : separable) r = r + u;
  return r + Polynomial::constant(n, constant);
}

SpldDecomposition split_separable(const Polynomial& p) {
  int n = p.n_vars();
  SpldDecomposition D;
  D.separable.assign(n, Polynomial(n));
  D.lower = Polynomial(n);
  for (const auto& [a, c] : p.terms()) {
    if (a.deg == 0) {
      D.constant = c;
      continue;
    }
    int nz = 0, j = -1;
    for (int i = 0; i < n; ++i)
      if (a.e[i]) ++nz, j = i;
    if (nz == 1)
      D.separable[j].set_term(a, c);
    else
      D.lower.set_term(a, c);
  }
  return D;
}

SpldDecomposition decompose(const Polynomial& p) {
  if (p.degree() == 0) throw ConstantInput("decompose: constant polynomial");
  SpldDecomposition D = split_separable(p);
  if (!D.lower.is_zero() && D.lower.degree() >= D.separable_degree()) {
    const MultiIndex& top = D.lower.terms().rbegin()->first;
    throw NotSpld("non-separable monomial " + top.str() + " has degree >= separable degree " + std::to_string(D.separable_degree()), top);
  }
  return D;
}

bool is_spld(const Polynomial& p) {
  try {
    decompose(p);
    return true;
  } catch (const NotSpld&) {
    return false;
  } catch (const ConstantInput&) {
    return false;
  }
}

int DegreePlan::d0() const { return d.empty() ? 0 : *std::max_element(d.begin(), d.end()); }

int min_lower_half_degree(const SemialgebraicProblem& problem) {
  int r = 1;
  auto upd = [&](const Polynomial& p) {
    if (p.degree() == 0) return;
    SpldDecomposition D = split_separable(p);
    r = std::max(r, (D.lower.degree() + 1) / 2);
  };
  upd(problem.f0);
  for (const auto& g : problem.constraints) upd(g);
  return r;
}

DegreePlan plan_degrees(const SemialgebraicProblem& problem, int r, PlanMode mode, const std::vector<int>& override_d) {
  int n = problem.n_vars;
  int rmin = min_lower_half_degree(problem);
  if (r < rmin) throw std::invalid_argument("plan: r = " + std::to_string(r) + " is below the lower-part half degree " + std::to_string(rmin));
  std::vector<int> sep(n, 0);
  auto upd = [&](const Polynomial& p) {
    if (p.degree() == 0) return;
    SpldDecomposition D = split_separable(p);
    for (int j = 0; j < n; ++j) sep[j] = std::max(sep[j], D.separable_degree(j));
  };
  upd(problem.f0);
  for (const auto& g : problem.constraints) upd(g);

  DegreePlan plan;
  plan.r = r;
  plan.d.resize(n);
  if (mode == PlanMode::UserOverride) {
    if (static_cast<int>(override_d.size()) != n && override_d.size() != 1) throw std::invalid_argument("plan override needs 1 or n degrees");
    for (int j = 0; j < n; ++j) plan.d[j] = override_d.size() == 1 ? override_d[0] : override_d[j];
    for (int j = 0; j < n; ++j)
      if (2 * plan.d[j] < sep[j]) throw std::invalid_argument("plan override: 2*d_j below separable degree of x" + std::to_string(j + 1));
  } else {
    std::int64_t s = basis_size(n, r);
    for (int j = 0; j < n; ++j) plan.d[j] = (s >= sep[j]) ? static_cast<int>(s - 1) : (sep[j] + 1) / 2;
  }
  for (int& v : plan.d) v = std::max(v, 1);
  if (plan.d0() <= r) throw std::invalid_argument("plan: max d_j must exceed r");
  return plan;
}

}  // namespace spldsos
