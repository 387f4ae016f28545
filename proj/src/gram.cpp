#include "spldsos/gram.hpp"

#include <algorithm>
#include <cmath>

#include "spldsos/model.hpp"

namespace spldsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::MatrixXd CoeffMatrixFamily::dense(const MultiIndex& a) const {
  MatrixXd B = MatrixXd::Zero(basis.size(), basis.size());
  auto it = table.find(a);
  if (it == table.end()) return B;
  for (auto [i, j] : it->second) B(i, j) = B(j, i) = 1.0;
  return B;
}

CoeffMatrixFamily coeff_matrices(const MonomialBasis& basis) {
  CoeffMatrixFamily F;
  F.basis = basis;
  for (int i = 0; i < basis.size(); ++i)
    for (int j = 0; j <= i; ++j) F.table[basis[i] + basis[j]].emplace_back(i, j);
  return F;
}

double MomentSolution::at(const MultiIndex& a) const {
  auto it = values.find(a);
  if (it == values.end()) throw std::out_of_range("missing moment " + a.str());
  return it->second;
}

VectorXd MomentSolution::first_order(int n) const {
  VectorXd x(n);
  for (int j = 0; j < n; ++j) x[j] = at(MultiIndex::unit(n, j));
  return x;
}

MomentSolution MomentSolution::point_mass(const VectorXd& x, int max_degree) {
  MomentSolution y;
  y.d_max = (max_degree + 1) / 2;
  MonomialBasis B = canonical_basis(static_cast<int>(x.size()), max_degree);
  for (const auto& a : B.entries) y.values[a] = monomial_value(a, x);
  return y;
}

MatrixXd moment_matrix(const MomentSolution& y, const MonomialBasis& basis) {
  int s = basis.size();
  MatrixXd M(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = y.at(basis[i] + basis[j]);
  return M;
}

int numerical_rank(const MatrixXd& M, double ratio) {
  if (M.size() == 0) return 0;
  auto [w, V] = symmetric_eigen(0.5 * (M + M.transpose()));
  (void)V;
  if (w[0] <= 0) return 0;
  int r = 0;
  for (int i = 0; i < w.size(); ++i)
    if (w[i] > 0 && w[0] / w[i] < ratio) ++r;
  return r;
}

nlohmann::json SosCertificate::json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [B, Q] : blocks) {
    nlohmann::json exps = nlohmann::json::array();
    for (const auto& a : B.entries) exps.push_back(a.e);
    std::vector<double> g(Q.data(), Q.data() + Q.size());
    out.push_back({{"basis", exps}, {"gram", g}});
  }
  return out;
}

Polynomial reconstruct(const std::vector<std::pair<MonomialBasis, MatrixXd>>& blocks, int n) {
  Polynomial p(n);
  for (const auto& [B, Q] : blocks)
    for (int i = 0; i < B.size(); ++i)
      for (int j = 0; j < B.size(); ++j)
        if (Q(i, j) != 0.0) p.add_term(B[i] + B[j], Q(i, j));
  p.prune();
  return p;
}

Polynomial reconstruct(const SosCertificate& cert) {
  int n = cert.blocks.empty() ? cert.reconstructed.n_vars() : cert.blocks.front().first.n_vars;
  return reconstruct(cert.blocks, n);
}

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Feasible: return "Feasible";
    case CheckStatus::Infeasible: return "Infeasible";
    case CheckStatus::Unknown: return "Unknown";
  }
  return "?";
}

bool gram_acceptable(const MatrixXd& Q) {
  if (Q.size() == 0) return true;
  double tr = std::max(Q.trace(), 0.0);
  return min_eigenvalue(Q) >= -1e-7 * std::max(tr, 1e-300) || Q.cwiseAbs().maxCoeff() == 0.0;
}

namespace {

using RowMap = std::map<MultiIndex, int, GrlexLess>;

int row_for(ConicModel& M, RowMap& rows, const MultiIndex& a) {
  auto it = rows.find(a);
  if (it != rows.end()) return it->second;
  int r = M.add_row(0.0);
  rows.emplace(a, r);
  return r;
}

CheckStatus classify(const ConicSolution& s, const ConicProblem& P) {
  if (s.ok()) return CheckStatus::Feasible;
  if (s.status == SolverStatus::PrimalInfeasible && verify_primal_infeasible(P, s.y, s.s, 1e-5)) return CheckStatus::Infeasible;
  return CheckStatus::Unknown;
}

}  // namespace

SosCheckResult sos_check(const Polynomial& p, const MonomialBasis& basis) {
  if (p.degree() > 2 * basis.max_degree) throw std::invalid_argument("sos_check: degree exceeds twice the basis degree");
  ConicModel M;
  RowMap rows;
  int blk = M.add_psd(basis.size());
  for (const auto& [a, c] : p.terms()) M.set_rhs(row_for(M, rows, a), c);
  for (int i = 0; i < basis.size(); ++i)
    for (int j = 0; j <= i; ++j) M.coef_psd(row_for(M, rows, basis[i] + basis[j]), blk, i, j, i == j ? 1.0 : 2.0);
  ConicProblem P = M.build();
  SosCheckResult res;
  ConicSolution s = solve(P);
  res.solver = s.status;
  res.status = classify(s, P);
  if (res.status == CheckStatus::Feasible) {
    MatrixXd Q = M.block(s.x, blk);
    res.cert.blocks.emplace_back(basis, Q);
    res.cert.reconstructed = reconstruct(res.cert.blocks, p.n_vars());
    double scale = 1.0 + p.max_abs_coeff();
    double err = (res.cert.reconstructed - p).max_abs_coeff();
    if (!gram_acceptable(Q) || err > 1e-6 * scale) res.status = CheckStatus::Unknown;
  }
  return res;
}

PolynomialMatrix hessian_from_gram(const MatrixXd& Q, const MonomialBasis& basis) {
  int s = basis.size();
  int n = static_cast<int>(Q.rows()) / s;
  int nv = basis.n_vars;
  PolynomialMatrix H(n, std::vector<Polynomial>(n, Polynomial(nv)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) H[i][j].add_term(basis[a] + basis[b], Q(i * s + a, j * s + b));
      H[i][j].prune(1e-300);
    }
  return H;
}

namespace {

struct HessRows {
  std::map<std::tuple<int, int, MultiIndex>, int> idx;
  int get(ConicModel& M, int i, int j, const MultiIndex& g) {
    if (i > j) std::swap(i, j);
    auto key = std::make_tuple(i, j, g);
    auto it = idx.find(key);
    if (it != idx.end()) return it->second;
    int r = M.add_row(0.0);
    idx.emplace(key, r);
    return r;
  }
};

// Adds rows matching (I (x) basis)' Q (I (x) basis) against H, for i <= j.
void add_gram_hessian(ConicModel& M, HessRows& rows, int blk, int n, const MonomialBasis& B) {
  int s = B.size();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) {
          int I = i * s + a, J = j * s + b;
          if (i == j && b > a) continue;
          double c = (i == j && a != b) ? 2.0 : 1.0;
          M.coef_psd(rows.get(M, i, j, B[a] + B[b]), blk, I, J, c);
        }
}

void set_hessian_rhs(ConicModel& M, HessRows& rows, const PolynomialMatrix& H) {
  int n = static_cast<int>(H.size());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (const auto& [g, c] : H[i][j].terms()) M.set_rhs(rows.get(M, i, j, g), c);
}

double hessian_residual(const PolynomialMatrix& A, const PolynomialMatrix& B) {
  double e = 0;
  for (size_t i = 0; i < A.size(); ++i)
    for (size_t j = 0; j < A.size(); ++j) e = std::max(e, (A[i][j] - B[i][j]).max_abs_coeff());
  return e;
}

double hessian_scale(const PolynomialMatrix& H) {
  double e = 0;
  for (const auto& row : H)
    for (const auto& p : row) e = std::max(e, p.max_abs_coeff());
  return 1.0 + e;
}

}  // namespace

SosCheckResult sos_convexity_check(const Polynomial& p) {
  int n = p.n_vars();
  int d = std::max(1, (p.degree() + 1) / 2);
  MonomialBasis B = canonical_basis(n, d - 1);
  PolynomialMatrix H = hessian(p);
  ConicModel M;
  HessRows rows;
  int blk = M.add_psd(n * B.size());
  add_gram_hessian(M, rows, blk, n, B);
  set_hessian_rhs(M, rows, H);
  ConicProblem P = M.build();
  SosCheckResult res;
  ConicSolution s = solve(P);
  res.solver = s.status;
  res.status = classify(s, P);
  if (res.status == CheckStatus::Feasible) {
    MatrixXd Q = M.block(s.x, blk);
    double err = hessian_residual(hessian_from_gram(Q, B), H);
    if (!gram_acceptable(Q) || err > 1e-6 * hessian_scale(H)) res.status = CheckStatus::Unknown;
    res.cert.blocks.emplace_back(B, Q);
    res.cert.reconstructed = p;
  }
  return res;
}

StructuredHessianResult structured_hessian_check(const Polynomial& p, const DegreePlan& plan) {
  int n = p.n_vars();
  if (static_cast<int>(plan.d.size()) != n) throw DimensionError("plan length differs from variable count");
  StructuredHessianResult res;
  res.basis0 = canonical_basis(n, plan.r - 1);
  PolynomialMatrix H = hessian(p);
  ConicModel M;
  HessRows rows;
  int b0 = M.add_psd(n * res.basis0.size());
  add_gram_hessian(M, rows, b0, n, res.basis0);
  std::vector<int> bj(n);
  for (int j = 0; j < n; ++j) {
    MonomialBasis U = univariate_basis(n, j, plan.d[j] - 1);
    res.basis_j.push_back(U);
    bj[j] = M.add_psd(U.size());
    for (int a = 0; a < U.size(); ++a)
      for (int b = 0; b <= a; ++b) M.coef_psd(rows.get(M, j, j, U[a] + U[b]), bj[j], a, b, a == b ? 1.0 : 2.0);
  }
  set_hessian_rhs(M, rows, H);
  ConicProblem P = M.build();
  ConicSolution s = solve(P);
  res.status = classify(s, P);
  if (res.status != CheckStatus::Feasible) return res;
  res.Q0 = M.block(s.x, b0);
  PolynomialMatrix R = hessian_from_gram(res.Q0, res.basis0);
  bool ok = gram_acceptable(res.Q0);
  for (int j = 0; j < n; ++j) {
    res.Qj.push_back(M.block(s.x, bj[j]));
    ok = ok && gram_acceptable(res.Qj[j]);
    R[j][j] = R[j][j] + reconstruct({{res.basis_j[j], res.Qj[j]}}, n);
  }
  res.residual = hessian_residual(R, H);
  if (!ok || res.residual > 1e-6 * hessian_scale(H)) res.status = CheckStatus::Unknown;
  return res;
}

bool in_convex_hull(const std::vector<MultiIndex>& pts, const std::vector<double>& target) {
  int n = static_cast<int>(target.size());
  ConicModel M;
  std::vector<ConicModel::Var> lam;
  for (size_t k = 0; k < pts.size(); ++k) lam.push_back(M.add_nonneg());
  int r0 = M.add_row(1.0);
  for (auto& v : lam) M.coef(r0, v, 1.0);
  for (int i = 0; i < n; ++i) {
    int r = M.add_row(target[i]);
    for (size_t k = 0; k < pts.size(); ++k)
      if (pts[k].e[i]) M.coef(r, lam[k], pts[k].e[i]);
  }
  ConicProblem P = M.build();
  ConicSolution s = solve(P);
  return s.ok();
}

MonomialBasis newton_halfpolytope_basis(const Polynomial& p) {
  int n = p.n_vars();
  if (p.is_zero()) throw std::invalid_argument("newton_halfpolytope_basis: empty support");
  std::vector<MultiIndex> supp;
  std::vector<int> lo(n, 1 << 30), hi(n, 0);
  int dlo = 1 << 30, dhi = 0;
  for (const auto& [a, c] : p.terms()) {
    supp.push_back(a);
    for (int i = 0; i < n; ++i) lo[i] = std::min(lo[i], a.e[i]), hi[i] = std::max(hi[i], a.e[i]);
    dlo = std::min(dlo, a.deg);
    dhi = std::max(dhi, a.deg);
  }
  MonomialBasis cand = canonical_basis(n, (p.degree() + 1) / 2);
  MonomialBasis out;
  out.n_vars = n;
  out.max_degree = 0;
  for (const auto& a : cand.entries) {
    if (2 * a.deg < dlo || 2 * a.deg > dhi) continue;
    bool box = true;
    for (int i = 0; i < n; ++i) box = box && 2 * a.e[i] >= lo[i] && 2 * a.e[i] <= hi[i];
    if (!box) continue;
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = 2.0 * a.e[i];
    if (in_convex_hull(supp, t)) {
      out.entries.push_back(a);
      out.max_degree = std::max(out.max_degree, a.deg);
    }
  }
  return out;
}

}  // namespace spldsos
