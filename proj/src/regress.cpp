#include "spldsos/regress.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <sstream>
#include <tuple>

#include <Eigen/SparseCholesky>

#include "spldsos/gram.hpp"
#include "spldsos/model.hpp"
#include "spldsos/rng.hpp"

namespace spldsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void Dataset::validate() const {
  if (X.rows() < 1) throw std::invalid_argument("dataset: need at least one point");
  if (X.cols() < 1) throw DimensionError("dataset: zero features");
  if (y.size() != X.rows()) throw DimensionError("dataset: " + std::to_string(X.rows()) + " points but " + std::to_string(y.size()) + " responses");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("dataset: non-finite entry");
}

nlohmann::json Dataset::json() const {
  nlohmann::json xs = nlohmann::json::array();
  for (int i = 0; i < m(); ++i) {
    std::vector<double> row(X.cols());
    for (int j = 0; j < n(); ++j) row[j] = X(i, j);
    xs.push_back(row);
  }
  return {{"x", xs}, {"y", std::vector<double>(y.data(), y.data() + y.size())}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset d;
  const auto& xs = j.at("x");
  const auto& ys = j.at("y");
  int m = static_cast<int>(xs.size());
  if (m == 0) throw std::invalid_argument("dataset: empty x");
  int n = static_cast<int>(xs[0].size());
  d.X.resize(m, n);
  d.y.resize(ys.size());
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(xs[i].size()) != n) throw DimensionError("dataset: ragged row " + std::to_string(i));
    for (int k = 0; k < n; ++k) d.X(i, k) = xs[i][k].get<double>();
  }
  for (size_t i = 0; i < ys.size(); ++i) d.y[i] = ys[i].get<double>();
  d.validate();
  return d;
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t pos = 0;
        vals.push_back(std::stod(cell, &pos));
        if (cell.find_first_not_of(" \t", pos) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw std::invalid_argument("dataset csv: bad number on line " + std::to_string(lineno));
    }
    if (vals.size() < 2) throw DimensionError("dataset csv: need features and a response on line " + std::to_string(lineno));
    if (!rows.empty() && vals.size() != rows[0].size()) throw DimensionError("dataset csv: ragged line " + std::to_string(lineno));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument("dataset csv: no rows");
  Dataset d;
  int m = static_cast<int>(rows.size()), n = static_cast<int>(rows[0].size()) - 1;
  d.X.resize(m, n);
  d.y.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < n; ++k) d.X(i, k) = rows[i][k];
    d.y[i] = rows[i][n];
  }
  d.validate();
  return d;
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream os;
  os.precision(17);
  for (int k = 0; k < d.n(); ++k) os << "x" << k + 1 << ",";
  os << "y\n";
  for (int i = 0; i < d.m(); ++i) {
    for (int k = 0; k < d.n(); ++k) os << d.X(i, k) << ",";
    os << d.y[i] << "\n";
  }
  return os.str();
}

const char* to_string(RegressionModel m) {
  switch (m) {
    case RegressionModel::Spld: return "spld";
    case RegressionModel::Spq: return "spq";
    case RegressionModel::Dense: return "dense";
  }
  return "?";
}

RegressionModel regression_model_from_string(const std::string& s) {
  if (s == "spld") return RegressionModel::Spld;
  if (s == "spq") return RegressionModel::Spq;
  if (s == "dense") return RegressionModel::Dense;
  throw std::invalid_argument("unknown regression model '" + s + "' (spld|spq|dense)");
}

void RegressionSpec::validate() const {
  if (d0 < 1) throw std::invalid_argument("regression: d0 must be >= 1");
  if (model == RegressionModel::Spld && (r < 1 || d0 <= r)) throw std::invalid_argument("regression: SPLD needs d0 > r >= 1");
  if (model == RegressionModel::Spq && d0 < 1) throw std::invalid_argument("regression: SPQ needs d0 >= 1");
}

nlohmann::json FittedModel::json() const {
  nlohmann::json cert = {{"lower_basis_size", lower_basis.size()}, {"lower_gram_size", lower_gram.rows()}, {"diag_blocks", diag_gram.size()},
                         {"min_eig", min_eig}, {"hessian_residual", hessian_residual}};
  return {{"model", to_string(spec.model)}, {"d0", spec.d0}, {"r", spec.lower_half_degree()}, {"n", p.n_vars()},
          {"polynomial", to_json(p)}, {"train_loss", train_loss}, {"solver_loss", solver_loss}, {"status", to_string(status)},
          {"solve_ms", solve_ms}, {"certificate", cert}};
}

double l1_loss(const Polynomial& p, const Dataset& data) {
  double s = 0;
  for (int i = 0; i < data.m(); ++i) s += std::abs(evaluate(p, VectorXd(data.X.row(i).transpose())) - data.y[i]);
  return s;
}

double predict(const FittedModel& model, const VectorXd& x) {
  if (x.size() != model.p.n_vars())
    throw DimensionError("predict: point has " + std::to_string(x.size()) + " coordinates, model has " + std::to_string(model.p.n_vars()));
  return evaluate(model.p, x);
}

Deviation evaluate(const FittedModel& model, const MatrixXd& test_points, const TruthFn& truth) {
  if (test_points.rows() == 0) throw std::invalid_argument("evaluate: empty test set");
  Deviation d;
  for (int i = 0; i < test_points.rows(); ++i) {
    VectorXd x = test_points.row(i).transpose();
    double e = std::abs(truth(x) - predict(model, x));
    d.avg_dev += e;
    d.max_dev = std::max(d.max_dev, e);
  }
  d.avg_dev /= static_cast<double>(test_points.rows());
  return d;
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

MultiIndex minus_units(const MultiIndex& a, int i, int j) {
  std::vector<int> e = a.e;
  --e[i];
  --e[j];
  return MultiIndex(e);
}

std::vector<MultiIndex> coefficient_support(int n, const RegressionSpec& spec) {
  if (spec.model == RegressionModel::Dense) return canonical_basis(n, 2 * spec.d0).entries;
  int r = spec.lower_half_degree();
  std::vector<MultiIndex> s = canonical_basis(n, 2 * r).entries;
  for (int j = 0; j < n; ++j)
    for (int k = 2 * r + 1; k <= 2 * spec.d0; ++k) s.push_back(MultiIndex::unit(n, j, k));
  return s;
}

// p(x) = q((x - mu) / sigma)
Polynomial unstandardize(const Polynomial& q, const VectorXd& mu, const VectorXd& sigma) {
  int n = q.n_vars();
  std::vector<std::vector<Polynomial>> pw(n);
  for (int j = 0; j < n; ++j) {
    Polynomial z = (Polynomial::var(n, j) - Polynomial::constant(n, mu[j])) * (1.0 / sigma[j]);
    pw[j].push_back(Polynomial::constant(n, 1.0));
    for (int k = 1; k <= q.degree(); ++k) pw[j].push_back(pw[j].back() * z);
  }
  Polynomial p(n);
  for (const auto& [a, c] : q.terms()) {
    Polynomial t = Polynomial::constant(n, c);
    for (int j = 0; j < n; ++j)
      if (a.e[j]) t = t * pw[j][a.e[j]];
    p += t;
  }
  p.prune(1e-300);
  return p;
}

}  // namespace

double certificate_residual(const FittedModel& model);

namespace {

// Refit the degree >= 2 coefficients of q to the Hessian implied by the
// (exactly PSD) certificate blocks, by least squares over all entries.
void polish_coefficients(FittedModel& fm) {
  int n = fm.q.n_vars();
  PolynomialMatrix R = hessian_from_gram(fm.lower_gram, fm.lower_basis);
  for (size_t j = 0; j < fm.diag_gram.size(); ++j) R[j][j] = R[j][j] + reconstruct({{fm.diag_basis[j], fm.diag_gram[j]}}, n);
  std::map<MultiIndex, int, GrlexLess> col;
  std::vector<MultiIndex> cols;
  auto col_of = [&](const MultiIndex& a) {
    auto it = col.find(a);
    if (it != col.end()) return it->second;
    int k = static_cast<int>(cols.size());
    col.emplace(a, k);
    cols.push_back(a);
    return k;
  };
  for (const auto& [a, c] : fm.q.terms())
    if (a.deg >= 2) col_of(a);
  std::vector<Triplet> tr;
  std::vector<double> rhs;
  std::map<std::tuple<int, int, MultiIndex>, int> row;
  auto row_of = [&](int i, int j, const MultiIndex& g) {
    auto key = std::make_tuple(i, j, g);
    auto it = row.find(key);
    if (it != row.end()) return it->second;
    int r = static_cast<int>(rhs.size());
    row.emplace(key, r);
    rhs.push_back(R[i][j].coeff(g));
    return r;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (const auto& [g, c] : R[i][j].terms()) {
        row_of(i, j, g);
        std::vector<int> e = g.e;
        ++e[i];
        ++e[j];
        col_of(MultiIndex(e));
      }
  for (size_t k = 0; k < cols.size(); ++k) {
    const MultiIndex& a = cols[k];
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double fac = (i == j) ? a.e[i] * (a.e[i] - 1) : a.e[i] * a.e[j];
        if (fac != 0) tr.emplace_back(row_of(i, j, minus_units(a, i, j)), static_cast<int>(k), fac);
      }
  }
  SpMat A(static_cast<int>(rhs.size()), static_cast<int>(cols.size()));
  A.setFromTriplets(tr.begin(), tr.end());
  Eigen::Map<const VectorXd> b(rhs.data(), static_cast<int>(rhs.size()));
  SpMat N = A.transpose() * A;
  Eigen::SimplicialLDLT<SpMat> ldlt(N);
  if (ldlt.info() != Eigen::Success) return;
  VectorXd c = ldlt.solve(A.transpose() * b);
  Polynomial q = fm.q;
  for (size_t k = 0; k < cols.size(); ++k) q.set_term(cols[k], c[k]);
  q.prune(0.0);
  FittedModel trial = fm;
  trial.q = q;
  double res = certificate_residual(trial);
  if (res < fm.hessian_residual) {
    fm.q = q;
    fm.hessian_residual = res;
  }
}

}  // namespace

double certificate_residual(const FittedModel& model) {
  int n = model.q.n_vars();
  PolynomialMatrix H = hessian(model.q);
  PolynomialMatrix R = hessian_from_gram(model.lower_gram, model.lower_basis);
  for (size_t j = 0; j < model.diag_gram.size(); ++j) R[j][j] = R[j][j] + reconstruct({{model.diag_basis[j], model.diag_gram[j]}}, n);
  double e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e = std::max(e, (H[i][j] - R[i][j]).max_abs_coeff());
  return e;
}

FittedModel fit(const Dataset& data, const RegressionSpec& spec) {
  data.validate();
  spec.validate();
  auto t0 = std::chrono::steady_clock::now();
  int n = data.n(), m = data.m();
  FittedModel fm;
  fm.spec = spec;
  fm.mu = VectorXd::Zero(n);
  fm.sigma = VectorXd::Ones(n);
  if (spec.standardize) {
    fm.mu = data.X.colwise().mean().transpose();
    for (int j = 0; j < n; ++j) {
      double v = (data.X.col(j).array() - fm.mu[j]).square().sum() / std::max(1, m - 1);
      fm.sigma[j] = v > 1e-24 ? std::sqrt(v) : 1.0;
    }
  }
  MatrixXd Z = data.X;
  for (int j = 0; j < n; ++j) Z.col(j) = (Z.col(j).array() - fm.mu[j]) / fm.sigma[j];

  // Responses are divided by ys so the conic data is O(1); coefficients are scaled back.
  double ys = std::max(1.0, data.y.cwiseAbs().maxCoeff());
  std::vector<MultiIndex> supp = coefficient_support(n, spec);
  ConicModel M;
  std::vector<ConicModel::Var> cv;
  for (size_t k = 0; k < supp.size(); ++k) cv.push_back(M.add_free());
  // Coefficient k is stored as c_k * w_k with w_k the rms of its monomial over the data.
  VectorXd w(supp.size());
  for (size_t k = 0; k < supp.size(); ++k) {
    double ss = 0;
    for (int i = 0; i < m; ++i) ss += std::pow(monomial_value(supp[k], VectorXd(Z.row(i).transpose())), 2);
    w[k] = std::max(1e-3, std::sqrt(ss / m));
  }

  for (int i = 0; i < m; ++i) {
    VectorXd z = Z.row(i).transpose();
    int row = M.add_row(data.y[i] / ys);
    for (size_t k = 0; k < supp.size(); ++k) {
      double v = monomial_value(supp[k], z);
      if (v != 0.0) M.coef(row, cv[k], v / w[k]);
    }
    auto ep = M.add_nonneg(), em = M.add_nonneg();
    M.coef(row, ep, -1.0);
    M.coef(row, em, 1.0);
    M.cost(ep, 1.0);
    M.cost(em, 1.0);
  }

  // Hessian of q minus the certificate blocks vanishes coefficientwise.
  HessRows rows;
  for (size_t k = 0; k < supp.size(); ++k) {
    const MultiIndex& a = supp[k];
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double fac = (i == j) ? a.e[i] * (a.e[i] - 1) : a.e[i] * a.e[j];
        if (fac == 0) continue;
        M.coef(rows.get(M, i, j, minus_units(a, i, j)), cv[k], -fac / w[k]);
      }
  }
  fm.lower_basis = canonical_basis(n, spec.model == RegressionModel::Dense ? spec.d0 - 1 : spec.lower_half_degree() - 1);
  const MonomialBasis& B = fm.lower_basis;
  int s = B.size();
  int bl = M.add_psd(n * s);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) {
          if (i == j && b > a) continue;
          double c = (i == j && a != b) ? 2.0 : 1.0;
          M.coef_psd(rows.get(M, i, j, B[a] + B[b]), bl, i * s + a, j * s + b, c);
        }
  std::vector<int> bj;
  if (spec.model != RegressionModel::Dense && spec.d0 >= 2) {
    for (int j = 0; j < n; ++j) {
      MonomialBasis U = univariate_basis(n, j, spec.d0 - 1);
      fm.diag_basis.push_back(U);
      bj.push_back(M.add_psd(U.size()));
      for (int a = 0; a < U.size(); ++a)
        for (int b = 0; b <= a; ++b) M.coef_psd(rows.get(M, j, j, U[a] + U[b]), bj[j], a, b, a == b ? 1.0 : 2.0);
    }
  }

  ConicProblem P = M.build();
  ConicSolution sol = solve(P, spec.solver);
  fm.status = sol.status;
  fm.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!sol.ok()) throw RegressionFail(std::string("regression solve ended with ") + to_string(sol.status), sol.status);

  fm.q = Polynomial(n);
  for (size_t k = 0; k < supp.size(); ++k) fm.q.set_term(supp[k], ys * M.value(sol.x, cv[k]) / w[k]);
  fm.q.prune(0.0);
  fm.lower_gram = ys * M.block(sol.x, bl);
  fm.min_eig = min_eigenvalue(fm.lower_gram);
  for (size_t j = 0; j < bj.size(); ++j) {
    fm.diag_gram.push_back(ys * M.block(sol.x, bj[j]));
    fm.min_eig = std::min(fm.min_eig, min_eigenvalue(fm.diag_gram.back()));
  }
  fm.hessian_residual = certificate_residual(fm);
  polish_coefficients(fm);
  fm.p = spec.standardize ? unstandardize(fm.q, fm.mu, fm.sigma) : fm.q;
  fm.solver_loss = ys * sol.pobj;
  fm.train_loss = l1_loss(fm.p, data);
  return fm;
}

double SyntheticFamily::operator()(const VectorXd& x) const {
  double s = 0;
  for (int j = 0; j < a.size(); ++j) s += a[j] * std::exp(b[j] * x[j]);
  double quad = x.squaredNorm() + std::pow(a.dot(x), 2);
  return std::log(s) + quad * quad + b.dot(x);
}

SyntheticData gen_synthetic(int n, int m, std::uint64_t seed, int t_test) {
  if (n < 1) throw std::invalid_argument("gen_synthetic: n must be >= 1");
  if (m < 1) throw std::invalid_argument("gen_synthetic: m must be >= 1");
  Rng rng(seed);
  SyntheticData S;
  S.truth.a.resize(n);
  S.truth.b.resize(n);
  do {
    for (int j = 0; j < n; ++j) S.truth.a[j] = rng.uniform(0.0, 2.0);
  } while (S.truth.a.sum() < 1e-12);
  for (int j = 0; j < n; ++j) S.truth.b[j] = rng.uniform(-1.0, 1.0);
  S.train.X.resize(m, n);
  S.train.y.resize(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) S.train.X(i, j) = rng.normal();
  for (int i = 0; i < m; ++i) S.train.y[i] = S.truth(S.train.X.row(i).transpose()) + rng.normal();
  S.test.resize(t_test, n);
  for (int i = 0; i < t_test; ++i)
    for (int j = 0; j < n; ++j) S.test(i, j) = rng.normal();
  return S;
}

Dataset sample_polynomial(const Polynomial& p, int m, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  int n = p.n_vars();
  d.X.resize(m, n);
  d.y.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) d.X(i, j) = rng.normal();
    d.y[i] = evaluate(p, VectorXd(d.X.row(i).transpose()));
  }
  return d;
}

}  // namespace spldsos
