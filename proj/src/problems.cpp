#include "spldsos/problems.hpp"

#include <cmath>

#include "spldsos/conic.hpp"
#include "spldsos/rng.hpp"

namespace spldsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
Polynomial xpow(int n, int j, int k, double c = 1.0) { return Polynomial::monomial(MultiIndex::unit(n, j, k), c); }
Polynomial cross(int n, int i, int j, double c) { return Polynomial::monomial(MultiIndex::unit(n, i) + MultiIndex::unit(n, j), c); }
}  // namespace

SemialgebraicProblem gen_pnq(int n, int q) {
  if (n < 2 || n % 2 || q < 4 || q % 2) throw std::invalid_argument("gen_pnq needs even n >= 2 and even q >= 4");
  SemialgebraicProblem P;
  P.name = "P_" + std::to_string(n) + "_" + std::to_string(q);
  P.n_vars = n;
  P.f0 = Polynomial(n);
  for (int j = 0; j < n; ++j) P.f0 += xpow(n, j, q, j % 2 ? -1.0 : 1.0);
  P.f0 += xpow(n, 0, 1) - xpow(n, 1, 1);
  // a x_odd^da + b x_even^db + c x_odd x_even summed over pairs
  auto pairsum = [&](double a, int da, double b, int db, double c) {
    Polynomial f(n);
    for (int p = 0; p < n / 2; ++p) f += xpow(n, 2 * p, da, a) + xpow(n, 2 * p + 1, db, b) + cross(n, 2 * p, 2 * p + 1, c);
    return f;
  };
  P.constraints = {pairsum(2, q, 3, 2, 2), pairsum(3, 2, 2, 2, -4), pairsum(1, 2, 6, 2, -4), pairsum(1, 2, 4, q, -3),
                   pairsum(2, 2, 5, 2, 3)};
  for (int j = 0; j < n; ++j) P.constraints.push_back(Polynomial::var(n, j));
  return P;
}

SemialgebraicProblem gen_spm(int N) {
  if (N < 8 || N % 2) throw std::invalid_argument("gen_spm needs even N >= 8");
  SemialgebraicProblem P;
  P.name = "SPM_" + std::to_string(N);
  P.n_vars = 2;
  P.f0 = xpow(2, 0, N) + xpow(2, 1, N) + Polynomial::monomial(MultiIndex({4, 2})) + Polynomial::monomial(MultiIndex({2, 4})) +
         Polynomial::monomial(MultiIndex({2, 2}), -3.0);
  P.constraints = {xpow(2, 0, 2) + xpow(2, 1, 2), Polynomial::var(2, 0), Polynomial::var(2, 1)};
  return P;
}

void PortfolioSpec::validate() const {
  if (n < 2) throw std::invalid_argument("portfolio: n >= 2");
  if (T < n + 1) throw std::invalid_argument("portfolio: T >= n+1");
  if (!(theta > 0 && theta < 1)) throw std::invalid_argument("portfolio: theta in (0,1)");
  if (p < 2) throw std::invalid_argument("portfolio: p >= 2");
  if (lambda < 0 || eta < 0) throw std::invalid_argument("portfolio: lambda, eta >= 0");
}

std::pair<PortfolioData, SemialgebraicProblem> gen_portfolio(const PortfolioSpec& spec) {
  spec.validate();
  const int n = spec.n, T = spec.T;
  PortfolioData D;
  Rng rng(spec.seed);
  D.R.resize(T, n);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n; ++j) D.R(t, j) = 0.001 * rng.normal();
  D.mu = D.R.colwise().mean().transpose();
  MatrixXd X = D.R.rowwise() - D.mu.transpose();
  D.S = X.transpose() * X / double(T - 1);
  VectorXd s = D.S.diagonal().cwiseSqrt();
  D.C = s.cwiseInverse().asDiagonal() * D.S * s.cwiseInverse().asDiagonal();
  double off = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) off += D.C(i, j);
  D.r_bar = off / (n * (n - 1.0));
  D.T0 = D.r_bar * s * s.transpose();
  for (int i = 0; i < n; ++i) D.T0(i, i) = D.S(i, i);
  D.d2 = (D.S - D.T0).squaredNorm();
  D.b2 = 0;
  for (int t = 0; t < T; ++t) D.b2 += (X.row(t).transpose() * X.row(t) - D.S).squaredNorm();
  D.b2 /= double(T) * T;
  if (D.d2 == 0.0) {
    D.alpha_star = 1.0;
    D.degenerate = true;
  } else {
    D.alpha_star = std::max(0.0, std::min(1.0, D.b2 / D.d2));
  }
  D.Sigma0 = (1 - D.alpha_star) * D.S + D.alpha_star * D.T0;
  auto [ev, V] = symmetric_eigen(D.Sigma0);
  double lmax = ev.maxCoeff(), lmin = ev.minCoeff();
  D.tau = lmin + spec.theta * (lmax - lmin);
  MatrixXd Q0 = D.Sigma0 - D.tau * MatrixXd::Identity(n, n);
  auto [ev0, V0] = symmetric_eigen(Q0);
  D.Q = Q0 / ev0.cwiseAbs().maxCoeff();

  SemialgebraicProblem P;
  P.name = "portfolio_n" + std::to_string(n) + "_s" + std::to_string(spec.seed);
  P.n_vars = n;
  P.f0 = Polynomial(n);
  for (int i = 0; i < n; ++i) {
    P.f0 += xpow(n, i, 2 * spec.p, spec.lambda);
    // eta (x_i^2 - 1/n)^2
    P.f0 += xpow(n, i, 4, spec.eta) + xpow(n, i, 2, -2.0 * spec.eta / n) + Polynomial::constant(n, spec.eta / (double(n) * n));
    P.f0 += xpow(n, i, 1, -D.mu[i]);
    for (int j = 0; j < n; ++j) {
      if (i == j)
        P.f0 += xpow(n, i, 2, D.Q(i, i));
      else
        P.f0 += cross(n, i, j, D.Q(i, j));
    }
  }
  P.f0.prune();
  for (int j = 0; j < n; ++j) P.constraints.push_back(Polynomial::var(n, j));
  Polynomial sum(n);
  for (int j = 0; j < n; ++j) sum += Polynomial::var(n, j);
  P.constraints.push_back(sum);
  P.constraints.push_back(Polynomial::constant(n, 2.0) - sum);
  return {D, P};
}

PortfolioStats portfolio_stats(const VectorXd& x, const PortfolioData& D) {
  if (x.size() != D.mu.size()) throw DimensionError("portfolio_stats: length mismatch");
  PortfolioStats st;
  st.mean_return = D.mu.dot(x);
  st.variance = x.dot(D.Sigma0 * x);
  st.risk = x.dot(D.Q * x);
  st.n_eff = 1.0 / x.squaredNorm();
  st.max_weight = x.maxCoeff();
  for (int i = 0; i < x.size(); ++i) {
    st.count_ge_5pct += x[i] >= 0.05;
    st.count_ge_1pct += x[i] >= 0.01;
  }
  return st;
}

namespace {
nlohmann::json mat_json(const MatrixXd& M) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < M.rows(); ++i) {
    std::vector<double> row(M.cols());
    for (int j = 0; j < M.cols(); ++j) row[j] = M(i, j);
    a.push_back(row);
  }
  return a;
}
}  // namespace

nlohmann::json PortfolioData::json() const {
  return {{"mu", std::vector<double>(mu.data(), mu.data() + mu.size())},
          {"S", mat_json(S)},
          {"Sigma0", mat_json(Sigma0)},
          {"Q", mat_json(Q)},
          {"r_bar", r_bar},
          {"d2", d2},
          {"b2", b2},
          {"alpha_star", alpha_star},
          {"alpha_degenerate", degenerate},
          {"tau", tau}};
}

nlohmann::json PortfolioStats::json() const {
  return {{"mean_return", mean_return}, {"variance", variance},   {"risk", risk},
          {"n_eff", n_eff},             {"max_weight", max_weight}, {"count_ge_5pct", count_ge_5pct},
          {"count_ge_1pct", count_ge_1pct}};
}

SemialgebraicProblem gen_random_spld(int n, int sep_degree, int lower_degree, std::uint64_t seed) {
  if (sep_degree <= lower_degree || lower_degree < 1) throw std::invalid_argument("gen_random_spld: need sep_degree > lower_degree >= 1");
  Rng rng(seed);
  SemialgebraicProblem P;
  P.name = "random_spld_" + std::to_string(seed);
  P.n_vars = n;
  P.f0 = Polynomial(n);
  for (int j = 0; j < n; ++j) {
    P.f0 += xpow(n, j, sep_degree, rng.uniform(0.5, 1.5));
    for (int k = 1; k < sep_degree; ++k)
      if (rng.uniform() < 0.4) P.f0 += xpow(n, j, k, rng.uniform(-1, 1));
  }
  // lower part: random mixed monomials up to lower_degree
  for (const auto& a : canonical_basis(n, lower_degree).entries) {
    int nz = 0;
    for (int v : a.e) nz += v > 0;
    if (nz >= 2 && rng.uniform() < 0.5) P.f0 += Polynomial::monomial(a, rng.uniform(-1, 1));
  }
  P.f0.prune();
  Polynomial ball(n);
  for (int j = 0; j < n; ++j) ball += xpow(n, j, 2, 1.0 / n);
  P.constraints.push_back(ball);
  for (int j = 0; j < n; ++j) P.constraints.push_back(Polynomial::var(n, j));
  return P;
}

}  // namespace spldsos
