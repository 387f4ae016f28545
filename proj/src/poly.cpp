#include "spldsos/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spldsos {

namespace {
constexpr double kPruneRel = 1e-14;

void check_dims(int a, int b) {
  if (a != b) throw DimensionError("polynomial variable count mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace

MultiIndex::MultiIndex(std::vector<int> exps) : e(std::move(exps)) {
  for (int v : e) {
    if (v < 0) throw std::invalid_argument("negative exponent");
    deg += v;
  }
}

MultiIndex MultiIndex::unit(int n, int i, int power) {
  MultiIndex a(n);
  a.e[i] = power;
  a.deg = power;
  return a;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
  check_dims(size(), o.size());
  MultiIndex r(*this);
  for (int i = 0; i < size(); ++i) r.e[i] += o.e[i];
  r.deg = deg + o.deg;
  return r;
}

std::string MultiIndex::str() const {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < size(); ++i) os << (i ? "," : "") << e[i];
  os << ")";
  return os.str();
}

Polynomial Polynomial::constant(int n, double c) {
  Polynomial p(n);
  if (c != 0.0) p.terms_[MultiIndex(n)] = c;
  return p;
}

Polynomial Polynomial::var(int n, int i) {
  if (i < 0 || i >= n) throw DimensionError("variable index out of range");
  Polynomial p(n);
  p.terms_[MultiIndex::unit(n, i)] = 1.0;
  return p;
}

Polynomial Polynomial::monomial(const MultiIndex& a, double c) {
  Polynomial p(a.size());
  if (c != 0.0) p.terms_[a] = c;
  return p;
}

int Polynomial::degree() const {
  return terms_.empty() ? 0 : terms_.rbegin()->first.deg;
}

double Polynomial::coeff(const MultiIndex& a) const {
  auto it = terms_.find(a);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [a, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

void Polynomial::add_term(const MultiIndex& a, double c) {
  check_dims(n_, a.size());
  terms_[a] += c;
}

void Polynomial::set_term(const MultiIndex& a, double c) {
  check_dims(n_, a.size());
  if (c == 0.0)
    terms_.erase(a);
  else
    terms_[a] = c;
}

void Polynomial::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= tol)
      it = terms_.erase(it);
    else
      ++it;
  }
}

Polynomial Polynomial::operator+(const Polynomial& q) const {
  check_dims(n_, q.n_);
  Polynomial r(*this);
  for (const auto& [a, c] : q.terms_) r.terms_[a] += c;
  r.prune(kPruneRel * std::max(max_abs_coeff(), q.max_abs_coeff()));
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& q) const { return *this + q * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& q) const {
  check_dims(n_, q.n_);
  Polynomial r(n_);
  for (const auto& [a, c] : terms_)
    for (const auto& [b, d] : q.terms_) r.terms_[a + b] += c * d;
  r.prune(kPruneRel * max_abs_coeff() * q.max_abs_coeff());
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(n_);
  if (s == 0.0) return r;
  for (const auto& [a, c] : terms_) r.terms_[a] = c * s;
  return r;
}

bool Polynomial::operator==(const Polynomial& q) const { return n_ == q.n_ && terms_ == q.terms_; }

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(10);
  bool first = true;
  for (const auto& [a, c] : terms_) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    double ac = std::abs(c);
    bool unit = a.deg > 0 && ac == 1.0;
    if (!unit) os << ac;
    for (int i = 0; i < a.size(); ++i) {
      if (a.e[i] == 0) continue;
      if (!unit) os << "*";
      unit = false;
      os << "x" << (i + 1);
      if (a.e[i] > 1) os << "^" << a.e[i];
    }
  }
  return os.str();
}

Polynomial add(const Polynomial& p, const Polynomial& q) { return p + q; }
Polynomial multiply(const Polynomial& p, const Polynomial& q) { return p * q; }

Polynomial power(const Polynomial& p, int k) {
  Polynomial r = Polynomial::constant(p.n_vars(), 1.0);
  for (int i = 0; i < k; ++i) r = r * p;
  return r;
}

namespace {
double ipow(double x, int k) {
  double r = 1.0;
  while (k > 0) {
    if (k & 1) r *= x;
    x *= x;
    k >>= 1;
  }
  return r;
}
}  // namespace

double monomial_value(const MultiIndex& a, const Eigen::VectorXd& x) {
  double v = 1.0;
  for (int i = 0; i < a.size(); ++i)
    if (a.e[i]) v *= ipow(x[i], a.e[i]);
  return v;
}

double evaluate(const Polynomial& p, const Eigen::VectorXd& x) {
  if (x.size() != p.n_vars()) throw DimensionError("evaluation point has wrong length");
  double s = 0.0;
  for (const auto& [a, c] : p.terms()) s += c * monomial_value(a, x);
  return s;
}

Polynomial differentiate(const Polynomial& p, int i) {
  if (i < 0 || i >= p.n_vars()) throw DimensionError("variable index out of range");
  Polynomial r(p.n_vars());
  for (const auto& [a, c] : p.terms()) {
    if (a.e[i] == 0) continue;
    MultiIndex b = a;
    b.e[i] -= 1;
    b.deg -= 1;
    r.add_term(b, c * a.e[i]);
  }
  r.prune();
  return r;
}

Eigen::VectorXd gradient(const Polynomial& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(p.n_vars());
  for (int i = 0; i < p.n_vars(); ++i) g[i] = evaluate(differentiate(p, i), x);
  return g;
}

PolynomialMatrix hessian(const Polynomial& p) {
  int n = p.n_vars();
  PolynomialMatrix H(n, std::vector<Polynomial>(n, Polynomial(n)));
  for (int i = 0; i < n; ++i) {
    Polynomial di = differentiate(p, i);
    for (int j = i; j < n; ++j) {
      H[i][j] = differentiate(di, j);
      H[j][i] = H[i][j];
    }
  }
  return H;
}

Eigen::MatrixXd evaluate(const PolynomialMatrix& H, const Eigen::VectorXd& x) {
  int n = static_cast<int>(H.size());
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = evaluate(H[i][j], x);
  return M;
}

Eigen::VectorXd MonomialBasis::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = monomial_value(entries[i], x);
  return v;
}

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::int64_t basis_size(int n, int d) { return binomial(n + d, d); }

namespace {
void enum_degree(int n, int d, int pos, std::vector<int>& cur, std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[pos] = d;
    out.emplace_back(cur);
    return;
  }
  for (int t = d; t >= 0; --t) {
    cur[pos] = t;
    enum_degree(n, d - t, pos + 1, cur, out);
  }
  cur[pos] = 0;
}
}  // namespace

MonomialBasis canonical_basis(int n, int d) {
  if (n < 1 || d < 0) throw std::invalid_argument("canonical_basis needs n >= 1, d >= 0");
  MonomialBasis B;
  B.n_vars = n;
  B.max_degree = d;
  std::vector<int> cur(n, 0);
  for (int t = 0; t <= d; ++t) enum_degree(n, t, 0, cur, B.entries);
  return B;
}

MonomialBasis univariate_basis(int n, int j, int d) {
  MonomialBasis B;
  B.n_vars = n;
  B.max_degree = d;
  for (int t = 0; t <= d; ++t) B.entries.push_back(MultiIndex::unit(n, j, t));
  return B;
}

std::vector<Polynomial> rescale_constraints(const std::vector<Polynomial>& g, double M) {
  if (!(M > 0.0)) throw std::invalid_argument("rescale factor must be positive");
  std::vector<Polynomial> out;
  out.reserve(g.size());
  for (const auto& p : g) out.push_back(M == 1.0 ? p : p * (1.0 / M));
  return out;
}

nlohmann::json to_json(const Polynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [a, c] : p.terms()) terms.push_back({{"exp", a.e}, {"coef", c}});
  return {{"n", p.n_vars()}, {"terms", terms}};
}

Polynomial poly_from_json(const nlohmann::json& j) {
  int n = j.at("n").get<int>();
  if (n < 1) throw std::invalid_argument("polynomial needs n >= 1");
  Polynomial p(n);
  for (const auto& t : j.at("terms")) {
    MultiIndex a(t.at("exp").get<std::vector<int>>());
    if (a.size() != n) throw DimensionError("exponent length differs from n");
    p.add_term(a, t.at("coef").get<double>());
  }
  p.prune();
  return p;
}

}  // namespace spldsos
