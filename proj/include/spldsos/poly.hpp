#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace spldsos {

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Exponent vector with cached total degree.
struct MultiIndex {
  std::vector<int> e;
  int deg = 0;

  MultiIndex() = default;
  explicit MultiIndex(int n) : e(n, 0) {}
  MultiIndex(std::vector<int> exps);

  int size() const { return static_cast<int>(e.size()); }
  int operator[](int i) const { return e[i]; }
  bool is_zero() const { return deg == 0; }

  static MultiIndex unit(int n, int i, int power = 1);
  MultiIndex operator+(const MultiIndex& o) const;
  bool operator==(const MultiIndex& o) const { return e == o.e; }
  bool operator!=(const MultiIndex& o) const { return e != o.e; }
  std::string str() const;
};

// Graded order: total degree first, then lexicographic with x1 > x2 > ...
struct GrlexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    if (a.deg != b.deg) return a.deg < b.deg;
    return a.e > b.e;
  }
};

inline bool operator<(const MultiIndex& a, const MultiIndex& b) { return GrlexLess()(a, b); }

using TermMap = std::map<MultiIndex, double, GrlexLess>;

class Polynomial {
public:
  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}
  static Polynomial constant(int n, double c);
  static Polynomial var(int n, int i);
  static Polynomial monomial(const MultiIndex& a, double c = 1.0);

  int n_vars() const { return n_; }
  const TermMap& terms() const { return terms_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  double coeff(const MultiIndex& a) const;
  double max_abs_coeff() const;

  // Accumulates without pruning; call prune() when done.
  void add_term(const MultiIndex& a, double c);
  void set_term(const MultiIndex& a, double c);
  void prune(double tol = 0.0);

  Polynomial operator+(const Polynomial& q) const;
  Polynomial operator-(const Polynomial& q) const;
  Polynomial operator*(const Polynomial& q) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return (*this) * -1.0; }
  Polynomial& operator+=(const Polynomial& q) { return *this = *this + q; }

  bool operator==(const Polynomial& q) const;
  std::string str() const;

private:
  int n_ = 0;
  TermMap terms_;
};

using PolynomialMatrix = std::vector<std::vector<Polynomial>>;

Polynomial add(const Polynomial& p, const Polynomial& q);
Polynomial multiply(const Polynomial& p, const Polynomial& q);
Polynomial power(const Polynomial& p, int k);
double evaluate(const Polynomial& p, const Eigen::VectorXd& x);
double monomial_value(const MultiIndex& a, const Eigen::VectorXd& x);
Polynomial differentiate(const Polynomial& p, int i);
Eigen::VectorXd gradient(const Polynomial& p, const Eigen::VectorXd& x);
PolynomialMatrix hessian(const Polynomial& p);
Eigen::MatrixXd evaluate(const PolynomialMatrix& H, const Eigen::VectorXd& x);

struct MonomialBasis {
  int n_vars = 0;
  int max_degree = 0;
  std::vector<MultiIndex> entries;
  int size() const { return static_cast<int>(entries.size()); }
  const MultiIndex& operator[](int i) const { return entries[i]; }
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
};

std::int64_t binomial(int n, int k);
// s(n,d) = binomial(n+d, d)
std::int64_t basis_size(int n, int d);
MonomialBasis canonical_basis(int n, int d);
// [1, x_j, ..., x_j^d]
MonomialBasis univariate_basis(int n, int j, int d);

std::vector<Polynomial> rescale_constraints(const std::vector<Polynomial>& g, double M);

nlohmann::json to_json(const Polynomial& p);
Polynomial poly_from_json(const nlohmann::json& j);

}  // namespace spldsos
