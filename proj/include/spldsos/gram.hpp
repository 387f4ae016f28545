#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "spldsos/conic.hpp"
#include "spldsos/poly.hpp"
#include "spldsos/spld.hpp"

namespace spldsos {

// B_alpha as lists of (row, col) positions with row >= col.
struct CoeffMatrixFamily {
  MonomialBasis basis;
  std::map<MultiIndex, std::vector<std::pair<int, int>>, GrlexLess> table;
  Eigen::MatrixXd dense(const MultiIndex& a) const;
};

CoeffMatrixFamily coeff_matrices(const MonomialBasis& basis);

struct MomentSolution {
  std::map<MultiIndex, double, GrlexLess> values;
  int d_max = 0;
  double at(const MultiIndex& a) const;
  bool has(const MultiIndex& a) const { return values.count(a) > 0; }
  Eigen::VectorXd first_order(int n) const;
  static MomentSolution point_mass(const Eigen::VectorXd& x, int max_degree);
};

Eigen::MatrixXd moment_matrix(const MomentSolution& y, const MonomialBasis& basis);

// Numerical rank: #{i : lambda_1 / lambda_i < ratio}.
int numerical_rank(const Eigen::MatrixXd& M, double ratio = 1e4);

struct SosCertificate {
  std::vector<std::pair<MonomialBasis, Eigen::MatrixXd>> blocks;
  Polynomial reconstructed;
  nlohmann::json json() const;
};

Polynomial reconstruct(const std::vector<std::pair<MonomialBasis, Eigen::MatrixXd>>& blocks, int n);
Polynomial reconstruct(const SosCertificate& cert);

enum class CheckStatus { Feasible, Infeasible, Unknown };
const char* to_string(CheckStatus s);

struct SosCheckResult {
  CheckStatus status = CheckStatus::Unknown;
  SosCertificate cert;
  SolverStatus solver = SolverStatus::NumericalError;
};

bool gram_acceptable(const Eigen::MatrixXd& Q);

SosCheckResult sos_check(const Polynomial& p, const MonomialBasis& basis);

// Hessian Gram form H(x) = (I (x) [x]_{d-1})' Q (I (x) [x]_{d-1}).
SosCheckResult sos_convexity_check(const Polynomial& p);

struct StructuredHessianResult {
  CheckStatus status = CheckStatus::Unknown;
  Eigen::MatrixXd Q0;
  std::vector<Eigen::MatrixXd> Qj;
  MonomialBasis basis0;
  std::vector<MonomialBasis> basis_j;
  double residual = 0;
};

// H(x) = (I (x) [x]_{r-1})' Q0 (I (x) [x]_{r-1}) + sum_j e_j e_j' [x_j]_{d_j-1}' Q_j [x_j]_{d_j-1}
StructuredHessianResult structured_hessian_check(const Polynomial& p, const DegreePlan& plan);

// Reconstruct the Hessian implied by a Gram of the form (I (x) basis)' Q (I (x) basis).
PolynomialMatrix hessian_from_gram(const Eigen::MatrixXd& Q, const MonomialBasis& basis);

MonomialBasis newton_halfpolytope_basis(const Polynomial& p);
bool in_convex_hull(const std::vector<MultiIndex>& pts, const std::vector<double>& target);

}  // namespace spldsos
