#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace spldsos {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

// Variables are laid out free | nonnegative | psd blocks (svec, column-wise lower triangle).
struct ConeSpec {
  int free_dim = 0;
  int nonneg_dim = 0;
  std::vector<int> psd;

  int dim() const;
  int degree() const;  // barrier parameter nu
  int psd_offset(int k) const;
  int max_block() const;
};

inline int svec_len(int n) { return n * (n + 1) / 2; }
// Position of (i, j), i >= j, inside svec of an n x n matrix.
inline int svec_index(int n, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * n - j * (j - 1) / 2 + (i - j);
}

// min c'x  s.t.  A x = b,  x in K
struct ConicProblem {
  Eigen::VectorXd c;
  SpMat A;
  Eigen::VectorXd b;
  ConeSpec cones;
};

enum class SolverStatus { Optimal, NearOptimal, PrimalInfeasible, DualInfeasible, IterLimit, NumericalError };
std::string to_string(SolverStatus s);

struct SolverSettings {
  double tol_gap = 1e-8;
  double tol_feas = 1e-8;
  double tol_near = 1e-5;
  double tol_infeas = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

struct ConicSolution {
  Eigen::VectorXd x, y, s;
  SolverStatus status = SolverStatus::NumericalError;
  double pobj = 0, dobj = 0;
  double gap = 0, primal_res = 0, dual_res = 0;
  int iterations = 0;
  bool ok() const { return status == SolverStatus::Optimal || status == SolverStatus::NearOptimal; }
};

ConicSolution solve(const ConicProblem& p, const SolverSettings& settings = {});

// Checks c'x, primal/dual residuals and cone membership of a candidate pair.
struct PairCheck {
  double primal_res, dual_res, gap, x_min_eig, s_min_eig;
};
PairCheck check_pair(const ConicProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& s);

// Verifies a primal infeasibility ray: A'y + s = 0, s in K*, b'y > 0.
bool verify_primal_infeasible(const ConicProblem& p, const Eigen::VectorXd& y, const Eigen::VectorXd& s, double tol = 1e-6);
// Verifies a dual infeasibility ray: A x = 0, x in K, c'x < 0.
bool verify_dual_infeasible(const ConicProblem& p, const Eigen::VectorXd& x, double tol = 1e-6);

Eigen::VectorXd svec(const Eigen::MatrixXd& M);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int offset, int n);

// Eigenvalues sorted descending with matching eigenvector columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> symmetric_eigen(const Eigen::MatrixXd& M);
double min_eigenvalue(const Eigen::MatrixXd& M);

// Plain text listing of cones, A triplets, b and c.
void dump(const ConicProblem& p, std::ostream& os);

}  // namespace spldsos
