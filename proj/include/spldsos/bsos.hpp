#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spldsos/conic.hpp"
#include "spldsos/gram.hpp"
#include "spldsos/model.hpp"
#include "spldsos/spld.hpp"

namespace spldsos {

// Exponents (p, q) of h = prod f_i^{p_i} (1 - f_i)^{q_i}.
struct PQ {
  std::vector<int> p, q;
  int order() const;
  bool operator<(const PQ& o) const { return std::tie(p, q) < std::tie(o.p, o.q); }
  bool operator==(const PQ& o) const { return p == o.p && q == o.q; }
  std::string str() const;
};

std::map<PQ, Polynomial> krivine_products(const std::vector<Polynomial>& constraints, int k);

int compute_d_max(const SemialgebraicProblem& problem, int k);

enum class RelaxMode { Spld, Bsos };

struct RelaxConfig {
  RelaxMode mode = RelaxMode::Spld;
  DegreePlan plan;  // Spld mode
  int bsos_d = 0;   // Bsos mode
  SolverSettings solver;
};

// Nonnegative multiplier polynomials h_t paired with one SOS program:
// max mu s.t. f0 - sum c_t h_t - mu = sum_blocks <B, X_b>, c >= 0, X_b psd.
struct SosProgram {
  int n = 0;
  Polynomial f0;
  std::vector<Polynomial> h;
  std::vector<MonomialBasis> blocks;
};

struct BuiltProgram {
  ConicModel model;
  ConicProblem problem;
  std::map<MultiIndex, int, GrlexLess> rows;  // alpha != 0
  std::vector<ConicModel::Var> mult;
  std::vector<int> blk;
  std::vector<MonomialBasis> blocks;
  double f0_const = 0;
  std::optional<ConicModel::Var> margin;
  int max_block() const;
};

// Primal point whose identity holds to rounding and whose cones are verified.
// If the solver point does not survive projection, mu is backed off and a
// max-margin point is projected instead.
struct CertifiedPrimal {
  Eigen::VectorXd x;
  double mu = 0;
  double backoff = 0;
  double min_eig = 0, min_mult = 0;
  bool valid = false;
};
CertifiedPrimal certify_primal(const SosProgram& prog, const BuiltProgram& P, const ConicSolution& sol, const SolverSettings& settings);

// mu is eliminated through the constant monomial, so the program has no free variables.
// With margin_mu set, mu is fixed and the program maximizes t with c >= t, X >= t I.
BuiltProgram build_sos_program(const SosProgram& prog, std::optional<double> margin_mu = std::nullopt);
double program_value_primal(const BuiltProgram& b, const ConicSolution& s);
double program_value_dual(const BuiltProgram& b, const ConicSolution& s);
MomentSolution program_moments(const BuiltProgram& b, const ConicSolution& s);

// Multivariate block plus univariate blocks; drop univariate rows whose squares
// can never be matched (exact reduction, used for the SOS side).
std::vector<MonomialBasis> spld_blocks(int n, const DegreePlan& plan);
std::vector<MonomialBasis> reduce_univariate_blocks(const std::vector<MonomialBasis>& blocks, const Polynomial& f0,
                                                    const std::vector<Polynomial>& h);

// One round of partial facial reduction with a diagonal dual cone: an LP finds
// y >= 0 on Gram diagonals, zero on rows reached off the diagonal, with
// y'f0 = 0 and A'y >= 0 on multipliers. Coordinates where A'y > 0 vanish on
// every feasible point.
struct FacialStep {
  std::vector<int> zero_mult;
  std::vector<std::pair<int, int>> zero_basis;  // (block, basis index)
};
FacialStep facial_reduction_step(const SosProgram& prog, const SolverSettings& settings = {});
// Univariate and multiplier reductions, repeated until stable. kept maps new
// multiplier indices to old ones.
SosProgram reduce_sos_program(const SosProgram& prog, const SolverSettings& settings = {}, std::vector<int>* kept = nullptr);

struct RelaxationProgram {
  SosProgram prog;
  std::vector<PQ> labels;
  std::vector<double> h_scale;  // h_t = scale_t * normalized_t
  int max_ms = 0;
};

RelaxationProgram relaxation_program(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg);
BuiltProgram build_primal(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg);
BuiltProgram build_moment_dual(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg);

struct CertificateReport {
  int s_bar = 0, l_bar = 0;
  std::vector<int> univariate_ranks;
  int multivariate_rank = 0;
  int max_rnk = 0;
  std::optional<Eigen::VectorXd> extracted_point;
  bool point_feasible = false;
  double point_value = 0;
  double max_violation = 0;
};

struct RelaxationResult {
  int k = 0;
  double value = 0;  // reported relaxation value (moment side)
  double value_primal = 0;
  double value_dual = 0;
  std::map<PQ, double> multipliers;
  SosCertificate certificate;
  double identity_residual = 0;
  double raw_value_primal = 0;  // solver value before certification
  double certificate_min_eig = 0;
  double certificate_backoff = 0;
  bool certificate_psd = false;
  MomentSolution moments;
  SolverStatus primal_status = SolverStatus::NumericalError;
  SolverStatus dual_status = SolverStatus::NumericalError;
  int max_ms = 0, num_products = 0, rows = 0;
  double build_ms = 0, solve_ms = 0;
  CertificateReport cert;
  std::optional<double> oracle;
  bool sandwich_ok = true;
  nlohmann::json json() const;
};

RelaxationResult solve_order(const SemialgebraicProblem& problem, int k, const RelaxConfig& cfg,
                             std::optional<double> oracle = std::nullopt);

// f0 - sum c h - mu - sigma - sum sigma_j, coefficient inf-norm.
double identity_residual(const SemialgebraicProblem& problem, const RelaxationResult& r, int k);

CertificateReport rank_certificate(const MomentSolution& y, const SemialgebraicProblem& problem, double ratio = 1e4);

std::vector<RelaxationResult> ladder(const SemialgebraicProblem& problem, int k_max, const RelaxConfig& cfg,
                                     bool stop_on_rank1 = true);

struct OracleSettings {
  int grid_per_dim = 400;
  int starts = 200;
  unsigned long long seed = 7;
  double feas_tol = 1e-9;
};

struct OracleResult {
  double value;
  Eigen::VectorXd point;
};

// Upper bound on the global minimum from feasible points: grid (n <= 3) or multistart descent.
OracleResult upper_bound_oracle(const SemialgebraicProblem& problem, const OracleSettings& st = {});
double max_violation(const SemialgebraicProblem& problem, const Eigen::VectorXd& x);

}  // namespace spldsos
