#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spldsos/bsos.hpp"

namespace spldsos {

// min f  s.t.  g_i <= 0,  f = s_0 + p_0,  g_i = s_i + p_i
struct ConvexSpldProblem {
  std::string name;
  int n_vars = 0;
  Polynomial f;
  std::vector<Polynomial> g;
  // user split: separable parts s_0, s_1..s_m (p_i = piece - s_i); empty = auto
  std::vector<Polynomial> separable;
  std::optional<DegreePlan> plan;
  std::optional<Eigen::VectorXd> slater_point;
  double search_radius = 2.0;
  std::uint64_t search_seed = 11;
};

nlohmann::json to_json(const ConvexSpldProblem& p);
ConvexSpldProblem convex_problem_from_json(const nlohmann::json& j);

class SlaterFail : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class NotSosConvex : public std::runtime_error {
public:
  NotSosConvex(const std::string& msg, int piece) : std::runtime_error(msg), piece(piece) {}
  int piece;  // 0 = objective, i = constraint i
};
class DegreeOrderFail : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};
class FeasibilityCheckFail : public std::runtime_error {
public:
  FeasibilityCheckFail(const std::string& msg, double violation, double value_gap)
      : std::runtime_error(msg), violation(violation), value_gap(value_gap) {}
  double violation, value_gap;
};

// Degree plan from the pieces: d_j from separable degrees, r from the rest.
DegreePlan convex_plan(const ConvexSpldProblem& p);

struct ValidationReport {
  Eigen::VectorXd slater_point;
  DegreePlan plan;
  bool user_split = false;
  std::vector<std::string> notes;
};
ValidationReport validate(const ConvexSpldProblem& p);

struct ExactRelaxationResult {
  double value = 0;
  double value_primal = 0, value_dual = 0;
  std::vector<double> lambdas;
  SosCertificate certificate;
  MomentSolution moments;
  std::optional<Eigen::VectorXd> recovered_point;
  SolverStatus status = SolverStatus::NumericalError;
  int max_block = 0;
  double solve_ms = 0;
  nlohmann::json json() const;
};

// Primal SOS program; the conic dual of the same solve is the moment problem.
SosProgram exact_program(const ConvexSpldProblem& p, const DegreePlan& plan);
BuiltProgram build_exact(const ConvexSpldProblem& p);
ExactRelaxationResult solve_exact(const ConvexSpldProblem& p, const SolverSettings& settings = {});
// x = first-order moments; throws FeasibilityCheckFail if the point does not check out.
Eigen::VectorXd recover(const ExactRelaxationResult& r, const ConvexSpldProblem& p);

// Dense alternative with a single sigma of half degree d0.
ExactRelaxationResult solve_dense_sos(const ConvexSpldProblem& p, const SolverSettings& settings = {});

ConvexSpldProblem gen_random_instance(int n, const DegreePlan& plan, std::uint64_t seed);

struct DescentOracleResult {
  double value;
  Eigen::VectorXd point;
};
// Log-barrier Newton from many interior starts.
DescentOracleResult descent_oracle(const ConvexSpldProblem& p, int starts = 100, std::uint64_t seed = 5);

}  // namespace spldsos
