#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spldsos/poly.hpp"

namespace spldsos {

// Objective f0 and constraints 0 <= f_i <= 1.
struct SemialgebraicProblem {
  std::string name;
  int n_vars = 0;
  Polynomial f0;
  std::vector<Polynomial> constraints;
};

nlohmann::json to_json(const SemialgebraicProblem& p);
SemialgebraicProblem problem_from_json(const nlohmann::json& j);

class NotSpld : public std::runtime_error {
public:
  NotSpld(const std::string& msg, MultiIndex offending) : std::runtime_error(msg), offending(std::move(offending)) {}
  MultiIndex offending;
};

class ConstantInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct SpldDecomposition {
  std::vector<Polynomial> separable;  // u^j, only x_j, degree >= 1
  Polynomial lower;
  double constant = 0.0;

  int separable_degree() const;
  int separable_degree(int j) const;
  Polynomial reassemble() const;
};

SpldDecomposition decompose(const Polynomial& p);
// Same split without the degree check; constraints such as 3x1^2 - 4x1x2 + 2x2^2 are allowed.
SpldDecomposition split_separable(const Polynomial& p);
bool is_spld(const Polynomial& p);

struct DegreePlan {
  std::vector<int> d;
  int r = 1;
  int d0() const;
  nlohmann::json json() const { return {{"d", d}, {"r", r}}; }
};

enum class PlanMode { ExactRule, UserOverride };

// Rule: if s(n,r) >= separable degree of x_j then d_j + 1 = s(n,r),
// otherwise d_j is the smallest integer with 2 d_j >= that degree.
DegreePlan plan_degrees(const SemialgebraicProblem& problem, int r, PlanMode mode = PlanMode::ExactRule,
                        const std::vector<int>& override_d = {});

// Smallest r covering every lower part.
int min_lower_half_degree(const SemialgebraicProblem& problem);

}  // namespace spldsos
