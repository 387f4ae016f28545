#pragma once

#include <cstdint>
#include <utility>

#include "spldsos/spld.hpp"

namespace spldsos {

SemialgebraicProblem gen_pnq(int n, int q);
SemialgebraicProblem gen_spm(int N);

struct PortfolioSpec {
  int n = 6;
  int T = 300;
  double lambda = 0.02;
  double eta = 0.25;
  int p = 4;
  double theta = 0.2;
  std::uint64_t seed = 1;
  void validate() const;
};

struct PortfolioData {
  Eigen::MatrixXd R;
  Eigen::VectorXd mu;
  Eigen::MatrixXd S, C;
  double r_bar = 0;
  Eigen::MatrixXd T0;
  double d2 = 0, b2 = 0;
  double alpha_star = 0;
  bool degenerate = false;  // d2 == 0, alpha forced to 1
  Eigen::MatrixXd Sigma0;
  double tau = 0;
  Eigen::MatrixXd Q;
  nlohmann::json json() const;
};

struct PortfolioStats {
  double mean_return = 0, variance = 0, risk = 0, n_eff = 0, max_weight = 0;
  int count_ge_5pct = 0, count_ge_1pct = 0;
  nlohmann::json json() const;
};

std::pair<PortfolioData, SemialgebraicProblem> gen_portfolio(const PortfolioSpec& spec);
PortfolioStats portfolio_stats(const Eigen::VectorXd& x, const PortfolioData& data);

// Random SPLD instance on [0,1]^n with a ball constraint; used for property tests.
SemialgebraicProblem gen_random_spld(int n, int sep_degree, int lower_degree, std::uint64_t seed);

}  // namespace spldsos
