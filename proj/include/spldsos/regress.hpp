#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spldsos/conic.hpp"
#include "spldsos/poly.hpp"

namespace spldsos {

struct Dataset {
  Eigen::MatrixXd X;  // m x n, one point per row
  Eigen::VectorXd y;
  int n() const { return static_cast<int>(X.cols()); }
  int m() const { return static_cast<int>(X.rows()); }
  void validate() const;
  nlohmann::json json() const;
};

Dataset dataset_from_json(const nlohmann::json& j);
// Comma separated, last column is the response, optional non-numeric header line.
Dataset dataset_from_csv(const std::string& text);
std::string dataset_to_csv(const Dataset& d);

enum class RegressionModel { Spld, Spq, Dense };
const char* to_string(RegressionModel m);
RegressionModel regression_model_from_string(const std::string& s);

struct RegressionSpec {
  int d0 = 3;
  int r = 2;  // ignored for Spq (forced to 1) and Dense
  RegressionModel model = RegressionModel::Spld;
  bool standardize = false;
  SolverSettings solver;
  void validate() const;
  int lower_half_degree() const { return model == RegressionModel::Spq ? 1 : r; }
};

struct FittedModel {
  RegressionSpec spec;
  Polynomial p;  // regressor in the original coordinates
  // Certificate for q(z) = p(mu + sigma z); q == p when not standardized.
  Polynomial q;
  Eigen::VectorXd mu, sigma;
  MonomialBasis lower_basis;  // Gram basis of L (or [1] for Q, or [x]_{d0-1} for Dense)
  Eigen::MatrixXd lower_gram;
  std::vector<MonomialBasis> diag_basis;
  std::vector<Eigen::MatrixXd> diag_gram;
  double train_loss = 0;   // recomputed from coefficients
  double solver_loss = 0;  // objective reported by the conic solve
  double hessian_residual = 0;
  double min_eig = 0;
  SolverStatus status = SolverStatus::NumericalError;
  double solve_ms = 0;
  nlohmann::json json() const;
};

class RegressionFail : public std::runtime_error {
public:
  RegressionFail(const std::string& msg, SolverStatus s) : std::runtime_error(msg), status(s) {}
  SolverStatus status;
};

FittedModel fit(const Dataset& data, const RegressionSpec& spec);
double predict(const FittedModel& model, const Eigen::VectorXd& x);
double l1_loss(const Polynomial& p, const Dataset& data);

// Max coefficient gap between the Hessian of q and the certificate blocks.
double certificate_residual(const FittedModel& model);

using TruthFn = std::function<double(const Eigen::VectorXd&)>;

struct Deviation {
  double avg_dev = 0, max_dev = 0;
  nlohmann::json json() const { return {{"avg_dev", avg_dev}, {"max_dev", max_dev}}; }
};
Deviation evaluate(const FittedModel& model, const Eigen::MatrixXd& test_points, const TruthFn& truth);

// f(x) = log(sum a_j exp(b_j x_j)) + (x'(aa' + I)x)^2 + b'x
struct SyntheticFamily {
  Eigen::VectorXd a, b;
  double operator()(const Eigen::VectorXd& x) const;
};

struct SyntheticData {
  SyntheticFamily truth;
  Dataset train;
  Eigen::MatrixXd test;  // t x n, noise free points
};

SyntheticData gen_synthetic(int n, int m, std::uint64_t seed, int t_test = 100);

// Samples y = p(x) with standard normal x and no noise.
Dataset sample_polynomial(const Polynomial& p, int m, std::uint64_t seed);

}  // namespace spldsos
