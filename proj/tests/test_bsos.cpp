#include <doctest.h>

#include "spldsos/bsos.hpp"
#include "spldsos/problems.hpp"
#include "util.hpp"

using namespace spldsos;
using namespace tu;
using Eigen::VectorXd;

namespace {

// min (x1-0.3)^2 + (x2-0.6)^2 + x1^4 on the box, written with f_i = x_i
SemialgebraicProblem box_problem() {
  SemialgebraicProblem P;
  P.name = "box";
  P.n_vars = 2;
  P.f0 = (X(2, 0) - C(2, 0.3)) * (X(2, 0) - C(2, 0.3)) + (X(2, 1) - C(2, 0.6)) * (X(2, 1) - C(2, 0.6)) + mono({4, 0});
  P.constraints = {X(2, 0), X(2, 1)};
  return P;
}

RelaxConfig spld_cfg(const SemialgebraicProblem& P, int r) {
  RelaxConfig cfg;
  cfg.plan = plan_degrees(P, r);
  return cfg;
}

}  // namespace

TEST_CASE("krivine products") {
  Rng rng(4);
  std::vector<Polynomial> f = {X(2, 0), mono({0, 2}) + mono({1, 1}, 0.5)};
  for (int k = 1; k <= 3; ++k) {
    auto H = krivine_products(f, k);
    int m = 2, expect = 1;
    for (int t = 1; t <= k; ++t) expect = expect * (2 * m + t) / t;
    CHECK(static_cast<int>(H.size()) == expect);
    for (int t = 0; t < 5; ++t) {
      VectorXd x = random_point(2, rng);
      for (const auto& [pq, h] : H) {
        CHECK(pq.order() <= k);
        double v = 1;
        for (int i = 0; i < m; ++i) {
          double fi = evaluate(f[i], x);
          v *= std::pow(fi, pq.p[i]) * std::pow(1 - fi, pq.q[i]);
        }
        CHECK(std::abs(evaluate(h, x) - v) <= 1e-9 * (1 + std::abs(v)));
      }
    }
  }
  CHECK_THROWS(krivine_products(f, 0));
}

TEST_CASE("krivine products are nonnegative on the feasible set") {
  SemialgebraicProblem P = gen_random_spld(3, 4, 2, 9);
  Rng rng(10);
  auto H = krivine_products(P.constraints, 2);
  int tested = 0;
  for (int t = 0; t < 400 && tested < 40; ++t) {
    VectorXd x(3);
    for (int i = 0; i < 3; ++i) x(i) = rng.uniform(0, 1);
    if (max_violation(P, x) > 0) continue;
    ++tested;
    for (const auto& [pq, h] : H) CHECK(evaluate(h, x) >= -1e-12);
  }
  CHECK(tested > 0);
}

TEST_CASE("d_max") {
  SemialgebraicProblem P = box_problem();
  CHECK(compute_d_max(P, 1) == 2);
  CHECK(compute_d_max(P, 4) == 2);
  CHECK(compute_d_max(P, 5) == 3);
  P.constraints = {mono({2, 0}), mono({0, 2})};
  CHECK(compute_d_max(P, 3) == 3);
}

TEST_CASE("box problem is solved exactly") {
  SemialgebraicProblem P = box_problem();
  OracleResult o = upper_bound_oracle(P);
  CHECK(max_violation(P, o.point) <= 1e-9);
  // r = 1 is already exact, but the quartic x2 moment is left free so rank can exceed one
  for (const auto& r : ladder(P, 2, spld_cfg(P, 1), false)) CHECK(std::abs(r.value - o.value) <= 1e-4);
  auto res = ladder(P, 3, spld_cfg(P, 2));
  REQUIRE(!res.empty());
  const auto& last = res.back();
  CHECK(last.value <= o.value + 1e-6);
  CHECK(std::abs(last.value - o.value) <= 1e-4);
  CHECK(last.cert.max_rnk == 1);
  REQUIRE(last.cert.extracted_point);
  CHECK(last.cert.point_feasible);
  CHECK((*last.cert.extracted_point - o.point).norm() <= 1e-3);
}

TEST_CASE("ladder is monotone and below the oracle") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SemialgebraicProblem P = gen_random_spld(2, 4, 2, seed);
    double ub = upper_bound_oracle(P).value;
    for (RelaxMode mode : {RelaxMode::Spld, RelaxMode::Bsos}) {
      RelaxConfig cfg = spld_cfg(P, 1);
      if (mode == RelaxMode::Bsos) {
        cfg.mode = mode;
        cfg.bsos_d = 2;
      }
      auto res = ladder(P, 3, cfg, false);
      REQUIRE(res.size() == 3);
      for (size_t i = 0; i < res.size(); ++i) {
        CHECK(is_solved(res[i].dual_status));
        CHECK(res[i].value <= ub + 1e-6 * (1 + std::abs(ub)));
        if (i > 0) CHECK(res[i].value >= res[i - 1].value - 1e-6 * (1 + std::abs(res[i].value)));
      }
    }
  }
}

TEST_CASE("certificate identity holds") {
  SemialgebraicProblem P = gen_random_spld(2, 4, 2, 5);
  RelaxConfig cfg = spld_cfg(P, 1);
  for (int k = 1; k <= 2; ++k) {
    RelaxationResult r = solve_order(P, k, cfg);
    REQUIRE(is_solved(r.primal_status));
    CHECK(r.certificate_psd);
    CHECK(identity_residual(P, r, k) <= 1e-6);
    for (const auto& [pq, c] : r.multipliers) CHECK(c >= 0);
    // lower bound from the certificate is not above the moment value
    CHECK(r.value_primal <= r.value + 1e-6 * (1 + std::abs(r.value)));
  }
}

TEST_CASE("rank certificate on point masses") {
  SemialgebraicProblem P = box_problem();
  VectorXd x(2);
  x << 0.25, 0.5;
  CertificateReport c = rank_certificate(MomentSolution::point_mass(x, 8), P);
  CHECK(c.max_rnk == 1);
  REQUIRE(c.extracted_point);
  CHECK((*c.extracted_point - x).norm() <= 1e-9);
  CHECK(c.point_feasible);
  CHECK(std::abs(c.point_value - evaluate(P.f0, x)) <= 1e-12);

  VectorXd z(2);
  z << 0.75, 0.1;
  MomentSolution a = MomentSolution::point_mass(x, 8), b = MomentSolution::point_mass(z, 8);
  for (auto& [k, v] : a.values) v = 0.5 * (v + b.at(k));
  CHECK(rank_certificate(a, P).max_rnk >= 2);
}

TEST_CASE("oracle finds feasible points") {
  SemialgebraicProblem P = gen_random_spld(3, 4, 2, 12);
  OracleSettings st;
  st.starts = 50;
  OracleResult o = upper_bound_oracle(P, st);
  CHECK(max_violation(P, o.point) <= st.feas_tol);
  CHECK(std::abs(evaluate(P.f0, o.point) - o.value) <= 1e-9 * (1 + std::abs(o.value)));
}

TEST_CASE("relaxation result json") {
  SemialgebraicProblem P = box_problem();
  RelaxationResult r = solve_order(P, 1, spld_cfg(P, 1));
  nlohmann::json j = r.json();
  CHECK(j.contains("value"));
  CHECK(j["k"] == 1);
}
