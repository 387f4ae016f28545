#include <doctest.h>

#include <sstream>

#include "conic_gen.hpp"
#include "spldsos/model.hpp"

using namespace spldsos;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("lp: min x, x - t = 1") {
  ConicModel M;
  auto x = M.add_nonneg(), t = M.add_nonneg();
  int r = M.add_row(1.0);
  M.coef(r, x, 1.0);
  M.coef(r, t, -1.0);
  M.cost(x, 1.0);
  ConicProblem P = M.build();
  ConicSolution s = solve(P);
  REQUIRE(s.status == SolverStatus::Optimal);
  CHECK(M.value(s.x, x) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s.pobj == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("sdp: min X11, X11 + X22 = 1") {
  ConicModel M;
  int b = M.add_psd(2);
  int r = M.add_row(1.0);
  M.coef_psd(r, b, 0, 0, 1.0);
  M.coef_psd(r, b, 1, 1, 1.0);
  M.cost_psd(b, 0, 0, 1.0);
  ConicSolution s = solve(M.build());
  REQUIRE(s.status == SolverStatus::Optimal);
  CHECK(std::abs(s.pobj) < 1e-7);
  MatrixXd X = M.block(s.x, b);
  CHECK(X(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("constructed optimal pairs are recovered") {
  Rng rng(101);
  for (int t = 0; t < 15; ++t) {
    auto o = tu::known_optimum(rng.below(3), 1 + rng.below(5), {2 + rng.below(4), 1 + rng.below(3)}, 4 + rng.below(6), rng);
    ConicSolution s = solve(o.p);
    REQUIRE(s.ok());
    CHECK(std::abs(s.pobj - o.value) <= 1e-6 * (1 + std::abs(o.value)));
    CHECK(s.pobj >= s.dobj - 1e-7 * (1 + std::abs(s.pobj)));
  }
}

TEST_CASE("infeasibility certificates verify") {
  Rng rng(202);
  for (int t = 0; t < 5; ++t) {
    ConicProblem p = tu::primal_infeasible(3, {3}, 4, rng);
    ConicSolution s = solve(p);
    REQUIRE(s.status == SolverStatus::PrimalInfeasible);
    CHECK(verify_primal_infeasible(p, s.y, s.s));
    ConicProblem q = tu::dual_infeasible(3, {3}, 4, rng);
    ConicSolution u = solve(q);
    REQUIRE(u.status == SolverStatus::DualInfeasible);
    CHECK(verify_dual_infeasible(q, u.x));
  }
}

TEST_CASE("solver is deterministic") {
  Rng rng(7);
  auto o = tu::known_optimum(1, 3, {4, 3}, 6, rng);
  ConicSolution a = solve(o.p), b = solve(o.p);
  CHECK(a.status == b.status);
  CHECK(a.pobj == b.pobj);
  CHECK(a.iterations == b.iterations);
  CHECK(a.x == b.x);
}

TEST_CASE("svec and smat") {
  VectorXd v = svec(MatrixXd::Identity(2, 2));
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 1.0);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    int n = 1 + rng.below(6);
    MatrixXd A(n, n), B(n, n);
    for (int i = 0; i < n * n; ++i) A(i) = rng.normal(), B(i) = rng.normal();
    A = (A + A.transpose()).eval();
    B = (B + B.transpose()).eval();
    double tr = (A * B).trace();
    CHECK(std::abs(svec(A).dot(svec(B)) - tr) <= 1e-12 * (1 + std::abs(tr)));
    CHECK((smat(svec(A)) - A).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("symmetric eigen") {
  auto [w, V] = symmetric_eigen(Eigen::Vector2d(1, 3).asDiagonal().toDenseMatrix());
  CHECK(w[0] == doctest::Approx(3));
  CHECK(w[1] == doctest::Approx(1));
  VectorXd u(3);
  u << 1, 2, 2;
  auto [w1, V1] = symmetric_eigen(u * u.transpose());
  CHECK(w1[0] == doctest::Approx(9.0));
  CHECK(std::abs(w1[1]) < 1e-12);
  Rng rng(4);
  MatrixXd G(20, 20);
  for (int i = 0; i < G.size(); ++i) G(i) = rng.normal();
  MatrixXd M = G + G.transpose();
  auto [w2, V2] = symmetric_eigen(M);
  for (int i = 1; i < 20; ++i) CHECK(w2[i - 1] >= w2[i]);
  CHECK((V2.transpose() * V2 - MatrixXd::Identity(20, 20)).norm() <= 1e-10);
  CHECK((V2 * w2.asDiagonal() * V2.transpose() - M).norm() <= 1e-8 * M.norm());
}

TEST_CASE("dump lists cones and triplets") {
  Rng rng(5);
  auto o = tu::known_optimum(0, 2, {2}, 3, rng);
  std::ostringstream os;
  dump(o.p, os);
  CHECK(os.str().find("cones free 0 nonneg 2 psd 2") != std::string::npos);
}
