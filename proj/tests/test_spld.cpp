#include <doctest.h>

#include "spldsos/convex.hpp"
#include "spldsos/gram.hpp"
#include "spldsos/problems.hpp"
#include "spldsos/spld.hpp"
#include "util.hpp"

using namespace spldsos;
using namespace tu;

TEST_CASE("decompose SPM objective") {
  SpldDecomposition D = decompose(gen_spm(8).f0);
  CHECK(D.separable[0] == mono({8, 0}));
  CHECK(D.separable[1] == mono({0, 8}));
  CHECK(D.lower == motzkin());
  CHECK(D.lower.degree() == 6);
}

TEST_CASE("decompose six-hump camelback") {
  Polynomial f = mono({2, 0}, 4.0) + mono({4, 0}, -2.1) + mono({6, 0}, 1.0 / 3) + mono({1, 1}) + mono({0, 2}, -4.0) + mono({0, 4}, 4.0);
  SpldDecomposition D = decompose(f);
  CHECK(D.separable_degree() == 6);
  CHECK(D.lower == mono({1, 1}));
  CHECK(D.reassemble() == f);
}

TEST_CASE("non-separable top degree is rejected") {
  CHECK_THROWS_AS(decompose(mono({2, 2})), NotSpld);
  try {
    decompose(mono({2, 2}) + mono({3, 0}));
  } catch (const NotSpld& e) {
    CHECK(e.offending == MultiIndex({2, 2}));
  }
  CHECK_THROWS_AS(decompose(C(2, 3.0)), ConstantInput);
  // equal degrees are not strictly lower
  CHECK_THROWS_AS(decompose(mono({4, 0}) + mono({2, 2})), NotSpld);
}

TEST_CASE("is_spld") {
  CHECK(is_spld(gen_pnq(6, 6).f0));
  CHECK_FALSE(is_spld(mono({1, 1})));
  CHECK(is_spld(mono({3, 0}) + mono({1, 1})));
  CHECK_FALSE(is_spld(C(2, 1.0)));
}

TEST_CASE("reassembly round trip") {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    Polynomial p = random_poly(3, 6, 10, rng) + C(3, rng.uniform());
    SpldDecomposition D = split_separable(p);
    CHECK(D.reassemble() == p);
    for (int j = 0; j < 3; ++j)
      for (const auto& [a, c] : D.separable[j].terms()) {
        CHECK(a.e[j] == a.deg);
        CHECK(a.deg >= 1);
      }
  }
}

TEST_CASE("benchmarks are SPLD in every piece") {
  for (auto pb : {gen_pnq(6, 6), gen_pnq(6, 8), gen_spm(20), gen_spm(40), gen_portfolio(PortfolioSpec{}).second}) {
    CHECK(is_spld(pb.f0));
    // constraints may carry a quadratic lower part of the same degree, so only the split is checked
    for (const auto& g : pb.constraints) CHECK(split_separable(g).reassemble() == g);
  }
}

TEST_CASE("plan rule") {
  DegreePlan p66 = plan_degrees(gen_pnq(6, 6), 2);
  CHECK(p66.d0() == 27);
  CHECK(p66.r == 2);
  DegreePlan s40 = plan_degrees(gen_spm(40), 3);
  CHECK(s40.d0() == 20);
  DegreePlan o = plan_degrees(gen_pnq(6, 8), 2, PlanMode::UserOverride, {39});
  CHECK(o.d0() == 39);
  CHECK_THROWS(plan_degrees(gen_spm(20), 2));  // Motzkin needs r >= 3
  CHECK(plan_degrees(gen_spm(20), 3).d0() == 10);
  CHECK(plan_degrees(gen_spm(20), 3).json() == nlohmann::json{{"d", {10, 10}}, {"r", 3}});
}

TEST_CASE("plan keeps max d_j above r") {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    SemialgebraicProblem pb = gen_random_spld(3, 6, 2 + 2 * rng.below(2), t);
    for (int r = min_lower_half_degree(pb); r <= 3; ++r) {
      try {
        DegreePlan p = plan_degrees(pb, r);
        CHECK(p.d0() > p.r);
      } catch (const std::invalid_argument&) {
      }
    }
  }
}

TEST_CASE("SOS-convex SPLD: separable degree dominates the non-separable part") {
  DegreePlan plan;
  plan.d = {3, 2, 3};
  plan.r = 2;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    ConvexSpldProblem cp = gen_random_instance(3, plan, seed);
    for (const Polynomial* p : {&cp.f, &cp.g[0]}) {
      if (sos_convexity_check(*p).status != CheckStatus::Feasible) continue;
      SpldDecomposition D = split_separable(*p);
      if (D.lower.is_zero()) continue;
      CHECK(D.separable_degree() >= D.lower.degree());
    }
  }
}
