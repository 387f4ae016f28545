#pragma once

#include <initializer_list>

#include "spldsos/conic.hpp"
#include "spldsos/poly.hpp"
#include "spldsos/rng.hpp"

namespace tu {

using spldsos::MultiIndex;
using spldsos::Polynomial;

inline Polynomial mono(std::initializer_list<int> e, double c = 1.0) { return Polynomial::monomial(MultiIndex(std::vector<int>(e)), c); }
inline Polynomial X(int n, int i) { return Polynomial::var(n, i); }
inline Polynomial C(int n, double c) { return Polynomial::constant(n, c); }

// x^4y^2 + x^2y^4 - 3x^2y^2, as used in the SPM objective
inline Polynomial motzkin() { return mono({4, 2}) + mono({2, 4}) + mono({2, 2}, -3.0); }

// Worked convex example: min f s.t. x1^2 + x2^2 - 1 <= 0, optimum 0 at the origin.
inline Polynomial example_f() {
  return mono({8, 0}) + mono({6, 0}, -1.0) + mono({4, 0}) + mono({2, 2}) + mono({0, 4}) + mono({2, 1}) + mono({1, 2}) + mono({2, 0}) +
         mono({0, 2});
}
inline Polynomial example_g() { return mono({2, 0}) + mono({0, 2}) - C(2, 1.0); }

inline Polynomial random_poly(int n, int deg, int terms, spldsos::Rng& rng) {
  Polynomial p(n);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(n, 0);
    int d = rng.below(deg + 1);
    for (int k = 0; k < d; ++k) ++e[rng.below(n)];
    p.add_term(MultiIndex(e), rng.uniform(-1.0, 1.0));
  }
  p.prune();
  return p;
}

inline Eigen::VectorXd random_point(int n, spldsos::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

inline bool is_solved(spldsos::SolverStatus s) {
  return s == spldsos::SolverStatus::Optimal || s == spldsos::SolverStatus::NearOptimal;
}

}  // namespace tu
