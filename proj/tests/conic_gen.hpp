#pragma once

#include "spldsos/conic.hpp"
#include "spldsos/rng.hpp"

namespace tu {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct KnownOptimum {
  spldsos::ConicProblem p;
  VectorXd x, y, s;
  double value;
};

inline MatrixXd random_orthogonal(int n, spldsos::Rng& rng) {
  MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(G);
  return qr.householderQ();
}

// Strictly complementary pair: x and s share eigenvectors with disjoint supports,
// c = A'y + s, b = A x, so x and (y, s) are optimal with value c'x = b'y.
inline KnownOptimum known_optimum(int nfree, int nlp, std::vector<int> psd, int m, spldsos::Rng& rng) {
  spldsos::ConeSpec K;
  K.free_dim = nfree;
  K.nonneg_dim = nlp;
  K.psd = psd;
  int N = K.dim();
  KnownOptimum o;
  o.x = VectorXd::Zero(N);
  o.s = VectorXd::Zero(N);
  for (int i = 0; i < nfree; ++i) o.x[i] = rng.normal();
  for (int i = 0; i < nlp; ++i) {
    double v = rng.uniform(0.5, 2.0);
    if (rng.below(2))
      o.x[nfree + i] = v;
    else
      o.s[nfree + i] = v;
  }
  for (size_t k = 0; k < psd.size(); ++k) {
    int n = psd[k];
    MatrixXd V = random_orthogonal(n, rng);
    int rk = 1 + rng.below(n);
    VectorXd lx = VectorXd::Zero(n), ls = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) (i < rk ? lx[i] : ls[i]) = rng.uniform(0.5, 2.0);
    if (rk == n) {
      lx[n - 1] = 0;
      ls[n - 1] = rng.uniform(0.5, 2.0);
    }
    o.x.segment(K.psd_offset(k), spldsos::svec_len(n)) = spldsos::svec(V * lx.asDiagonal() * V.transpose());
    o.s.segment(K.psd_offset(k), spldsos::svec_len(n)) = spldsos::svec(V * ls.asDiagonal() * V.transpose());
  }
  std::vector<spldsos::Triplet> tr;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < N; ++j)
      if (rng.uniform() < 0.6 || j < nfree) tr.emplace_back(i, j, rng.normal());
  o.p.A.resize(m, N);
  o.p.A.setFromTriplets(tr.begin(), tr.end());
  o.y = VectorXd(m);
  for (int i = 0; i < m; ++i) o.y[i] = rng.normal();
  o.p.b = o.p.A * o.x;
  o.p.c = VectorXd(o.p.A.transpose() * o.y) + o.s;
  o.p.cones = K;
  o.value = o.p.c.dot(o.x);
  return o;
}

// A'y0 = -s0 with s0 in the cone and b'y0 = 1: no x in K satisfies Ax = b.
inline spldsos::ConicProblem primal_infeasible(int nlp, std::vector<int> psd, int m, spldsos::Rng& rng) {
  spldsos::ConeSpec K;
  K.nonneg_dim = nlp;
  K.psd = psd;
  int N = K.dim();
  MatrixXd A(m, N);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < N; ++j) A(i, j) = rng.normal();
  VectorXd y0(m), s0 = VectorXd::Zero(N);
  for (int i = 0; i < m; ++i) y0[i] = rng.normal();
  for (int i = 0; i < nlp; ++i) s0[i] = rng.uniform(0.1, 1.0);
  for (size_t k = 0; k < psd.size(); ++k) {
    MatrixXd G(psd[k], psd[k]);
    for (int i = 0; i < G.size(); ++i) G(i) = rng.normal();
    s0.segment(K.psd_offset(k), spldsos::svec_len(psd[k])) = spldsos::svec(G * G.transpose() + 0.1 * MatrixXd::Identity(psd[k], psd[k]));
  }
  A -= y0 * (A.transpose() * y0 + s0).transpose() / y0.squaredNorm();
  VectorXd b(m);
  for (int i = 0; i < m; ++i) b[i] = rng.normal();
  b += y0 * (1.0 - b.dot(y0)) / y0.squaredNorm();
  spldsos::ConicProblem p;
  p.A = A.sparseView();
  p.b = b;
  p.c = VectorXd::Zero(N);
  for (int i = 0; i < N; ++i) p.c[i] = rng.normal();
  p.cones = K;
  return p;
}

// A x0 = 0 with x0 in the interior and c'x0 = -1; a feasible interior point exists.
inline spldsos::ConicProblem dual_infeasible(int nlp, std::vector<int> psd, int m, spldsos::Rng& rng) {
  spldsos::ConeSpec K;
  K.nonneg_dim = nlp;
  K.psd = psd;
  int N = K.dim();
  auto interior = [&]() {
    VectorXd v = VectorXd::Zero(N);
    for (int i = 0; i < nlp; ++i) v[i] = rng.uniform(0.5, 1.5);
    for (size_t k = 0; k < psd.size(); ++k) {
      MatrixXd G(psd[k], psd[k]);
      for (int i = 0; i < G.size(); ++i) G(i) = rng.normal();
      v.segment(K.psd_offset(k), spldsos::svec_len(psd[k])) = spldsos::svec(G * G.transpose() + MatrixXd::Identity(psd[k], psd[k]));
    }
    return v;
  };
  VectorXd x0 = interior(), x1 = interior();
  MatrixXd A(m, N);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < N; ++j) A(i, j) = rng.normal();
  A -= (A * x0) * x0.transpose() / x0.squaredNorm();
  VectorXd c(N);
  for (int i = 0; i < N; ++i) c[i] = rng.normal();
  c -= x0 * (c.dot(x0) + 1.0) / x0.squaredNorm();
  spldsos::ConicProblem p;
  p.A = A.sparseView();
  p.b = A * x1;
  p.c = c;
  p.cones = K;
  return p;
}

}  // namespace tu
