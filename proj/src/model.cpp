#include "spldsos/model.hpp"

#include <cmath>

namespace spldsos {

ConicProblem ConicModel::build() const {
  ConicProblem p;
  p.cones.free_dim = nfree_;
  p.cones.nonneg_dim = nnn_;
  p.cones.psd = psd_;
  const ConeSpec& K = p.cones;
  // Precompute psd offsets once; psd_offset is linear in the block index.
  std::vector<int> offs(psd_.size());
  for (size_t k = 0; k < psd_.size(); ++k) offs[k] = K.psd_offset(static_cast<int>(k));
  auto col = [&](const T& t) {
    if (t.kind == 0) return t.index;
    if (t.kind == 1) return K.free_dim + t.index;
    return offs[t.index] + svec_index(psd_[t.index], t.i, t.j);
  };
  auto scale = [](const T& t) { return (t.kind == 2 && t.i != t.j) ? 1.0 / std::sqrt(2.0) : 1.0; };
  std::vector<Triplet> tr;
  tr.reserve(trip_.size());
  for (const T& t : trip_) tr.emplace_back(t.row, col(t), t.c * scale(t));
  p.A.resize(rows(), K.dim());
  p.A.setFromTriplets(tr.begin(), tr.end());
  p.A.prune(0.0);
  p.A.makeCompressed();
  p.b = Eigen::Map<const Eigen::VectorXd>(b_.data(), rows());
  p.c = Eigen::VectorXd::Zero(K.dim());
  for (const T& t : obj_) p.c[col(t)] += t.c * scale(t);
  return p;
}

int ConicModel::column(Var v) const { return v.kind == 0 ? v.index : nfree_ + v.index; }

double ConicModel::value(const Eigen::VectorXd& x, Var v) const { return x[column(v)]; }

Eigen::MatrixXd ConicModel::block(const Eigen::VectorXd& x, int k) const {
  ConeSpec K;
  K.free_dim = nfree_;
  K.nonneg_dim = nnn_;
  K.psd = psd_;
  return smat(x, K.psd_offset(k), psd_[k]);
}

}  // namespace spldsos
