#include "spldsos/conic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace spldsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
const double kSqrt2 = std::sqrt(2.0);
const double kInf = std::numeric_limits<double>::infinity();
}  // namespace

int ConeSpec::dim() const {
  int d = free_dim + nonneg_dim;
  for (int s : psd) d += svec_len(s);
  return d;
}

int ConeSpec::degree() const {
  int d = nonneg_dim;
  for (int s : psd) d += s;
  return d;
}

int ConeSpec::psd_offset(int k) const {
  int o = free_dim + nonneg_dim;
  for (int i = 0; i < k; ++i) o += svec_len(psd[i]);
  return o;
}

int ConeSpec::max_block() const {
  int m = 0;
  for (int s : psd) m = std::max(m, s);
  return m;
}

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::NearOptimal: return "NearOptimal";
    case SolverStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolverStatus::DualInfeasible: return "DualInfeasible";
    case SolverStatus::IterLimit: return "IterLimit";
    case SolverStatus::NumericalError: return "NumericalError";
  }
  return "?";
}

VectorXd svec(const MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("svec needs a square matrix");
  int n = static_cast<int>(M.rows());
  VectorXd v(svec_len(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v[k++] = (i == j) ? M(i, i) : kSqrt2 * 0.5 * (M(i, j) + M(j, i));
  return v;
}

MatrixXd smat(const VectorXd& v, int offset, int n) {
  MatrixXd M(n, n);
  int k = offset;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      double val = v[k++];
      if (i == j)
        M(i, i) = val;
      else
        M(i, j) = M(j, i) = val / kSqrt2;
    }
  return M;
}

MatrixXd smat(const VectorXd& v) {
  int n = static_cast<int>(std::lround((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0));
  if (svec_len(n) != v.size()) throw std::invalid_argument("smat: length is not triangular");
  return smat(v, 0, n);
}

std::pair<VectorXd, MatrixXd> symmetric_eigen(const MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("symmetric_eigen needs a square matrix");
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("symmetric_eigen: no convergence");
  int n = static_cast<int>(M.rows());
  VectorXd w(n);
  MatrixXd V(n, n);
  for (int i = 0; i < n; ++i) {
    w[i] = es.eigenvalues()[n - 1 - i];
    V.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return {w, V};
}

double min_eigenvalue(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

namespace {

double cone_min(const ConeSpec& K, const VectorXd& v) {
  double m = kInf;
  for (int i = 0; i < K.nonneg_dim; ++i) m = std::min(m, v[K.free_dim + i]);
  for (size_t k = 0; k < K.psd.size(); ++k) m = std::min(m, min_eigenvalue(smat(v, K.psd_offset(k), K.psd[k])));
  return m == kInf ? 0.0 : m;
}

double cone_scale(const ConeSpec& K, const VectorXd& v) {
  return 1.0 + v.segment(K.free_dim, v.size() - K.free_dim).lpNorm<Eigen::Infinity>();
}

}  // namespace

PairCheck check_pair(const ConicProblem& p, const VectorXd& x, const VectorXd& y, const VectorXd& s) {
  PairCheck r;
  r.primal_res = (p.A * x - p.b).norm() / (1.0 + p.b.norm());
  r.dual_res = (VectorXd(p.A.transpose() * y) + s - p.c).norm() / (1.0 + p.c.norm());
  double po = p.c.dot(x), d = p.b.dot(y);
  r.gap = std::abs(po - d) / (1.0 + std::abs(po) + std::abs(d));
  r.x_min_eig = cone_min(p.cones, x);
  r.s_min_eig = cone_min(p.cones, s);
  return r;
}

bool verify_primal_infeasible(const ConicProblem& p, const VectorXd& y, const VectorXd& s, double tol) {
  double by = p.b.dot(y);
  if (!(by > 0)) return false;
  VectorXd r = VectorXd(p.A.transpose() * y) + s;
  if (r.norm() > tol * by * (1.0 + p.A.norm())) return false;
  if (p.cones.free_dim > 0 && s.head(p.cones.free_dim).norm() > tol * by) return false;
  return cone_min(p.cones, s) >= -tol * cone_scale(p.cones, s);
}

bool verify_dual_infeasible(const ConicProblem& p, const VectorXd& x, double tol) {
  double cx = p.c.dot(x);
  if (!(cx < 0)) return false;
  if ((p.A * x).norm() > tol * (-cx) * (1.0 + p.A.norm())) return false;
  return cone_min(p.cones, x) >= -tol * cone_scale(p.cones, x);
}

void dump(const ConicProblem& p, std::ostream& os) {
  os << std::setprecision(17);
  os << "cones free " << p.cones.free_dim << " nonneg " << p.cones.nonneg_dim << " psd";
  for (int s : p.cones.psd) os << ' ' << s;
  os << "\nrows " << p.A.rows() << " cols " << p.A.cols() << " nnz " << p.A.nonZeros() << "\n";
  for (int j = 0; j < p.A.outerSize(); ++j)
    for (SpMat::InnerIterator it(p.A, j); it; ++it) os << "A " << it.row() << ' ' << j << ' ' << it.value() << "\n";
  for (int i = 0; i < p.b.size(); ++i)
    if (p.b[i] != 0) os << "b " << i << ' ' << p.b[i] << "\n";
  for (int i = 0; i < p.c.size(); ++i)
    if (p.c[i] != 0) os << "c " << i << ' ' << p.c[i] << "\n";
}

namespace {

struct Entry {
  int a, b;
  double v;  // matrix entry value (off-diagonal already divided by sqrt 2)
};

struct BlockRow {
  int row;
  std::vector<Entry> ent;
};

struct PsdScaling {
  MatrixXd R, RinvT, P;
  VectorXd lam;
};

// Homogeneous self-dual interior point method with NT scaling and Mehrotra correction.
class Ipm {
public:
  Ipm(const ConicProblem& prob, const SolverSettings& st) : st_(st), K_(prob.cones) { presolve(prob); }

  ConicSolution run();

private:
  const SolverSettings& st_;
  ConeSpec K_;
  int m0_ = 0, m_ = 0, N_ = 0;
  SpMat A_, Af_;
  VectorXd b_, c_;
  std::vector<int> keep_;
  VectorXd rowscale_;
  double bscale_ = 1, cscale_ = 1;
  bool trivially_infeasible_ = false;
  VectorXd trivial_ray_;
  std::vector<std::vector<BlockRow>> block_rows_;
  std::vector<int> off_;

  VectorXd x_, y_, s_;
  double tau_ = 1, kappa_ = 1;
  VectorXd w_lp_;
  std::vector<PsdScaling> sc_;
  MatrixXd M_;
  Eigen::LLT<MatrixXd> Mfac_;
  MatrixXd MinvAf_;
  Eigen::LLT<MatrixXd> Sfac_;

  void presolve(const ConicProblem& p);
  bool compute_scaling();
  void build_normal_matrix();
  bool factor();
  void kkt_solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& dxf);
  VectorXd apply_H(const VectorXd& v) const;
  double max_step(const VectorXd& v, const VectorXd& dv, bool primal) const;
  void scaled_dirs(const VectorXd& dx, const VectorXd& ds, std::vector<MatrixXd>& dxt, std::vector<MatrixXd>& dst) const;
  ConicSolution finish(SolverStatus st, int iters, const VectorXd& x, const VectorXd& y, const VectorXd& s, double tau);
};

void Ipm::presolve(const ConicProblem& p) {
  if (p.A.cols() != K_.dim() || p.c.size() != K_.dim() || p.b.size() != p.A.rows())
    throw std::invalid_argument("conic problem dimensions are inconsistent");
  m0_ = static_cast<int>(p.A.rows());
  N_ = K_.dim();
  Eigen::SparseMatrix<double, Eigen::RowMajor> Ar(p.A);
  Ar.prune(0.0);
  std::map<std::vector<std::pair<int, double>>, int> seen;
  std::vector<Triplet> trip;
  std::vector<double> bb, scl;
  for (int i = 0; i < m0_; ++i) {
    double nrm = 0;
    std::vector<std::pair<int, double>> row;
    for (decltype(Ar)::InnerIterator it(Ar, i); it; ++it) {
      nrm = std::max(nrm, std::abs(it.value()));
      row.emplace_back(static_cast<int>(it.col()), it.value());
    }
    if (nrm == 0.0) {
      if (std::abs(p.b[i]) > 1e-12 * (1.0 + p.b.lpNorm<Eigen::Infinity>())) {
        trivially_infeasible_ = true;
        trivial_ray_ = VectorXd::Zero(m0_);
        trivial_ray_[i] = p.b[i] > 0 ? 1.0 : -1.0;
      }
      continue;
    }
    double sg = row.front().second > 0 ? 1.0 : -1.0;
    double f = sg / nrm;
    for (auto& e : row) e.second *= f;
    auto [it, fresh] = seen.emplace(row, i);
    if (!fresh) {
      int j = it->second;
      double fj = scl[std::find(keep_.begin(), keep_.end(), j) - keep_.begin()];
      double bj = p.b[j] * fj, bi = p.b[i] * f;
      if (std::abs(bj - bi) > 1e-9 * (1.0 + std::abs(bi))) {
        trivially_infeasible_ = true;
        trivial_ray_ = VectorXd::Zero(m0_);
        trivial_ray_[i] = f * (bi > bj ? 1.0 : -1.0);
        trivial_ray_[j] = -fj * (bi > bj ? 1.0 : -1.0);
      }
      continue;
    }
    int r = static_cast<int>(keep_.size());
    keep_.push_back(i);
    scl.push_back(f);
    bb.push_back(p.b[i] * f);
    for (auto& e : row) trip.emplace_back(r, e.first, e.second);
  }
  m_ = static_cast<int>(keep_.size());
  A_.resize(m_, N_);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
  rowscale_ = Eigen::Map<VectorXd>(scl.data(), m_);
  b_ = Eigen::Map<VectorXd>(bb.data(), m_);
  bscale_ = std::max(1.0, b_.lpNorm<Eigen::Infinity>());
  cscale_ = std::max(1.0, p.c.lpNorm<Eigen::Infinity>());
  b_ /= bscale_;
  c_ = p.c / cscale_;
  Af_ = A_.leftCols(K_.free_dim);

  off_.resize(K_.psd.size());
  block_rows_.assign(K_.psd.size(), {});
  std::vector<std::map<int, std::vector<Entry>>> tmp(K_.psd.size());
  for (size_t k = 0; k < K_.psd.size(); ++k) off_[k] = K_.psd_offset(static_cast<int>(k));
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) {
        int col = off_[k] + svec_index(n, i, j);
        for (SpMat::InnerIterator it(A_, col); it; ++it)
          tmp[k][static_cast<int>(it.row())].push_back({i, j, i == j ? it.value() : it.value() / kSqrt2});
      }
    for (auto& [r, e] : tmp[k]) block_rows_[k].push_back({r, std::move(e)});
  }
}

bool Ipm::compute_scaling() {
  int l0 = K_.free_dim;
  w_lp_.resize(K_.nonneg_dim);
  for (int i = 0; i < K_.nonneg_dim; ++i) w_lp_[i] = x_[l0 + i] / s_[l0 + i];
  sc_.resize(K_.psd.size());
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    MatrixXd X = smat(x_, off_[k], n), S = smat(s_, off_[k], n);
    Eigen::LLT<MatrixXd> lx(X), ls(S);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    MatrixXd Lx = lx.matrixL(), Ls = ls.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(Ls.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd lam = svd.singularValues();
    if (lam.minCoeff() <= 0) return false;
    VectorXd isq = lam.cwiseSqrt().cwiseInverse();
    PsdScaling& s = sc_[k];
    s.lam = lam;
    s.R = Lx * svd.matrixV() * isq.asDiagonal();
    s.RinvT = Ls * svd.matrixU() * isq.asDiagonal();
    s.P = s.R * s.R.transpose();
  }
  return true;
}

VectorXd Ipm::apply_H(const VectorXd& v) const {
  VectorXd r = VectorXd::Zero(N_);
  int l0 = K_.free_dim;
  for (int i = 0; i < K_.nonneg_dim; ++i) r[l0 + i] = w_lp_[i] * v[l0 + i];
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    MatrixXd V = smat(v, off_[k], n);
    r.segment(off_[k], svec_len(n)) = svec(sc_[k].P * V * sc_[k].P);
  }
  return r;
}

void Ipm::build_normal_matrix() {
  M_.setZero(m_, m_);
  int l0 = K_.free_dim;
  for (int i = 0; i < K_.nonneg_dim; ++i) {
    int col = l0 + i;
    double w = w_lp_[i];
    for (SpMat::InnerIterator a(A_, col); a; ++a)
      for (SpMat::InnerIterator b(A_, col); b; ++b)
        if (b.row() >= a.row()) M_(b.row(), a.row()) += w * a.value() * b.value();
  }
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    const MatrixXd& P = sc_[k].P;
    const auto& rows = block_rows_[k];
    MatrixXd G(n, n);
    for (size_t jj = 0; jj < rows.size(); ++jj) {
      G.setZero();
      for (const Entry& e : rows[jj].ent) {
        if (e.a == e.b)
          G.noalias() += e.v * P.col(e.a) * P.row(e.a);
        else {
          G.noalias() += e.v * P.col(e.a) * P.row(e.b);
          G.noalias() += e.v * P.col(e.b) * P.row(e.a);
        }
      }
      int rj = rows[jj].row;
      for (size_t ii = jj; ii < rows.size(); ++ii) {
        double acc = 0;
        for (const Entry& e : rows[ii].ent) acc += e.v * (e.a == e.b ? G(e.a, e.a) : 2.0 * G(e.a, e.b));
        int ri = rows[ii].row;
        M_(std::max(ri, rj), std::min(ri, rj)) += acc;
      }
    }
  }
}

bool Ipm::factor() {
  double dmax = m_ > 0 ? M_.diagonal().maxCoeff() : 1.0;
  if (!(dmax > 0)) dmax = 1.0;
  double delta = 1e-13 * dmax;
  for (int attempt = 0; attempt < 8; ++attempt, delta *= 100) {
    MatrixXd Mr = M_.selfadjointView<Eigen::Lower>();
    Mr.diagonal().array() += delta;
    for (int i = 0; i < m_; ++i)
      if (Mr(i, i) < 1e-10 * dmax) Mr(i, i) += 1e-10 * dmax;
    Mfac_.compute(Mr);
    if (Mfac_.info() != Eigen::Success) continue;
    if (K_.free_dim == 0) return true;
    MinvAf_ = Mfac_.solve(MatrixXd(Af_));
    MatrixXd S = MatrixXd(Af_.transpose()) * MinvAf_;
    double sm = std::max(1e-300, S.diagonal().maxCoeff());
    S.diagonal().array() += 1e-13 * sm;
    Sfac_.compute(S);
    if (Sfac_.info() == Eigen::Success) return true;
  }
  return false;
}

void Ipm::kkt_solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& dxf) {
  auto raw = [&](const VectorXd& a, const VectorXd& c, VectorXd& u, VectorXd& v) {
    VectorXd t = Mfac_.solve(a);
    if (K_.free_dim > 0) {
      v = Sfac_.solve(VectorXd(Af_.transpose() * t) - c);
      u = t - MinvAf_ * v;
    } else {
      v.resize(0);
      u = t;
    }
  };
  raw(r1, r2, dy, dxf);
  for (int it = 0; it < 3; ++it) {
    VectorXd e1 = r1 - M_.selfadjointView<Eigen::Lower>() * dy;
    VectorXd e2;
    if (K_.free_dim > 0) {
      e1 -= Af_ * dxf;
      e2 = r2 - Af_.transpose() * dy;
    } else
      e2.resize(0);
    double en = e1.lpNorm<Eigen::Infinity>() + (K_.free_dim ? e2.lpNorm<Eigen::Infinity>() : 0.0);
    if (en <= 1e-15 * (1.0 + r1.lpNorm<Eigen::Infinity>())) break;
    VectorXd u, v;
    raw(e1, e2, u, v);
    dy += u;
    if (K_.free_dim > 0) dxf += v;
  }
}

void Ipm::scaled_dirs(const VectorXd& dx, const VectorXd& ds, std::vector<MatrixXd>& dxt, std::vector<MatrixXd>& dst) const {
  dxt.resize(K_.psd.size());
  dst.resize(K_.psd.size());
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    dxt[k] = sc_[k].RinvT.transpose() * smat(dx, off_[k], n) * sc_[k].RinvT;
    dst[k] = sc_[k].R.transpose() * smat(ds, off_[k], n) * sc_[k].R;
  }
}

// Largest alpha keeping v + alpha dv in the cone (LP and PSD parts).
double Ipm::max_step(const VectorXd& v, const VectorXd& dv, bool primal) const {
  double a = kInf;
  int l0 = K_.free_dim;
  for (int i = 0; i < K_.nonneg_dim; ++i)
    if (dv[l0 + i] < 0) a = std::min(a, -v[l0 + i] / dv[l0 + i]);
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    const PsdScaling& s = sc_[k];
    MatrixXd D = primal ? MatrixXd(s.RinvT.transpose() * smat(dv, off_[k], n) * s.RinvT)
                        : MatrixXd(s.R.transpose() * smat(dv, off_[k], n) * s.R);
    VectorXd il = s.lam.cwiseSqrt().cwiseInverse();
    D = il.asDiagonal() * D * il.asDiagonal();
    double mn = min_eigenvalue(D);
    if (mn < 0) a = std::min(a, -1.0 / mn);
  }
  return a;
}

ConicSolution Ipm::finish(SolverStatus stt, int iters, const VectorXd& x, const VectorXd& y, const VectorXd& s, double tau) {
  ConicSolution out;
  out.status = stt;
  out.iterations = iters;
  out.y = VectorXd::Zero(m0_);
  if (stt == SolverStatus::PrimalInfeasible) {
    VectorXd yo = VectorXd::Zero(m0_);
    for (int i = 0; i < m_; ++i) yo[keep_[i]] = rowscale_[i] * y[i];
    out.x = VectorXd::Zero(N_);
    out.s = s;
    out.y = yo;
    return out;
  }
  if (stt == SolverStatus::DualInfeasible) {
    out.x = x;
    out.s = VectorXd::Zero(N_);
    return out;
  }
  out.x = x * (bscale_ / tau);
  for (int i = 0; i < m_; ++i) out.y[keep_[i]] = rowscale_[i] * y[i] * (cscale_ / tau);
  out.s = s * (cscale_ / tau);
  VectorXd xs = x / tau, ys = y / tau, ss = s / tau;
  out.primal_res = (A_ * xs - b_).norm() / (1.0 + b_.norm());
  out.dual_res = (VectorXd(A_.transpose() * ys) + ss - c_).norm() / (1.0 + c_.norm());
  double po = c_.dot(xs), d = b_.dot(ys);
  out.gap = std::abs(po - d) / (1.0 + std::abs(po) + std::abs(d));
  out.pobj = po * bscale_ * cscale_;
  out.dobj = d * bscale_ * cscale_;
  return out;
}

ConicSolution Ipm::run() {
  if (trivially_infeasible_) {
    ConicSolution out;
    out.status = SolverStatus::PrimalInfeasible;
    out.y = trivial_ray_;
    out.x = VectorXd::Zero(N_);
    out.s = VectorXd::Zero(N_);
    return out;
  }
  const int f = K_.free_dim, l0 = f, nl = K_.nonneg_dim;
  const double nu = K_.degree();
  x_ = VectorXd::Zero(N_);
  s_ = VectorXd::Zero(N_);
  x_.segment(l0, nl).setOnes();
  s_.segment(l0, nl).setOnes();
  for (size_t k = 0; k < K_.psd.size(); ++k) {
    int n = K_.psd[k];
    for (int i = 0; i < n; ++i) x_[off_[k] + svec_index(n, i, i)] = s_[off_[k] + svec_index(n, i, i)] = 1.0;
  }
  y_ = VectorXd::Zero(m_);
  tau_ = kappa_ = 1.0;

  const double bn = 1.0 + b_.norm(), cn = 1.0 + c_.norm();
  double best_merit = kInf;
  VectorXd bx, by, bs;
  double btau = 1;
  int small_steps = 0;
  SolverStatus stop = SolverStatus::IterLimit;
  int it = 0;

  for (; it <= st_.max_iter; ++it) {
    VectorXd rp = b_ * tau_ - A_ * x_;
    VectorXd rd = c_ * tau_ - A_.transpose() * y_ - s_;
    rd.head(f) = c_.head(f) * tau_ - (Af_.transpose() * y_);
    double cx = c_.dot(x_), by_ = b_.dot(y_);
    double rg = kappa_ - by_ + cx;
    double mu = (x_.tail(N_ - f).dot(s_.tail(N_ - f)) + tau_ * kappa_) / (nu + 1.0);

    double pres = rp.norm() / tau_ / bn;
    double dres = rd.norm() / tau_ / cn;
    double pobj = cx / tau_, dobj = by_ / tau_;
    double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (st_.verbose)
      std::fprintf(stderr, "%3d pobj %+.8e dobj %+.8e pres %.1e dres %.1e gap %.1e tau %.1e kap %.1e mu %.1e\n", it, pobj, dobj, pres,
                   dres, gap, tau_, kappa_, mu);
    double merit = std::max({pres, dres, gap});
    if (merit < best_merit) {
      best_merit = merit;
      bx = x_;
      by = y_;
      bs = s_;
      btau = tau_;
    }
    if (pres <= st_.tol_feas && dres <= st_.tol_feas && gap <= st_.tol_gap) {
      stop = SolverStatus::Optimal;
      break;
    }
    if (by_ > 0) {
      VectorXd r = A_.transpose() * y_ + s_;
      r.head(f) = Af_.transpose() * y_;
      if (r.norm() / by_ <= st_.tol_infeas && tau_ < 1e-2 * kappa_) {
        stop = SolverStatus::PrimalInfeasible;
        break;
      }
    }
    if (cx < 0) {
      if ((A_ * x_).norm() / (-cx) <= st_.tol_infeas && tau_ < 1e-2 * kappa_) {
        stop = SolverStatus::DualInfeasible;
        break;
      }
    }
    if (it == st_.max_iter) break;
    if (!compute_scaling()) {
      stop = SolverStatus::NumericalError;
      break;
    }
    build_normal_matrix();
    if (!factor()) {
      stop = SolverStatus::NumericalError;
      break;
    }

    // Direction with dtau eliminated: (dy, dxf) = u + v * dtau.
    VectorXd Hc = apply_H(c_);
    VectorXd q1 = A_ * Hc + b_;
    VectorXd vy, vf;
    kkt_solve(q1, c_.head(f), vy, vf);
    VectorXd Hatv = apply_H(A_.transpose() * vy);
    Hatv.head(f).setZero();

    auto direction = [&](double eta, const VectorXd& rc, double rtk, VectorXd& dx, VectorXd& dy, VectorXd& ds, double& dtau, double& dkap) {
      VectorXd rdK = rd;
      rdK.head(f).setZero();
      VectorXd Hrd = apply_H(rdK);
      VectorXd r1 = eta * rp - A_ * rc + eta * (A_ * Hrd);
      VectorXd r2 = eta * rd.head(f);
      VectorXd uy, uf;
      kkt_solve(r1, r2, uy, uf);
      VectorXd Hatu = apply_H(A_.transpose() * uy);
      Hatu.head(f).setZero();
      // dx_K = rc - eta H rd + H A'u + (H A'v - H c) dtau
      VectorXd x0 = rc - eta * Hrd + Hatu;
      VectorXd x1 = Hatv - Hc;
      x0.head(f) = uf;
      x1.head(f) = vf;
      double g0 = c_.dot(x0), g1 = c_.dot(x1);
      dtau = (-eta * rg + b_.dot(uy) - g0 - rtk / tau_) / (g1 - b_.dot(vy) - kappa_ / tau_);
      dy = uy + vy * dtau;
      dx = x0 + x1 * dtau;
      ds = c_ * dtau - A_.transpose() * dy + eta * rd;
      ds.head(f).setZero();
      dkap = (rtk - kappa_ * dtau) / tau_;
    };

    auto step_len = [&](const VectorXd& dx, const VectorXd& ds, double dtau, double dkap) {
      double a = std::min(max_step(x_, dx, true), max_step(s_, ds, false));
      if (dtau < 0) a = std::min(a, -tau_ / dtau);
      if (dkap < 0) a = std::min(a, -kappa_ / dkap);
      return a;
    };

    // predictor
    VectorXd rc = VectorXd::Zero(N_);
    rc.segment(l0, nl) = -x_.segment(l0, nl);
    for (size_t k = 0; k < K_.psd.size(); ++k) rc.segment(off_[k], svec_len(K_.psd[k])) = -x_.segment(off_[k], svec_len(K_.psd[k]));
    VectorXd dxa, dya, dsa, dx, dy, ds;
    double dta, dka, dt, dk;
    direction(1.0, rc, -tau_ * kappa_, dxa, dya, dsa, dta, dka);
    double aa = std::min(1.0, step_len(dxa, dsa, dta, dka));
    VectorXd xa = x_ + aa * dxa, sa = s_ + aa * dsa;
    double mua = (xa.tail(N_ - f).dot(sa.tail(N_ - f)) + (tau_ + aa * dta) * (kappa_ + aa * dka)) / (nu + 1.0);
    double sigma = std::clamp(std::pow(std::max(0.0, mua) / mu, 3.0), 0.0, 1.0);

    // corrector
    std::vector<MatrixXd> dxt, dst;
    scaled_dirs(dxa, dsa, dxt, dst);
    for (int i = 0; i < nl; ++i) {
      int j = l0 + i;
      rc[j] = (sigma * mu - x_[j] * s_[j] - dxa[j] * dsa[j]) / s_[j];
    }
    for (size_t k = 0; k < K_.psd.size(); ++k) {
      int n = K_.psd[k];
      const PsdScaling& sc = sc_[k];
      MatrixXd T = -0.5 * (dxt[k] * dst[k] + dst[k] * dxt[k]);
      for (int i = 0; i < n; ++i) T(i, i) += sigma * mu - sc.lam[i] * sc.lam[i];
      MatrixXd Z(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Z(i, j) = 2.0 * T(i, j) / (sc.lam[i] + sc.lam[j]);
      rc.segment(off_[k], svec_len(n)) = svec(sc.R * Z * sc.R.transpose());
    }
    double rtk = sigma * mu - tau_ * kappa_ - dta * dka;
    direction(1.0 - sigma, rc, rtk, dx, dy, ds, dt, dk);
    double a = std::min(1.0, 0.99 * step_len(dx, ds, dt, dk));
    if (!std::isfinite(a) || !dx.allFinite() || !ds.allFinite() || !dy.allFinite()) {
      stop = SolverStatus::NumericalError;
      break;
    }
    x_ += a * dx;
    y_ += a * dy;
    s_ += a * ds;
    tau_ += a * dt;
    kappa_ += a * dk;
    if (a < 1e-6) {
      if (++small_steps >= 3) {
        stop = SolverStatus::NumericalError;
        break;
      }
    } else
      small_steps = 0;
    // rescale the embedding to keep tau near one
    double sc = 1.0 / std::max(tau_, 1e-300);
    if (tau_ > 1e3 || tau_ < 1e-3) {
      if (tau_ > 1e-12 * std::max(1.0, kappa_)) {
        x_ *= sc;
        y_ *= sc;
        s_ *= sc;
        kappa_ *= sc;
        tau_ = 1.0;
      }
    }
  }

  if (stop == SolverStatus::Optimal) return finish(stop, it, x_, y_, s_, tau_);
  if (stop == SolverStatus::PrimalInfeasible) {
    VectorXd yy = y_ / b_.dot(y_), ss = s_ / b_.dot(y_);
    return finish(stop, it, x_, yy, ss, 1.0);
  }
  if (stop == SolverStatus::DualInfeasible) {
    VectorXd xx = x_ / (-c_.dot(x_));
    return finish(stop, it, xx, y_, s_, 1.0);
  }
  SolverStatus st = best_merit <= st_.tol_near ? SolverStatus::NearOptimal : stop;
  return finish(st, it, bx, by, bs, btau);
}

}  // namespace

ConicSolution solve(const ConicProblem& p, const SolverSettings& settings) {
  Ipm ipm(p, settings);
  return ipm.run();
}

}  // namespace spldsos
