#pragma once

#include <map>
#include <vector>

#include "spldsos/conic.hpp"

namespace spldsos {

// Incremental builder for a standard-form ConicProblem. Variables may be
// declared in any order; columns are laid out free | nonneg | psd at build().
class ConicModel {
public:
  struct Var {
    int kind;  // 0 free, 1 nonneg
    int index;
  };

  Var add_free() { return {0, nfree_++}; }
  Var add_nonneg() { return {1, nnn_++}; }
  int add_psd(int n) {
    psd_.push_back(n);
    return static_cast<int>(psd_.size()) - 1;
  }
  int add_row(double rhs = 0.0) {
    b_.push_back(rhs);
    return static_cast<int>(b_.size()) - 1;
  }
  void set_rhs(int row, double rhs) { b_[row] = rhs; }
  void add_rhs(int row, double rhs) { b_[row] += rhs; }

  void coef(int row, Var v, double c) { trip_.push_back({row, v.kind, v.index, 0, 0, c}); }
  // c * X(i,j) of a symmetric block; for i != j only that single position is counted.
  void coef_psd(int row, int block, int i, int j, double c) { trip_.push_back({row, 2, block, i, j, c}); }
  void cost(Var v, double c) { obj_.push_back({-1, v.kind, v.index, 0, 0, c}); }
  void cost_psd(int block, int i, int j, double c) { obj_.push_back({-1, 2, block, i, j, c}); }

  int rows() const { return static_cast<int>(b_.size()); }
  int num_psd() const { return static_cast<int>(psd_.size()); }
  int psd_size(int k) const { return psd_[k]; }

  ConicProblem build() const;

  double value(const Eigen::VectorXd& x, Var v) const;
  Eigen::MatrixXd block(const Eigen::VectorXd& x, int k) const;
  int column(Var v) const;

private:
  struct T {
    int row, kind, index, i, j;
    double c;
  };
  int nfree_ = 0, nnn_ = 0;
  std::vector<int> psd_;
  std::vector<double> b_;
  std::vector<T> trip_, obj_;
};

}  // namespace spldsos
