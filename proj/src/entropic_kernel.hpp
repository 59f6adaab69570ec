#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "jkoflow/grid.hpp"

namespace jkoflow::detail {

// Log-domain operations with the Gibbs kernel of cost |x-y|^2/2 on a shared
// grid. The cost splits per axis, so a 2D kernel application runs as two 1D
// log-sum-exp passes, O(N (n1 + n2)) instead of O(N^2).
class EntropicKernel {
 public:
  EntropicKernel(const Grid& g, double eps) : g_(g), eps_(eps) {
    n1_ = g.n[0];
    n2_ = g.dim == 2 ? g.n[1] : 1;
    build_axis(0, n1_, k1_);
    if (g.dim == 2) build_axis(1, n2_, k2_);
  }

  double eps() const { return eps_; }
  const Grid& grid() const { return g_; }

  // out_i = LSE_j [ in_j - c_ij / eps ]
  void lse_apply(const std::vector<double>& in, std::vector<double>& out) const {
    if (g_.dim == 1) {
      out.resize(n1_);
      std::vector<double> row(n1_);
      for (int i = 0; i < n1_; ++i) {
        for (int j = 0; j < n1_; ++j) row[j] = in[j] + k1_[i * n1_ + j];
        out[i] = lse(row);
      }
      return;
    }
    pass_inner_axis1(in, p_);
    out.resize(static_cast<std::size_t>(n1_) * n2_);
    std::vector<double> row(n1_);
    for (int i1 = 0; i1 < n1_; ++i1)
      for (int i2 = 0; i2 < n2_; ++i2) {
        for (int j1 = 0; j1 < n1_; ++j1) row[j1] = p_[j1 * n2_ + i2] + k1_[i1 * n1_ + j1];
        out[g_.index(i1, i2)] = lse(row);
      }
  }

  // Per-source-cell statistics of the conditional distribution
  // gamma(.|i) ~ exp(in_j - c_ij/eps): barycenter coordinates and expected
  // squared displacement per axis. `z` must hold lse_apply(in).
  struct Conditionals {
    std::vector<double> bary1, bary2;  // E[y_axis | i]
    std::vector<double> sq1, sq2;      // E[(x_axis - y_axis)^2 | i]
  };
  Conditionals conditionals(const std::vector<double>& in, const std::vector<double>& z) const {
    Conditionals c;
    const std::size_t N = static_cast<std::size_t>(n1_) * n2_;
    c.bary1.assign(N, 0.0);
    c.sq1.assign(N, 0.0);
    if (g_.dim == 1) {
      for (int i = 0; i < n1_; ++i) {
        if (!std::isfinite(z[i])) continue;
        const double xi = g_.center(0, i);
        double num_y = 0.0, num_q = 0.0;
        for (int j = 0; j < n1_; ++j) {
          const double w = std::exp(in[j] + k1_[i * n1_ + j] - z[i]);
          const double yj = g_.center(0, j);
          num_y += w * yj;
          num_q += w * (xi - yj) * (xi - yj);
        }
        c.bary1[i] = num_y;
        c.sq1[i] = num_q;
      }
      return c;
    }
    c.bary2.assign(N, 0.0);
    c.sq2.assign(N, 0.0);
    // axis-0 stats via inner reduction over j2, axis-1 stats via inner over j1
    pass_inner_axis1(in, p_);
    for (int i1 = 0; i1 < n1_; ++i1) {
      const double x1 = g_.center(0, i1);
      for (int i2 = 0; i2 < n2_; ++i2) {
        const std::size_t i = g_.index(i1, i2);
        if (!std::isfinite(z[i])) continue;
        double num_y = 0.0, num_q = 0.0;
        for (int j1 = 0; j1 < n1_; ++j1) {
          const double w = std::exp(p_[j1 * n2_ + i2] + k1_[i1 * n1_ + j1] - z[i]);
          const double y1 = g_.center(0, j1);
          num_y += w * y1;
          num_q += w * (x1 - y1) * (x1 - y1);
        }
        c.bary1[i] = num_y;
        c.sq1[i] = num_q;
      }
    }
    pass_inner_axis0(in, q_);
    for (int i1 = 0; i1 < n1_; ++i1)
      for (int i2 = 0; i2 < n2_; ++i2) {
        const double x2 = g_.center(1, i2);
        const std::size_t i = g_.index(i1, i2);
        if (!std::isfinite(z[i])) continue;
        double num_y = 0.0, num_q = 0.0;
        for (int j2 = 0; j2 < n2_; ++j2) {
          const double w = std::exp(q_[j2 * n1_ + i1] + k2_[i2 * n2_ + j2] - z[i]);
          const double y2 = g_.center(1, j2);
          num_y += w * y2;
          num_q += w * (x2 - y2) * (x2 - y2);
        }
        c.bary2[i] = num_y;
        c.sq2[i] = num_q;
      }
    return c;
  }

  static double lse(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
  }

 private:
  void build_axis(int axis, int n, std::vector<double>& k) {
    k.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = g_.center(axis, i) - g_.center(axis, j);
        k[i * static_cast<std::size_t>(n) + j] = -0.5 * d * d / eps_;
      }
  }

  // p(j1, i2) = LSE_{j2} [ in(j1,j2) + k2(i2,j2) ]
  void pass_inner_axis1(const std::vector<double>& in, std::vector<double>& p) const {
    p.resize(static_cast<std::size_t>(n1_) * n2_);
    std::vector<double> row(n2_);
    for (int j1 = 0; j1 < n1_; ++j1)
      for (int i2 = 0; i2 < n2_; ++i2) {
        for (int j2 = 0; j2 < n2_; ++j2) row[j2] = in[g_.index(j1, j2)] + k2_[i2 * n2_ + j2];
        p[j1 * n2_ + i2] = lse(row);
      }
  }

  // q(j2, i1) = LSE_{j1} [ in(j1,j2) + k1(i1,j1) ]
  void pass_inner_axis0(const std::vector<double>& in, std::vector<double>& q) const {
    q.resize(static_cast<std::size_t>(n2_) * n1_);
    std::vector<double> col(n1_);
    for (int j2 = 0; j2 < n2_; ++j2)
      for (int i1 = 0; i1 < n1_; ++i1) {
        for (int j1 = 0; j1 < n1_; ++j1) col[j1] = in[g_.index(j1, j2)] + k1_[i1 * n1_ + j1];
        q[j2 * n1_ + i1] = lse(col);
      }
  }

  Grid g_;
  double eps_;
  int n1_ = 0, n2_ = 1;
  std::vector<double> k1_, k2_;
  mutable std::vector<double> p_, q_;
};

}  // namespace jkoflow::detail
