#pragma once
// Sector-resolved interaction kernels on a radial grid:
//   F_{l,l'}(r,r') = 2 pi int_{-1}^{1} P_l(t) P_l'(t) V(sqrt(r^2 + r'^2 - 2 r r' t)) dt
// The -1/s part collapses to an exact multipole sum; the w tail is integrated
// by Gauss-Legendre with an order-doubling consistency check that fails hard.
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "common.hpp"
#include "grid.hpp"
#include "legendre.hpp"
#include "potential.hpp"

namespace sphfb {

// attraction part in closed form:
//   -2 pi sum_m (min^m / max^{m+1}) G(l,l',m),  m = |l-l'| .. l+l' in steps of 2
inline double newton_kernel(int l, int lp, double r, double rp, const GauntTable &g) {
  if (l < 0 || lp < 0)
    throw std::invalid_argument("newton_kernel: negative sector index");
  if (r < 0.0 || rp < 0.0)
    throw std::invalid_argument("newton_kernel: negative radius");
  if (r == 0.0 && rp == 0.0)
    throw std::invalid_argument("newton_kernel: singular at r = r' = 0");
  double lo = std::min(r, rp), hi = std::max(r, rp);
  double q = lo / hi;
  int m0 = std::abs(l - lp);
  double pw = std::pow(q, m0) / hi;
  double s = 0.0;
  for (int m = m0; m <= l + lp; m += 2) {
    s += pw * g(l, lp, m);
    pw *= q * q;
  }
  return -2.0 * pi * s;
}

// attraction part of the (m,0) kernel; G(m,0,m) = 2/(2m+1) makes it one term
inline double newton_multipole(int m, double r, double rp) {
  if (m < 0)
    throw std::invalid_argument("newton_multipole: negative degree");
  if (r == 0.0 && rp == 0.0)
    throw std::invalid_argument("newton_multipole: singular at r = r' = 0");
  double lo = std::min(r, rp), hi = std::max(r, rp);
  return -4.0 * pi / (2 * m + 1) * std::pow(lo / hi, m) / hi;
}

namespace detail {

// 2 pi int P_l P_l' w(s(t)) dt at every node pair, written in the distance
// variable s = sqrt(r^2 + r'^2 - 2 r r' t): the cos-angle t(s) is a polynomial
// in s, so the integrand is smooth in s wherever w is (the t form has a
// square-root kink at the diagonal and gets needle-peaked for short-ranged w)
inline MatrixXd tail_pair_matrix(int l, int lp, const RadialGrid &g,
                                 const std::function<double(double)> &w, int order) {
  QuadRule q = gauss_legendre(order);
  std::vector<double> pl(static_cast<std::size_t>(std::max(l, lp)) + 1);
  int n = g.n;
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double ri = g.r[i], rj = g.r[j];
      double slo = std::abs(ri - rj), shi = ri + rj;
      double mid = 0.5 * (slo + shi), half = 0.5 * (shi - slo);
      double acc = 0.0;
      for (int k = 0; k < order; ++k) {
        double s = mid + half * q.x[k];
        double t = (ri * ri + rj * rj - s * s) / (2.0 * ri * rj);
        t = std::min(1.0, std::max(-1.0, t));
        legendre_all(std::max(l, lp), t, pl.data());
        acc += q.w[k] * pl[static_cast<std::size_t>(l)] *
               pl[static_cast<std::size_t>(lp)] * s * w(s);
      }
      m(i, j) = 2.0 * pi * half * acc / (ri * rj);
      m(j, i) = m(i, j);
    }
  return m;
}

// doubling cascade from the base order until two consecutive orders agree to
// 1e-8 relative (matrix-wide); running out of headroom is a hard error
inline MatrixXd tail_pair_converged(int l, int lp, const RadialGrid &g,
                                    const std::function<double(double)> &w) {
  const double tol = 1e-8;
  const int cap = 4096;
  int order = std::max(16, 2 * (l + lp) + 8);
  MatrixXd prev = tail_pair_matrix(l, lp, g, w, order);
  double rel = 0.0;
  while (2 * order <= cap) {
    order *= 2;
    MatrixXd next = tail_pair_matrix(l, lp, g, w, order);
    double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-12);
    rel = (prev - next).cwiseAbs().maxCoeff() / scale;
    if (rel <= tol)
      return next;
    prev = std::move(next);
  }
  throw std::runtime_error("build_kernel_table: tail quadrature for sectors (" +
                           std::to_string(l) + "," + std::to_string(lp) +
                           ") did not settle, relative gap " + std::to_string(rel) +
                           " at order " + std::to_string(cap));
}

} // namespace detail

// Kernel matrices for all sector pairs l,l' <= lmax plus the (m,0) columns up
// to m = 2 lmax that the exchange assembly consumes.  f(l,l') and f(l',l)
// return the same matrix, and F is symmetric in r <-> r' entrywise.
struct KernelTable {
  int lmax = 0;
  std::shared_ptr<const RadialGrid> grid;
  bool has_tail = false;
  std::vector<MatrixXd> total; // upper triangle l <= l', row-major in l
  std::vector<MatrixXd> tail;  // same layout, w part alone; empty when w == 0
  std::vector<MatrixXd> extra; // (m,0) kernels for m = lmax+1 .. 2 lmax

  std::size_t pair_index(int l, int lp) const {
    if (l > lp)
      std::swap(l, lp);
    if (l < 0 || lp > lmax)
      throw std::out_of_range("KernelTable: sector index out of range");
    std::size_t off = static_cast<std::size_t>(l) * (lmax + 1) -
                      static_cast<std::size_t>(l) * (l - 1) / 2;
    return off + static_cast<std::size_t>(lp - l);
  }
  const MatrixXd &f(int l, int lp) const { return total[pair_index(l, lp)]; }
  const MatrixXd &multipole(int m) const {
    if (m < 0 || m > 2 * lmax)
      throw std::out_of_range("KernelTable: multipole degree out of range");
    return m <= lmax ? f(0, m) : extra[static_cast<std::size_t>(m - lmax - 1)];
  }
};

inline KernelTable build_kernel_table(int lmax, const std::shared_ptr<const RadialGrid> &grid,
                                      const PotentialSpec &pot, const GauntTable &gtab) {
  if (lmax < 0)
    throw std::invalid_argument("build_kernel_table: lmax < 0");
  if (gtab.max_degree() < 2 * lmax)
    throw std::invalid_argument("build_kernel_table: Gaunt table must reach degree 2*lmax");
  KernelTable t;
  t.lmax = lmax;
  t.grid = grid;
  t.has_tail = pot.has_w();
  const int n = grid->n;
  const VectorXd &r = grid->r;

  for (int l = 0; l <= lmax; ++l)
    for (int lp = l; lp <= lmax; ++lp) {
      MatrixXd m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          m(i, j) = newton_kernel(l, lp, r[i], r[j], gtab);
          m(j, i) = m(i, j);
        }
      t.total.push_back(std::move(m));
    }
  for (int md = lmax + 1; md <= 2 * lmax; ++md) {
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        m(i, j) = newton_multipole(md, r[i], r[j]);
        m(j, i) = m(i, j);
      }
    t.extra.push_back(std::move(m));
  }

  if (t.has_tail) {
    for (int l = 0; l <= lmax; ++l)
      for (int lp = l; lp <= lmax; ++lp) {
        MatrixXd wl = detail::tail_pair_converged(l, lp, *grid, pot.w);
        t.total[t.pair_index(l, lp)] += wl;
        t.tail.push_back(std::move(wl));
      }
    for (int md = lmax + 1; md <= 2 * lmax; ++md)
      t.extra[static_cast<std::size_t>(md - lmax - 1)] +=
          detail::tail_pair_converged(md, 0, *grid, pot.w);
  }
  return t;
}

// (V * rho)(r_i) = sum_j w_j F_{0,0}(r_i, r_j) rho_j for a radial density rho
inline VectorXd direct_potential(const VectorXd &rho, const RadialGrid &g, const KernelTable &t) {
  require_same_grid(g, *t.grid, "direct_potential");
  if (rho.size() != g.n)
    throw std::invalid_argument("direct_potential: density size mismatch");
  return t.f(0, 0) * rho.cwiseProduct(g.w);
}

// decay majorant (1 + sup_rw) (4 pi sum w |rho|) / r, elementwise on the grid
inline VectorXd direct_potential_bound(const VectorXd &rho, const RadialGrid &g,
                                       const PotentialSpec &pot) {
  double mass = 4.0 * pi * g.w.dot(rho.cwiseAbs());
  return (1.0 + pot.sup_rw) * mass * g.r.cwiseInverse();
}

struct KernelBoundsReport {
  CheckReport amplitude; // |F(r,r')| <= 4 pi (1 + sup_rw) / max(r,r'), hard bound
  double deriv_c = 0.0;      // max |r^2 d_r F_attr| / (1 + l^2 + l'^2) over pairs
  double deriv_c_tail = 0.0; // max |r^2 d_r F_tail| / sup_wprime over pairs
  bool pass() const { return amplitude.pass; }
};

// amplitude bound checked entrywise; first-argument radial derivative taken by
// three-point differences at interior nodes and split into attraction and tail
// parts so each fitted constant tracks its own term of the bound
inline KernelBoundsReport verify_kernel_bounds(const KernelTable &t, const PotentialSpec &pot) {
  const RadialGrid &g = *t.grid;
  const int n = g.n;
  KernelBoundsReport rep;

  double cap = 4.0 * pi * (1.0 + pot.sup_rw);
  double worst = 0.0;
  long cnt = 0;
  for (int l = 0; l <= t.lmax; ++l)
    for (int lp = l; lp <= t.lmax; ++lp) {
      const MatrixXd &m = t.f(l, lp);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          worst = std::max(worst, std::abs(m(i, j)) * std::max(g.r[i], g.r[j]) / cap);
          ++cnt;
        }
    }
  // the monopole attraction saturates the bound exactly, so leave roundoff room
  rep.amplitude.name = "kernel amplitude bound";
  rep.amplitude.tolerance = 1.0 + 1e-12;
  rep.amplitude.margin = rep.amplitude.tolerance - worst;
  rep.amplitude.pass = worst <= rep.amplitude.tolerance;
  rep.amplitude.samples = cnt;

  auto max_r2_deriv = [&](const MatrixXd &m) {
    double a = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
      double x0 = g.r[i - 1], x1 = g.r[i], x2 = g.r[i + 1];
      double d0 = (x1 - x2) / ((x0 - x1) * (x0 - x2));
      double d1 = (2.0 * x1 - x0 - x2) / ((x1 - x0) * (x1 - x2));
      double d2 = (x1 - x0) / ((x2 - x0) * (x2 - x1));
      for (int j = 0; j < n; ++j) {
        double d = d0 * m(i - 1, j) + d1 * m(i, j) + d2 * m(i + 1, j);
        a = std::max(a, x1 * x1 * std::abs(d));
      }
    }
    return a;
  };
  double tail_denom = pot.sup_wprime > 0.0 ? pot.sup_wprime : 1.0;
  for (int l = 0; l <= t.lmax; ++l)
    for (int lp = l; lp <= t.lmax; ++lp) {
      std::size_t k = t.pair_index(l, lp);
      if (t.has_tail) {
        rep.deriv_c = std::max(rep.deriv_c, max_r2_deriv(t.total[k] - t.tail[k]) /
                                                (1.0 + l * l + lp * lp));
        rep.deriv_c_tail = std::max(rep.deriv_c_tail, max_r2_deriv(t.tail[k]) / tail_denom);
      } else {
        rep.deriv_c =
            std::max(rep.deriv_c, max_r2_deriv(t.total[k]) / (1.0 + l * l + lp * lp));
      }
    }
  return rep;
}

} // namespace sphfb
