#pragma once
// Radial grids on (0,R) carrying quadrature weights for int_0^R f(r) r^2 dr.
#include <memory>

#include "common.hpp"
#include "legendre.hpp"

namespace sphfb {

enum class GridScheme { uniform, legendre_mapped };

inline const char *to_string(GridScheme s) {
  return s == GridScheme::uniform ? "uniform" : "legendre-mapped";
}

struct RadialGrid {
  int n = 0;
  double R = 0.0;
  GridScheme scheme = GridScheme::uniform;
  VectorXd r;     // nodes, strictly inside (0,R), increasing
  VectorXd w;     // weights for the r^2 dr measure
  VectorXd wsqrt; // sqrt(w), cached for symmetrized eigenproblems
  VectorXd winv;  // 1/w

  static std::shared_ptr<const RadialGrid> build(int n, double R, GridScheme scheme) {
    if (n < 8)
      throw std::invalid_argument("RadialGrid: need n >= 8");
    if (!(R > 0.0))
      throw std::invalid_argument("RadialGrid: need R > 0");
    auto g = std::make_shared<RadialGrid>();
    g->n = n;
    g->R = R;
    g->scheme = scheme;
    g->r.resize(n);
    g->w.resize(n);
    if (scheme == GridScheme::uniform) {
      // midpoint rule: r_i = (i-1/2) R/n, w_i = r_i^2 R/n
      double h = R / n;
      for (int i = 0; i < n; ++i) {
        g->r[i] = (i + 0.5) * h;
        g->w[i] = g->r[i] * g->r[i] * h;
      }
    } else {
      // Gauss-Legendre nodes mapped from (-1,1) to (0,R)
      QuadRule q = gauss_legendre(n);
      for (int i = 0; i < n; ++i) {
        g->r[i] = 0.5 * R * (q.x[i] + 1.0);
        g->w[i] = 0.5 * R * q.w[i] * g->r[i] * g->r[i];
      }
    }
    g->wsqrt = g->w.cwiseSqrt();
    g->winv = g->w.cwiseInverse();
    return g;
  }
};

inline bool same_grid(const RadialGrid &a, const RadialGrid &b) {
  return a.n == b.n && a.R == b.R && a.scheme == b.scheme;
}

inline void require_same_grid(const RadialGrid &a, const RadialGrid &b, const char *who) {
  if (!same_grid(a, b))
    throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

} // namespace sphfb
