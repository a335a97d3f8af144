#pragma once
// Legendre polynomials, Gauss-Legendre rules and triple-product (Gaunt) tables.
// Everything downstream (kernel multipoles, exchange couplings, angular
// projections) funnels through this header, so the recurrences here are kept
// bare and the tables are precomputed once.
#include <cmath>
#include <map>

#include "common.hpp"

namespace sphfb {

// P_l(t) by the three-term recurrence; |t| <= 1 enforced.
inline double legendre_eval(int l, double t) {
  if (l < 0)
    throw std::invalid_argument("legendre_eval: negative degree");
  if (std::abs(t) > 1.0)
    throw std::domain_error("legendre_eval: |t| > 1");
  double pm1 = 1.0, p = t;
  if (l == 0)
    return 1.0;
  for (int n = 1; n < l; ++n) {
    double pn1 = ((2 * n + 1) * t * p - n * pm1) / (n + 1);
    pm1 = p;
    p = pn1;
  }
  return p;
}

// all degrees 0..lmax at one point, cheapest form for quadrature loops
inline void legendre_all(int lmax, double t, double *out) {
  out[0] = 1.0;
  if (lmax == 0)
    return;
  out[1] = t;
  for (int n = 1; n < lmax; ++n)
    out[n + 1] = ((2 * n + 1) * t * out[n] - n * out[n - 1]) / (n + 1);
}

// P_l'(t) from (1-t^2) P_l' = l (P_{l-1} - t P_l); at the endpoints the
// identity degenerates and the analytic limit +-l(l+1)/2 is returned.
inline double legendre_deriv(int l, double t) {
  if (l < 0)
    throw std::invalid_argument("legendre_deriv: negative degree");
  if (std::abs(t) > 1.0)
    throw std::domain_error("legendre_deriv: |t| > 1");
  if (l == 0)
    return 0.0;
  if (t == 1.0)
    return 0.5 * l * (l + 1);
  if (t == -1.0)
    return (l % 2 == 0 ? -1.0 : 1.0) * 0.5 * l * (l + 1);
  double pl = legendre_eval(l, t), plm1 = legendre_eval(l - 1, t);
  return l * (plm1 - t * pl) / (1.0 - t * t);
}

struct QuadRule {
  VectorXd x, w; // nodes increasing in (-1,1), weights positive, sum 2
};

// n-point Gauss-Legendre on [-1,1]; Newton iteration from Chebyshev guesses.
inline QuadRule gauss_legendre(int n) {
  if (n < 1)
    throw std::invalid_argument("gauss_legendre: n < 1");
  QuadRule q;
  q.x.resize(n);
  q.w.resize(n);
  for (int k = 0; k < n; ++k) {
    // k-th root guess, descending in cos => ascending node order at the end
    double x = std::cos(pi * (k + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double pm1 = 1.0, p = x;
      for (int j = 1; j < n; ++j) {
        double pj1 = ((2 * j + 1) * x * p - j * pm1) / (j + 1);
        pm1 = p;
        p = pj1;
      }
      double dp = n * (pm1 - x * p) / (1.0 - x * x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15)
        break;
    }
    double pm1 = 1.0, p = x;
    for (int j = 1; j < n; ++j) {
      double pj1 = ((2 * j + 1) * x * p - j * pm1) / (j + 1);
      pm1 = p;
      p = pj1;
    }
    double dp = n * (pm1 - x * p) / (1.0 - x * x);
    q.x[n - 1 - k] = x;
    q.w[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

// G(l,l',m) = int_{-1}^{1} P_l P_l' P_m dt, fully symmetric.  Zero outside the
// triangle |l-l'| <= m <= l+l' and for odd l+l'+m; those zeros are exact
// (returned without touching the quadrature).
class GauntTable {
public:
  explicit GauntTable(int max_degree) : d_(max_degree) {
    if (max_degree < 0)
      throw std::invalid_argument("GauntTable: negative max_degree");
    tab_.assign(static_cast<std::size_t>((d_ + 1) * (d_ + 1) * (d_ + 1)), 0.0);
    std::map<int, QuadRule> rules;
    std::vector<double> pl(static_cast<std::size_t>(d_) + 1);
    for (int a = 0; a <= d_; ++a)
      for (int b = a; b <= d_; ++b)
        for (int c = b; c <= d_; ++c) {
          if ((a + b + c) % 2 != 0)
            continue;
          if (c > a + b) // a<=b<=c, so only the upper triangle edge can fail
            continue;
          int npts = (a + b + c) / 2 + 2;
          auto it = rules.find(npts);
          if (it == rules.end())
            it = rules.emplace(npts, gauss_legendre(npts)).first;
          const QuadRule &q = it->second;
          double s = 0.0;
          for (int k = 0; k < npts; ++k) {
            legendre_all(c, q.x[k], pl.data());
            s += q.w[k] * pl[a] * pl[b] * pl[c];
          }
          set_all_perms(a, b, c, s);
        }
  }

  int max_degree() const { return d_; }

  double operator()(int a, int b, int c) const {
    if (a < 0 || b < 0 || c < 0 || a > d_ || b > d_ || c > d_)
      throw std::out_of_range("GauntTable: index exceeds max_degree");
    return tab_[idx(a, b, c)];
  }

private:
  std::size_t idx(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * (d_ + 1) + b) * (d_ + 1) + c;
  }
  void set_all_perms(int a, int b, int c, double v) {
    tab_[idx(a, b, c)] = v;
    tab_[idx(a, c, b)] = v;
    tab_[idx(b, a, c)] = v;
    tab_[idx(b, c, a)] = v;
    tab_[idx(c, a, b)] = v;
    tab_[idx(c, b, a)] = v;
  }
  int d_;
  std::vector<double> tab_;
};

inline double gaunt(const GauntTable &tab, int l, int lp, int m) { return tab(l, lp, m); }

// sup over [-1,1) of |P_l - P_l'| / (1 - t), with the analytic t->1 limit
// |l(l+1) - l'(l'+1)|/2 included; sampled at Chebyshev-distributed points.
inline double gap_ratio(int l, int lp, int nsamples = 100000) {
  if (l < 0 || lp < 0)
    throw std::invalid_argument("gap_ratio: negative degree");
  if (l == lp)
    return 0.0;
  double best = 0.5 * std::abs(double(l) * (l + 1) - double(lp) * (lp + 1));
  for (int k = 1; k <= nsamples; ++k) {
    double t = std::cos(pi * k / (nsamples + 1)); // dense near both endpoints
    double q = std::abs(legendre_eval(l, t) - legendre_eval(lp, t)) / (1.0 - t);
    if (q > best)
      best = q;
  }
  return best;
}

// sum_{n=min+1}^{max} (2+n), the closed-form majorant for gap_ratio
inline double gap_ratio_bound(int l, int lp) {
  int lo = std::min(l, lp), hi = std::max(l, lp);
  double s = 0.0;
  for (int n = lo + 1; n <= hi; ++n)
    s += 2.0 + n;
  return s;
}

} // namespace sphfb
