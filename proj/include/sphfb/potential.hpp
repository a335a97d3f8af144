#pragma once
// Interaction data: V(|x|) = -1/|x| + w(|x|) with coupling kappa.  The w tail
// carries three sup-functionals used by bound checks and blowup thresholds:
//   sup_rw      = sup_r |r w(r)|
//   sup_wprime  = sup_r (1+r^2)^(1+eps) |w'(r)|     (on [0, rmax] for presets
//                 where the global sup does not exist)
//   sup_neg     = sup_r |w(r) + r w'(r)|_-          (negative part)
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "common.hpp"

namespace sphfb {

struct PotentialSpec {
  std::string name;
  double kappa = 1.0;
  double mass = 1.0;
  std::function<double(double)> w;      // null means w == 0
  std::function<double(double)> wprime; // null means w' == 0
  double sup_rw = 0.0;
  double sup_wprime = 0.0;
  double wprime_eps = 1.0; // the eps in (1+r^2)^(1+eps)
  double sup_neg = 0.0;

  bool has_w() const { return static_cast<bool>(w); }
  double eval_w(double s) const { return w ? w(s) : 0.0; }
  double eval_v(double s) const { return -1.0 / s + eval_w(s); }
};

inline void require_potential_basics(double kappa, double mass) {
  if (!(kappa > 0.0))
    throw std::invalid_argument("potential: coupling must be positive");
  if (mass < 0.0)
    throw std::invalid_argument("potential: mass must be nonnegative");
}

inline PotentialSpec make_newton(double kappa, double mass) {
  require_potential_basics(kappa, mass);
  PotentialSpec p;
  p.name = "newton";
  p.kappa = kappa;
  p.mass = mass;
  return p;
}

// w(r) = c (1 - exp(-lambda r)) / r: screens the singularity down to strength
// (1 - c)/r at the origin when c in (0,1].  (1+r^2)^(1+eps)|w'| grows like
// r^(2 eps) at infinity, so sup_wprime is taken on [0, rmax].
inline PotentialSpec make_yukawa_screened(double kappa, double mass, double c, double lambda,
                                          double rmax) {
  require_potential_basics(kappa, mass);
  if (lambda <= 0.0 || rmax <= 0.0)
    throw std::invalid_argument("yukawa_screened: lambda and rmax must be positive");
  PotentialSpec p;
  p.name = "yukawa-screened";
  p.kappa = kappa;
  p.mass = mass;
  // the direct forms lose eps/x^2 worth of digits to cancellation near the
  // origin, so switch to series well before that bites
  p.w = [c, lambda](double r) {
    double x = lambda * r;
    if (x < 1e-2)
      return c * lambda *
             (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0);
    return c * (1.0 - std::exp(-x)) / r;
  };
  p.wprime = [c, lambda](double r) {
    double x = lambda * r;
    if (x < 1e-2)
      return c * lambda * lambda *
             (-0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0 - x * x * x * x / 144.0);
    return c * (lambda * std::exp(-x) / r - (1.0 - std::exp(-x)) / (r * r));
  };
  p.sup_rw = std::abs(c);
  // w + r w' = (r w)' = c lambda exp(-lambda r)
  p.sup_neg = c >= 0.0 ? 0.0 : std::abs(c) * lambda;
  p.wprime_eps = 0.5;
  double sup = 0.0;
  const int samples = 200000;
  for (int i = 1; i <= samples; ++i) {
    double r = rmax * i / samples;
    double v = std::pow(1.0 + r * r, 1.0 + p.wprime_eps) * std::abs(p.wprime(r));
    sup = std::max(sup, v);
  }
  p.sup_wprime = sup * (1.0 + 1e-9) + std::abs(c) * lambda * lambda * 0.5 * 1e-9;
  return p;
}

// w(r) = c exp(-r^2 / sigma^2)
inline PotentialSpec make_gaussian_bump(double kappa, double mass, double c, double sigma) {
  require_potential_basics(kappa, mass);
  if (sigma <= 0.0)
    throw std::invalid_argument("gaussian_bump: sigma must be positive");
  PotentialSpec p;
  p.name = "gaussian";
  p.kappa = kappa;
  p.mass = mass;
  p.w = [c, sigma](double r) { return c * std::exp(-r * r / (sigma * sigma)); };
  p.wprime = [c, sigma](double r) {
    return -2.0 * c * r / (sigma * sigma) * std::exp(-r * r / (sigma * sigma));
  };
  p.sup_rw = std::abs(c) * sigma * std::exp(-0.5) / std::sqrt(2.0);
  // w + r w' = c (1 - 2 r^2/sigma^2) exp(-r^2/sigma^2); minimum of the
  // positive-c branch sits at r^2 = (3/2) sigma^2 with value -2 exp(-3/2)
  p.sup_neg = c >= 0.0 ? 2.0 * c * std::exp(-1.5) : std::abs(c);
  p.wprime_eps = 1.0;
  double sup = 0.0;
  const int samples = 200000;
  const double reach = 30.0 * sigma;
  for (int i = 1; i <= samples; ++i) {
    double r = reach * i / samples;
    double v = std::pow(1.0 + r * r, 1.0 + p.wprime_eps) * std::abs(p.wprime(r));
    sup = std::max(sup, v);
  }
  p.sup_wprime = sup * (1.0 + 1e-9);
  return p;
}

// dense-sampling check that the stored sup-functionals dominate the actual
// functions on (0, rmax]
inline void validate_potential(const PotentialSpec &p, double rmax, int samples = 100000) {
  require_potential_basics(p.kappa, p.mass);
  if (!p.has_w()) {
    if (p.sup_rw != 0.0 || p.sup_wprime != 0.0 || p.sup_neg != 0.0)
      throw std::invalid_argument("validate_potential: bare attraction must have zero sups");
    return;
  }
  double slack = 1e-9;
  for (int i = 1; i <= samples; ++i) {
    double r = rmax * i / samples;
    double wv = p.w(r);
    double wp = p.wprime ? p.wprime(r) : 0.0;
    if (std::abs(r * wv) > p.sup_rw * (1.0 + slack) + slack)
      throw std::invalid_argument("validate_potential: sup_rw understated");
    if (std::pow(1.0 + r * r, 1.0 + p.wprime_eps) * std::abs(wp) >
        p.sup_wprime * (1.0 + slack) + slack)
      throw std::invalid_argument("validate_potential: sup_wprime understated");
    double neg = std::max(0.0, -(wv + r * wp));
    if (neg > p.sup_neg * (1.0 + slack) + slack)
      throw std::invalid_argument("validate_potential: sup_neg understated");
  }
}

} // namespace sphfb
