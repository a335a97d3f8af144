#pragma once
// Time integration of the sector flows.
//
// Mean-field flow:  dg_l/dt = -i [H_l, g_l]
// Paired flow adds the pairing channel:
//   dg_l/dt = -i ([H_l, g_l] + P_l o a_l^adj - a_l o P_l^adj)
//   da_l/dt = -i (H_l o a_l + a_l o H_l^T + P_l - g_l o P_l - P_l o g_l^T)
// with o the weighted kernel composition.  Classical RK4 with step halving on
// the energy drift; periodic re-hermitization, re-antisymmetrization, and
// spectrum clamping; breakdown is a reported result, not an exception.
#include <cstdio>

#include "meanfield.hpp"

namespace sphfb {

enum class FlowKind { mean_field, paired };

enum class BreakdownReason { none, dt_collapse, kinetic_ceiling, boundary_leak, constraint_violation };

inline const char *to_string(BreakdownReason r) {
  switch (r) {
  case BreakdownReason::dt_collapse: return "dt-collapse";
  case BreakdownReason::kinetic_ceiling: return "kinetic-ceiling";
  case BreakdownReason::boundary_leak: return "boundary-leak";
  case BreakdownReason::constraint_violation: return "constraint-violation";
  default: return "none";
  }
}

struct IntegratorConfig {
  double t_final = 1.0;
  double dt_init = 2e-3;
  double dt_min = 1e-7;
  int rk_order = 4; // the only supported order
  int projection_interval = 16;
  int sample_interval = 8;
  double tol_conservation = 1e-6; // global relative energy budget over [0, t_final]
  double tol_constraint = 1e-6;   // clamp threshold; larger defects abort the run
  double kinetic_ceiling = 1e5;
  double boundary_threshold = 1e-8;

  void validate() const {
    if (t_final <= 0.0 || dt_init <= 0.0 || dt_min <= 0.0 || dt_min >= dt_init)
      throw std::invalid_argument("IntegratorConfig: need 0 < dt_min < dt_init and t_final > 0");
    if (rk_order != 4)
      throw std::invalid_argument("IntegratorConfig: only rk_order 4 is supported");
    if (projection_interval <= 0 || sample_interval <= 0)
      throw std::invalid_argument("IntegratorConfig: intervals must be positive");
    if (tol_conservation <= 0.0 || tol_constraint <= 0.0 || kinetic_ceiling <= 0.0 ||
        boundary_threshold <= 0.0)
      throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
  }
};

struct TrajectorySample {
  double t = 0.0;
  double dt = 0.0;
  Moments m;
  ConstraintReport c;
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  bool breakdown = false;
  BreakdownReason reason = BreakdownReason::none;
  std::string note;
  long steps = 0;
  long rejected = 0;
  PairedState final_state;
};

// ---------------------------------------------------------------------------
// right-hand sides

struct SectorDeriv {
  std::vector<MatrixXcd> dg, da;
};

namespace detail {

inline void require_fresh(const MeanFieldBlocks &mf, std::uint64_t stamp, const char *who) {
  if (mf.source != stamp)
    throw std::invalid_argument(std::string(who) + ": blocks built from a different state");
}

inline std::string short_num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

inline std::vector<MatrixXcd> hf_rhs_core(const std::vector<MatrixXcd> &g, const RadialGrid &gr,
                                          const MeanFieldBlocks &mf) {
  const cplx mi(0.0, -1.0);
  std::vector<MatrixXcd> dg(g.size());
  for (std::size_t l = 0; l < g.size(); ++l)
    dg[l] = mi * (kernel_product(gr, mf.H[l].k, g[l]) - kernel_product(gr, g[l], mf.H[l].k));
  return dg;
}

inline SectorDeriv hfb_rhs_core(const PairedState &st, const MeanFieldBlocks &mf) {
  const RadialGrid &gr = *st.grid;
  const cplx mi(0.0, -1.0);
  SectorDeriv d;
  d.dg.resize(st.g.size());
  d.da.resize(st.g.size());
  for (int l = 0; l <= st.lmax; ++l) {
    const MatrixXcd &h = mf.H[l].k, &p = mf.P[l].k, &g = st.g[l], &a = st.a[l];
    d.dg[l] = mi * (kernel_product(gr, h, g) - kernel_product(gr, g, h) + pair_source(mf.P[l], a));
    d.da[l] = mi * (kernel_product(gr, h, a) + kernel_product(gr, a, h.transpose()) + p -
                    kernel_product(gr, g, p) - kernel_product(gr, p, g.transpose()));
  }
  return d;
}

} // namespace detail

inline std::vector<MatrixXcd> hf_rhs(const ReducedState &st, const MeanFieldBlocks &mf) {
  detail::require_fresh(mf, PairedState::from_reduced(st).stamp(), "hf_rhs");
  return detail::hf_rhs_core(st.g, *st.grid, mf);
}

inline SectorDeriv hfb_rhs(const PairedState &st, const MeanFieldBlocks &mf) {
  detail::require_fresh(mf, st.stamp(), "hfb_rhs");
  return detail::hfb_rhs_core(st, mf);
}

// ---------------------------------------------------------------------------
// stepping

namespace detail {

inline PairedState shifted(const PairedState &x, double c, const SectorDeriv &d) {
  PairedState y = x;
  for (int l = 0; l <= x.lmax; ++l) {
    y.g[l] += c * d.dg[l];
    if (!d.da.empty())
      y.a[l] += c * d.da[l];
  }
  return y;
}

inline SectorDeriv eval_rhs(const PairedState &st, FlowKind kind, const SectorKinetics &kin,
                            const KernelTable &tab, double kappa) {
  MeanFieldBlocks mf = build_mean_field(st, kin, tab, kappa);
  if (kind == FlowKind::mean_field) {
    SectorDeriv d;
    d.dg = hf_rhs_core(st.g, *st.grid, mf);
    return d; // da left empty, the pairing channel is not touched
  }
  return hfb_rhs_core(st, mf);
}

inline void hermitize(PairedState &st) {
  for (int l = 0; l <= st.lmax; ++l) {
    st.g[l] = 0.5 * (st.g[l] + st.g[l].adjoint()).eval();
    st.a[l] = 0.5 * (st.a[l] - st.a[l].transpose()).eval();
  }
}

// clamp the occupation spectrum into [0, 1] in the weighted similarity picture
inline void clamp_spectrum(PairedState &st) {
  const RadialGrid &gr = *st.grid;
  VectorXcd s = gr.wsqrt.cast<cplx>(), si = gr.wsqrt.cwiseInverse().cast<cplx>();
  for (int l = 0; l <= st.lmax; ++l) {
    MatrixXcd gt = s.asDiagonal() * st.g[l] * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eg(0.5 * (gt + gt.adjoint()));
    if (eg.eigenvalues().minCoeff() >= 0.0 && eg.eigenvalues().maxCoeff() <= 1.0)
      continue;
    VectorXd ev = eg.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
    MatrixXcd back = eg.eigenvectors() * ev.cast<cplx>().asDiagonal() * eg.eigenvectors().adjoint();
    st.g[l] = si.asDiagonal() * back * si.asDiagonal();
  }
}

} // namespace detail

inline PairedState rk4_step(const PairedState &st, FlowKind kind, double dt,
                            const SectorKinetics &kin, const KernelTable &tab, double kappa) {
  using detail::eval_rhs;
  using detail::shifted;
  SectorDeriv k1 = eval_rhs(st, kind, kin, tab, kappa);
  SectorDeriv k2 = eval_rhs(shifted(st, 0.5 * dt, k1), kind, kin, tab, kappa);
  SectorDeriv k3 = eval_rhs(shifted(st, 0.5 * dt, k2), kind, kin, tab, kappa);
  SectorDeriv k4 = eval_rhs(shifted(st, dt, k3), kind, kin, tab, kappa);
  PairedState out = st;
  double c = dt / 6.0;
  for (int l = 0; l <= st.lmax; ++l) {
    out.g[l] += c * (k1.dg[l] + 2.0 * k2.dg[l] + 2.0 * k3.dg[l] + k4.dg[l]);
    if (!k1.da.empty())
      out.a[l] += c * (k1.da[l] + 2.0 * k2.da[l] + 2.0 * k3.da[l] + k4.da[l]);
  }
  return out;
}

inline TrajectoryRecord integrate(const PairedState &initial, FlowKind kind,
                                  const IntegratorConfig &cfg, const SectorKinetics &kin,
                                  const KernelTable &tab, double kappa) {
  cfg.validate();
  if (kind == FlowKind::mean_field && pairing_mass(initial) > 1e-12)
    throw std::invalid_argument("integrate: mean-field flow needs a vanishing pairing channel");
  if (kin.lmax() < initial.lmax + 1)
    throw std::invalid_argument("integrate: kinetic family must reach lmax + 1 for the moments");
  ConstraintReport c0 = check_constraints(initial, cfg.tol_constraint);
  if (!c0.pass)
    throw std::invalid_argument("integrate: initial state violates the constraints");

  TrajectoryRecord rec;
  PairedState st = initial;
  Moments m0 = moments(st, kin, tab, kappa);
  rec.samples.push_back({0.0, cfg.dt_init, m0, c0});
  double scale_e = std::max(std::abs(m0.energy), m0.kinetic);
  double e_prev = m0.energy;
  double t = 0.0, dt = cfg.dt_init;
  long clean = 0;
  bool sampled = true;

  auto fail = [&](BreakdownReason r, const std::string &note) {
    rec.breakdown = true;
    rec.reason = r;
    rec.note = note;
  };
  auto take_sample = [&](double h) {
    rec.samples.push_back({t, h, moments(st, kin, tab, kappa),
                           check_constraints(st, cfg.tol_constraint)});
    sampled = true;
  };

  while (cfg.t_final - t > 0.5 * cfg.dt_min && !rec.breakdown) {
    double h = std::min(dt, cfg.t_final - t);
    PairedState next = rk4_step(st, kind, h, kin, tab, kappa);
    double e_next = paired_energy(next, kin, tab, kappa);
    // the floor keeps plain roundoff from rejecting arbitrarily small steps
    double budget = std::max(cfg.tol_conservation * scale_e * (h / cfg.t_final),
                             1e-13 * scale_e);
    if (!std::isfinite(e_next) || std::abs(e_next - e_prev) > budget) {
      ++rec.rejected;
      clean = 0;
      dt = 0.5 * h;
      if (dt < cfg.dt_min) {
        fail(BreakdownReason::dt_collapse,
             "step size fell under dt_min at t = " + std::to_string(t));
        break;
      }
      continue;
    }

    st = std::move(next);
    t += h;
    e_prev = e_next;
    ++rec.steps;
    sampled = false;
    if (++clean >= 8 && dt < cfg.dt_init) {
      dt = std::min(2.0 * dt, cfg.dt_init);
      clean = 0;
    }

    if (rec.steps % cfg.projection_interval == 0) {
      detail::hermitize(st);
      ConstraintReport cr = check_constraints(st, cfg.tol_constraint);
      if (!cr.pass) {
        fail(BreakdownReason::constraint_violation,
             std::string("constraint drift beyond the clamp threshold in sector ") +
                 std::to_string(cr.worst_sector) + " at t = " + std::to_string(t));
        take_sample(h);
        break;
      }
      detail::clamp_spectrum(st);
      e_prev = paired_energy(st, kin, tab, kappa);
    }

    double kin_e = detail::kinetic_sum(st.g, *st.grid, kin);
    double rim = radial_density(st)[st.grid->n - 1];
    if (kin_e > cfg.kinetic_ceiling)
      fail(BreakdownReason::kinetic_ceiling,
           "kinetic energy " + detail::short_num(kin_e) + " above the ceiling at t = " +
               std::to_string(t));
    else if (rim > cfg.boundary_threshold)
      fail(BreakdownReason::boundary_leak,
           "boundary density " + detail::short_num(rim) + " at t = " + std::to_string(t));

    if (rec.breakdown || rec.steps % cfg.sample_interval == 0 || t >= cfg.t_final)
      take_sample(h);
  }

  if (!sampled)
    take_sample(dt);
  rec.final_state = std::move(st);
  return rec;
}

inline TrajectoryRecord integrate(const ReducedState &initial, const IntegratorConfig &cfg,
                                  const SectorKinetics &kin, const KernelTable &tab,
                                  double kappa) {
  return integrate(PairedState::from_reduced(initial), FlowKind::mean_field, cfg, kin, tab,
                   kappa);
}

// ---------------------------------------------------------------------------
// paired-vs-mean-field cross check

struct FlowComparison {
  bool applicable = false;
  double max_deviation = 0.0;
  std::string note;
  TrajectoryRecord mean_field, paired;
};

// runs both flows from the same pairing-free datum and reports the worst
// sector-wise deviation of the endpoints
inline FlowComparison flow_consistency(const PairedState &initial, const IntegratorConfig &cfg,
                                       const SectorKinetics &kin, const KernelTable &tab,
                                       double kappa) {
  FlowComparison fc;
  if (pairing_mass(initial) > 1e-12) {
    fc.note = "initial pairing channel is nonzero; the flows are not comparable";
    return fc;
  }
  fc.applicable = true;
  fc.mean_field = integrate(initial, FlowKind::mean_field, cfg, kin, tab, kappa);
  fc.paired = integrate(initial, FlowKind::paired, cfg, kin, tab, kappa);
  for (int l = 0; l <= initial.lmax; ++l) {
    fc.max_deviation = std::max(
        fc.max_deviation, (fc.mean_field.final_state.g[l] - fc.paired.final_state.g[l])
                              .cwiseAbs()
                              .maxCoeff());
    fc.max_deviation =
        std::max(fc.max_deviation, fc.paired.final_state.a[l].cwiseAbs().maxCoeff());
  }
  fc.note = fc.mean_field.breakdown != fc.paired.breakdown
                ? "flows disagree on breakdown"
                : "endpoints compared at t = " + std::to_string(
                      fc.paired.samples.back().t);
  return fc;
}

} // namespace sphfb
