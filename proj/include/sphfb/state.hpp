#pragma once
// Sector-decomposed states of the radial evolution.  A reduced state keeps one
// hermitian kernel g_l per angular sector; a paired state adds an antisymmetric
// pairing kernel a_l beside each g_l.  The 3D object behind the sectors is
//   gamma(x,y) = sum_l g_l(|x|,|y|) (2l+1)/(4 pi) P_l(cos theta_xy)
// so Tr gamma = sum_l (2l+1) tr g_l and rho(r) = (1/4 pi) sum_l (2l+1) g_l(r,r).
// The pairing kernel lifts the same way.
#include <limits>
#include <vector>

#include "kernels.hpp"
#include "kinetic.hpp"

namespace sphfb {

struct ReducedState {
  int lmax = 0;
  std::shared_ptr<const RadialGrid> grid;
  std::vector<MatrixXcd> g; // index = l

  static ReducedState zero(int lmax, std::shared_ptr<const RadialGrid> grid) {
    if (lmax < 0)
      throw std::invalid_argument("ReducedState: lmax < 0");
    ReducedState s;
    s.lmax = lmax;
    s.grid = std::move(grid);
    s.g.assign(lmax + 1, MatrixXcd::Zero(s.grid->n, s.grid->n));
    return s;
  }

  std::uint64_t stamp() const {
    std::uint64_t h = fnv1a("reduced-state");
    h = fnv1a(&lmax, sizeof lmax, h);
    h = fnv1a(&grid->n, sizeof grid->n, h);
    h = fnv1a(&grid->R, sizeof grid->R, h);
    h = fnv1a(to_string(grid->scheme), h);
    for (const auto &m : g)
      h = hash_matrix(m, h);
    return h;
  }
};

struct PairedState {
  int lmax = 0;
  std::shared_ptr<const RadialGrid> grid;
  std::vector<MatrixXcd> g, a; // index = l

  static PairedState zero(int lmax, std::shared_ptr<const RadialGrid> grid) {
    if (lmax < 0)
      throw std::invalid_argument("PairedState: lmax < 0");
    PairedState s;
    s.lmax = lmax;
    s.grid = std::move(grid);
    s.g.assign(lmax + 1, MatrixXcd::Zero(s.grid->n, s.grid->n));
    s.a.assign(lmax + 1, MatrixXcd::Zero(s.grid->n, s.grid->n));
    return s;
  }

  static PairedState from_reduced(const ReducedState &r) {
    PairedState s = zero(r.lmax, r.grid);
    s.g = r.g;
    return s;
  }

  ReducedState reduced() const {
    ReducedState r;
    r.lmax = lmax;
    r.grid = grid;
    r.g = g;
    return r;
  }

  std::uint64_t stamp() const {
    std::uint64_t h = fnv1a("paired-state");
    h = fnv1a(&lmax, sizeof lmax, h);
    h = fnv1a(&grid->n, sizeof grid->n, h);
    h = fnv1a(&grid->R, sizeof grid->R, h);
    h = fnv1a(to_string(grid->scheme), h);
    for (const auto &m : g)
      h = hash_matrix(m, h);
    for (const auto &m : a)
      h = hash_matrix(m, h);
    return h;
  }
};

// ---------------------------------------------------------------------------
// traces and moments

inline double particle_number(const std::vector<MatrixXcd> &g, const RadialGrid &gr) {
  double acc = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l)
    acc += (2.0 * l + 1.0) * std::real(weighted_trace(gr, g[l]));
  return acc;
}
inline double particle_number(const ReducedState &s) { return particle_number(s.g, *s.grid); }
inline double particle_number(const PairedState &s) { return particle_number(s.g, *s.grid); }

// Tr (|L|^2)^(s/2) gamma = sum_l (2l+1) (l(l+1))^(s/2) tr g_l
inline double angular_moment(const std::vector<MatrixXcd> &g, const RadialGrid &gr, double s) {
  if (!(s > 0.0))
    throw std::invalid_argument("angular_moment: need s > 0");
  double acc = 0.0;
  for (std::size_t l = 1; l < g.size(); ++l)
    acc += (2.0 * l + 1.0) * std::pow(double(l) * (l + 1.0), 0.5 * s) *
           std::real(weighted_trace(gr, g[l]));
  return acc;
}
inline double angular_moment(const ReducedState &st, double s) {
  return angular_moment(st.g, *st.grid, s);
}
inline double angular_moment(const PairedState &st, double s) {
  return angular_moment(st.g, *st.grid, s);
}

inline VectorXd radial_density(const std::vector<MatrixXcd> &g, const RadialGrid &gr) {
  VectorXd rho = VectorXd::Zero(gr.n);
  for (std::size_t l = 0; l < g.size(); ++l)
    rho += (2.0 * l + 1.0) / (4.0 * pi) * g[l].diagonal().real();
  return rho;
}
inline VectorXd radial_density(const ReducedState &s) { return radial_density(s.g, *s.grid); }
inline VectorXd radial_density(const PairedState &s) { return radial_density(s.g, *s.grid); }

// Tr alpha* alpha = sum_l (2l+1) |a_l|_HS^2
inline double pairing_mass(const PairedState &s) {
  double acc = 0.0;
  for (int l = 0; l <= s.lmax; ++l)
    acc += (2.0 * l + 1.0) * std::real(hs_inner(*s.grid, s.a[l], s.a[l]));
  return acc;
}

// ---------------------------------------------------------------------------
// energies

struct EnergyParts {
  double kinetic = 0.0;
  double direct = 0.0;   // int int V rho rho (no coupling factor)
  double exchange = 0.0; // int int V |gamma|^2
  double pairing = 0.0;  // int int V |alpha|^2
  double total = 0.0;    // kinetic + kappa/2 (direct - exchange + pairing)
};

namespace detail {

// kernel tables need not reach the state's top sector: sectors beyond the
// interaction cutoff are legal as long as they are identically zero
inline void require_empty_beyond(const std::vector<MatrixXcd> &b, int cutoff, const char *who) {
  for (std::size_t l = cutoff + 1; l < b.size(); ++l)
    if (b[l].cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument(std::string(who) +
                                  ": nonzero sector beyond the kernel cutoff");
}

inline void require_coverage(int lmax, const SectorKinetics &kin, const KernelTable &tab,
                             const RadialGrid &gr, const char *who) {
  if (kin.lmax() < lmax)
    throw std::invalid_argument(std::string(who) + ": kinetic family stops below the state cutoff");
  require_same_grid(gr, *tab.grid, who);
  require_same_grid(gr, *kin.grid, who);
}

inline double kinetic_sum(const std::vector<MatrixXcd> &g, const RadialGrid &gr,
                          const SectorKinetics &kin) {
  double acc = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l)
    acc += (2.0 * l + 1.0) * std::real(weighted_trace_product(gr, kin.K[l].k, g[l]));
  return acc;
}

// direct = 4 pi sum_i w_i rho_i (V * rho)_i, and the entrywise-kernel pairing
// sum (1/4 pi) sum_{l,l'} (2l+1)(2l'+1) <b_l, F_{l,l'} o b_l'> for the
// exchange (b = g) and pairing (b = a) integrals
inline double direct_sum(const VectorXd &rho, const RadialGrid &gr, const KernelTable &tab) {
  VectorXd vr = direct_potential(rho, gr, tab);
  return 4.0 * pi * gr.w.dot(rho.cwiseProduct(vr));
}

inline double pair_kernel_sum(const std::vector<MatrixXcd> &b, const RadialGrid &gr,
                              const KernelTable &tab) {
  require_empty_beyond(b, tab.lmax, "pair_kernel_sum");
  std::size_t top = std::min(b.size(), static_cast<std::size_t>(tab.lmax) + 1);
  double acc = 0.0;
  for (std::size_t l = 0; l < top; ++l)
    for (std::size_t lp = 0; lp < top; ++lp) {
      MatrixXcd fb = tab.f(int(l), int(lp)).cast<cplx>().cwiseProduct(b[lp]);
      acc += (2.0 * l + 1.0) * (2.0 * lp + 1.0) / (4.0 * pi) *
             std::real(hs_inner(gr, b[l], fb));
    }
  return acc;
}

} // namespace detail

inline EnergyParts mean_field_energy_parts(const ReducedState &st, const SectorKinetics &kin,
                                           const KernelTable &tab, double kappa) {
  detail::require_coverage(st.lmax, kin, tab, *st.grid, "mean_field_energy");
  EnergyParts e;
  e.kinetic = detail::kinetic_sum(st.g, *st.grid, kin);
  e.direct = detail::direct_sum(radial_density(st), *st.grid, tab);
  e.exchange = detail::pair_kernel_sum(st.g, *st.grid, tab);
  e.total = e.kinetic + 0.5 * kappa * (e.direct - e.exchange);
  return e;
}

inline double mean_field_energy(const ReducedState &st, const SectorKinetics &kin,
                                const KernelTable &tab, double kappa) {
  return mean_field_energy_parts(st, kin, tab, kappa).total;
}

inline EnergyParts paired_energy_parts(const PairedState &st, const SectorKinetics &kin,
                                       const KernelTable &tab, double kappa) {
  detail::require_coverage(st.lmax, kin, tab, *st.grid, "paired_energy");
  EnergyParts e;
  e.kinetic = detail::kinetic_sum(st.g, *st.grid, kin);
  e.direct = detail::direct_sum(radial_density(st), *st.grid, tab);
  e.exchange = detail::pair_kernel_sum(st.g, *st.grid, tab);
  e.pairing = detail::pair_kernel_sum(st.a, *st.grid, tab);
  e.total = e.kinetic + 0.5 * kappa * (e.direct - e.exchange + e.pairing);
  return e;
}

inline double paired_energy(const PairedState &st, const SectorKinetics &kin,
                            const KernelTable &tab, double kappa) {
  return paired_energy_parts(st, kin, tab, kappa).total;
}

// ---------------------------------------------------------------------------
// virial moments

// Tr sum_i x_i K x_i gamma.  Multiplying by the direction cosines shifts each
// sector into its neighbours (three-term recurrence of the P_l), so sector m
// of r r' gamma collects m g_{m-1} + (m+1) g_{m+1} over 2m+1 and the sum
// needs kinetic operators through lmax + 1.
inline double virial_xkx(const std::vector<MatrixXcd> &g, const RadialGrid &gr,
                         const SectorKinetics &kin) {
  int lmax = static_cast<int>(g.size()) - 1;
  if (kin.lmax() < lmax + 1)
    throw std::invalid_argument("virial_xkx: kinetic family must reach lmax + 1");
  MatrixXcd rr = (gr.r * gr.r.transpose()).cast<cplx>();
  double acc = 0.0;
  for (int m = 0; m <= lmax + 1; ++m) {
    MatrixXcd b = MatrixXcd::Zero(gr.n, gr.n);
    if (m - 1 >= 0 && m - 1 <= lmax)
      b += double(m) * g[m - 1];
    if (m + 1 <= lmax)
      b += double(m + 1) * g[m + 1];
    acc += std::real(weighted_trace_product(gr, kin.K[m].k, rr.cwiseProduct(b)));
  }
  return acc;
}

// Tr (x.p + p.x) gamma; vanishes on states with real sector kernels
inline double virial_dilation(const std::vector<MatrixXcd> &g,
                              const std::shared_ptr<const RadialGrid> &grid) {
  SectorOperator a = build_dilation(grid);
  double acc = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l)
    acc += (2.0 * l + 1.0) * std::real(weighted_trace_product(*grid, a.k, g[l]));
  return acc;
}

// ---------------------------------------------------------------------------
// moment bundle

struct Moments {
  double particle_number = 0.0;
  double kinetic = 0.0;
  double energy = 0.0; // includes the pairing term for paired states
  double l2 = 0.0;     // Tr |L|^2 gamma
  double l3 = 0.0;     // s = 3
  double l6e = 0.0;    // s = 6.5, the 6+eps moment with eps = 0.5
  double virial_m = 0.0;
  double virial_a = 0.0;
  double pairing_mass = 0.0;
  double boundary_density = 0.0;
};

// kin must reach lmax + 1 (second virial moment couples adjacent sectors)
inline Moments moments(const PairedState &st, const SectorKinetics &kin, const KernelTable &tab,
                       double kappa) {
  EnergyParts e = paired_energy_parts(st, kin, tab, kappa);
  Moments m;
  m.particle_number = particle_number(st);
  m.kinetic = e.kinetic;
  m.energy = e.total;
  m.l2 = angular_moment(st, 2.0);
  m.l3 = angular_moment(st, 3.0);
  m.l6e = angular_moment(st, 6.5);
  m.virial_m = virial_xkx(st.g, *st.grid, kin);
  m.virial_a = virial_dilation(st.g, st.grid);
  m.pairing_mass = pairing_mass(st);
  m.boundary_density = radial_density(st)[st.grid->n - 1];
  return m;
}

inline Moments moments(const ReducedState &st, const SectorKinetics &kin, const KernelTable &tab,
                       double kappa) {
  return moments(PairedState::from_reduced(st), kin, tab, kappa);
}

// ---------------------------------------------------------------------------
// constraints

struct ConstraintReport {
  double tol = 0.0;
  bool pass = false;
  double pauli_low = 0.0;      // smallest sector eigenvalue over all sectors
  double pauli_high = 0.0;     // largest excess over 1
  double pairing_excess = 0.0; // smallest eigenvalue of g(1-g) - a a^adj
  double hermiticity = 0.0;    // worst |g - g^adj| entry
  double antisymmetry = 0.0;   // worst |a + a^T| entry
  int worst_sector = -1;
};

inline ConstraintReport check_constraints(const PairedState &st, double tol) {
  const RadialGrid &gr = *st.grid;
  VectorXcd s = gr.wsqrt.cast<cplx>();
  ConstraintReport rep;
  rep.tol = tol;
  rep.pauli_low = 1.0;
  rep.pairing_excess = 1.0;
  double worst = std::numeric_limits<double>::max();
  for (int l = 0; l <= st.lmax; ++l) {
    rep.hermiticity = std::max(rep.hermiticity,
                               (st.g[l] - st.g[l].adjoint()).cwiseAbs().maxCoeff());
    rep.antisymmetry = std::max(rep.antisymmetry,
                                (st.a[l] + st.a[l].transpose()).cwiseAbs().maxCoeff());
    MatrixXcd gh = 0.5 * (st.g[l] + st.g[l].adjoint());
    MatrixXcd gt = s.asDiagonal() * gh * s.asDiagonal();
    MatrixXcd at = s.asDiagonal() * st.a[l] * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eg(gt);
    double lo = eg.eigenvalues().minCoeff(), hi = eg.eigenvalues().maxCoeff();
    MatrixXcd bog = gt - gt * gt - at * at.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eb(0.5 * (bog + bog.adjoint()));
    double blo = eb.eigenvalues().minCoeff();
    rep.pauli_low = std::min(rep.pauli_low, lo);
    rep.pauli_high = std::max(rep.pauli_high, hi - 1.0);
    rep.pairing_excess = std::min(rep.pairing_excess, blo);
    double margin = std::min({lo, 1.0 - hi, blo});
    if (margin < worst) {
      worst = margin;
      rep.worst_sector = l;
    }
  }
  rep.pass = rep.pauli_low >= -tol && rep.pauli_high <= tol && rep.pairing_excess >= -tol &&
             rep.hermiticity <= tol && rep.antisymmetry <= tol;
  return rep;
}

inline ConstraintReport check_constraints(const ReducedState &st, double tol) {
  return check_constraints(PairedState::from_reduced(st), tol);
}

// ---------------------------------------------------------------------------
// initial data

enum class StateFamily { gaussian_shells, thermal_like };
enum class EnergyTarget { none, negative_mean_field, negative_paired };

struct InitialParams {
  StateFamily family = StateFamily::gaussian_shells;
  int lmax = 0;
  double width = 1.0;     // radial scale of the shells
  double occupancy = 0.8; // top occupation, in (0, 1]
  double occ_decay = 0.6; // geometric decay of occupation per sector
  double beta = 2.0;      // thermal-like inverse temperature
  double mu = 2.0;        // thermal-like chemical potential
  double pairing = 0.0;   // pairing seed amplitude in [0, 1)
  double kappa_max = 1e6; // coupling cap for the rescaling loop
};

struct InitialData {
  PairedState state;
  double kappa = 0.0;     // coupling after rescaling
  double energy = 0.0;    // energy at that coupling
  double threshold = 0.0; // collapse threshold at that coupling
};

namespace detail {

// weighted Gram-Schmidt of seed against f1, both unit afterwards
inline VectorXcd orthonormal_partner(const VectorXcd &f1, VectorXd seed, const RadialGrid &gr) {
  VectorXcd f2 = seed.cast<cplx>();
  cplx ov = (f1.conjugate().cwiseProduct(f2).cwiseProduct(gr.w.cast<cplx>())).sum();
  f2 -= ov * f1;
  double nrm = std::sqrt(std::real(
      (f2.conjugate().cwiseProduct(f2).cwiseProduct(gr.w.cast<cplx>())).sum()));
  if (nrm <= 0.0)
    throw std::runtime_error("initial data: degenerate shell seeds");
  return f2 / nrm;
}

inline void fill_family(PairedState &st, const InitialParams &p, const SectorKinetics &kin) {
  const RadialGrid &gr = *st.grid;
  for (int l = 0; l <= p.lmax; ++l) {
    double occ = std::min(1.0, p.occupancy * std::pow(p.occ_decay, l));
    if (p.family == StateFamily::gaussian_shells) {
      VectorXd s1(gr.n), s2(gr.n);
      for (int i = 0; i < gr.n; ++i) {
        double r = gr.r[i];
        double e = std::exp(-0.5 * r * r / (p.width * p.width));
        s1[i] = std::pow(r, l) * e;
        s2[i] = std::pow(r, l) * r * r * e;
      }
      double n1 = std::sqrt(s1.cwiseAbs2().dot(gr.w));
      VectorXcd f1 = (s1 / n1).cast<cplx>();
      if (p.pairing > 0.0) {
        VectorXcd f2 = orthonormal_partner(f1, s2, gr);
        st.g[l] = occ * (f1 * f1.adjoint() + f2 * f2.adjoint());
        double c = p.pairing * std::sqrt(std::max(0.0, occ * (1.0 - occ)));
        st.a[l] = c * (f1 * f2.transpose() - f2 * f1.transpose());
      } else {
        st.g[l] = occ * (f1 * f1.adjoint());
      }
    } else {
      SectorEigen e = eigh(kin.K[l]);
      VectorXd n(e.eval.size());
      for (Eigen::Index q = 0; q < e.eval.size(); ++q)
        n[q] = occ / (1.0 + std::exp(p.beta * (e.eval[q] - p.mu)));
      st.g[l] = e.fvecs * n.cast<cplx>().asDiagonal() * e.fvecs.adjoint();
      if (p.pairing > 0.0) {
        VectorXcd v1 = e.fvecs.col(0), v2 = e.fvecs.col(1);
        double cap = std::min(n[0] * (1.0 - n[0]), n[1] * (1.0 - n[1]));
        double c = p.pairing * std::sqrt(std::max(0.0, cap));
        st.a[l] = c * (v1 * v2.transpose() - v2 * v1.transpose());
      }
    }
  }
}

} // namespace detail

// Builds a constraint-satisfying spherical state and, when a target is set,
// doubles the coupling until the energy sits below the collapse threshold
//   -(kappa/2) sup_neg (N^2 [+ N for paired targets])
// with a 10% margin (gap of at least a tenth of the energy magnitude).
inline InitialData make_initial_data(const InitialParams &p, const PotentialSpec &pot,
                                     const SectorKinetics &kin, const KernelTable &tab,
                                     EnergyTarget target) {
  if (p.lmax < 0 || p.occupancy <= 0.0 || p.occupancy > 1.0 || p.width <= 0.0 ||
      p.pairing < 0.0 || p.pairing >= 1.0)
    throw std::invalid_argument("make_initial_data: parameter out of range");
  PairedState st = PairedState::zero(p.lmax, kin.grid);
  detail::fill_family(st, p, kin);

  EnergyParts e = paired_energy_parts(st, kin, tab, 1.0);
  double inter = e.direct - e.exchange + e.pairing;
  double num = particle_number(st);
  double cap = num * num + (target == EnergyTarget::negative_paired ? num : 0.0);

  InitialData out;
  out.state = std::move(st);
  out.kappa = pot.kappa;
  out.energy = e.kinetic + 0.5 * out.kappa * inter;
  out.threshold = -0.5 * out.kappa * pot.sup_neg * cap;
  if (target == EnergyTarget::none)
    return out;

  auto met = [&] {
    return out.threshold - out.energy >= 0.1 * std::abs(out.energy);
  };
  while (!met()) {
    if (out.kappa <= 0.0 || out.kappa > 0.5 * p.kappa_max)
      throw std::runtime_error(
          "make_initial_data: target unreachable; achieved energy " +
          std::to_string(out.energy) + " vs threshold " + std::to_string(out.threshold) +
          " at coupling " + std::to_string(out.kappa));
    out.kappa *= 2.0;
    out.energy = e.kinetic + 0.5 * out.kappa * inter;
    out.threshold = -0.5 * out.kappa * pot.sup_neg * cap;
  }
  return out;
}

} // namespace sphfb
