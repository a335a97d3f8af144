#pragma once
// Mean-field blocks of the sector evolution.  Differentiating the energy in
// the sector kernels gives, per sector l,
//   H_l = K_l + kappa diag(V * rho) - kappa X_l
// with X_l the entrywise interaction kernel contracted against all sectors,
// and the pairing field P_l of the same shape built from the a_l.
#include "state.hpp"

namespace sphfb {

// (1/4pi) sum_l' (2l'+1) F_{l,l'} .* b_l'.  Exchange block for b = g, raw
// pairing field for b = a; both inherit hermiticity / antisymmetry from b.
// The table's lmax is the interaction cutoff.  Sectors above it may ride
// along in the state only while identically zero; they contribute nothing
// and get no field of their own, so they stay zero under the flow.
inline MatrixXcd contracted_block(const std::vector<MatrixXcd> &b, const KernelTable &tab,
                                  int l) {
  if (l > tab.lmax)
    throw std::invalid_argument("contracted_block: requested sector is beyond the kernel cutoff");
  const RadialGrid &gr = *tab.grid;
  MatrixXcd acc = MatrixXcd::Zero(gr.n, gr.n);
  for (std::size_t lp = 0; lp < b.size(); ++lp) {
    if (static_cast<int>(lp) > tab.lmax) {
      if (b[lp].cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("contracted_block: nonzero sector beyond the kernel cutoff");
      continue;
    }
    acc += (2.0 * lp + 1.0) / (4.0 * pi) *
           tab.f(l, static_cast<int>(lp)).cast<cplx>().cwiseProduct(b[lp]);
  }
  return acc;
}

inline SectorOperator exchange_block(const ReducedState &st, const KernelTable &tab, int l) {
  return SectorOperator(l, st.grid, contracted_block(st.g, tab, l));
}

inline SectorOperator pairing_block(const PairedState &st, const KernelTable &tab, int l) {
  return SectorOperator(l, st.grid, contracted_block(st.a, tab, l));
}

struct MeanFieldBlocks {
  double kappa = 0.0;
  std::shared_ptr<const RadialGrid> grid;
  std::vector<SectorOperator> H; // sector mean-field operators
  std::vector<SectorOperator> P; // pairing fields, coupling included
  std::uint64_t source = 0;      // stamp of the state the blocks were built from

  int lmax() const { return static_cast<int>(H.size()) - 1; }

  std::uint64_t stamp() const {
    std::uint64_t h = fnv1a("mean-field-blocks");
    h = fnv1a(&kappa, sizeof kappa, h);
    h = fnv1a(&source, sizeof source, h);
    for (const auto &op : H)
      h = hash_matrix(op.k, h);
    for (const auto &op : P)
      h = hash_matrix(op.k, h);
    return h;
  }
};

inline MeanFieldBlocks build_mean_field(const PairedState &st, const SectorKinetics &kin,
                                        const KernelTable &tab, double kappa) {
  detail::require_coverage(st.lmax, kin, tab, *st.grid, "build_mean_field");
  detail::require_empty_beyond(st.g, tab.lmax, "build_mean_field");
  detail::require_empty_beyond(st.a, tab.lmax, "build_mean_field");
  const RadialGrid &gr = *st.grid;
  MeanFieldBlocks mf;
  mf.kappa = kappa;
  mf.grid = st.grid;
  mf.source = st.stamp();
  VectorXd v = direct_potential(radial_density(st), gr, tab);
  MatrixXcd zero = MatrixXcd::Zero(gr.n, gr.n);
  for (int l = 0; l <= st.lmax; ++l) {
    // above the interaction cutoff only the local pieces survive; the sector
    // is empty there, so its field never acts and P_l = 0 keeps it empty
    bool coupled = kappa != 0.0 && l <= tab.lmax;
    MatrixXcd h = kin.K[l].k;
    if (kappa != 0.0)
      h.diagonal() += kappa * (v.cwiseProduct(gr.winv)).cast<cplx>();
    if (coupled)
      h -= kappa * contracted_block(st.g, tab, l);
    mf.H.emplace_back(l, st.grid, std::move(h));
    mf.P.emplace_back(l, st.grid,
                      coupled ? MatrixXcd(kappa * contracted_block(st.a, tab, l)) : zero);
  }
  return mf;
}

inline MeanFieldBlocks build_mean_field(const ReducedState &st, const SectorKinetics &kin,
                                        const KernelTable &tab, double kappa) {
  return build_mean_field(PairedState::from_reduced(st), kin, tab, kappa);
}

// source term the pairing channel feeds into the density equation:
//   P o a^adj - a o P^adj
// anti-hermitian, and its (2l+1)-weighted trace sum cancels, so the particle
// number stays put under the paired flow
inline MatrixXcd pair_source(const SectorOperator &p, const MatrixXcd &a) {
  return kernel_product(*p.grid, p.k, a.adjoint()) - kernel_product(*p.grid, a, p.k.adjoint());
}

} // namespace sphfb
