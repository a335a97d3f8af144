#pragma once
// Dense operators on one angular sector, stored as kernels k(r_i, r_j) of
// integral operators on L^2([0,R], r^2 dr).  With kernel storage the adjoint
// is the plain conjugate transpose, operator products pick up one diagonal
// weight factor, and Tr = sum_i w_i k_ii.
#include <memory>

#include "grid.hpp"

namespace sphfb {

struct SectorOperator {
  int ell = 0;
  std::shared_ptr<const RadialGrid> grid;
  MatrixXcd k;

  SectorOperator() = default;
  SectorOperator(int l, std::shared_ptr<const RadialGrid> g, MatrixXcd kk)
      : ell(l), grid(std::move(g)), k(std::move(kk)) {
    if (k.rows() != grid->n || k.cols() != grid->n)
      throw std::invalid_argument("SectorOperator: kernel size != grid size");
  }
};

inline SectorOperator identity_operator(const std::shared_ptr<const RadialGrid> &g, int ell = 0) {
  MatrixXcd k = MatrixXcd::Zero(g->n, g->n);
  k.diagonal() = g->winv.cast<cplx>();
  return SectorOperator(ell, g, std::move(k));
}

// multiplication by phi(r): value-space diag(phi), kernel diag(phi_i / w_i)
inline SectorOperator multiplier_operator(const std::shared_ptr<const RadialGrid> &g,
                                          const VectorXd &phi, int ell = 0) {
  if (phi.size() != g->n)
    throw std::invalid_argument("multiplier_operator: size mismatch");
  MatrixXcd k = MatrixXcd::Zero(g->n, g->n);
  k.diagonal() = (phi.cwiseProduct(g->winv)).cast<cplx>();
  return SectorOperator(ell, g, std::move(k));
}

inline VectorXcd apply(const SectorOperator &op, const VectorXcd &f) {
  return op.k * op.grid->w.cast<cplx>().cwiseProduct(f);
}

// kernel-level composition: (a o b)(i,j) = sum_k a_ik w_k b_kj
inline MatrixXcd kernel_product(const RadialGrid &g, const MatrixXcd &a, const MatrixXcd &b) {
  return a * g.w.cast<cplx>().asDiagonal() * b;
}

inline SectorOperator weighted_product(const SectorOperator &a, const SectorOperator &b) {
  require_same_grid(*a.grid, *b.grid, "weighted_product");
  return SectorOperator(a.ell, a.grid, kernel_product(*a.grid, a.k, b.k));
}

inline SectorOperator commutator(const SectorOperator &a, const SectorOperator &b) {
  require_same_grid(*a.grid, *b.grid, "commutator");
  return SectorOperator(a.ell, a.grid,
                        kernel_product(*a.grid, a.k, b.k) - kernel_product(*a.grid, b.k, a.k));
}

inline cplx weighted_trace(const SectorOperator &op) {
  return (op.grid->w.cast<cplx>().cwiseProduct(op.k.diagonal())).sum();
}

inline cplx weighted_trace(const RadialGrid &g, const MatrixXcd &k) {
  return (g.w.cast<cplx>().cwiseProduct(k.diagonal())).sum();
}

// Tr(a o b) without forming the product
inline cplx weighted_trace_product(const RadialGrid &g, const MatrixXcd &a, const MatrixXcd &b) {
  VectorXcd wc = g.w.cast<cplx>();
  return (wc.asDiagonal() * a).cwiseProduct((wc.asDiagonal() * b).transpose()).sum();
}

// Hilbert-Schmidt pairing <a,b> = sum_ij w_i w_j conj(a_ij) b_ij
inline cplx hs_inner(const RadialGrid &g, const MatrixXcd &a, const MatrixXcd &b) {
  VectorXcd wc = g.w.cast<cplx>();
  return (wc.transpose() * a.conjugate().cwiseProduct(b) * wc)(0, 0);
}

inline double hs_norm(const RadialGrid &g, const MatrixXcd &a) {
  return std::sqrt(std::abs(hs_inner(g, a, a)));
}

inline MatrixXcd kernel_adjoint(const MatrixXcd &k) { return k.adjoint(); }

inline double hermiticity_defect(const SectorOperator &op) {
  return (op.k - op.k.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const SectorOperator &op, double tol = 1e-12) {
  double scale = std::max(1.0, op.k.cwiseAbs().maxCoeff());
  return hermiticity_defect(op) <= tol * scale;
}

// largest singular value w.r.t. the weighted inner product
inline double operator_norm(const SectorOperator &op) {
  MatrixXcd s = op.grid->wsqrt.cast<cplx>().asDiagonal() * op.k *
                op.grid->wsqrt.cast<cplx>().asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s.adjoint() * s, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

struct SectorEigen {
  VectorXd eval;   // ascending
  MatrixXcd fvecs; // columns orthonormal in the weighted inner product
};

// spectral decomposition of a hermitian sector operator
inline SectorEigen eigh(const SectorOperator &op) {
  const RadialGrid &g = *op.grid;
  MatrixXcd s = g.wsqrt.cast<cplx>().asDiagonal() * op.k * g.wsqrt.cast<cplx>().asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigh: eigensolver failed");
  SectorEigen r;
  r.eval = es.eigenvalues();
  r.fvecs = g.wsqrt.cwiseInverse().cast<cplx>().asDiagonal() * es.eigenvectors();
  return r;
}

// f applied through the spectral decomposition
template <class F>
inline SectorOperator spectral_map(const SectorOperator &op, F &&f) {
  SectorEigen e = eigh(op);
  VectorXcd fe(e.eval.size());
  for (Eigen::Index i = 0; i < e.eval.size(); ++i)
    fe[i] = f(e.eval[i]);
  MatrixXcd k = e.fvecs * fe.asDiagonal() * e.fvecs.adjoint();
  return SectorOperator(op.ell, op.grid, std::move(k));
}

} // namespace sphfb
