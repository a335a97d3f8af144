#pragma once
// Sector kinetic operators K_l = sqrt(-Delta + m^2) restricted to angular
// momentum l on the Dirichlet ball, plus the dilation generator.
//
// K_l^2 is assembled in u = r f variables, where the measure flattens to dr
// and the operator is -d^2/dr^2 + l(l+1)/r^2 + m^2 with u(0) = u(R) = 0:
//   uniform grid:  3-point Laplacian with odd-extension boundary rows
//   mapped grid:   collocation Galerkin D^T diag(w_flat) D through {0,r_i,R}
// Both are self-adjoint w.r.t. the flat weights by construction; the square
// root is spectral.
#include "legendre.hpp"
#include "sector_operator.hpp"

namespace sphfb {

// Fornberg finite-difference weights for derivative `der` at x0 from nodes xs
inline VectorXd fornberg_weights(double x0, const VectorXd &xs, int der) {
  const int n = static_cast<int>(xs.size());
  MatrixXd c = MatrixXd::Zero(n, der + 1);
  double c1 = 1.0, c4 = xs[0] - x0;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, der);
    double c2 = 1.0, c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c.col(der);
}

// value-space first-derivative matrix on the grid nodes (5-point stencils)
inline MatrixXd fd_derivative_matrix(const RadialGrid &g, int stencil = 5) {
  const int n = g.n;
  if (stencil > n)
    stencil = n;
  MatrixXd d = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, std::min(i - stencil / 2, n - stencil));
    VectorXd xs = g.r.segment(lo, stencil);
    VectorXd wts = fornberg_weights(g.r[i], xs, 1);
    for (int j = 0; j < stencil; ++j)
      d(i, lo + j) = wts[j];
  }
  return d;
}

namespace detail {

inline VectorXd bary_weights(const VectorXd &x) {
  const int n = static_cast<int>(x.size());
  VectorXd bw = VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i)
        bw[i] /= (x[i] - x[j]);
  return bw;
}

// derivative of the interpolating polynomial, evaluated at the nodes
inline MatrixXd bary_diff_matrix(const VectorXd &x) {
  const int n = static_cast<int>(x.size());
  VectorXd bw = bary_weights(x);
  MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) {
        d(i, j) = bw[j] / (bw[i] * (x[i] - x[j]));
        s += d(i, j);
      }
    d(i, i) = -s;
  }
  return d;
}

// evaluation of the interpolant at points y (second barycentric form)
inline MatrixXd bary_interp_matrix(const VectorXd &x, const VectorXd &y) {
  const int n = static_cast<int>(x.size()), m = static_cast<int>(y.size());
  VectorXd bw = bary_weights(x);
  MatrixXd e = MatrixXd::Zero(m, n);
  for (int q = 0; q < m; ++q) {
    int hit = -1;
    for (int j = 0; j < n; ++j)
      if (y[q] == x[j]) {
        hit = j;
        break;
      }
    if (hit >= 0) {
      e(q, hit) = 1.0;
      continue;
    }
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      e(q, j) = bw[j] / (y[q] - x[j]);
      s += e(q, j);
    }
    e.row(q) /= s;
  }
  return e;
}

// u-space operator matrix T and flat weights; T is w_flat-self-adjoint
inline void kinetic_square_u(int l, double mass, const RadialGrid &g, MatrixXd &t, VectorXd &wflat) {
  const int n = g.n;
  wflat = g.w.cwiseQuotient(g.r.cwiseAbs2());
  t = MatrixXd::Zero(n, n);
  if (g.scheme == GridScheme::uniform) {
    double h = g.R / n, ih2 = 1.0 / (h * h);
    for (int i = 0; i < n; ++i) {
      t(i, i) = 2.0 * ih2;
      if (i > 0)
        t(i, i - 1) = -ih2;
      if (i + 1 < n)
        t(i, i + 1) = -ih2;
    }
    // odd extension through r=0 and r=R encodes the Dirichlet condition
    t(0, 0) = 3.0 * ih2;
    t(n - 1, n - 1) = 3.0 * ih2;
  } else {
    // Galerkin stiffness for the degree-(n+1) trial space through {0, r_i, R}
    // with Dirichlet ends, |u'|^2 integrated exactly on a finer rule; the
    // collocation form D^T diag(w) D on the n interior nodes alone is rank
    // deficient (the antiderivative of the node polynomial is a null vector)
    VectorXd x(n + 2);
    x[0] = 0.0;
    x.segment(1, n) = g.r;
    x[n + 1] = g.R;
    MatrixXd dfull = bary_diff_matrix(x);
    QuadRule q = gauss_legendre(n + 2);
    VectorXd yq(n + 2), wq(n + 2);
    for (int i = 0; i < n + 2; ++i) {
      yq[i] = 0.5 * g.R * (q.x[i] + 1.0);
      wq[i] = 0.5 * g.R * q.w[i];
    }
    MatrixXd e = bary_interp_matrix(x, yq);
    MatrixXd dq = e * dfull.middleCols(1, n);
    MatrixXd a = dq.transpose() * wq.asDiagonal() * dq; // stiffness, SPD
    t = wflat.cwiseInverse().asDiagonal() * a;
  }
  for (int i = 0; i < n; ++i)
    t(i, i) += mass * mass + double(l) * (l + 1) / (g.r[i] * g.r[i]);
}

} // namespace detail

// d/dr for radial profiles that are even about the origin and vanish at R
// (s-wave eigenfunctions, densities).  Interior rows are plain stencils; the
// left rows fold an even reflection, the right rows pin a zero value at R.
inline SectorOperator build_radial_derivative(const std::shared_ptr<const RadialGrid> &g) {
  const int n = g->n;
  MatrixXd d = MatrixXd::Zero(n, n);
  if (g->scheme == GridScheme::legendre_mapped) {
    VectorXd z(n + 1);
    z.head(n) = g->r;
    z[n] = g->R;
    MatrixXd dz = detail::bary_diff_matrix(z);
    d = dz.topLeftCorner(n, n);
  } else {
    const VectorXd &r = g->r;
    for (int i = 2; i < n - 2; ++i) {
      VectorXd wts = fornberg_weights(r[i], r.segment(i - 2, 5), 1);
      for (int j = 0; j < 5; ++j)
        d(i, i - 2 + j) = wts[j];
    }
    for (int i : {0, 1}) {
      VectorXd nodes(5);
      std::vector<int> cols;
      if (i == 0) {
        nodes << -r[1], -r[0], r[0], r[1], r[2];
        cols = {1, 0, 0, 1, 2};
      } else {
        nodes << -r[0], r[0], r[1], r[2], r[3];
        cols = {0, 0, 1, 2, 3};
      }
      VectorXd wts = fornberg_weights(r[i], nodes, 1);
      for (int j = 0; j < 5; ++j)
        d(i, cols[j]) += wts[j];
    }
    for (int i : {n - 2, n - 1}) {
      VectorXd nodes(5);
      nodes << r[n - 4], r[n - 3], r[n - 2], r[n - 1], g->R;
      VectorXd wts = fornberg_weights(r[i], nodes, 1);
      for (int j = 0; j < 4; ++j)
        d(i, n - 4 + j) += wts[j];
    }
  }
  MatrixXcd k = (d * g->winv.asDiagonal()).cast<cplx>();
  return SectorOperator(0, g, std::move(k));
}

// kernel of K_l^2 on L^2(r^2 dr)
inline SectorOperator build_kinetic_sq(int l, double mass, const std::shared_ptr<const RadialGrid> &g) {
  if (l < 0)
    throw std::invalid_argument("build_kinetic_sq: negative l");
  if (mass < 0)
    throw std::invalid_argument("build_kinetic_sq: negative mass");
  MatrixXd t;
  VectorXd wflat;
  detail::kinetic_square_u(l, mass, *g, t, wflat);
  // conjugate u = r f back and convert the value matrix to a kernel
  const int n = g->n;
  MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k(i, j) = t(i, j) * g->r[j] / (g->r[i] * g->w[j]);
  k = 0.5 * (k + k.transpose()).eval();
  return SectorOperator(l, g, k.cast<cplx>());
}

// spectral positive square root; eigenvalues of K_l^2 below m^2 beyond the
// clamp window are a broken discretization and raise
inline SectorOperator build_kinetic(int l, double mass, const std::shared_ptr<const RadialGrid> &g,
                                    double clamp_tol = 1e-10) {
  SectorOperator ksq = build_kinetic_sq(l, mass, g);
  SectorEigen e = eigh(ksq);
  const double m2 = mass * mass;
  const double scale = std::max(1.0, e.eval.cwiseAbs().maxCoeff());
  if (e.eval.minCoeff() < m2 - clamp_tol * scale)
    throw std::runtime_error("build_kinetic: K^2 eigenvalue below m^2 beyond tolerance");
  VectorXcd root(e.eval.size());
  for (Eigen::Index i = 0; i < e.eval.size(); ++i)
    root[i] = std::sqrt(std::max(e.eval[i], m2));
  MatrixXcd k = e.fvecs * root.asDiagonal() * e.fvecs.adjoint();
  return SectorOperator(l, g, std::move(k));
}

// dilation generator A = x.p + p.x, sector-independent: -i(2 r d/dr + 3)
// symmetrized w.r.t. the weighted inner product.  Raw (unsymmetrized) form
// kept for checks.  Mapped grids differentiate the node interpolant (the
// nodes cluster like Chebyshev points, so this is stable and spectral).
inline SectorOperator build_dilation_raw(const std::shared_ptr<const RadialGrid> &g) {
  MatrixXd dm = g->scheme == GridScheme::legendre_mapped ? detail::bary_diff_matrix(g->r)
                                                         : fd_derivative_matrix(*g);
  MatrixXd b = 2.0 * g->r.asDiagonal() * dm;
  b.diagonal().array() += 3.0;
  MatrixXcd k = cplx(0, -1) * (b * g->winv.asDiagonal()).cast<cplx>();
  return SectorOperator(0, g, std::move(k));
}

inline SectorOperator build_dilation(const std::shared_ptr<const RadialGrid> &g) {
  SectorOperator raw = build_dilation_raw(g);
  MatrixXcd k = 0.5 * (raw.k + raw.k.adjoint());
  return SectorOperator(0, g, std::move(k));
}

// kinetic family for sectors 0..lmax (the +1 guard sector is the caller's
// concern), with massless twins used by the collapse monitor
struct SectorKinetics {
  double mass = 0.0;
  std::shared_ptr<const RadialGrid> grid;
  std::vector<SectorOperator> K;  // sqrt(-Delta + m^2), index = l
  std::vector<SectorOperator> K0; // sqrt(-Delta)

  static SectorKinetics build(int lmax, double mass, const std::shared_ptr<const RadialGrid> &g) {
    SectorKinetics s;
    s.mass = mass;
    s.grid = g;
    s.K.reserve(lmax + 1);
    s.K0.reserve(lmax + 1);
    for (int l = 0; l <= lmax; ++l) {
      s.K.push_back(build_kinetic(l, mass, g));
      s.K0.push_back(mass == 0.0 ? s.K.back() : build_kinetic(l, 0.0, g));
    }
    return s;
  }
  int lmax() const { return static_cast<int>(K.size()) - 1; }
};

} // namespace sphfb
