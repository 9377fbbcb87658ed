#pragma once
// Fiber spaces attached to spectral points.
//
// From a boundary value T(lambda + i0) the boundary density
// phi = (1/pi) Im T is positive semidefinite; its PSD square root eta and
// the orthonormal frame of ran(eta) define the fiber at lambda.  The
// evaluation operator sends tracked upper-space coefficients beta to fiber
// coordinates B^* eta beta; its diamond adjoint (with respect to the
// upper/lower duality pairing) is eta B, and the product reproduces the
// boundary density exactly.

#include <rigscat/common.hpp>
#include <rigscat/lap.hpp>
#include <rigscat/model.hpp>

#include <cmath>

namespace rigscat {

struct FiberData {
  double lambda = 0.0;
  Mat phi;     // boundary density (Hermitian PSD)
  Mat eta;     // PSD square root of phi
  Mat basis;   // columns: orthonormal frame of the fiber (ran eta)
  RVec sigma;  // sqrt of the kept eigenvalues of phi, descending
  int rank = 0;
};

// Boundary density (1/pi) Im T with a PSD check.
inline Mat boundary_density(const Mat& t) {
  Mat phi = hermitian_imag(t) / pi;
  Eigen::SelfAdjointEigenSolver<Mat> es(phi, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  double hi = std::max(1.0, es.eigenvalues().maxCoeff());
  ensure(lo > -tol().psdSlack * hi, "fiber: boundary density has a negative direction");
  return phi;
}

// Fix eigenvector phases against a fixed generic reference functional so the
// frame varies continuously with the density.  A largest-entry rule is not
// usable here: symmetric riggings produce exactly tied entry magnitudes with
// opposite signs, and roundoff then flips the chosen entry (and the column
// sign) between two routes to the same energy.
inline void canonicalize_columns(Mat& b) {
  for (int j = 0; j < b.cols(); ++j) {
    cplx s = 0.0;
    for (int i = 0; i < b.rows(); ++i)
      s += std::polar(1.0, 0.91 * double(i) + 0.37) * b(i, j);
    if (std::abs(s) < 1e-6 * b.col(j).norm()) {  // reference nearly orthogonal
      int imax = 0;
      double best = -1.0;
      for (int i = 0; i < b.rows(); ++i)
        if (std::abs(b(i, j)) > best) { best = std::abs(b(i, j)); imax = i; }
      s = b(imax, j);
    }
    if (std::abs(s) > 0.0) b.col(j) *= std::conj(s) / std::abs(s);
  }
}

// Build the fiber from a given Hermitian PSD density matrix (tracked frame,
// window frame, or any other orthonormal coordinate frame).
inline FiberData fiber_from_density(double lambda, Mat phi) {
  FiberData f;
  f.lambda = lambda;
  f.phi = std::move(phi);
  Eigen::SelfAdjointEigenSolver<Mat> es(f.phi);
  int m = static_cast<int>(f.phi.rows());
  double emax = es.eigenvalues().maxCoeff();
  ensure(emax > 0.0, "fiber: boundary density vanishes at this energy");
  int rank = 0;
  for (int i = 0; i < m; ++i)
    if (es.eigenvalues()[i] > tol().rankRel * emax) ++rank;
  f.rank = rank;
  f.basis.resize(m, rank);
  f.sigma.resize(rank);
  for (int k = 0; k < rank; ++k) {
    int src = m - 1 - k;  // Eigen sorts ascending; store descending
    f.basis.col(k) = es.eigenvectors().col(src);
    f.sigma[k] = std::sqrt(es.eigenvalues()[src]);
  }
  canonicalize_columns(f.basis);
  f.eta = f.basis * f.sigma.cast<cplx>().asDiagonal() * f.basis.adjoint();
  return f;
}

// Same construction from a low-rank factor F with density F F^*.  The
// spectral problem is solved in the column span (QR + small Hermitian
// eigensolve), which keeps wide frames cheap; ranks and weights agree with
// fiber_from_density applied to the assembled density.
inline FiberData fiber_from_factor(double lambda, const Mat& factor) {
  int d = static_cast<int>(factor.rows());
  int k = static_cast<int>(factor.cols());
  require(k >= 1 && d >= k, "fiber: factor must be tall");
  Eigen::HouseholderQR<Mat> qr(factor);
  Mat q = qr.householderQ() * Mat::Identity(d, k);
  Mat rTri = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(rTri * rTri.adjoint()));
  double emax = es.eigenvalues().maxCoeff();
  ensure(emax > 0.0, "fiber: boundary density vanishes at this energy");
  int rank = 0;
  for (int i = 0; i < k; ++i)
    if (es.eigenvalues()[i] > tol().rankRel * emax) ++rank;
  FiberData f;
  f.lambda = lambda;
  f.phi = factor * factor.adjoint();
  f.rank = rank;
  f.basis.resize(d, rank);
  f.sigma.resize(rank);
  for (int j = 0; j < rank; ++j) {
    int src = k - 1 - j;  // ascending -> descending
    f.basis.col(j) = q * es.eigenvectors().col(src);
    f.sigma[j] = std::sqrt(es.eigenvalues()[src]);
  }
  canonicalize_columns(f.basis);
  f.eta = f.basis * f.sigma.cast<cplx>().asDiagonal() * f.basis.adjoint();
  return f;
}

inline FiberData fiber_space(const BoundaryResolvent& bd) {
  return fiber_from_density(bd.lambda, boundary_density(bd.T));
}

// Closed-form tracked boundary density (1/pi) Im T(lambda + i0).  Unlike the
// full boundary value this has no singular real part, so it is valid on the
// whole open spectrum (used by section norms and direct-integral grids).
inline Mat tracked_boundary_density(const SpectralModel& model, const Rigging& r,
                                    double lambda) {
  int m = r.m();
  if (model.kind == ModelKind::quadrature) {
    require(model.spectrum.contains(lambda),
            "density: point outside the open spectrum");
    Vec w(m);
    for (int j = 0; j < m; ++j)
      w[j] = r.kappaAt(model, lambda) *
             orthonormal_legendre(j, model.spectrum.lo, model.spectrum.hi, lambda);
    return w * w.adjoint();
  }
  double th = lattice_theta(lambda);
  double s = std::sin(th);
  ensure(s > 1e-8, "density: spectral band edge");
  Vec uR(m), uL(m);
  for (int i = 0; i < m; ++i) {
    double k = r.kappa[model.siteToIndex(r.auxSites[i])];
    cplx ph = std::exp(-iu * (th * double(r.auxSites[i])));
    uR[i] = k * ph / std::sqrt(4.0 * pi * s);
    uL[i] = k * std::conj(ph) / std::sqrt(4.0 * pi * s);
  }
  return uR * uR.adjoint() + uL * uL.adjoint();
}

// The evaluation operator at a fixed energy, in tracked coordinates:
//   fiber coords of (evaluate f) = E beta,   E = B^* eta   (rank x m),
// and its diamond adjoint D = eta B (m x rank) with respect to the
// upper/lower duality, so that D E equals the boundary density.
struct EvaluationOperator {
  double lambda = 0.0;
  Mat E;        // rank x m
  Mat diamond;  // m x rank
  double hsNorm = 0.0;
};

inline EvaluationOperator evaluation_operator(const FiberData& f) {
  EvaluationOperator ev;
  ev.lambda = f.lambda;
  ev.E = f.basis.adjoint() * f.eta;
  ev.diamond = f.eta * f.basis;
  ev.hsNorm = std::sqrt(f.phi.trace().real());
  return ev;
}

// Upper-space tracked coefficient vectors beta_j with (evaluate beta_j) = e_j
// in the fiber frame; these synthesize concrete vectors hitting prescribed
// fiber values.
inline Mat fiber_preimages(const FiberData& f) {
  Mat out(f.basis.rows(), f.rank);
  for (int j = 0; j < f.rank; ++j) out.col(j) = f.basis.col(j) / f.sigma[j];
  return out;
}

// ---------------------------------------------------------------------------
// Full-frame helpers (quadrature model)
// ---------------------------------------------------------------------------

// Value at lambda of the polynomial represented by collocation coordinates x
// (global barycentric interpolation through all nodes).
inline cplx collocation_value(const SpectralModel& model, const Barycentric& cards,
                              const Vec& x, double lambda) {
  require(model.kind == ModelKind::quadrature, "collocation_value: quadrature models only");
  RVec c = cards.cardinals(lambda);
  cplx s = 0.0;
  for (int n = 0; n < model.N; ++n)
    s += c[n] * x[n] / std::sqrt(model.rule.weights[n]);
  return s;
}

// Full-frame fiber direction at lambda for the quadrature model: the
// boundary density in untracked weighted coordinates is the rank-one form
// |<v, .>|^2 with v_n = kappa_n ell_n(lambda) / sqrt(q_n).  Evaluating a
// model vector against it reproduces interpolation at lambda.
inline Vec full_frame_direction(const SpectralModel& model, const Rigging& r,
                                const Barycentric& cards, double lambda) {
  require(model.kind == ModelKind::quadrature, "full_frame_direction: quadrature models only");
  RVec c = cards.cardinals(lambda);
  Vec v(model.N);
  for (int n = 0; n < model.N; ++n)
    v[n] = r.kappa[n] * c[n] / std::sqrt(model.rule.weights[n]);
  return v;
}

// Rank profile of the boundary density along a grid (tracked frame).
struct FiberRankProfile {
  RVec lambdas;
  std::vector<int> ranks;
};

inline FiberRankProfile fiber_rank_profile(const SpectralModel& model, const Rigging& r,
                                           const RVec& lambdas, unsigned threads = 1) {
  FiberRankProfile prof;
  prof.lambdas = lambdas;
  prof.ranks.assign(lambdas.size(), 0);
  parallel_for(lambdas.size(), threads, [&](std::size_t i) {
    auto bd = boundary_value(model, r, lambdas[static_cast<int>(i)],
                             BoundaryMethod::direct);
    prof.ranks[i] = fiber_space(bd).rank;
  });
  return prof;
}

}  // namespace rigscat
