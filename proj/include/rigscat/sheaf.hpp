#pragma once
// Windowed frames and gluing.
//
// For a spectral window W the weighted projection F E_W has a Schmidt
// decomposition sum_j sigma_j psi_j <phi_j, .>; the left vectors phi_j give
// window coordinates beta_j = <phi_j, f>.  Each window carries its own
// realisation of the fiber at an interior energy (the density matrix of the
// windowed evaluation, expressed in window coordinates); realisations from
// overlapping windows are identified by gluing unitaries obtained from a
// probe fit (orthogonal Procrustes).  Sections over a grid of energies carry
// fiber coordinates whose weighted l2 norm reproduces the model norm.

#include <rigscat/common.hpp>
#include <rigscat/fiber.hpp>
#include <rigscat/lap.hpp>
#include <rigscat/model.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rigscat {

struct WindowData {
  Interval window;
  int d = 0;        // kept Schmidt rank of F E_W
  RVec sigma;       // singular values, descending
  Mat leftVecs;     // dim x d: model-space Schmidt vectors phi_j
  Mat rightVecs;    // dim x d: image-side Schmidt vectors psi_j
  double hsNorm = 0.0;
  std::vector<int> nodeIdx;  // quadrature: model node index per Schmidt pair
};

// Schmidt data of F E_W.  Quadrature: F E_W is diagonal in the node frame, so
// the singular values are the weights kappa(lambda_n) over nodes inside W
// (sorted, ties broken by node order) and the Schmidt vectors are node
// indicators.  Lattice: dense SVD of diag(kappa) * E_W.
inline WindowData schmidt_window(const SpectralModel& model, const Rigging& r,
                                 Interval win) {
  WindowData w;
  w.window = win;
  if (model.kind == ModelKind::quadrature) {
    std::vector<int> inside;
    for (int n = 0; n < model.N; ++n)
      if (win.contains(model.rule.nodes[n])) inside.push_back(n);
    require(!inside.empty(), "window: no spectral weight inside the window");
    std::stable_sort(inside.begin(), inside.end(),
                     [&](int a, int b) { return r.kappa[a] > r.kappa[b]; });
    w.d = static_cast<int>(inside.size());
    w.sigma.resize(w.d);
    w.leftVecs = Mat::Zero(model.N, w.d);
    w.nodeIdx = inside;
    for (int j = 0; j < w.d; ++j) {
      w.sigma[j] = r.kappa[inside[j]];
      w.leftVecs(inside[j], j) = 1.0;
    }
    w.rightVecs = w.leftVecs;
    w.hsNorm = std::sqrt(w.sigma.squaredNorm());
    return w;
  }
  WindowProjection proj = window_projection(model, win);
  Mat a = r.kappa.cast<cplx>().asDiagonal() * proj.kernel.cast<cplx>();
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smax = svd.singularValues().maxCoeff();
  ensure(smax > 0.0, "window: no spectral weight inside the window");
  int d = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > tol().rankRel * smax) ++d;
  w.d = d;
  w.sigma = svd.singularValues().head(d);
  // right factor of A = U S V^*: coordinates use phi_j = V columns.
  w.leftVecs = svd.matrixV().leftCols(d);
  w.rightVecs = svd.matrixU().leftCols(d);
  canonicalize_columns(w.leftVecs);
  canonicalize_columns(w.rightVecs);
  // Keep the pairing F E_W phi_j = sigma_j psi_j intact after phase fixing:
  // recompute psi_j from phi_j.
  for (int j = 0; j < d; ++j) w.rightVecs.col(j) = a * w.leftVecs.col(j) / w.sigma[j];
  w.hsNorm = std::sqrt(svd.singularValues().squaredNorm());
  return w;
}

// Window coordinates beta_j = <phi_j, f> of a model vector.
inline Vec window_coordinates(const WindowData& w, const Vec& x) {
  return w.leftVecs.adjoint() * x;
}

// Reconstruction sum_j beta_j phi_j (the part of f the window tracks).
inline Vec window_reconstruct(const WindowData& w, const Vec& beta) {
  return w.leftVecs * beta;
}

// Overlap (contraction) matrix between two window coordinate systems:
// entries <phi_j^{W1}, phi_k^{W2}>.  For nested windows these compose.
inline Mat window_overlap(const WindowData& w1, const WindowData& w2) {
  return w1.leftVecs.adjoint() * w2.leftVecs;
}

// ---------------------------------------------------------------------------
// Window-frame fibers
// ---------------------------------------------------------------------------

namespace detail {

// The two generalized plane waves spanning the lattice boundary density at an
// interior energy, as columns (right- and left-movers).
inline Mat lattice_plane_waves(const SpectralModel& model, double lambda) {
  double th = lattice_theta(lambda);
  double s = std::sin(th);
  ensure(s > 1e-8, "window fiber: spectral band edge");
  int dim = model.dim();
  Mat x(dim, 2);
  for (int i = 0; i < dim; ++i) {
    double n = model.indexToSite(i);
    x(i, 0) = std::exp(-iu * (th * n)) / std::sqrt(4.0 * pi * s);
    x(i, 1) = std::exp(iu * (th * n)) / std::sqrt(4.0 * pi * s);
  }
  return x;
}

// Low-rank factor of the windowed evaluation density in window coordinates:
// the density is factor * factor^adjoint.
inline Mat window_density_factor(const SpectralModel& model, const WindowData& w,
                                 double lambda) {
  require(w.window.contains(lambda), "window fiber: energy outside the window");
  if (model.kind == ModelKind::quadrature) {
    // Interpolation through the window's own nodes: evaluating the windowed
    // part of f at lambda is exact for polynomials of degree < d.
    RVec nodes(w.d);
    for (int j = 0; j < w.d; ++j) nodes[j] = model.rule.nodes[w.nodeIdx[j]];
    Barycentric cards(nodes);
    RVec c = cards.cardinals(lambda);
    Mat v(w.d, 1);
    for (int j = 0; j < w.d; ++j)
      v(j, 0) = c[j] / std::sqrt(model.rule.weights[w.nodeIdx[j]]);
    return v;
  }
  // Lattice: the window footprint of the plane-wave pair, G = Phi^* X.
  return w.leftVecs.adjoint() * lattice_plane_waves(model, lambda);
}

// Density matrix of the windowed evaluation in window coordinates.
inline Mat window_density(const SpectralModel& model, const WindowData& w,
                          double lambda) {
  Mat f = window_density_factor(model, w, lambda);
  return f * f.adjoint();
}

}  // namespace detail

// Fiber realisation carried by a window at an interior energy, expressed in
// the window's own coordinates.
inline FiberData window_fiber(const SpectralModel& model, const WindowData& w,
                              double lambda) {
  return fiber_from_factor(lambda, detail::window_density_factor(model, w, lambda));
}

// Map sending a model vector to its fiber coordinates at f.lambda in the
// window's own frame.  Quadrature windows evaluate through their node
// interpolation (exact on tracked content).  Lattice windows evaluate in the
// plane-wave frame and rotate by the coisometry Sigma^{-1} B^* G built from
// the window footprint G = Phi^* X: realisations of overlapping windows then
// differ by exact unitaries instead of inheriting the finite-volume
// truncation error of the compressed window kernel.
inline Mat window_evaluation_map(const SpectralModel& model, const WindowData& w,
                                 const FiberData& f) {
  if (model.kind == ModelKind::quadrature)
    return evaluation_operator(f).E * w.leftVecs.adjoint();
  Mat waves = detail::lattice_plane_waves(model, f.lambda);
  Mat g = w.leftVecs.adjoint() * waves;
  Mat rot = f.sigma.cast<cplx>().cwiseInverse().asDiagonal() * (f.basis.adjoint() * g);
  return rot * waves.adjoint();
}

// ---------------------------------------------------------------------------
// Gluing
// ---------------------------------------------------------------------------

struct GluingUnitary {
  double lambda = 0.0;
  Interval from, to;
  Mat U;  // r x r, maps `from`-window fiber coordinates to `to`-window ones
  double unitarityResidual = 0.0;  // ||U^* U - 1||
  double fitResidual = 0.0;        // worst probe mismatch after rotation
};

// Probe vectors for gluing fits: images under F^* of the leading tracked
// basis elements (low-degree content, faithfully represented inside every
// window used here).
inline std::vector<Vec> gluing_probes(const Rigging& r, int count) {
  count = std::min(count, r.m());
  std::vector<Vec> probes;
  for (int j = 0; j < count; ++j)
    probes.push_back(apply_weight(r, Vec(r.basis.col(j))));
  return probes;
}

// Gluing unitary between the fiber realisations of two overlapping windows
// at a common interior energy, fitted on probe vectors and projected to the
// unitary group (polar factor of the cross-covariance).
inline GluingUnitary glue_windows(const SpectralModel& model, const Rigging& r,
                                  const WindowData& w1, const WindowData& w2,
                                  double lambda) {
  require(w1.window.contains(lambda) && w2.window.contains(lambda),
          "gluing: energy must be interior to both windows");
  FiberData f1 = window_fiber(model, w1, lambda);
  FiberData f2 = window_fiber(model, w2, lambda);
  ensure(f1.rank == f2.rank, "gluing: window fibers have different ranks");
  Mat ev1 = window_evaluation_map(model, w1, f1);
  Mat ev2 = window_evaluation_map(model, w2, f2);

  int nProbes = std::min({2 * f1.rank + 4, w1.d, w2.d});
  auto probes = gluing_probes(r, nProbes);
  ensure(static_cast<int>(probes.size()) >= f1.rank,
         "gluing: not enough probes to span the fiber");

  Mat A(f1.rank, static_cast<int>(probes.size()));
  Mat B(f2.rank, static_cast<int>(probes.size()));
  for (std::size_t p = 0; p < probes.size(); ++p) {
    A.col(p) = ev1 * probes[p];
    B.col(p) = ev2 * probes[p];
  }
  Eigen::BDCSVD<Mat> svd(Mat(B * A.adjoint()), Eigen::ComputeFullU | Eigen::ComputeFullV);
  GluingUnitary g;
  g.lambda = lambda;
  g.from = w1.window;
  g.to = w2.window;
  g.U = svd.matrixU() * svd.matrixV().adjoint();
  g.unitarityResidual = max_abs(Mat(g.U.adjoint() * g.U - Mat::Identity(f1.rank, f1.rank)));
  double worst = 0.0, scale = 0.0;
  for (int p = 0; p < A.cols(); ++p) scale = std::max(scale, A.col(p).norm());
  for (int p = 0; p < A.cols(); ++p)
    worst = std::max(worst, (g.U * A.col(p) - B.col(p)).norm());
  g.fitResidual = (scale > 0.0) ? worst / scale : worst;
  return g;
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

// A section assigns fiber coordinates (tracked frame) to each point of a
// weighted energy grid; its norm is the weighted l2 norm.
struct SheafSection {
  RVec lambdas;
  RVec weights;
  std::vector<Vec> coords;

  double norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i)
      s += weights[static_cast<int>(i)] * coords[i].squaredNorm();
    return std::sqrt(s);
  }
};

// Integration grid over the spectrum for section norms and direct integrals.
// Quadrature model: the model's own rule (exact for polynomial data).
// Lattice: Gauss nodes in the momentum variable mapped through the
// dispersion, weights carrying the Jacobian.  With `margined` set, a small
// band at each spectral edge is excluded (families whose fiber rank
// degenerates exactly at the edges are assembled on such grids).
inline void spectral_grid(const SpectralModel& model, int points, RVec& lambdas,
                          RVec& weights, bool margined = false) {
  if (model.kind == ModelKind::quadrature) {
    if (!margined) {
      lambdas = model.rule.nodes;
      weights = model.rule.weights;
      return;
    }
    double m = 2.0 * edge_margin(model);
    QuadRule rule = gauss_legendre(points, model.spectrum.lo + m, model.spectrum.hi - m);
    lambdas = rule.nodes;
    weights = rule.weights;
    return;
  }
  double mTheta = margined ? 0.02 * pi : 0.0;
  QuadRule rule = gauss_legendre(points, mTheta, pi - mTheta);
  lambdas.resize(points);
  weights.resize(points);
  for (int i = 0; i < points; ++i) {
    // Descending theta gives ascending lambda = 2 cos(theta).
    double th = rule.nodes[points - 1 - i];
    lambdas[i] = 2.0 * std::cos(th);
    weights[i] = 2.0 * std::sin(th) * rule.weights[points - 1 - i];
  }
}

// Section of the evaluation of a tracked upper-space vector f = F^* Psi beta,
// given by its coefficients beta.
inline SheafSection evaluation_section(const SpectralModel& model, const Rigging& r,
                                       const Vec& beta, int latticePoints = 400,
                                       unsigned threads = 1, bool margined = false) {
  SheafSection s;
  spectral_grid(model, latticePoints, s.lambdas, s.weights, margined);
  s.coords.assign(s.lambdas.size(), Vec());
  parallel_for(s.lambdas.size(), threads, [&](std::size_t i) {
    Mat phi = tracked_boundary_density(model, r, s.lambdas[static_cast<int>(i)]);
    FiberData f = fiber_from_density(s.lambdas[static_cast<int>(i)], std::move(phi));
    s.coords[i] = evaluation_operator(f).E * beta;
  });
  return s;
}

}  // namespace rigscat
