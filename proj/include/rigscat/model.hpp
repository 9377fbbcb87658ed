#pragma once
// Desk-scale operator models.
//
// Two model families are supported:
//   * quadrature: multiplication by the spectral variable on an interval
//     [lo,hi].  Coordinates are Gauss-Legendre collocation values
//     x_n = sqrt(q_n) f(lambda_n); polynomial functions of degree < N are
//     represented faithfully and all resolvent/projection quantities are
//     evaluated by exact polynomial algebra, never by naive quadrature of
//     singular integrands.
//   * lattice: the discrete Laplacian (adjacency operator) on sites
//     -L..L, spectrum [-2,2] with dispersion lambda = 2 cos(theta).
//
// A rigging is a positive diagonal weight F = diag(kappa) together with an
// m-column orthonormal "tracked" basis Psi; sandwiched operators
// Psi^* F X F^* Psi are the m x m compressions every later stage works with.

#include <rigscat/common.hpp>
#include <rigscat/quadrature.hpp>

#include <cmath>
#include <optional>
#include <vector>

namespace rigscat {

enum class ModelKind { quadrature, lattice };

struct SpectralModel {
  ModelKind kind = ModelKind::quadrature;
  Interval spectrum;  // [lo,hi]; lattice is always [-2,2]
  int N = 0;          // quadrature collocation size
  int L = 0;          // lattice half-width (dim = 2L+1)
  QuadRule rule;      // quadrature nodes/weights on [lo,hi]

  int dim() const { return kind == ModelKind::quadrature ? N : 2 * L + 1; }
  int siteToIndex(int n) const { return n + L; }
  int indexToSite(int i) const { return i - L; }
  // Scaled variable t in [-1,1] for a spectral point (quadrature only).
  double scaledPoint(double lambda) const {
    return (2.0 * lambda - (spectrum.lo + spectrum.hi)) / spectrum.width();
  }
};

inline SpectralModel build_quadrature_model(Interval spectrum, int N) {
  require(spectrum.width() > 0.0, "model: spectral interval must have positive width");
  require(N >= 8 && N <= 4096, "model: quadrature size N out of range [8,4096]");
  SpectralModel m;
  m.kind = ModelKind::quadrature;
  m.spectrum = spectrum;
  m.N = N;
  m.rule = gauss_legendre(N, spectrum.lo, spectrum.hi);
  return m;
}

inline SpectralModel build_lattice_model(int L) {
  require(L >= 4 && L <= 20000, "model: lattice half-width L out of range [4,20000]");
  SpectralModel m;
  m.kind = ModelKind::lattice;
  m.spectrum = Interval{-2.0, 2.0};
  m.L = L;
  return m;
}

// theta(lambda) = arccos(lambda/2) for the lattice dispersion, clamped to the
// band edges.
inline double lattice_theta(double lambda) {
  double c = std::clamp(lambda / 2.0, -1.0, 1.0);
  return std::acos(c);
}

// ---------------------------------------------------------------------------
// Rigging
// ---------------------------------------------------------------------------

// Specification of the scale weight kappa:
//   quadrature: a polynomial in lambda (must be positive on the spectrum)
//   lattice:    kappa_n = scale / (1 + |n|)^power
struct WeightSpec {
  Poly poly{1.0};
  double power = 1.0;
  double scale = 1.0;
};

struct Rigging {
  WeightSpec weight;
  RVec kappa;                // weight values at nodes / sites (size dim)
  std::vector<int> auxSites; // lattice tracked sites (size m), e.g. 0,1,-1,...
  Mat basis;                 // dim x m, orthonormal columns Psi

  int m() const { return static_cast<int>(basis.cols()); }
  double kappaAt(const SpectralModel& model, double lambda) const {
    require(model.kind == ModelKind::quadrature, "kappaAt: quadrature models only");
    return poly_eval(weight.poly, lambda);
  }
};

// Default lattice tracked-site ordering 0, 1, -1, 2, -2, ...
inline std::vector<int> default_aux_sites(int m) {
  std::vector<int> s;
  for (int k = 0; s.size() < static_cast<std::size_t>(m); ++k) {
    if (k == 0) s.push_back(0);
    else { s.push_back(k); s.push_back(-k); }
  }
  s.resize(m);
  return s;
}

inline Rigging build_rigging(const SpectralModel& model, const WeightSpec& weight,
                             int m, std::vector<int> auxSites = {}) {
  require(m >= 1 && m <= model.dim(), "rigging: tracked dimension m out of range");
  Rigging r;
  r.weight = weight;
  int d = model.dim();
  r.kappa.resize(d);
  if (model.kind == ModelKind::quadrature) {
    for (int n = 0; n < d; ++n) {
      double k = poly_eval(weight.poly, model.rule.nodes[n]);
      require(k > 0.0, "rigging: weight polynomial must be positive on the spectrum");
      r.kappa[n] = k;
    }
    // Tracked basis: orthonormal Legendre elements sampled at the nodes.
    // Columns are exactly orthonormal because the rule integrates their
    // pairwise products without error.
    r.basis.resize(d, m);
    for (int n = 0; n < d; ++n) {
      double s = std::sqrt(model.rule.weights[n]);
      for (int j = 0; j < m; ++j)
        r.basis(n, j) = s * orthonormal_legendre(j, model.spectrum.lo,
                                                 model.spectrum.hi,
                                                 model.rule.nodes[n]);
    }
  } else {
    require(weight.power > 0.5, "rigging: lattice weight exponent must exceed 1/2");
    require(weight.scale > 0.0, "rigging: lattice weight scale must be positive");
    for (int i = 0; i < d; ++i) {
      int n = model.indexToSite(i);
      r.kappa[i] = weight.scale / std::pow(1.0 + std::abs(n), weight.power);
    }
    if (auxSites.empty()) auxSites = default_aux_sites(m);
    require(static_cast<int>(auxSites.size()) == m,
            "rigging: tracked site list must have length m");
    for (std::size_t a = 0; a < auxSites.size(); ++a) {
      require(std::abs(auxSites[a]) <= model.L, "rigging: tracked site outside lattice");
      for (std::size_t b = a + 1; b < auxSites.size(); ++b)
        require(auxSites[a] != auxSites[b], "rigging: duplicate tracked site");
    }
    r.auxSites = auxSites;
    r.basis = Mat::Zero(d, m);
    for (int j = 0; j < m; ++j) r.basis(model.siteToIndex(auxSites[j]), j) = 1.0;
  }
  // Orthonormality invariant (exact by construction; guard against drift).
  ensure(max_abs(Mat(r.basis.adjoint() * r.basis - Mat::Identity(m, m))) < 1e-12,
         "rigging: tracked basis failed orthonormality check");
  return r;
}

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

// A finite-rank symmetric perturbation V = F^* J F with J Hermitian in the
// tracked coordinates.
struct Perturbation {
  Mat J;  // m x m Hermitian
};

inline Perturbation build_perturbation(const Rigging& rigging, Mat J) {
  require(J.rows() == rigging.m() && J.cols() == rigging.m(),
          "perturbation: coupling matrix must be m x m");
  require(max_abs(Mat(J - J.adjoint())) < 1e-12 * (1.0 + max_abs(J)),
          "perturbation: coupling matrix must be Hermitian");
  return Perturbation{std::move(J)};
}

// Rank-one coupling at strength v in the leading tracked direction.
inline Perturbation rank_one_perturbation(const Rigging& rigging, double v,
                                          int direction = 0) {
  Mat J = Mat::Zero(rigging.m(), rigging.m());
  require(direction >= 0 && direction < rigging.m(),
          "perturbation: direction index out of range");
  J(direction, direction) = v;
  return Perturbation{std::move(J)};
}

// ---------------------------------------------------------------------------
// Coordinates in the scale of spaces
// ---------------------------------------------------------------------------

// Desk-scale vectors carry a tag recording which space's norm is meant; the
// coordinate array is shared between the model space and both scale spaces.
enum class HomeSpace { model, scaleUpper, scaleLower };

struct ScaleVector {
  Vec x;
  HomeSpace home = HomeSpace::model;
};

// F x (model -> model): multiply by the weight.
inline Vec apply_weight(const Rigging& r, const Vec& x) {
  return r.kappa.cast<cplx>().asDiagonal() * x;
}

// F^{-1} x: divide by the weight (kappa > 0 everywhere).
inline Vec apply_weight_inverse(const Rigging& r, const Vec& x) {
  return r.kappa.cast<cplx>().cwiseInverse().asDiagonal() * x;
}

// Upper-space norm: ||f||_up = ||beta|| where f = F^* beta.
inline double upper_norm(const Rigging& r, const Vec& x) {
  return apply_weight_inverse(r, x).norm();
}

// Lower-space norm: ||f||_low = ||F f||.
inline double lower_norm(const Rigging& r, const Vec& x) {
  return apply_weight(r, x).norm();
}

inline double scale_norm(const Rigging& r, const ScaleVector& v) {
  switch (v.home) {
    case HomeSpace::scaleUpper: return upper_norm(r, v.x);
    case HomeSpace::scaleLower: return lower_norm(r, v.x);
    default: return v.x.norm();
  }
}

// Duality pairing between the upper and lower spaces; on the overlap it is
// the plain model inner product of the coordinate vectors.
inline cplx duality_pairing(const Vec& upper, const Vec& lower) {
  return upper.dot(lower);  // Eigen's dot conjugates the left argument
}

// Tracked coordinates of an upper-space vector f = F^* Psi beta: recovers
// beta = Psi^* F^{-1} f (exact on ran F^* Psi).
inline Vec tracked_coordinates(const Rigging& r, const Vec& x) {
  return r.basis.adjoint() * apply_weight_inverse(r, x);
}

// Pairing coefficients against the frame F^* psi_j: c_j = <F^* psi_j, f>
// = psi_j^* (F x).  Distinct from tracked_coordinates (which inverts the
// weight); this is the sandwich side of the coupling V = F^* Psi J Psi^* F.
inline Vec frame_pairing(const Rigging& r, const Vec& x) {
  return r.basis.adjoint() * apply_weight(r, x);
}

// Synthesize f = F^* (Psi beta) from tracked upper-space coefficients.
inline Vec from_tracked_beta(const Rigging& r, const Vec& beta) {
  return apply_weight(r, r.basis * beta);
}

// Apply the perturbation V = F^* J F.
inline Vec apply_perturbation(const Rigging& r, const Perturbation& p, const Vec& x) {
  return from_tracked_beta(r, Vec(p.J * frame_pairing(r, x)));
}

// Dense matrix of V (for small oracle computations).
inline Mat dense_perturbation(const Rigging& r, const Perturbation& p) {
  Mat fk = r.kappa.cast<cplx>().asDiagonal() * r.basis;  // F^* Psi (columns)
  return fk * p.J * fk.adjoint();
}

// ---------------------------------------------------------------------------
// Free resolvent kernels
// ---------------------------------------------------------------------------

// Lattice root of z^2 - lambda z + 1 = 0 inside the unit disc.  For real z on
// the open band the root degenerates to the unit circle and a boundary limit
// must be chosen: exp(-i theta) from the upper half plane (the default, or
// forced by boundaryFromAbove) and exp(+i theta) from below (signalled by a
// negative-signed zero imaginary part).  Genuinely complex z always selects
// the strictly inside root, which is continuous with these limits.
inline cplx lattice_zeta(cplx z, bool boundaryFromAbove = false) {
  if (z.imag() == 0.0 && std::abs(z.real()) < 2.0) {
    double theta = lattice_theta(z.real());
    bool below = !boundaryFromAbove && std::signbit(z.imag());
    return std::exp((below ? iu : -iu) * theta);
  }
  cplx s = std::sqrt(z * z - 4.0);
  cplx r1 = 0.5 * (z + s), r2 = 0.5 * (z - s);
  return std::abs(r1) < std::abs(r2) ? r1 : r2;
}

// Kernel values of the free resolvent.
//   lattice: G(n,m;z) = zeta^{|n-m|} / (zeta - 1/zeta)
//   quadrature: diagonal collocation kernel delta_{nm} / (lambda_n - z)
// For real z inside the spectrum the limit from the upper half plane is
// returned (lattice); the quadrature kernel has no boundary limit entrywise
// and rejects such arguments.
inline cplx free_green(const SpectralModel& model, int n, int m, cplx z,
                       bool boundaryFromAbove = false) {
  if (model.kind == ModelKind::lattice) {
    cplx zeta = lattice_zeta(z, boundaryFromAbove);
    cplx denom = zeta - 1.0 / zeta;
    ensure(std::abs(denom) > 1e-14, "free_green: spectral band edge");
    return std::pow(zeta, std::abs(n - m)) / denom;
  }
  require(!boundaryFromAbove && z.imag() != 0.0,
          "free_green: quadrature kernel needs Im z != 0");
  if (n != m) return 0.0;
  require(n >= 0 && n < model.N, "free_green: node index out of range");
  return 1.0 / (model.rule.nodes[n] - z);
}

// ---------------------------------------------------------------------------
// Spectral window projections E_Delta for the free operator
// ---------------------------------------------------------------------------

struct WindowProjection {
  Interval window;
  bool diagonal = true;
  RVec mask;    // quadrature: 0/1 per node
  RMat kernel;  // lattice: dense symmetric kernel

  Vec apply(const Vec& x) const {
    if (diagonal) return mask.cast<cplx>().asDiagonal() * x;
    return kernel.cast<cplx>() * x;
  }
  double diag(int i) const { return diagonal ? mask[i] : kernel(i, i); }
};

inline WindowProjection window_projection(const SpectralModel& model, Interval win) {
  require(win.width() > 0.0, "window: interval must have positive width");
  WindowProjection p;
  p.window = win;
  if (model.kind == ModelKind::quadrature) {
    p.diagonal = true;
    p.mask = RVec::Zero(model.N);
    for (int n = 0; n < model.N; ++n)
      if (win.contains(model.rule.nodes[n])) p.mask[n] = 1.0;
  } else {
    p.diagonal = false;
    int d = model.dim();
    double thA = lattice_theta(win.lo);  // larger angle
    double thB = lattice_theta(win.hi);
    p.kernel.resize(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j <= i; ++j) {
        int dd = model.indexToSite(i) - model.indexToSite(j);
        double v = (dd == 0) ? (thA - thB) / pi
                             : (std::sin(thA * dd) - std::sin(thB * dd)) / (pi * dd);
        p.kernel(i, j) = v;
        p.kernel(j, i) = v;
      }
    }
  }
  return p;
}

// Hilbert-Schmidt norm of F E_Delta (exact: diagonal of E_Delta is closed
// form in both models).
inline double weighted_window_hs_norm(const SpectralModel& model, const Rigging& r,
                                      const WindowProjection& p) {
  double s = 0.0;
  for (int i = 0; i < model.dim(); ++i) s += r.kappa[i] * r.kappa[i] * p.diag(i);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Dense oracles (small models only; used by validation code and tests)
// ---------------------------------------------------------------------------

inline Mat dense_h0(const SpectralModel& model) {
  int d = model.dim();
  Mat h = Mat::Zero(d, d);
  if (model.kind == ModelKind::quadrature) {
    for (int n = 0; n < d; ++n) h(n, n) = model.rule.nodes[n];
  } else {
    for (int i = 0; i + 1 < d; ++i) {
      h(i, i + 1) = 1.0;
      h(i + 1, i) = 1.0;
    }
  }
  return h;
}

inline Mat dense_h1(const SpectralModel& model, const Rigging& r, const Perturbation& p) {
  return dense_h0(model) + dense_perturbation(r, p);
}

}  // namespace rigscat
