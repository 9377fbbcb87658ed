#pragma once
// Boundary values of weighted resolvent compressions.
//
// The central objects are the m x m matrices
//     T(z) = Psi^* F R(z) F^* Psi,          Im z > 0,
// their boundary values T(lambda + i0), windowed variants with a spectral
// window inserted, and the perturbed counterparts obtained from the closed
// second-resolvent relation T1 = (1 + T0 J)^{-1} T0.
//
// Two independent numerical routes to the boundary are provided and cross
// checked: a direct evaluation of the limit (exact moment/closed-form
// algebra) and polynomial extrapolation in the offset y of T(lambda + i y).

#include <rigscat/common.hpp>
#include <rigscat/model.hpp>
#include <rigscat/quadrature.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace rigscat {

struct BoundaryResolvent {
  double lambda = 0.0;
  Mat T;                              // m x m boundary value at lambda + i0
  double methodDisagreement = 0.0;    // direct vs extrapolated (when both ran)
  double extrapolationResidual = 0.0; // Richardson table tail
  double condition = 1.0;             // cond(1 + T0 J) for perturbed values
};

enum class BoundaryMethod { direct, extrapolation, both };

inline Mat hermitian_imag(const Mat& t) { return (t - t.adjoint()) / (2.0 * iu); }
inline Mat hermitian_real(const Mat& t) { return (t + t.adjoint()) / 2.0; }

// Margin inside which boundary values near a spectral edge are refused.
inline double edge_margin(const SpectralModel& model) {
  return 0.02 * model.spectrum.width();
}

namespace detail {

// Tracked integrand polynomials for the quadrature model, in the spectral
// variable itself: p_ij(x) = kappa(x)^2 psi_i(x) psi_j(x).
inline std::vector<std::vector<Poly>> tracked_polys(const SpectralModel& model,
                                                    const Rigging& r) {
  Poly kw2 = poly_mul(r.weight.poly, r.weight.poly);
  int m = r.m();
  std::vector<Poly> psi(m);
  for (int j = 0; j < m; ++j)
    psi[j] = orthonormal_legendre_coeffs(j, model.spectrum.lo, model.spectrum.hi);
  std::vector<std::vector<Poly>> p(m, std::vector<Poly>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      p[i][j] = poly_mul(kw2, poly_mul(psi[i], psi[j]));
      p[j][i] = p[i][j];
    }
  return p;
}

// Quadrature model: T(z) (optionally windowed) by exact Cauchy moments of the
// tracked polynomials.  Valid for Im z > 0 and for real z as the limit from
// above; the measure restriction to a window becomes moments on the
// subinterval.
inline Mat quadrature_tracked_cauchy(const SpectralModel& model, const Rigging& r,
                                     cplx z, const Interval* window) {
  Interval dom = window ? *window : model.spectrum;
  require(dom.lo >= model.spectrum.lo - 1e-12 && dom.hi <= model.spectrum.hi + 1e-12,
          "boundary: window must lie inside the spectrum");
  double c = dom.mid(), h = 0.5 * dom.width();
  auto polys = tracked_polys(model, r);
  cplx zt = (z - c) / h;
  int m = r.m();
  Mat T(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      // Integrand in the scaled variable of `dom`: x = c + h t_w; the measure
      // d mu = h d t_w cancels against 1/(mu - z) = 1/(h (t_w - zt)).
      Poly pw = poly_compose_affine(polys[i][j], c, h);
      cplx v = cauchy_polynomial(pw, zt);
      T(i, j) = v;
      T(j, i) = v;
    }
  return T;
}

// Lattice model: T(z) from the closed-form free kernel.
inline Mat lattice_tracked_green(const SpectralModel& model, const Rigging& r,
                                 cplx z, bool boundaryFromAbove) {
  int m = r.m();
  Mat T(m, m);
  cplx zeta = lattice_zeta(z, boundaryFromAbove);
  cplx denom = zeta - 1.0 / zeta;
  ensure(std::abs(denom) > 1e-12, "boundary: spectral band edge");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      int d = std::abs(r.auxSites[i] - r.auxSites[j]);
      cplx v = r.kappa[model.siteToIndex(r.auxSites[i])] *
               r.kappa[model.siteToIndex(r.auxSites[j])] * std::pow(zeta, d) / denom;
      T(i, j) = v;
      T(j, i) = v;  // kernel is symmetric (not Hermitian) in the site indices
    }
  return T;
}

// Lattice model, windowed boundary value via arc integrals in the momentum
// variable.  For sites distance d apart and window angles thB < thA:
//   (E R)(d) = (1/pi) PV int_{thB}^{thA} cos(k d)/(2 cos k - lambda) dk
//              + (i/2) cos(thL d)/sin(thL) * [lambda in window].
// The principal-value factor has the closed antiderivative
//   (1/(2 sin thL)) ln |sin((k+thL)/2) / sin((k-thL)/2)|.
inline Mat lattice_windowed_green(const SpectralModel& model, const Rigging& r,
                                  Interval win, double lambda) {
  double thA = lattice_theta(win.lo), thB = lattice_theta(win.hi);
  require(thA > thB + 1e-12, "boundary: window does not meet the spectrum");
  double thL = lattice_theta(lambda);
  double sinL = std::sin(thL);
  ensure(sinL > 1e-8, "boundary: spectral band edge");
  bool inside = win.contains(lambda);

  // PV of int dk / (2 cos k - lambda) over the arc.
  auto anti = [&](double k) {
    return std::log(std::abs(std::sin(0.5 * (k + thL)) / std::sin(0.5 * (k - thL)))) /
           (2.0 * sinL);
  };
  double pvFactor = anti(thA) - anti(thB);

  int m = r.m();
  Mat T(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      int d = std::abs(r.auxSites[i] - r.auxSites[j]);
      double cosLd = std::cos(thL * d);
      // Smooth part: the subtracted integrand has a removable singularity at
      // k = thL; evaluate by a guarded ratio there.
      auto sub = [&](double k) -> cplx {
        double h = k - thL;
        if (std::abs(h) < 1e-5) {
          double num = d * std::sin(thL * d) + 0.5 * d * d * cosLd * h;
          double den = 2.0 * sinL + std::cos(thL) * h;
          return num / den;
        }
        return (std::cos(k * d) - cosLd) / (2.0 * std::cos(k) - lambda);
      };
      double smooth = integrate_refined(sub, thB, thA, thL).real();
      double re = (smooth + cosLd * pvFactor) / pi;
      double im = inside ? cosLd / (2.0 * sinL) : 0.0;
      cplx v = r.kappa[model.siteToIndex(r.auxSites[i])] *
               r.kappa[model.siteToIndex(r.auxSites[j])] * cplx(re, im);
      T(i, j) = v;
      T(j, i) = v;
    }
  return T;
}

// Off-axis windowed compression on the lattice: the momentum-arc integral
// with z strictly above the axis, evaluated by pole-refined panel quadrature.
// Used as the independent route behind the extrapolated windowed value.
inline Mat lattice_windowed_offaxis(const SpectralModel& model, const Rigging& r,
                                    Interval win, cplx z) {
  double thA = lattice_theta(win.lo), thB = lattice_theta(win.hi);
  require(thA > thB + 1e-12, "boundary: window does not meet the spectrum");
  double thNear = lattice_theta(std::clamp(z.real(), -2.0, 2.0));
  int m = r.m();
  Mat T(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      int d = std::abs(r.auxSites[i] - r.auxSites[j]);
      cplx val = integrate_refined(
                     [&](double k) { return std::cos(k * d) / (2.0 * std::cos(k) - z); },
                     thB, thA, thNear) /
                 pi;
      cplx v = r.kappa[model.siteToIndex(r.auxSites[i])] *
               r.kappa[model.siteToIndex(r.auxSites[j])] * val;
      T(i, j) = v;
      T(j, i) = v;
    }
  return T;
}

// Neville extrapolation of matrix samples vals[k] = T(y_k) to y = 0;
// *residual receives the difference between the last two table stages.
inline Mat neville_to_zero(const std::vector<double>& ys, std::vector<Mat> p,
                           double* residual) {
  int n = static_cast<int>(p.size());
  Mat prevTop = p[0];
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i + j < n; ++i)
      p[i] = (ys[i + j] * p[i] - ys[i] * p[i + 1]) / (ys[i + j] - ys[i]);
    if (j == n - 1 && residual) *residual = max_abs(Mat(p[0] - prevTop));
    if (j < n - 1) prevTop = p[0];
  }
  return p[0];
}

}  // namespace detail

// T(z) for Im z != 0 (upper or lower half plane; the latter by symmetry of
// the kernels, needed for two-sided boundary work).
inline Mat sandwiched_resolvent(const SpectralModel& model, const Rigging& r, cplx z) {
  require(z.imag() != 0.0, "sandwiched_resolvent: need Im z != 0");
  if (model.kind == ModelKind::quadrature)
    return detail::quadrature_tracked_cauchy(model, r, z, nullptr);
  return detail::lattice_tracked_green(model, r, z, false);
}

// Boundary value T(lambda + i0) of the free sandwiched resolvent.
inline BoundaryResolvent boundary_value(const SpectralModel& model, const Rigging& r,
                                        double lambda,
                                        BoundaryMethod method = BoundaryMethod::both) {
  // The exact direct route is valid on the whole open spectrum; the
  // extrapolation route loses accuracy near the edges and is refused there.
  if (method == BoundaryMethod::direct) {
    require(model.spectrum.contains(lambda),
            "boundary: point outside the open spectrum");
  } else {
    double margin = edge_margin(model);
    require(lambda > model.spectrum.lo + margin && lambda < model.spectrum.hi - margin,
            "boundary: point too close to a spectral edge");
  }
  BoundaryResolvent out;
  out.lambda = lambda;

  Mat direct;
  if (model.kind == ModelKind::quadrature)
    direct = detail::quadrature_tracked_cauchy(model, r, cplx(lambda, 0.0), nullptr);
  else
    direct = detail::lattice_tracked_green(model, r, cplx(lambda, 0.0), true);

  if (method == BoundaryMethod::direct) {
    out.T = direct;
    return out;
  }

  // Polynomial extrapolation in the offset: samples at y0 / 2^k.  The map
  // y -> T(lambda + i y) continues analytically to |y| < dist(lambda, edges),
  // so the largest offset is kept inside half that radius; a fixed offset
  // would stall the table near the ends of the margined range.
  const int levels = 9;
  double distEdge = std::min(lambda - model.spectrum.lo, model.spectrum.hi - lambda);
  double y0 = std::min(0.1 * model.spectrum.width(), 0.5 * distEdge);
  std::vector<double> ys(levels);
  std::vector<Mat> vals(levels);
  for (int k = 0; k < levels; ++k) {
    ys[k] = y0 / double(1 << k);
    vals[k] = sandwiched_resolvent(model, r, cplx(lambda, ys[k]));
  }
  double resid = 0.0;
  Mat extr = detail::neville_to_zero(ys, vals, &resid);
  out.extrapolationResidual = resid;

  if (method == BoundaryMethod::extrapolation) {
    out.T = extr;
    return out;
  }
  out.T = direct;
  out.methodDisagreement = max_abs(Mat(direct - extr));
  return out;
}

// Windowed boundary value T^W(lambda + i0) = Psi^* F E_W R(lambda+i0) F^* Psi.
// The direct route evaluates the singular-part-subtracted boundary kernel;
// the extrapolation route pushes the off-axis windowed compression to the
// axis, giving an independent cross-check (method == both records the gap).
inline BoundaryResolvent windowed_boundary_value(const SpectralModel& model,
                                                 const Rigging& r, Interval win,
                                                 double lambda,
                                                 BoundaryMethod method = BoundaryMethod::direct) {
  double margin = edge_margin(model);
  require(lambda > model.spectrum.lo + margin && lambda < model.spectrum.hi - margin,
          "boundary: point too close to a spectral edge");
  BoundaryResolvent out;
  out.lambda = lambda;

  Interval clipped{std::max(win.lo, model.spectrum.lo),
                   std::min(win.hi, model.spectrum.hi)};
  require(clipped.hi > clipped.lo, "boundary: window misses the spectrum");
  require(std::abs(lambda - clipped.lo) > 1e-8 && std::abs(lambda - clipped.hi) > 1e-8,
          "boundary: windowed value diverges at a window edge");

  Mat direct;
  if (method != BoundaryMethod::extrapolation) {
    if (model.kind == ModelKind::quadrature)
      direct = detail::quadrature_tracked_cauchy(model, r, cplx(lambda, 0.0), &clipped);
    else
      direct = detail::lattice_windowed_green(model, r, clipped, lambda);
  }
  if (method == BoundaryMethod::direct) {
    out.T = direct;
    return out;
  }

  // Analyticity in the offset now reaches only to the window endpoints (the
  // integration cut is the clipped window), so those govern the largest y.
  const int levels = 9;
  double distEdge = std::min(std::abs(lambda - clipped.lo), std::abs(lambda - clipped.hi));
  double y0 = std::min(0.1 * model.spectrum.width(), 0.5 * distEdge);
  std::vector<double> ys(levels);
  std::vector<Mat> vals(levels);
  for (int k = 0; k < levels; ++k) {
    ys[k] = y0 / double(1 << k);
    cplx z(lambda, ys[k]);
    if (model.kind == ModelKind::quadrature)
      vals[k] = detail::quadrature_tracked_cauchy(model, r, z, &clipped);
    else
      vals[k] = detail::lattice_windowed_offaxis(model, r, clipped, z);
  }
  double resid = 0.0;
  Mat extr = detail::neville_to_zero(ys, vals, &resid);
  out.extrapolationResidual = resid;

  if (method == BoundaryMethod::extrapolation) {
    out.T = extr;
    return out;
  }
  out.T = direct;
  out.methodDisagreement = max_abs(Mat(direct - extr));
  return out;
}

// Inverse-stability measure of A = 1 + T J: the inverse norm anchored to the
// identity scale, max(1, ||A||) * ||A^{-1}||.  The plain condition number is
// blind to a uniformly tiny A (the m = 1 resonance case).
inline double anchored_condition(const Mat& a, const Eigen::PartialPivLU<Mat>& lu) {
  double rc = lu.rcond();  // = 1 / (||A||_1 ||A^{-1}||_1)
  if (!(rc > 0.0)) return std::numeric_limits<double>::infinity();
  double normA = a.cwiseAbs().colwise().sum().maxCoeff();
  if (normA <= 0.0) return std::numeric_limits<double>::infinity();
  double normInv = 1.0 / (rc * normA);
  return std::max(1.0, normA) * normInv;
}

// Perturbed boundary value via the closed second-resolvent relation
// T1 = (1 + T0 J)^{-1} T0.  Fails loudly when 1 + T0 J is nearly singular
// (an embedded resonance of the pair at this energy).
inline BoundaryResolvent perturbed_boundary_value(const BoundaryResolvent& free,
                                                  const Perturbation& p) {
  int m = static_cast<int>(free.T.rows());
  Mat A = Mat::Identity(m, m) + free.T * p.J;
  Eigen::PartialPivLU<Mat> lu(A);
  BoundaryResolvent out;
  out.lambda = free.lambda;
  out.extrapolationResidual = free.extrapolationResidual;
  out.methodDisagreement = free.methodDisagreement;
  out.condition = anchored_condition(A, lu);
  ensure(out.condition < tol().conditionLimit,
         "perturbed boundary: embedded resonance (1 + T J nearly singular)");
  out.T = lu.solve(free.T);
  return out;
}

// Perturbed resolvent compression at Im z != 0 (same closed relation).
inline Mat perturbed_sandwiched_resolvent(const SpectralModel& model, const Rigging& r,
                                          const Perturbation& p, cplx z) {
  Mat t0 = sandwiched_resolvent(model, r, z);
  int m = static_cast<int>(t0.rows());
  return (Mat::Identity(m, m) + t0 * p.J).partialPivLu().solve(t0);
}

// ---------------------------------------------------------------------------
// Regular-point certification scan
// ---------------------------------------------------------------------------

struct RegularPointScan {
  RVec lambdas;
  std::vector<bool> regular;
  RVec residuals;    // extrapolation-table tail (the membership certificate)
  RVec conditions;   // worst cond(1 + T0 J) over supplied couplings
  double regularFraction = 0.0;
};

// Scan a grid of interior energies, certifying each grid point as regular
// when (a) the boundary extrapolation table has settled (its two finest
// stages differ by less than the regularity tolerance) and (b) every
// supplied coupling has a well-conditioned 1 + T0 J there.  Certification is
// at the grid points only; no claim is made between them.
inline RegularPointScan scan_regular_points(const SpectralModel& model, const Rigging& r,
                                            const std::vector<Perturbation>& ps,
                                            int gridPoints, unsigned threads = 1) {
  require(gridPoints >= 2, "scan: need at least two grid points");
  double margin = edge_margin(model);
  double lo = model.spectrum.lo + 2.0 * margin, hi = model.spectrum.hi - 2.0 * margin;
  RegularPointScan scan;
  scan.lambdas.resize(gridPoints);
  scan.residuals.resize(gridPoints);
  scan.conditions.resize(gridPoints);
  scan.regular.assign(gridPoints, false);
  for (int i = 0; i < gridPoints; ++i)
    scan.lambdas[i] = lo + (hi - lo) * i / double(gridPoints - 1);
  parallel_for(gridPoints, threads, [&](std::size_t i) {
    auto bd = boundary_value(model, r, scan.lambdas[static_cast<int>(i)]);
    double worstCond = 1.0;
    bool resonant = false;
    for (const auto& p : ps) {
      int m = static_cast<int>(bd.T.rows());
      Mat A = Mat::Identity(m, m) + bd.T * p.J;
      Eigen::PartialPivLU<Mat> lu(A);
      double c = anchored_condition(A, lu);
      worstCond = std::max(worstCond, c);
      if (c >= tol().conditionLimit) resonant = true;
    }
    scan.residuals[static_cast<int>(i)] = bd.extrapolationResidual;
    scan.conditions[static_cast<int>(i)] = worstCond;
    scan.regular[i] = !resonant && bd.extrapolationResidual <= tol().regularResidual;
  });
  int nReg = 0;
  for (bool b : scan.regular) nReg += b ? 1 : 0;
  scan.regularFraction = double(nReg) / double(gridPoints);
  return scan;
}

}  // namespace rigscat
