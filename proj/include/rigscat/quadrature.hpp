#pragma once
// Quadrature rules, orthogonal polynomial helpers and one-dimensional
// Cauchy/principal-value integral engines.  These are the numerical
// primitives behind boundary-value evaluation: everything here is plain
// real/complex analysis on an interval, with no knowledge of operator
// models.

#include <rigscat/common.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace rigscat {

// ---------------------------------------------------------------------------
// Gauss-Legendre rules
// ---------------------------------------------------------------------------

struct QuadRule {
  RVec nodes;    // ascending
  RVec weights;  // positive
  int size() const { return static_cast<int>(nodes.size()); }
};

// Legendre values P_0..P_k at x via the three-term recurrence.
inline std::vector<double> legendre_values(int k, double x) {
  std::vector<double> p(static_cast<std::size_t>(k) + 1);
  p[0] = 1.0;
  if (k >= 1) p[1] = x;
  for (int j = 1; j < k; ++j)
    p[j + 1] = ((2 * j + 1) * x * p[j] - j * p[j - 1]) / (j + 1);
  return p;
}

// n-point Gauss-Legendre rule on [-1,1].  Nodes are found by Newton iteration
// from the Chebyshev initial guess; this is deterministic and accurate to
// machine precision for the rule sizes used here (n <= ~4096).
inline QuadRule gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need n >= 1");
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // i-th root, counted from the left.
    double x = -std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto p = legendre_values(n, x);
      double dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0);
      double dx = p[n] / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto p = legendre_values(n, x);
    double dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0);
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// Affinely mapped rule on [a,b].
inline QuadRule gauss_legendre(int n, double a, double b) {
  require(b > a, "gauss_legendre: need b > a");
  QuadRule r = gauss_legendre(n);
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = c + h * r.nodes[i];
    r.weights[i] *= h;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Polynomials in monomial form (coefficient vectors, c[k] multiplies x^k)
// ---------------------------------------------------------------------------

using Poly = std::vector<double>;

inline double poly_eval(const Poly& c, double x) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

// Monomial coefficients of the Legendre polynomial P_j.
inline Poly legendre_monomial_coeffs(int j) {
  std::vector<Poly> p(static_cast<std::size_t>(std::max(j, 1)) + 1);
  p[0] = {1.0};
  p[1] = {0.0, 1.0};
  for (int k = 1; k < j; ++k) {
    Poly t(p[k].size() + 1, 0.0);  // (2k+1) x P_k
    for (std::size_t i = 0; i < p[k].size(); ++i)
      t[i + 1] = (2 * k + 1) * p[k][i];
    for (std::size_t i = 0; i < p[k - 1].size(); ++i) t[i] -= k * p[k - 1][i];
    for (auto& c : t) c /= (k + 1);
    p[k + 1] = std::move(t);
  }
  return p[j];
}

// Rewrite a polynomial given in the variable x as one in t, where x = c + h t.
inline Poly poly_compose_affine(const Poly& inX, double c, double h) {
  Poly out{0.0};
  for (std::size_t k = inX.size(); k-- > 0;) {
    // out <- out * (c + h t) + a_k
    Poly next(out.size() + 1, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      next[i] += c * out[i];
      next[i + 1] += h * out[i];
    }
    next[0] += inX[k];
    out = std::move(next);
  }
  while (out.size() > 1 && out.back() == 0.0) out.pop_back();
  return out;
}

// Orthonormal Legendre basis element psi_j on [a,b] (unit L^2([a,b]) norm),
// evaluated at x.  psi_0 is the constant (b-a)^{-1/2}.
inline double orthonormal_legendre(int j, double a, double b, double x) {
  double t = (2.0 * x - (a + b)) / (b - a);
  auto p = legendre_values(j, t);
  return std::sqrt((2.0 * j + 1.0) / (b - a)) * p[j];
}

// Monomial coefficients of psi_j in the original variable x, so that
// poly_eval of the result at x agrees with orthonormal_legendre(j,a,b,x).
inline Poly orthonormal_legendre_coeffs(int j, double a, double b) {
  // P_j lives in t = (2x - (a+b)) / (b-a); substitute t as an affine image of x.
  Poly c = poly_compose_affine(legendre_monomial_coeffs(j), -(a + b) / (b - a),
                               2.0 / (b - a));
  double s = std::sqrt((2.0 * j + 1.0) / (b - a));
  for (auto& v : c) v *= s;
  return c;
}

// ---------------------------------------------------------------------------
// Cauchy moments on [-1,1]
// ---------------------------------------------------------------------------

// W_p(z) = int_{-1}^{1} t^p / (t - z) dt for z off the interval, or the
// boundary value when z is real inside (-1,1): the principal value plus
// +i*pi*z^p from above and -i*pi*z^p from below, with the side taken from the
// sign bit so that -0.0 selects the lower limit.  The forward recursion
// W_p = m_{p-1} + z W_{p-1} with m_q = int t^q dt is stable for |z| <~ 1.
inline std::vector<cplx> cauchy_moments(cplx z, int pmax) {
  std::vector<cplx> w(static_cast<std::size_t>(pmax) + 1);
  if (z.imag() == 0.0 && std::abs(z.real()) < 1.0) {
    double x = z.real();
    double side = std::signbit(z.imag()) ? -pi : pi;
    w[0] = cplx(std::log((1.0 - x) / (1.0 + x)), side);
  } else {
    // log(t - z) is continuous for t real when z has nonzero imaginary part.
    w[0] = std::log(1.0 - z) - std::log(-1.0 - z);
  }
  for (int p = 1; p <= pmax; ++p)
    w[p] = (p % 2 == 1 ? 2.0 / p : 0.0) + z * w[p - 1];
  return w;
}

// int_{-1}^{1} q(t)/(t - z) dt for a polynomial q given by monomial
// coefficients; same conventions for real z as cauchy_moments.
inline cplx cauchy_polynomial(const Poly& q, cplx z) {
  auto w = cauchy_moments(z, static_cast<int>(q.size()) - 1);
  cplx s = 0.0;
  for (std::size_t p = 0; p < q.size(); ++p) s += q[p] * w[p];
  return s;
}

// ---------------------------------------------------------------------------
// Principal-value integrals of smooth functions
// ---------------------------------------------------------------------------

namespace detail {

// Chebyshev interpolation coefficients on extrema nodes x_k = cos(k pi / n),
// from function values f(x_0..x_n); naive O(n^2) transform.
inline std::vector<cplx> chebyshev_coeffs(const std::vector<cplx>& f) {
  int n = static_cast<int>(f.size()) - 1;
  std::vector<cplx> c(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    cplx s = 0.5 * (f[0] + (j % 2 == 0 ? f[n] : -f[n]));
    for (int k = 1; k < n; ++k) s += f[k] * std::cos(j * k * pi / n);
    c[j] = (2.0 / n) * s;
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return c;
}

// Principal-value Chebyshev moments  C_p = PV int_{-1}^{1} T_p(t)/t dt.
// C_0 = 0 by symmetry; the recursion C_{p+1} = 2 s_p - C_{p-1} with
// s_p = int T_p dt follows from T_{p+1} = 2 t T_p - T_{p-1}.
inline std::vector<double> chebyshev_pv_moments(int pmax) {
  std::vector<double> c(static_cast<std::size_t>(pmax) + 1, 0.0);
  if (pmax >= 1) c[1] = 2.0;
  for (int p = 1; p < pmax; ++p) {
    double sp = (p % 2 == 0) ? 2.0 / (1.0 - p * p) : 0.0;
    c[p + 1] = 2.0 * sp - c[p - 1];
  }
  return c;
}

}  // namespace detail

// Composite Gauss-Legendre integral of a smooth complex-valued function.
inline cplx integrate_smooth(const std::function<cplx(double)>& f, double a,
                             double b, int panels = 8, int nodesPerPanel = 20) {
  static const QuadRule base = gauss_legendre(20);
  QuadRule rule = (nodesPerPanel == 20) ? base : gauss_legendre(nodesPerPanel);
  cplx s = 0.0;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double pa = a + p * h, c = pa + 0.5 * h;
    for (int i = 0; i < rule.size(); ++i)
      s += 0.5 * h * rule.weights[i] * f(c + 0.5 * h * rule.nodes[i]);
  }
  return s;
}

// Composite Gauss-Legendre integral of a function that is smooth on [a,b]
// but varies rapidly near refinePoint (which may lie inside or outside the
// interval): panels never exceed their distance to that point, shrinking
// geometrically toward it.
inline cplx integrate_refined(const std::function<cplx(double)>& f, double a,
                              double b, double refinePoint) {
  static const QuadRule rule = gauss_legendre(16);
  cplx acc = 0.0;
  std::function<void(double, double)> rec = [&](double l, double h) {
    double dist = (l <= refinePoint && refinePoint <= h)
                      ? 0.0  // point inside: split down to the width floor
                      : std::min(std::abs(l - refinePoint), std::abs(h - refinePoint));
    if (h - l > std::max(dist, 1e-10 * (b - a))) {
      double m = 0.5 * (l + h);
      rec(l, m);
      rec(m, h);
      return;
    }
    double c = 0.5 * (l + h), hw = 0.5 * (h - l);
    for (int i = 0; i < rule.size(); ++i)
      acc += hw * rule.weights[i] * f(c + hw * rule.nodes[i]);
  };
  if (b > a) rec(a, b);
  return acc;
}

// PV int_a^b f(t)/(t - pole) dt with the pole strictly inside (a,b) and f
// smooth.  A symmetric panel around the pole is handled with Chebyshev
// moments (the even part integrates to zero exactly); the remaining pieces
// are smooth and integrated with geometrically refined Gauss panels whose
// width never exceeds their distance to the pole.
inline cplx pv_cauchy_integral(const std::function<cplx(double)>& f, double a,
                               double b, double pole, int chebDegree = 24) {
  require(pole > a && pole < b, "pv_cauchy_integral: pole must lie inside (a,b)");
  double w = std::min(pole - a, b - pole);
  // Symmetric panel [pole-w, pole+w], scaled variable tau in [-1,1].
  std::vector<cplx> fv(static_cast<std::size_t>(chebDegree) + 1);
  for (int k = 0; k <= chebDegree; ++k) {
    double tau = std::cos(k * pi / chebDegree);
    fv[k] = f(pole + w * tau);
  }
  auto coef = detail::chebyshev_coeffs(fv);
  auto mom = detail::chebyshev_pv_moments(chebDegree);
  cplx s = 0.0;
  for (int p = 0; p <= chebDegree; ++p) s += coef[p] * mom[p];

  // Outer pieces, refined geometrically toward the pole.
  static const QuadRule outer = gauss_legendre(16);
  auto smoothPart = [&](double lo, double hi, double poleSide) {
    // Integrate f(t)/(t-pole) over [lo,hi], splitting so each panel is no
    // wider than its distance to the pole.
    cplx acc = 0.0;
    std::function<void(double, double)> rec = [&](double l, double h) {
      double dist = std::min(std::abs(l - poleSide), std::abs(h - poleSide));
      if (h - l > dist && h - l > 1e-14 * (b - a)) {
        double m = 0.5 * (l + h);
        rec(l, m);
        rec(m, h);
        return;
      }
      double c = 0.5 * (l + h), hw = 0.5 * (h - l);
      for (int i = 0; i < outer.size(); ++i) {
        double t = c + hw * outer.nodes[i];
        acc += hw * outer.weights[i] * f(t) / (t - poleSide);
      }
    };
    if (hi > lo) rec(lo, hi);
    return acc;
  };
  if (pole - w > a) s += smoothPart(a, pole - w, pole);
  if (pole + w < b) s += smoothPart(pole + w, b, pole);
  return s;
}

// ---------------------------------------------------------------------------
// Barycentric Lagrange interpolation on arbitrary distinct nodes
// ---------------------------------------------------------------------------

// Cardinal functions ell_j (ell_j(node_k) = delta_jk).  Weights are kept in a
// normalized scale: cardinals are ratios, so any common factor drops out and
// over/underflow for large node counts is avoided by periodic rescaling.
struct Barycentric {
  RVec nodes;
  RVec w;

  explicit Barycentric(RVec nodesIn) : nodes(std::move(nodesIn)) {
    int n = static_cast<int>(nodes.size());
    require(n >= 1, "Barycentric: need at least one node");
    w.resize(n);
    for (int j = 0; j < n; ++j) {
      double prod = 1.0;
      int scalePow = 0;
      for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        prod *= (nodes[j] - nodes[k]);
        while (std::abs(prod) > 1e100) { prod *= 1e-100; scalePow += 1; }
        while (std::abs(prod) < 1e-100 && prod != 0.0) { prod *= 1e100; scalePow -= 1; }
      }
      // Store log-magnitude and sign via a two-pass normalization below.
      w[j] = prod;
      scale_.push_back(scalePow);
    }
    // Normalize all weights to the common (maximal) scale power.
    int maxPow = *std::max_element(scale_.begin(), scale_.end());
    for (int j = 0; j < n; ++j) {
      double v = 1.0 / w[j];
      int rel = scale_[j] - maxPow;  // <= 0
      // 1/prod carries scale 10^(-100*scalePow); bring all to a common frame.
      while (rel < 0) { v *= 1e100; ++rel; }
      w[j] = v;
    }
    double m = w.cwiseAbs().maxCoeff();
    ensure(m > 0.0 && std::isfinite(m), "Barycentric: degenerate node set");
    w /= m;
  }

  // All cardinal values at x.
  RVec cardinals(double x) const {
    int n = static_cast<int>(nodes.size());
    RVec out = RVec::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (x == nodes[j]) {
        out.setZero();
        out[j] = 1.0;
        return out;
      }
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      out[j] = w[j] / (x - nodes[j]);
      denom += out[j];
    }
    out /= denom;
    return out;
  }

  // Interpolate data values at x.
  cplx eval(const Vec& values, double x) const {
    RVec c = cardinals(x);
    cplx s = 0.0;
    for (int j = 0; j < c.size(); ++j) s += c[j] * values[j];
    return s;
  }

 private:
  std::vector<int> scale_;
};

}  // namespace rigscat
