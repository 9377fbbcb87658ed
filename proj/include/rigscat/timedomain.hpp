#pragma once
// Time-domain propagation oracle (lattice).
//
// Propagation on a large independent lattice via the Chebyshev expansion of
// exp(-itH): H is rescaled by a spectral bound alpha, and the series
// sum_k (2 - delta_k0) (-i)^k J_k(alpha t) T_k(H/alpha) is summed in time
// chunks.  Bessel weights come from Miller's backward recurrence.  On top of
// the propagator: wave operators by the time-limit definition, transmission
// by time of flight with momentum projections, and the energy-window decay
// diagnostic.  Everything here is independent of the stationary machinery —
// it shares no boundary-value code.

#include <rigscat/common.hpp>
#include <rigscat/model.hpp>

#include <cmath>
#include <vector>

namespace rigscat {

// ---------------------------------------------------------------------------
// Bessel weights
// ---------------------------------------------------------------------------

// J_0..J_kmax at x >= 0 by Miller's backward recurrence with the
// normalization J_0 + 2 sum J_{2k} = 1.
inline std::vector<double> bessel_j_table(double x, int kmax) {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  int start = kmax + 14 + static_cast<int>(std::sqrt(40.0 * kmax + 40.0 * x));
  double jp = 0.0, j = 1e-30, norm = 0.0;
  for (int k = start; k >= 1; --k) {
    double jm = (2.0 * k / x) * j - jp;
    jp = j;
    j = jm;
    if (k - 1 <= kmax) out[k - 1] = j;
    if (((k - 1) % 2) == 0) norm += (k - 1 == 0) ? j : 2.0 * j;
    if (std::abs(j) > 1e250) {  // rescale to avoid overflow
      j *= 1e-250;
      jp *= 1e-250;
      norm *= 1e-250;
      for (auto& v : out) v *= 1e-250;
    }
  }
  for (auto& v : out) v /= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Propagation setup
// ---------------------------------------------------------------------------

// An independent (usually much larger) lattice carrying the same local
// potential as a model/rigging/coupling triple.
struct PropagationSetup {
  int radius = 0;
  std::vector<int> potSites;  // potential support
  Mat vBlock;                 // dense potential block on potSites
  double specBound = 2.5;     // alpha >= ||H||

  int dim() const { return 2 * radius + 1; }
  int idx(int n) const { return n + radius; }

  Vec applyH(const Vec& x) const {
    int d = dim();
    Vec y = Vec::Zero(d);
    for (int i = 0; i + 1 < d; ++i) {
      y[i] += x[i + 1];
      y[i + 1] += x[i];
    }
    if (!potSites.empty()) {
      int nb = static_cast<int>(potSites.size());
      Vec loc(nb);
      for (int a = 0; a < nb; ++a) loc[a] = x[idx(potSites[a])];
      Vec out = vBlock * loc;
      for (int a = 0; a < nb; ++a) y[idx(potSites[a])] += out[a];
    }
    return y;
  }
};

// Free propagation lattice of the given radius.
inline PropagationSetup free_propagation_setup(int radius) {
  require(radius >= 8, "propagation: radius too small");
  PropagationSetup s;
  s.radius = radius;
  s.specBound = 2.25;
  return s;
}

// Interacting lattice: embed the model's potential F^* J F (restricted to the
// tracked sites, which is exact for the tracked coupling).
inline PropagationSetup interacting_propagation_setup(int radius,
                                                      const SpectralModel& model,
                                                      const Rigging& r,
                                                      const Perturbation& p) {
  require(model.kind == ModelKind::lattice, "propagation: lattice models only");
  PropagationSetup s;
  require(radius >= model.L || radius >= 8, "propagation: radius too small");
  s.radius = radius;
  s.potSites = r.auxSites;
  int m = r.m();
  for (int a = 0; a < m; ++a)
    require(std::abs(r.auxSites[a]) <= radius, "propagation: potential outside lattice");
  s.vBlock.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      s.vBlock(a, b) = r.kappa[model.siteToIndex(r.auxSites[a])] * p.J(a, b) *
                       r.kappa[model.siteToIndex(r.auxSites[b])];
  Eigen::SelfAdjointEigenSolver<Mat> es(s.vBlock, Eigen::EigenvaluesOnly);
  double vNorm = std::max(std::abs(es.eigenvalues().minCoeff()),
                          std::abs(es.eigenvalues().maxCoeff()));
  s.specBound = 2.0 + vNorm + 0.25;
  return s;
}

// ---------------------------------------------------------------------------
// Chebyshev propagator
// ---------------------------------------------------------------------------

struct PropagationResult {
  Vec psi;
  double normDefect = 0.0;  // | ||psi_t|| - ||psi_0|| |
  double errorBound = 0.0;  // accumulated series-truncation bound
  int terms = 0;            // Chebyshev terms summed (all chunks)
};

inline PropagationResult propagate(const PropagationSetup& s, const Vec& psi0,
                                   double t, double chunkPhase = 60.0) {
  PropagationResult res;
  res.psi = psi0;
  double norm0 = psi0.norm();
  if (t == 0.0 || norm0 == 0.0) return res;

  double alpha = s.specBound;
  double remaining = t;
  double maxStep = chunkPhase / alpha;
  while (remaining != 0.0) {
    double step = std::clamp(remaining, -maxStep, maxStep);
    remaining -= step;
    double x = alpha * std::abs(step);
    int kmax = static_cast<int>(x + 11.0 * std::cbrt(x + 1.0) + 30.0);
    auto bj = bessel_j_table(x, kmax);
    // exp(-i step H) = sum_k (2 - d_k0) (-i sgn(step))^k J_k(x) T_k(H/alpha).
    cplx unit = (step >= 0.0) ? -iu : iu;
    Vec tkm1 = res.psi;                        // T_0 psi
    Vec tk = s.applyH(res.psi) / alpha;        // T_1 psi
    Vec acc = bj[0] * tkm1 + 2.0 * unit * bj[1] * tk;
    cplx pw = unit;
    for (int k = 2; k <= kmax; ++k) {
      Vec tkp = (2.0 / alpha) * s.applyH(tk) - tkm1;
      tkm1.swap(tk);
      tk.swap(tkp);
      pw *= unit;
      if (std::abs(bj[k]) > 1e-18) acc += 2.0 * pw * bj[k] * tk;
      ++res.terms;
    }
    // Discarded-tail bound: beyond kmax the weights decay super-
    // exponentially, so a small multiple of the last one dominates the tail.
    res.errorBound += 8.0 * std::abs(bj[kmax]) * norm0;
    res.psi.swap(acc);
  }
  res.normDefect = std::abs(res.psi.norm() - norm0);
  ensure(res.errorBound <= 1e-8, "propagate: step control failure (error bound above 1e-8)");
  return res;
}

// Packet-clearance precheck: the packet (center, width sigma) must stay at
// least 10 sigma away from the lattice boundary for the whole run (ballistic
// speed is at most 2).
inline void check_packet_clearance(int radius, double center, double sigma,
                                   double horizon) {
  require(std::abs(center) + 2.0 * horizon + 10.0 * sigma <= radius,
          "propagation: packet would reach the lattice boundary before the horizon");
}

// ---------------------------------------------------------------------------
// Packets and wave operators by the time limit
// ---------------------------------------------------------------------------

// Normalized Gaussian packet with carrier momentum theta0 in (0, pi); the
// carrier exp(-i theta0 n) moves right with group speed 2 sin(theta0).
inline Vec gaussian_packet(int radius, double center, double theta0, double sigma) {
  int d = 2 * radius + 1;
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    double n = i - radius;
    g[i] = std::exp(-(n - center) * (n - center) / (4.0 * sigma * sigma)) *
           std::exp(-iu * (theta0 * n));
  }
  g /= g.norm();
  return g;
}

struct TimeWaveResult {
  Vec psi;           // approximation of W_sign f
  double cauchyGap;  // || result(T) - result(T/2) ||
  double normDefect;
};

// W_sign f by the definition: evolve f freely to t = sign*T, then back under
// the interacting dynamics.  The Cauchy gap compares against the halved
// horizon; a gap above 1e-2 means the limit has not converged.
inline TimeWaveResult time_wave_operator(const PropagationSetup& freeSetup,
                                         const PropagationSetup& interactingSetup,
                                         const Vec& f, double horizon, int sign,
                                         bool withCauchyCheck = true) {
  require(sign == 1 || sign == -1, "time wave operator: sign must be +1 or -1");
  require(horizon > 0.0, "time wave operator: horizon must be positive");
  auto run = [&](double T) {
    PropagationResult a = propagate(freeSetup, f, sign * T);
    PropagationResult b = propagate(interactingSetup, a.psi, -sign * T);
    return std::make_pair(b.psi, a.normDefect + b.normDefect);
  };
  TimeWaveResult out;
  auto [psi, defect] = run(horizon);
  out.psi = psi;
  out.normDefect = defect;
  out.cauchyGap = 0.0;
  if (withCauchyCheck) {
    auto [psiHalf, defectHalf] = run(0.5 * horizon);
    (void)defectHalf;
    out.cauchyGap = (out.psi - psiHalf).norm();
    ensure(out.cauchyGap <= 1e-2, "time wave operator: not converged");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transmission by time of flight
// ---------------------------------------------------------------------------

struct FlightTransmission {
  double theta0 = 0.0;
  double lambda = 0.0;
  double transmittedMass = 0.0;
  double reflectedMass = 0.0;
  double residualMass = 0.0;  // mass still inside the separator region
  double normDefect = 0.0;
  double tauSq = 0.0;  // on-shell transmission probability at theta0
};

// Launch a right-moving packet from the left, evolve under the interacting
// dynamics until it has cleared the scatterer, and read off the exact-
// momentum transmission as the ratio of momentum projections over the
// transmitted region between the interacting and free evolutions.
inline FlightTransmission transmission_by_flight(const PropagationSetup& freeSetup,
                                                 const PropagationSetup& interacting,
                                                 double theta0, double sigma,
                                                 double center, double flightTime,
                                                 int separator = 40) {
  require(center < -separator, "flight: packet must start left of the scatterer");
  FlightTransmission ft;
  ft.theta0 = theta0;
  ft.lambda = 2.0 * std::cos(theta0);
  Vec f = gaussian_packet(interacting.radius, center, theta0, sigma);
  PropagationResult evolved = propagate(interacting, f, flightTime);
  PropagationResult freeRef = propagate(freeSetup, f, flightTime);
  ft.normDefect = evolved.normDefect;

  int d = interacting.dim();
  cplx projT = 0.0, projFree = 0.0;
  for (int i = 0; i < d; ++i) {
    int n = i - interacting.radius;
    double m2 = std::norm(evolved.psi[i]);
    if (n > separator) {
      ft.transmittedMass += m2;
      cplx phase = std::exp(iu * (theta0 * n));
      projT += phase * evolved.psi[i];
      projFree += phase * freeRef.psi[i];
    } else if (n < -separator) {
      ft.reflectedMass += m2;
    } else {
      ft.residualMass += m2;
    }
  }
  ensure(ft.residualMass <= 1e-3, "flight: mass accounting defect (packet not separated)");
  ensure(std::abs(projFree) > 1e-12, "flight: free reference packet missed the window");
  ft.tauSq = std::norm(projT / projFree);
  return ft;
}

// ---------------------------------------------------------------------------
// Energy-window decay diagnostic
// ---------------------------------------------------------------------------

struct EnergyWindowCheck {
  double timeIntegral = 0.0;  // int_0^T ||F exp(-itH0) g||^2 dt
  double bound = 0.0;         // 2 pi ||g||^2 ||F E_W||_HS^2
  double horizon = 0.0;
};

// Band-limit a vector to the window (convolution with the closed-form
// projection kernel on the propagation lattice).
inline Vec window_limit(const PropagationSetup& s, Interval win, const Vec& g) {
  double thA = lattice_theta(win.lo), thB = lattice_theta(win.hi);
  int d = s.dim();
  Vec out = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    cplx acc = 0.0;
    for (int j = 0; j < d; ++j) {
      int dd = i - j;
      double k = (dd == 0) ? (thA - thB) / pi
                           : (std::sin(thA * dd) - std::sin(thB * dd)) / (pi * dd);
      acc += k * g[j];
    }
    out[i] = acc;
  }
  return out;
}

// Weight values kappa_n on the propagation lattice for a given weight law.
inline RVec propagation_weights(const PropagationSetup& s, const WeightSpec& w) {
  RVec k(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    double n = std::abs(double(i - s.radius));
    k[i] = w.scale / std::pow(1.0 + n, w.power);
  }
  return k;
}

// Accumulate the weighted decay integral for a window-limited vector by
// trapezoid time stepping and compare with the closed-form bound.
inline EnergyWindowCheck energy_window_check(const PropagationSetup& freeSetup,
                                             const WeightSpec& wspec, Interval win,
                                             const Vec& windowLimited, double horizon,
                                             double dt = 0.5) {
  EnergyWindowCheck chk;
  chk.horizon = horizon;
  RVec kap = propagation_weights(freeSetup, wspec);
  auto weighted = [&](const Vec& x) {
    double sum = 0.0;
    for (int i = 0; i < x.size(); ++i) sum += kap[i] * kap[i] * std::norm(x[i]);
    return sum;
  };
  int steps = static_cast<int>(std::ceil(horizon / dt));
  Vec psi = windowLimited;
  double prev = weighted(psi);
  for (int k = 1; k <= steps; ++k) {
    psi = propagate(freeSetup, psi, dt).psi;
    double cur = weighted(psi);
    chk.timeIntegral += 0.5 * dt * (prev + cur);
    prev = cur;
  }
  // ||F E_W||_HS^2 = sum_n kappa_n^2 E_W(n,n) with the closed-form diagonal.
  double thA = lattice_theta(win.lo), thB = lattice_theta(win.hi);
  double diag = (thA - thB) / pi;
  double hs2 = kap.squaredNorm() * diag;
  chk.bound = 2.0 * pi * windowLimited.squaredNorm() * hs2;
  return chk;
}

}  // namespace rigscat
