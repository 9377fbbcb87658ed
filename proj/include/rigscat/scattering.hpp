#pragma once
// Stationary scattering objects for a pair (H0, H1 = H0 + V).
//
// Everything is computed per energy from the tracked boundary values:
//   * the two sandwich factorizations of the connecting form,
//   * wave matrices between the free and perturbed fibers (closed form
//     w_pm = eta1 (1 + J T0(lambda +- i0)) eta0^+, and an independent
//     least-squares fit on probe vectors),
//   * scattering matrices S = w_+^* w_- together with the one-step
//     stationary formula and, for the lattice, the on-shell channel form,
//   * direct-integral assemblies over an energy grid and the spectral
//     kernel that compresses the full wave operator onto tracked sites.

#include <rigscat/common.hpp>
#include <rigscat/fiber.hpp>
#include <rigscat/lap.hpp>
#include <rigscat/model.hpp>
#include <rigscat/sheaf.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace rigscat {

// All per-energy data for a pair (free, perturbed) at one interior point.
struct LambdaFrame {
  double lambda = 0.0;
  Mat J;
  BoundaryResolvent t0;  // free boundary value at lambda + i0
  BoundaryResolvent t1;  // perturbed boundary value at lambda + i0
  FiberData f0, f1;
  EvaluationOperator e0, e1;
};

inline LambdaFrame lambda_frame_from(const BoundaryResolvent& t0, const Perturbation& p) {
  LambdaFrame fr;
  fr.lambda = t0.lambda;
  fr.J = p.J;
  fr.t0 = t0;
  fr.t1 = perturbed_boundary_value(t0, p);
  fr.f0 = fiber_space(fr.t0);
  fr.f1 = fiber_space(fr.t1);
  fr.e0 = evaluation_operator(fr.f0);
  fr.e1 = evaluation_operator(fr.f1);
  return fr;
}

inline LambdaFrame build_lambda_frame(const SpectralModel& model, const Rigging& r,
                                      const Perturbation& p, double lambda,
                                      BoundaryMethod method = BoundaryMethod::direct) {
  return lambda_frame_from(boundary_value(model, r, lambda, method), p);
}

// ---------------------------------------------------------------------------
// Connecting sandwich forms
// ---------------------------------------------------------------------------

// The two factorizations of the connecting form between the pair's boundary
// densities:
//   sign=+1:  phi1 (1 + J T0)    and   (1 - T1^* J) phi0
//   sign=-1:  phi1 (1 + J T0^*)  and   (1 - T1 J) phi0
// They agree identically; the residual records the numerical gap.
struct ConnectingForm {
  double lambda = 0.0;
  int sign = +1;
  Mat a;                          // the form (first factorization)
  double factorizationResidual = 0.0;
};

inline ConnectingForm connecting_form(const LambdaFrame& fr, int sign) {
  require(sign == 1 || sign == -1, "connecting form: sign must be +1 or -1");
  int m = static_cast<int>(fr.J.rows());
  Mat t0s = (sign > 0) ? fr.t0.T : Mat(fr.t0.T.adjoint());
  Mat first = fr.f1.phi * (Mat::Identity(m, m) + fr.J * t0s);
  Mat second = (sign > 0)
                   ? Mat((Mat::Identity(m, m) - fr.t1.T.adjoint() * fr.J) * fr.f0.phi)
                   : Mat((Mat::Identity(m, m) - fr.t1.T * fr.J) * fr.f0.phi);
  ConnectingForm out;
  out.lambda = fr.lambda;
  out.sign = sign;
  out.a = first;
  out.factorizationResidual = max_abs(Mat(first - second));
  return out;
}

// ---------------------------------------------------------------------------
// Wave matrices
// ---------------------------------------------------------------------------

struct WaveMatrix {
  double lambda = 0.0;
  int sign = +1;
  Mat w;  // r1 x r0, fiber frames
  double unitarityResidual = 0.0;
};

enum class WaveMethod { closed, leastSquares };

inline double wave_unitarity_residual(const Mat& w) {
  int r0 = static_cast<int>(w.cols()), r1 = static_cast<int>(w.rows());
  double a = max_abs(Mat(w.adjoint() * w - Mat::Identity(r0, r0)));
  double b = max_abs(Mat(w * w.adjoint() - Mat::Identity(r1, r1)));
  return std::max(a, b);
}

// Closed form: w_pm = B1^* eta1 (1 + J T0(lambda +- i0)) B0 diag(1/sigma0).
inline WaveMatrix wave_matrix(const LambdaFrame& fr, int sign,
                              WaveMethod method = WaveMethod::closed,
                              int probeCount = 0, unsigned seed = 20260815u) {
  require(sign == 1 || sign == -1, "wave matrix: sign must be +1 or -1");
  int m = static_cast<int>(fr.J.rows());
  Mat t0s = (sign > 0) ? fr.t0.T : Mat(fr.t0.T.adjoint());
  Mat onePlus = Mat::Identity(m, m) + fr.J * t0s;

  WaveMatrix wm;
  wm.lambda = fr.lambda;
  wm.sign = sign;
  if (method == WaveMethod::closed) {
    Mat core = fr.e1.E * onePlus;  // B1^* eta1 (1 + J T0^s)
    wm.w = core * fr.f0.basis *
           fr.f0.sigma.cast<cplx>().cwiseInverse().asDiagonal();
  } else {
    // Independent route: fit the defining relation
    //   w (coords of evaluate_0 f) = coords of evaluate_1 ((1 + V R0^s) f)
    // on random tracked probes and solve the dense least-squares problem.
    int count = (probeCount > 0) ? probeCount : (2 * fr.f0.rank + 6);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat A(fr.f0.rank, count), C(fr.f1.rank, count);
    for (int pIdx = 0; pIdx < count; ++pIdx) {
      Vec beta(m);
      for (int i = 0; i < m; ++i) beta[i] = cplx(gauss(rng), gauss(rng));
      A.col(pIdx) = fr.e0.E * beta;
      C.col(pIdx) = fr.e1.E * (onePlus * beta);
    }
    wm.w = (A * A.adjoint()).ldlt().solve(A * C.adjoint()).adjoint();
  }
  wm.unitarityResidual = wave_unitarity_residual(wm.w);
  return wm;
}

// ---------------------------------------------------------------------------
// Scattering matrices
// ---------------------------------------------------------------------------

struct ScatteringMatrix {
  double lambda = 0.0;
  Mat S;  // r0 x r0, free fiber frame
  RVec eigenphases;       // ascending, in (-pi, pi]
  double unitarityResidual = 0.0;
};

inline RVec unitary_eigenphases(const Mat& s) {
  Eigen::ComplexEigenSolver<Mat> es(s);
  RVec ph(s.rows());
  for (int i = 0; i < s.rows(); ++i) ph[i] = std::arg(es.eigenvalues()[i]);
  std::sort(ph.begin(), ph.end());
  return ph;
}

inline ScatteringMatrix scattering_from_waves(const WaveMatrix& wPlus,
                                              const WaveMatrix& wMinus) {
  ScatteringMatrix sm;
  sm.lambda = wPlus.lambda;
  sm.S = wPlus.w.adjoint() * wMinus.w;
  sm.unitarityResidual = wave_unitarity_residual(sm.S);
  sm.eigenphases = unitary_eigenphases(sm.S);
  return sm;
}

// One-step stationary formula in the free fiber frame:
//   S = 1 - 2 pi i E0 J (1 + T0 J)^{-1} E0^diamond.
inline ScatteringMatrix stationary_scattering(const LambdaFrame& fr) {
  int m = static_cast<int>(fr.J.rows());
  Mat core = fr.J * (Mat::Identity(m, m) + fr.t0.T * fr.J).partialPivLu().solve(
                        Mat(Mat::Identity(m, m)));
  ScatteringMatrix sm;
  sm.lambda = fr.lambda;
  sm.S = Mat::Identity(fr.f0.rank, fr.f0.rank) -
         2.0 * pi * iu * fr.e0.E * core * fr.e0.diamond;
  sm.unitarityResidual = wave_unitarity_residual(sm.S);
  sm.eigenphases = unitary_eigenphases(sm.S);
  return sm;
}

// Nuclear norm of S - 1 (trace norm; the scattering strength summary used by
// stability checks).
inline double nuclear_norm_s_minus_one(const ScatteringMatrix& sm) {
  int r = static_cast<int>(sm.S.rows());
  Eigen::BDCSVD<Mat> svd(Mat(sm.S - Mat::Identity(r, r)));
  return svd.singularValues().sum();
}

// ---------------------------------------------------------------------------
// Lattice channel frame
// ---------------------------------------------------------------------------

// On-shell amplitudes in the generalized plane-wave frame of the lattice:
// transmission/reflection through M_ab = u_a^* (J - J T1 J) u_b where u_a are
// the weighted tracked restrictions of the two plane waves.  The matrix S is
// written in the (right-mover, left-mover) content basis, which is the frame
// the fiber realisation is unitarily equivalent to.
struct ChannelScattering {
  double lambda = 0.0;
  cplx t, r, tPrime, rPrime;
  Mat S;  // [[t, r'], [r, t']]
  double unitarityResidual = 0.0;
};

inline ChannelScattering channel_scattering(const SpectralModel& model,
                                            const Rigging& rig, const LambdaFrame& fr) {
  require(model.kind == ModelKind::lattice, "channel frame: lattice models only");
  double th = lattice_theta(fr.lambda);
  double s = std::sin(th);
  ensure(s > 1e-8, "channel frame: spectral band edge");
  int m = rig.m();
  Vec uR(m), uL(m);
  for (int i = 0; i < m; ++i) {
    double k = rig.kappa[model.siteToIndex(rig.auxSites[i])];
    cplx ph = std::exp(-iu * (th * double(rig.auxSites[i])));
    uR[i] = k * ph;
    uL[i] = k * std::conj(ph);
  }
  Mat top = fr.J - fr.J * fr.t1.T * fr.J;
  cplx c = -iu / (2.0 * s);
  ChannelScattering ch;
  ch.lambda = fr.lambda;
  ch.t = 1.0 + c * (uR.adjoint() * top * uR)(0);
  ch.tPrime = 1.0 + c * (uL.adjoint() * top * uL)(0);
  ch.r = c * (uL.adjoint() * top * uR)(0);
  ch.rPrime = c * (uR.adjoint() * top * uL)(0);
  ch.S.resize(2, 2);
  ch.S << ch.t, ch.rPrime, ch.r, ch.tPrime;
  ch.unitarityResidual = wave_unitarity_residual(ch.S);
  return ch;
}

// ---------------------------------------------------------------------------
// Direct integrals over an energy grid
// ---------------------------------------------------------------------------

// A measurable family of fiber matrices over a weighted grid; applying it to
// a section multiplies blockwise.
struct DirectIntegralOperator {
  RVec lambdas;
  RVec weights;
  std::vector<Mat> blocks;

  SheafSection apply(const SheafSection& in) const {
    require(in.lambdas.size() == lambdas.size(),
            "direct integral: section grid mismatch");
    SheafSection out;
    out.lambdas = in.lambdas;
    out.weights = in.weights;
    out.coords.resize(in.coords.size());
    for (std::size_t i = 0; i < in.coords.size(); ++i)
      out.coords[i] = blocks[i] * in.coords[i];
    return out;
  }
  double worstBlockUnitarity() const {
    double w = 0.0;
    for (const auto& b : blocks) w = std::max(w, wave_unitarity_residual(b));
    return w;
  }
};

enum class FamilyKind { wavePlus, waveMinus, scattering };

inline DirectIntegralOperator assemble_direct_integral(
    const SpectralModel& model, const Rigging& r, const Perturbation& p,
    FamilyKind kind, int latticePoints = 400, unsigned threads = 1) {
  DirectIntegralOperator op;
  // Margined grid: the fiber rank degenerates exactly at the spectral edges.
  spectral_grid(model, latticePoints, op.lambdas, op.weights, /*margined=*/true);
  op.blocks.assign(op.lambdas.size(), Mat());
  parallel_for(op.lambdas.size(), threads, [&](std::size_t i) {
    LambdaFrame fr = build_lambda_frame(model, r, p, op.lambdas[static_cast<int>(i)]);
    switch (kind) {
      case FamilyKind::wavePlus:
        op.blocks[i] = wave_matrix(fr, +1).w;
        break;
      case FamilyKind::waveMinus:
        op.blocks[i] = wave_matrix(fr, -1).w;
        break;
      case FamilyKind::scattering:
        op.blocks[i] = scattering_from_waves(wave_matrix(fr, +1), wave_matrix(fr, -1)).S;
        break;
    }
  });
  return op;
}

// ---------------------------------------------------------------------------
// Spectral kernel of the full wave operator on tracked sites (lattice)
// ---------------------------------------------------------------------------

// K_pm = int phi1(lambda) (1 + J T0(lambda -+ i0)^{(*)}) dlambda, assembled so
// that tracked coefficients of W_pm f are K_pm beta_f: this turns the
// direct-integral definition of the wave operator into an m x m kernel on
// the tracked sites.  Requires a rank-one coupling (the only case the
// closed-column algebra below covers); the cost per grid point is O(m^2).
struct WaveOperatorKernel {
  Mat K;             // m x m
  int sign = -1;
  int gridPoints = 0;
};

inline WaveOperatorKernel wave_operator_kernel(const SpectralModel& model,
                                               const Rigging& r, const Perturbation& p,
                                               int sign, int thetaPoints = 0,
                                               unsigned threads = 1) {
  require(model.kind == ModelKind::lattice, "wave kernel: lattice models only");
  require(sign == 1 || sign == -1, "wave kernel: sign must be +1 or -1");
  int m = r.m();
  // Locate the rank-one coupling.
  int cIdx = -1;
  double v = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (std::abs(p.J(i, j)) > 0.0) {
        require(i == j && (cIdx == -1 || cIdx == i),
                "wave kernel: coupling must be rank one diagonal");
        cIdx = i;
        v = p.J(i, i).real();
      }
    }
  require(cIdx >= 0, "wave kernel: coupling vanishes");
  int c = r.auxSites[cIdx];

  int nTheta = thetaPoints > 0 ? thetaPoints
                               : std::max(800, 3 * (2 * model.L + 1) / 2);
  QuadRule rule = gauss_legendre(nTheta, 0.0, pi);

  // Accumulate per thread, then reduce (chunked ranges match parallel_for).
  unsigned nt = std::max(1u, std::min(threads, static_cast<unsigned>(nTheta)));
  std::size_t chunk = (static_cast<std::size_t>(nTheta) + nt - 1) / nt;
  std::vector<Mat> partial(nt, Mat::Zero(m, m));
  parallel_for(nTheta, nt, [&](std::size_t idx) {
    unsigned slot = static_cast<unsigned>(idx / chunk);
    double th = rule.nodes[static_cast<int>(idx)];
    double wgt = rule.weights[static_cast<int>(idx)] * 2.0 * std::sin(th);
    double s = std::sin(th);
    if (s < 1e-12) return;
    cplx zeta = std::exp(-iu * th);
    cplx denom = 2.0 * iu * s;  // 1/zeta - zeta
    // Column g = T0 e_c (closed form) and the diagonal entry t_cc.
    Vec g(m);
    double kc = r.kappa[model.siteToIndex(c)];
    for (int i = 0; i < m; ++i) {
      double ki = r.kappa[model.siteToIndex(r.auxSites[i])];
      g[i] = ki * kc * std::pow(zeta, std::abs(r.auxSites[i] - c)) / (-denom);
    }
    // NOTE: G(d) = zeta^{|d|}/(zeta - 1/zeta) and zeta - 1/zeta = -2 i sin th.
    cplx tcc = g[cIdx];
    cplx alpha = v / (1.0 + v * tcc);
    cplx oneMinusAlphaTcc = 1.0 - alpha * tcc;
    // Plane-wave tracked vectors (flux-normalized).
    Vec uR(m), uL(m);
    for (int i = 0; i < m; ++i) {
      double ki = r.kappa[model.siteToIndex(r.auxSites[i])];
      cplx ph = std::exp(-iu * (th * double(r.auxSites[i])));
      uR[i] = ki * ph / std::sqrt(4.0 * pi * s);
      uL[i] = ki * std::conj(ph) / std::sqrt(4.0 * pi * s);
    }
    // T1 e_c = (1 - alpha t_cc) g;  T1 = T0 - alpha g g^T (complex symmetric).
    Vec t1col = oneMinusAlphaTcc * g;
    Mat& acc = partial[slot];
    for (const Vec* ua : {&uR, &uL}) {
      // y = (1 - T1^* J) u_a = u_a - v conj(t1col) u_a[c].
      Vec y = *ua - (v * (*ua)[cIdx]) * t1col.conjugate();
      // zrow = u_a^* (1 - J T1): subtract v conj(u_a[c]) t1col^T.
      Eigen::RowVectorXcd zrow = ua->adjoint();
      zrow -= (v * std::conj((*ua)[cIdx])) * t1col.transpose();
      // Multiply by 1 + J T0^{-sign-conjugate}:
      //   sign=-1 uses T0^* (row c = conj(g)^T), sign=+1 uses T0 (row c = g^T).
      Eigen::RowVectorXcd t0row =
          (sign < 0) ? Eigen::RowVectorXcd(g.conjugate().transpose())
                     : Eigen::RowVectorXcd(g.transpose());
      zrow += (v * zrow[cIdx]) * t0row;
      acc.noalias() += wgt * (y * zrow);
    }
  });
  WaveOperatorKernel out;
  out.K = Mat::Zero(m, m);
  for (const auto& part : partial) out.K += part;
  out.sign = sign;
  out.gridPoints = nTheta;
  return out;
}

// Tracked coefficients of W_pm f for tracked f: c = K beta, and the site
// values are c_i / kappa(site_i).
inline Vec apply_wave_kernel(const SpectralModel& model, const Rigging& r,
                             const WaveOperatorKernel& k, const Vec& siteValuesIn) {
  int m = r.m();
  require(siteValuesIn.size() == m, "wave kernel: need per-tracked-site values");
  // f = F^* Psi beta has site values kappa_s beta at the tracked sites, so
  // beta = values / kappa; the output coefficients c_i = kappa_s (W f)(s_i)
  // turn back into site values by the same division.
  Vec beta(m), out(m);
  for (int i = 0; i < m; ++i)
    beta[i] = siteValuesIn[i] / r.kappa[model.siteToIndex(r.auxSites[i])];
  Vec c = k.K * beta;
  for (int i = 0; i < m; ++i)
    out[i] = c[i] / r.kappa[model.siteToIndex(r.auxSites[i])];
  return out;
}

}  // namespace rigscat
