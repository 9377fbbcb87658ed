// Demo: boundary values of the tracked resolvent compression and their
// densities.  Prints T(lambda + i0) for the flat-weight multiplication model
// on [0, 1] along a short energy sweep, comparing the direct evaluation with
// the shrinking-imaginary-part extrapolation, then shows the perturbed
// boundary value and the fiber rank.

#include <rigscat/fiber.hpp>
#include <rigscat/lap.hpp>
#include <rigscat/model.hpp>

#include <cstdio>

using namespace rigscat;

int main() {
  SpectralModel model = build_quadrature_model(Interval{0.0, 1.0}, 40);
  Rigging rig = build_rigging(model, WeightSpec{{1.0}, 1.0, 1.0}, 4);
  Perturbation p = rank_one_perturbation(rig, 0.3);

  std::printf("boundary values of the tracked compression, flat weight on [0,1]\n");
  std::printf("%8s %22s %22s %12s\n", "lambda", "T00 (direct)", "T00 (extrapolated)",
              "disagreement");
  for (double lambda : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    BoundaryResolvent direct = boundary_value(model, rig, lambda, BoundaryMethod::direct);
    BoundaryResolvent both = boundary_value(model, rig, lambda, BoundaryMethod::both);
    std::printf("%8.3f %10.6f%+10.6fi %10.6f%+10.6fi %12.3e\n", lambda,
                direct.T(0, 0).real(), direct.T(0, 0).imag(), both.T(0, 0).real(),
                both.T(0, 0).imag(), both.methodDisagreement);
  }

  std::printf("\nperturbed boundary value and fiber data at lambda = 0.5\n");
  BoundaryResolvent t0 = boundary_value(model, rig, 0.5);
  BoundaryResolvent t1 = perturbed_boundary_value(t0, p);
  FiberData f0 = fiber_space(t0);
  FiberData f1 = fiber_space(t1);
  std::printf("  cond(1 + T0 J) = %.3e\n", t1.condition);
  std::printf("  free fiber rank = %d, top weight = %.6f\n", f0.rank, f0.sigma[0]);
  std::printf("  perturbed fiber rank = %d, top weight = %.6f\n", f1.rank, f1.sigma[0]);
  return 0;
}
