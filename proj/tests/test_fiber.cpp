#include <rigscat/fiber.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace rigscat;

namespace {

Mat random_factor(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat f(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) f(i, j) = cplx(g(rng), g(rng));
  return f;
}

RVec interior_grid(const SpectralModel& model, int points, double marginFrac) {
  double w = model.spectrum.width();
  double lo = model.spectrum.lo + marginFrac * w;
  double hi = model.spectrum.hi - marginFrac * w;
  RVec g(points);
  for (int i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * double(i) / double(points - 1);
  return g;
}

}  // namespace

TEST_CASE("boundary density is positive semidefinite and Hermitian") {
  SpectralModel model = build_quadrature_model(Interval{0.0, 1.0}, 40);
  Rigging rig = build_rigging(model, WeightSpec{{1.0, 0.5}, 1.0, 1.0}, 6);
  auto bd = boundary_value(model, rig, 0.37, BoundaryMethod::direct);
  Mat phi = boundary_density(bd.T);
  REQUIRE(max_abs(Mat(phi - phi.adjoint())) < 1e-14);
  Eigen::SelfAdjointEigenSolver<Mat> es(phi, Eigen::EigenvaluesOnly);
  REQUIRE(es.eigenvalues().minCoeff() > -1e-12 * es.eigenvalues().maxCoeff());
}

TEST_CASE("evaluation operator factorizes the boundary density exactly") {
  auto check = [](const SpectralModel& model, const Rigging& rig, double lambda) {
    auto bd = boundary_value(model, rig, lambda, BoundaryMethod::direct);
    FiberData f = fiber_space(bd);
    EvaluationOperator ev = evaluation_operator(f);
    REQUIRE(max_abs(Mat(ev.diamond * ev.E - f.phi)) < 1e-13);
    // eta is the PSD square root of phi.
    REQUIRE(max_abs(Mat(f.eta * f.eta - f.phi)) < 1e-13);
    // hsNorm^2 = trace phi.
    REQUIRE(ev.hsNorm * ev.hsNorm == Catch::Approx(f.phi.trace().real()).epsilon(1e-12));
  };
  SpectralModel quad = build_quadrature_model(Interval{0.0, 1.0}, 40);
  Rigging quadRig = build_rigging(quad, WeightSpec{{1.0, 0.5}, 1.0, 1.0}, 6);
  check(quad, quadRig, 0.3);
  check(quad, quadRig, 0.62);

  SpectralModel lat = build_lattice_model(120);
  Rigging latRig = build_rigging(lat, WeightSpec{{1.0}, 1.5, 1.0}, 7);
  check(lat, latRig, 0.5);
  check(lat, latRig, -1.1);
}

TEST_CASE("quadrature fiber is one dimensional and evaluation interpolates") {
  SpectralModel model = build_quadrature_model(Interval{0.0, 1.0}, 40);
  Rigging rig = build_rigging(model, WeightSpec{{1.0, 0.5}, 1.0, 1.0}, 6);
  const double lambda = 0.41;
  auto bd = boundary_value(model, rig, lambda, BoundaryMethod::direct);
  FiberData f = fiber_space(bd);
  REQUIRE(f.rank == 1);
  EvaluationOperator ev = evaluation_operator(f);

  // beta encodes the polynomial p = sum_j beta_j P_j in the orthonormal
  // tracked frame; its fiber value has magnitude kappa(lambda) |p(lambda)|.
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 4; ++rep) {
    Vec beta(rig.m());
    for (int j = 0; j < rig.m(); ++j) beta[j] = cplx(g(rng), g(rng));
    cplx p = 0.0;
    for (int j = 0; j < rig.m(); ++j)
      p += beta[j] * orthonormal_legendre(j, model.spectrum.lo, model.spectrum.hi, lambda);
    cplx fibVal = (ev.E * beta)(0);
    REQUIRE(std::abs(fibVal) ==
            Catch::Approx(rig.kappaAt(model, lambda) * std::abs(p)).margin(1e-12));
  }
}

TEST_CASE("fiber preimages hit prescribed fiber coordinates") {
  auto check = [](const SpectralModel& model, const Rigging& rig, double lambda) {
    auto bd = boundary_value(model, rig, lambda, BoundaryMethod::direct);
    FiberData f = fiber_space(bd);
    EvaluationOperator ev = evaluation_operator(f);
    Mat pre = fiber_preimages(f);
    REQUIRE(max_abs(Mat(ev.E * pre - Mat::Identity(f.rank, f.rank))) < 1e-12);
  };
  SpectralModel quad = build_quadrature_model(Interval{0.0, 1.0}, 32);
  check(quad, build_rigging(quad, WeightSpec{{1.0}, 1.0, 1.0}, 5), 0.55);
  SpectralModel lat = build_lattice_model(100);
  check(lat, build_rigging(lat, WeightSpec{{1.0}, 1.5, 1.0}, 6), 0.8);
}

TEST_CASE("closed-form tracked density matches the boundary-value route") {
  SpectralModel quad = build_quadrature_model(Interval{0.0, 1.0}, 36);
  Rigging quadRig = build_rigging(quad, WeightSpec{{1.0, 0.25}, 1.0, 1.0}, 5);
  for (double lambda : {0.21, 0.5, 0.77}) {
    auto bd = boundary_value(quad, quadRig, lambda, BoundaryMethod::direct);
    Mat viaT = hermitian_imag(bd.T) / pi;
    Mat closed = tracked_boundary_density(quad, quadRig, lambda);
    REQUIRE(max_abs(Mat(viaT - closed)) < 1e-12);
  }

  SpectralModel lat = build_lattice_model(90);
  Rigging latRig = build_rigging(lat, WeightSpec{{1.0}, 1.5, 1.0}, 7);
  for (double lambda : {-1.3, 0.5, 1.1}) {
    auto bd = boundary_value(lat, latRig, lambda, BoundaryMethod::direct);
    Mat viaT = hermitian_imag(bd.T) / pi;
    Mat closed = tracked_boundary_density(lat, latRig, lambda);
    REQUIRE(max_abs(Mat(viaT - closed)) < 1e-12);
  }
}

TEST_CASE("fiber rank profile: one channel on the interval, two on the band") {
  SpectralModel quad = build_quadrature_model(Interval{0.0, 1.0}, 32);
  Rigging quadRig = build_rigging(quad, WeightSpec{{1.0}, 1.0, 1.0}, 6);
  auto quadProf = fiber_rank_profile(quad, quadRig, interior_grid(quad, 15, 0.03), 2);
  for (int rk : quadProf.ranks) REQUIRE(rk == 1);

  SpectralModel lat = build_lattice_model(80);
  Rigging latRig = build_rigging(lat, WeightSpec{{1.0}, 1.5, 1.0}, 6);
  auto latProf = fiber_rank_profile(lat, latRig, interior_grid(lat, 15, 0.03), 2);
  for (int rk : latProf.ranks) REQUIRE(rk == 2);
}

TEST_CASE("factor route and density route build the same fiber") {
  const int d = 24, k = 3;
  Mat factor = random_factor(d, k, 4242);
  FiberData viaFactor = fiber_from_factor(0.4, factor);
  FiberData viaDensity = fiber_from_density(0.4, Mat(factor * factor.adjoint()));
  REQUIRE(viaFactor.rank == viaDensity.rank);
  REQUIRE(viaFactor.rank == k);
  for (int j = 0; j < k; ++j)
    REQUIRE(viaFactor.sigma[j] == Catch::Approx(viaDensity.sigma[j]).epsilon(1e-12));
  REQUIRE(max_abs(Mat(viaFactor.eta - viaDensity.eta)) < 1e-10);
  REQUIRE(max_abs(Mat(viaFactor.basis - viaDensity.basis)) < 1e-10);

  // A rank-deficient factor is detected identically by both routes.
  Mat thin = random_factor(d, 2, 99);
  Mat fat(d, 4);
  fat.col(0) = thin.col(0);
  fat.col(1) = thin.col(1);
  fat.col(2) = thin.col(0) * cplx(0.0, 1.0);
  fat.col(3) = 0.5 * thin.col(1);
  FiberData lowFactor = fiber_from_factor(0.1, fat);
  FiberData lowDensity = fiber_from_density(0.1, Mat(fat * fat.adjoint()));
  REQUIRE(lowFactor.rank == 2);
  REQUIRE(lowDensity.rank == 2);
  REQUIRE(max_abs(Mat(lowFactor.eta - lowDensity.eta)) < 1e-10);
}

TEST_CASE("full-frame direction reproduces interpolation on the quadrature model") {
  SpectralModel model = build_quadrature_model(Interval{0.0, 1.0}, 30);
  Rigging rig = build_rigging(model, WeightSpec{{1.0, 0.5}, 1.0, 1.0}, 5);
  Barycentric cards(model.rule.nodes);
  const double lambda = 0.63;

  // Model coordinates of t -> t^3 - 0.2 t (collocation values with weights).
  auto poly = [](double t) { return t * t * t - 0.2 * t; };
  Vec x(model.N);
  for (int n = 0; n < model.N; ++n)
    x[n] = poly(model.rule.nodes[n]) * std::sqrt(model.rule.weights[n]);

  REQUIRE(collocation_value(model, cards, x, lambda).real() ==
          Catch::Approx(poly(lambda)).margin(1e-12));

  Vec v = full_frame_direction(model, rig, cards, lambda);
  cplx paired = v.dot(x);
  REQUIRE(paired.real() ==
          Catch::Approx(rig.kappaAt(model, lambda) * poly(lambda)).margin(1e-12));
  REQUIRE(std::abs(paired.imag()) < 1e-13);
}
