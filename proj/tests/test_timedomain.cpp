#include <rigscat/timedomain.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace rigscat;

namespace {

double mean_position(const PropagationSetup& s, const Vec& psi) {
  double m = 0.0;
  for (int i = 0; i < s.dim(); ++i) m += (i - s.radius) * std::norm(psi[i]);
  return m / psi.squaredNorm();
}

struct LatticePair {
  SpectralModel model;
  Rigging rig;
  Perturbation p;
  PropagationSetup freeSetup, interacting;
};

LatticePair make_pair(int radius, double v) {
  LatticePair lp{build_lattice_model(20), {}, {}, {}, {}};
  lp.rig = build_rigging(lp.model, WeightSpec{{1.0}, 1.5, 1.0}, 1);
  lp.p = rank_one_perturbation(lp.rig, v);
  lp.freeSetup = free_propagation_setup(radius);
  lp.interacting = interacting_propagation_setup(radius, lp.model, lp.rig, lp.p);
  return lp;
}

}  // namespace

TEST_CASE("Bessel table matches reference values") {
  auto at1 = bessel_j_table(1.0, 40);
  REQUIRE(std::abs(at1[0] - 0.76519768655796655) < 1e-14);
  REQUIRE(std::abs(at1[1] - 0.44005058574493352) < 1e-14);
  auto at10 = bessel_j_table(10.0, 60);
  REQUIRE(std::abs(at10[0] - (-0.24593576445134834)) < 1e-14);
  // Normalization identity J_0 + 2 sum J_2k = 1 holds by construction; the
  // tail entries must be tiny.
  REQUIRE(std::abs(at10[59]) < 1e-30);
}

TEST_CASE("propagation conserves the norm and is the identity at t = 0") {
  PropagationSetup s = free_propagation_setup(300);
  Vec f = gaussian_packet(300, -50.0, pi / 3.0, 12.0);
  PropagationResult still = propagate(s, f, 0.0);
  REQUIRE(max_abs(Vec(still.psi - f)) == 0.0);

  PropagationResult moved = propagate(s, f, 30.0);
  REQUIRE(moved.normDefect < 1e-12);
  REQUIRE(moved.errorBound < 1e-8);
  REQUIRE(std::abs(moved.psi.norm() - 1.0) < 1e-12);
}

TEST_CASE("packets travel at the group velocity of the carrier") {
  const int radius = 800;
  const double theta0 = pi / 3.0, horizon = 200.0;
  PropagationSetup s = free_propagation_setup(radius);
  Vec f = gaussian_packet(radius, -250.0, theta0, 15.0);
  check_packet_clearance(radius, -250.0, 15.0, horizon);
  PropagationResult res = propagate(s, f, horizon);
  double expectShift = 2.0 * std::sin(theta0) * horizon;  // = sqrt(3) * 200
  double shift = mean_position(s, res.psi) - mean_position(s, f);
  REQUIRE(std::abs(shift - expectShift) < 0.01 * expectShift);
}

TEST_CASE("propagation respects the light cone") {
  const int radius = 400;
  const double sigma = 10.0, horizon = 40.0;
  PropagationSetup s = free_propagation_setup(radius);
  Vec f = gaussian_packet(radius, 0.0, pi / 2.0, sigma);
  PropagationResult res = propagate(s, f, horizon);
  double range = 2.0 * horizon + 10.0 * sigma;
  double leak = 0.0;
  for (int i = 0; i < s.dim(); ++i)
    if (std::abs(double(i - radius)) > range) leak += std::norm(res.psi[i]);
  REQUIRE(leak < 1e-6);
}

TEST_CASE("clearance precheck rejects packets that would hit the boundary") {
  REQUIRE_THROWS_AS(check_packet_clearance(300, -100.0, 20.0, 100.0),
                    std::invalid_argument);
}

TEST_CASE("time-limit wave operator with zero coupling is the identity") {
  LatticePair lp = make_pair(500, 0.0);
  Vec f = gaussian_packet(500, 60.0, pi / 2.0, 15.0);
  TimeWaveResult tw = time_wave_operator(lp.freeSetup, lp.interacting, f, 60.0, -1);
  REQUIRE(max_abs(Vec(tw.psi - f)) < 1e-11);
  REQUIRE(tw.cauchyGap < 1e-11);
}

TEST_CASE("time-limit wave operator converges at a long horizon") {
  LatticePair lp = make_pair(2000, 0.5);
  Vec f = gaussian_packet(2000, 100.0, pi / 2.0, 20.0);
  check_packet_clearance(2000, 100.0, 20.0, 400.0);
  TimeWaveResult tw = time_wave_operator(lp.freeSetup, lp.interacting, f, 400.0, -1);
  REQUIRE(tw.cauchyGap < 1e-3);
  REQUIRE(std::abs(tw.psi.norm() - 1.0) < 1e-9);
}

TEST_CASE("unconverged time limits are refused") {
  // A slow packet parked on the scatterer cannot have reached its asymptote.
  LatticePair lp = make_pair(200, 1.5);
  Vec f = gaussian_packet(200, 0.0, pi / 2.0, 25.0);
  REQUIRE_THROWS_AS(time_wave_operator(lp.freeSetup, lp.interacting, f, 8.0, -1),
                    std::runtime_error);
}

TEST_CASE("time of flight reproduces the free packet when nothing scatters") {
  LatticePair lp = make_pair(1200, 0.0);
  FlightTransmission ft =
      transmission_by_flight(lp.freeSetup, lp.interacting, pi / 2.0, 15.0, -200.0, 170.0);
  REQUIRE(ft.tauSq == Catch::Approx(1.0).margin(1e-10));
  REQUIRE(ft.residualMass < 1e-6);
  REQUIRE(ft.reflectedMass < 1e-6);
  REQUIRE(ft.transmittedMass == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("time of flight matches the single-site transmission law") {
  LatticePair lp = make_pair(1200, 0.5);
  const double theta0 = pi / 2.0;
  FlightTransmission ft =
      transmission_by_flight(lp.freeSetup, lp.interacting, theta0, 15.0, -200.0, 170.0);
  double w = 0.5 / (2.0 * std::sin(theta0));
  REQUIRE(ft.tauSq == Catch::Approx(1.0 / (1.0 + w * w)).margin(1e-3));
  double total = ft.transmittedMass + ft.reflectedMass + ft.residualMass;
  REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("window limiting is an approximate projection") {
  PropagationSetup s = free_propagation_setup(150);
  Interval win{-0.5, 0.5};
  Vec g = gaussian_packet(150, 0.0, pi / 2.0, 12.0);
  Vec g1 = window_limit(s, win, g);
  Vec g2 = window_limit(s, win, g1);
  REQUIRE(g1.norm() <= g.norm() + 1e-12);
  REQUIRE((g2 - g1).norm() < 1e-3 * g1.norm());
  REQUIRE(std::abs(Vec(g - g1).dot(g1)) < 1e-3 * g.squaredNorm());
}

TEST_CASE("weighted decay integral stays under the smoothness bound") {
  PropagationSetup s = free_propagation_setup(600);
  WeightSpec wspec{{1.0}, 1.5, 1.0};
  Interval win{-0.5, 0.5};
  Vec g = window_limit(s, win, gaussian_packet(600, 0.0, pi / 2.0, 12.0));
  EnergyWindowCheck chk = energy_window_check(s, wspec, win, g, 60.0);
  REQUIRE(chk.timeIntegral <= 1.05 * chk.bound);
  REQUIRE(chk.timeIntegral > 0.0);
  REQUIRE(chk.bound > 0.0);
}

TEST_CASE("interacting setup widens the spectral bound by the coupling") {
  LatticePair lp = make_pair(100, 0.5);
  REQUIRE(lp.freeSetup.specBound == Catch::Approx(2.25));
  // ||V|| = |v| kappa(0)^2 = 0.5 here.
  REQUIRE(lp.interacting.specBound == Catch::Approx(2.75));
  REQUIRE(lp.interacting.potSites.size() == 1);
}
