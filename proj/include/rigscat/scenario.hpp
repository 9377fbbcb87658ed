#pragma once
// Scenario pipelines: regular-point scan -> fibers -> sheaf checks ->
// scattering -> (optionally) time-domain validation, with manifest + CSV
// artifacts.  All numeric outputs are deterministic for a fixed config.

#include <rigscat/common.hpp>
#include <rigscat/config.hpp>
#include <rigscat/fiber.hpp>
#include <rigscat/lap.hpp>
#include <rigscat/manifest.hpp>
#include <rigscat/model.hpp>
#include <rigscat/scattering.hpp>
#include <rigscat/sheaf.hpp>
#include <rigscat/timedomain.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rigscat {

struct ScenarioOutcome {
  int exitCode = 0;
  std::string manifestPath;
  std::vector<CheckRecord> checks;
};

namespace detail {

inline CheckRecord make_check(const std::string& name, double value, double tolerance) {
  CheckRecord c;
  c.name = name;
  c.value = value;
  c.tolerance = tolerance;
  c.pass = std::isfinite(value) && value <= tolerance;
  return c;
}

// Tail of the weight mass outside the tracked lattice range: bounds the
// truncation error of windowed projections computed on tracked sites.
inline double lattice_weight_tail(const RunConfig& cfg) {
  double p = cfg.weight.power, s = cfg.weight.scale;
  return 2.0 * s * s * std::pow(1.0 + cfg.L, 1.0 - 2.0 * p) / (2.0 * p - 1.0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

inline ScenarioOutcome run_scenario(const RunConfig& cfg, const std::string& outDir,
                                    double tolFactor = 1.0, unsigned threads = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(outDir);

  SpectralModel model = model_from_config(cfg);
  Rigging rig = rigging_from_config(model, cfg);
  Mat jTotal = cfg.hasChain ? Mat(cfg.J + cfg.chainJ) : cfg.J;
  Perturbation pTotal = build_perturbation(rig, jTotal);
  Mat jStep1 = cfg.hasChain ? cfg.J : Mat(0.5 * cfg.J);
  Mat jStep2 = jTotal - jStep1;
  Perturbation pStep1 = build_perturbation(rig, jStep1);
  Perturbation pStep2 = build_perturbation(rig, jStep2);

  std::vector<CheckRecord> checks;
  ojson manifest;
  manifest["tool"] = {{"name", "rigscat"}, {"version", "0.1.0"}};
  manifest["scenario"] = cfg.scenario;
  ojson echo;
  for (const auto& [k, v] : cfg.echo) echo[k] = v;
  manifest["config"] = echo;
  {
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(cfg.configHash));
    manifest["config_hash"] = hex;
  }
  manifest["tolerance_factor"] = tolFactor;
  manifest["numeric_policy"] = {{"rank_rel", tol().rankRel},
                                {"psd_slack", tol().psdSlack},
                                {"regular_residual", tol().regularResidual},
                                {"condition_limit", tol().conditionLimit}};

  // --- Stage 1: regular-point scan -----------------------------------------
  RegularPointScan scan = scan_regular_points(
      model, rig, std::vector<Perturbation>{pTotal}, 4 * cfg.gridPoints, threads);
  checks.push_back(detail::make_check("regular_fraction_defect",
                                      1.0 - scan.regularFraction, 0.01));

  // --- Stage 2: spectral grid, frames, scattering --------------------------
  RVec lambdas, weights;
  spectral_grid(model, cfg.gridPoints, lambdas, weights, /*margined=*/true);
  int nGrid = static_cast<int>(lambdas.size());
  manifest["grid"] = {{"points", nGrid},
                      {"lambda_min", lambdas[0]},
                      {"lambda_max", lambdas[nGrid - 1]}};

  struct GridPointData {
    ScatteringMatrix s;
    int r0 = 0, r1 = 0;
    double statResidual = 0.0;
    double waveUnitarity = 0.0;
    double factorization = 0.0;
    double evalIdentity = 0.0;
    double multiplicativity = 0.0;
    double tauSq = 0.0, rhoSq = 0.0, channelUnitarity = 0.0;  // lattice
  };
  std::vector<GridPointData> pts(nGrid);

  parallel_for(nGrid, threads, [&](std::size_t gi) {
    int i = static_cast<int>(gi);
    LambdaFrame fr = build_lambda_frame(model, rig, pTotal, lambdas[i]);
    GridPointData& g = pts[i];
    g.r0 = fr.f0.rank;
    g.r1 = fr.f1.rank;

    WaveMatrix wp = wave_matrix(fr, +1), wm = wave_matrix(fr, -1);
    g.waveUnitarity = std::max(wp.unitarityResidual, wm.unitarityResidual);
    g.s = scattering_from_waves(wp, wm);
    ScatteringMatrix sStat = stationary_scattering(fr);
    g.statResidual = max_abs(Mat(g.s.S - sStat.S));
    g.factorization = std::max(connecting_form(fr, +1).factorizationResidual,
                               connecting_form(fr, -1).factorizationResidual);
    g.evalIdentity = max_abs(Mat(fr.e0.diamond * fr.e0.E - fr.f0.phi));

    // Two-step multiplicativity: couple in two stages and compare the
    // composed wave matrices with the single-shot ones.
    LambdaFrame fr1 = lambda_frame_from(fr.t0, pStep1);
    LambdaFrame fr12 = lambda_frame_from(fr1.t1, pStep2);
    for (int sign : {+1, -1}) {
      WaveMatrix w10 = wave_matrix(fr1, sign);
      WaveMatrix w21 = wave_matrix(fr12, sign);
      const Mat& w20 = (sign > 0) ? wp.w : wm.w;
      g.multiplicativity =
          std::max(g.multiplicativity, max_abs(Mat(w20 - w21.w * w10.w)));
    }

    if (model.kind == ModelKind::lattice) {
      ChannelScattering ch = channel_scattering(model, rig, fr);
      g.tauSq = std::norm(ch.t);
      g.rhoSq = std::norm(ch.r);
      g.channelUnitarity = ch.unitarityResidual;
    }
  });

  int rMax = 0;
  for (const auto& g : pts) rMax = std::max(rMax, g.r0);

  double worstUnitarity = 0.0, worstStat = 0.0, worstWave = 0.0;
  double worstFactor = 0.0, worstEval = 0.0, worstMult = 0.0, worstChannel = 0.0;
  for (const auto& g : pts) {
    worstUnitarity = std::max(worstUnitarity, g.s.unitarityResidual);
    worstStat = std::max(worstStat, g.statResidual);
    worstWave = std::max(worstWave, g.waveUnitarity);
    worstFactor = std::max(worstFactor, g.factorization);
    worstEval = std::max(worstEval, g.evalIdentity);
    worstMult = std::max(worstMult, g.multiplicativity);
    worstChannel = std::max(worstChannel, g.channelUnitarity);
  }
  checks.push_back(detail::make_check("scattering_unitarity", worstUnitarity,
                                      1e-8 * tolFactor));
  checks.push_back(detail::make_check("wave_unitarity", worstWave, 1e-8 * tolFactor));
  checks.push_back(detail::make_check("stationary_vs_composed", worstStat,
                                      1e-7 * tolFactor));
  checks.push_back(detail::make_check("density_factorization", worstFactor,
                                      1e-9 * tolFactor));
  checks.push_back(detail::make_check("evaluation_identity", worstEval,
                                      1e-9 * tolFactor));
  checks.push_back(detail::make_check("wave_multiplicativity", worstMult,
                                      1e-6 * tolFactor));
  if (model.kind == ModelKind::lattice)
    checks.push_back(detail::make_check("channel_unitarity", worstChannel,
                                        1e-8 * tolFactor));

  // s_matrix.csv
  CsvTable sTable;
  sTable.header = {"lambda", "r0", "r1"};
  for (int i = 0; i < rMax; ++i)
    for (int j = 0; j < rMax; ++j) {
      sTable.header.push_back("s_re_" + std::to_string(i) + std::to_string(j));
      sTable.header.push_back("s_im_" + std::to_string(i) + std::to_string(j));
    }
  for (int i = 0; i < rMax; ++i)
    sTable.header.push_back("eigenphase_" + std::to_string(i));
  sTable.header.push_back("unitarity_residual");
  sTable.header.push_back("multiplicativity_residual");
  for (int gi = 0; gi < nGrid; ++gi) {
    const auto& g = pts[gi];
    std::vector<double> row{lambdas[gi], double(g.r0), double(g.r1)};
    for (int i = 0; i < rMax; ++i)
      for (int j = 0; j < rMax; ++j) {
        bool in = i < g.s.S.rows() && j < g.s.S.cols();
        row.push_back(in ? g.s.S(i, j).real() : 0.0);
        row.push_back(in ? g.s.S(i, j).imag() : 0.0);
      }
    for (int i = 0; i < rMax; ++i)
      row.push_back(i < g.s.eigenphases.size() ? g.s.eigenphases[i] : 0.0);
    row.push_back(g.s.unitarityResidual);
    row.push_back(g.multiplicativity);
    sTable.rows.push_back(std::move(row));
  }
  csv_write((fs::path(outDir) / "s_matrix.csv").string(), sTable);
  manifest["artifacts"]["s_matrix"] = "s_matrix.csv";

  if (model.kind == ModelKind::lattice) {
    CsvTable tr;
    tr.header = {"lambda", "transmission", "reflection", "channel_unitarity"};
    for (int gi = 0; gi < nGrid; ++gi)
      tr.rows.push_back({lambdas[gi], pts[gi].tauSq, pts[gi].rhoSq,
                         pts[gi].channelUnitarity});
    csv_write((fs::path(outDir) / "transmission.csv").string(), tr);
    manifest["artifacts"]["transmission"] = "transmission.csv";
    manifest["notes"]["window_tail_bound"] = detail::lattice_weight_tail(cfg);
  }

  // --- Stage 3: fiber ranks and window sheaf checks ------------------------
  std::vector<WindowData> windows;
  for (const auto& win : cfg.windows)
    windows.push_back(schmidt_window(model, rig, win));

  CsvTable rankTable;
  rankTable.header = {"lambda", "rank", "window_id"};
  for (int gi = 0; gi < nGrid; ++gi) {
    Mat phi = tracked_boundary_density(model, rig, lambdas[gi]);
    FiberData fd = fiber_from_density(lambdas[gi], std::move(phi));
    rankTable.rows.push_back({lambdas[gi], double(fd.rank), -1.0});
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      if (!cfg.windows[wi].contains(lambdas[gi])) continue;
      FiberData wf = window_fiber(model, windows[wi], lambdas[gi]);
      rankTable.rows.push_back({lambdas[gi], double(wf.rank), double(wi)});
    }
  }
  csv_write((fs::path(outDir) / "fiber_rank.csv").string(), rankTable);
  manifest["artifacts"]["fiber_rank"] = "fiber_rank.csv";

  if (windows.size() >= 2) {
    double worstGlueUnit = 0.0, worstGlueFit = 0.0;
    for (std::size_t wi = 0; wi + 1 < windows.size(); ++wi) {
      Interval ov{std::max(cfg.windows[wi].lo, cfg.windows[wi + 1].lo),
                  std::min(cfg.windows[wi].hi, cfg.windows[wi + 1].hi)};
      if (!(ov.lo < ov.hi)) continue;
      GluingUnitary gu =
          glue_windows(model, rig, windows[wi], windows[wi + 1], ov.mid());
      worstGlueUnit = std::max(worstGlueUnit, gu.unitarityResidual);
      worstGlueFit = std::max(worstGlueFit, gu.fitResidual);
    }
    checks.push_back(detail::make_check("gluing_unitarity", worstGlueUnit,
                                        1e-8 * tolFactor));
    checks.push_back(detail::make_check("gluing_fit", worstGlueFit, 1e-7 * tolFactor));
  }
  if (windows.size() >= 3) {
    Interval triple = cfg.windows[0];
    for (const auto& w : cfg.windows) {
      triple.lo = std::max(triple.lo, w.lo);
      triple.hi = std::min(triple.hi, w.hi);
    }
    if (triple.lo < triple.hi) {
      double lam = triple.mid();
      GluingUnitary u01 = glue_windows(model, rig, windows[0], windows[1], lam);
      GluingUnitary u12 = glue_windows(model, rig, windows[1], windows[2], lam);
      GluingUnitary u02 = glue_windows(model, rig, windows[0], windows[2], lam);
      double cocycle = max_abs(Mat(u02.U - u12.U * u01.U));
      checks.push_back(detail::make_check("gluing_cocycle", cocycle, 1e-7 * tolFactor));
    }
  }

  // --- Stage 4: time-domain validation (timecheck scenario) ----------------
  if (cfg.scenario == "timecheck") {
    const TimeSettings& ts = cfg.time;
    PropagationSetup freeSetup = free_propagation_setup(ts.radius);
    PropagationSetup interacting =
        interacting_propagation_setup(ts.radius, model, rig, pTotal);

    // Stationary route: integral kernel of the incoming wave operator on the
    // tracked sites.
    WaveOperatorKernel kernel =
        wave_operator_kernel(model, rig, pTotal, -1, 0, threads);

    // Time route: the same operator by its defining limit.
    check_packet_clearance(ts.radius, ts.center, ts.sigma, 2.0 * ts.horizon);
    Vec f = gaussian_packet(ts.radius, ts.center, ts.theta0, ts.sigma);
    TimeWaveResult tw =
        time_wave_operator(freeSetup, interacting, f, ts.horizon, -1);

    int m = rig.m();
    Vec fTracked(m), twTracked(m);
    for (int i = 0; i < m; ++i) {
      fTracked[i] = f[freeSetup.idx(rig.auxSites[i])];
      twTracked[i] = tw.psi[freeSetup.idx(rig.auxSites[i])];
    }
    Vec statVals = apply_wave_kernel(model, rig, kernel, fTracked);
    double overlap = std::abs(statVals.dot(twTracked)) /
                     (statVals.norm() * twTracked.norm());
    checks.push_back(detail::make_check("wave_operator_overlap_defect",
                                        1.0 - overlap, 1e-3 * tolFactor));
    checks.push_back(detail::make_check("wave_limit_cauchy_gap", tw.cauchyGap,
                                        1e-2 * tolFactor));
    checks.push_back(detail::make_check("propagation_norm_defect", tw.normDefect,
                                        1e-9 * (1.0 + 4.0 * ts.horizon)));

    // Light cone: free evolution must not leak mass past ballistic range.
    {
      double tCone = 40.0;
      Vec g = gaussian_packet(ts.radius, 0.0, ts.theta0, ts.sigma);
      Vec gt = propagate(freeSetup, g, tCone).psi;
      double leak = 0.0;
      double range = 2.0 * tCone + 10.0 * ts.sigma;
      for (int i = 0; i < freeSetup.dim(); ++i)
        if (std::abs(double(i - ts.radius)) > range) leak += std::norm(gt[i]);
      checks.push_back(detail::make_check("light_cone_leak", leak, 1e-6));
    }

    // Transmission by time of flight vs the stationary channel amplitude.
    double flightCenter = -std::max(150.0, 10.0 * ts.sigma + 60.0);
    double flightTime =
        (std::abs(flightCenter) + 80.0) / (2.0 * std::sin(ts.theta0)) + 30.0;
    check_packet_clearance(ts.radius, flightCenter, ts.sigma, flightTime);
    FlightTransmission ft = transmission_by_flight(
        freeSetup, interacting, ts.theta0, ts.sigma, flightCenter, flightTime);
    LambdaFrame chFrame = build_lambda_frame(model, rig, pTotal, ft.lambda);
    ChannelScattering ch = channel_scattering(model, rig, chFrame);
    checks.push_back(detail::make_check("flight_vs_stationary_transmission",
                                        std::abs(ft.tauSq - std::norm(ch.t)),
                                        1e-3 * tolFactor));
    checks.push_back(detail::make_check(
        "flight_mass_balance",
        std::abs(ft.transmittedMass + ft.reflectedMass + ft.residualMass - 1.0),
        1e-3 * tolFactor));

    // Energy-window decay bound for a window-limited packet.
    {
      Interval win{-0.5, 0.5};
      Vec g0 = gaussian_packet(ts.radius, 0.0, 0.5 * pi, ts.sigma);
      Vec g = window_limit(freeSetup, win, g0);
      EnergyWindowCheck ew =
          energy_window_check(freeSetup, rig.weight, win, g, 60.0);
      checks.push_back(detail::make_check("energy_window_ratio",
                                          ew.timeIntegral / ew.bound, 1.05));
    }

    // Time series of the flight run.
    {
      CsvTable tt;
      tt.header = {"t", "transmitted_mass", "reflected_mass", "norm_defect"};
      int steps = 60;
      double dt = flightTime / steps;
      Vec psi = gaussian_packet(interacting.radius, flightCenter, ts.theta0, ts.sigma);
      double norm0 = psi.norm(), tNow = 0.0;
      auto record = [&](double tVal, const Vec& state) {
        double trans = 0.0, refl = 0.0;
        for (int i = 0; i < interacting.dim(); ++i) {
          int n = i - interacting.radius;
          if (n > 40) trans += std::norm(state[i]);
          else if (n < -40) refl += std::norm(state[i]);
        }
        tt.rows.push_back({tVal, trans, refl, std::abs(state.norm() - norm0)});
      };
      record(0.0, psi);
      for (int k = 1; k <= steps; ++k) {
        psi = propagate(interacting, psi, dt).psi;
        tNow += dt;
        record(tNow, psi);
      }
      csv_write((fs::path(outDir) / "timedomain.csv").string(), tt);
      manifest["artifacts"]["timedomain"] = "timedomain.csv";
    }
  }

  // --- Residual report ------------------------------------------------------
  CsvTable resTable;
  resTable.header = {"check_index", "value", "tolerance", "pass"};
  for (std::size_t i = 0; i < checks.size(); ++i)
    resTable.rows.push_back({double(i), checks[i].value, checks[i].tolerance,
                             checks[i].pass ? 1.0 : 0.0});
  csv_write((fs::path(outDir) / "residuals.csv").string(), resTable);
  manifest["artifacts"]["residuals"] = "residuals.csv";

  bool allPass = true;
  for (const auto& c : checks) allPass = allPass && c.pass;
  manifest["checks"] = checks_to_json(checks);
  manifest["all_pass"] = allPass;

  ScenarioOutcome out;
  out.checks = checks;
  out.exitCode = allPass ? 0 : 1;
  out.manifestPath = (fs::path(outDir) / "manifest.json").string();
  write_manifest(out.manifestPath, manifest);
  return out;
}

// ---------------------------------------------------------------------------
// Plot data extraction
// ---------------------------------------------------------------------------

inline std::string emit_plot_data(const std::string& manifestPath,
                                  const std::string& quantity,
                                  const std::string& outDir) {
  namespace fs = std::filesystem;
  ojson manifest = read_manifest(manifestPath);
  ensure(manifest.contains("artifacts") && !manifest["artifacts"].empty(),
         "manifest has no artifacts");
  fs::path dir = fs::path(manifestPath).parent_path();
  auto artifact = [&](const std::string& key) {
    ensure(manifest["artifacts"].contains(key),
           "quantity '" + quantity + "' not present in manifest artifacts");
    return (dir / manifest["artifacts"][key].get<std::string>()).string();
  };

  CsvTable plot;
  if (quantity == "eigenphases") {
    CsvTable s = csv_read(artifact("s_matrix"));
    std::vector<std::size_t> cols;
    plot.header = {"lambda"};
    for (std::size_t j = 0; j < s.header.size(); ++j)
      if (s.header[j].rfind("eigenphase_", 0) == 0) {
        cols.push_back(j);
        plot.header.push_back(s.header[j]);
      }
    for (const auto& row : s.rows) {
      std::vector<double> r{row[0]};
      for (auto j : cols) r.push_back(row[j]);
      plot.rows.push_back(std::move(r));
    }
  } else if (quantity == "transmission") {
    CsvTable t = csv_read(artifact("transmission"));
    plot.header = {"lambda", "transmission", "reflection"};
    for (const auto& row : t.rows) plot.rows.push_back({row[0], row[1], row[2]});
  } else if (quantity == "fiber_rank") {
    CsvTable t = csv_read(artifact("fiber_rank"));
    plot.header = {"lambda", "rank"};
    for (const auto& row : t.rows)
      if (row[2] == -1.0) plot.rows.push_back({row[0], row[1]});
  } else if (quantity == "residuals") {
    CsvTable t = csv_read(artifact("residuals"));
    plot.header = {"check_index", "value", "tolerance"};
    for (const auto& row : t.rows) plot.rows.push_back({row[0], row[1], row[2]});
  } else {
    throw std::invalid_argument("unknown plot quantity '" + quantity + "'");
  }

  fs::create_directories(outDir);
  std::string outPath = (fs::path(outDir) / ("plot_" + quantity + ".csv")).string();
  csv_write(outPath, plot);
  return outPath;
}

}  // namespace rigscat
