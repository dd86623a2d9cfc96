#include <gtest/gtest.h>

#include <cmath>

#include "rfrac/run.hpp"

using namespace rfrac;

namespace {

// 12x12 unit square, full horizontal fracture, left-to-right pressure drop.
Config base_config() {
  Config c;
  c.nx = c.ny = 12;
  c.lx = c.ly = 1.0;
  c.fractures.push_back({"f", Axis::y, 0.5, 0.0, 1.0});
  c.chem.lambda = 1.0;
  c.chem.zeta = 2;
  c.chem.eta = 0.5;
  c.chem.eta_gamma = 5.0;
  c.chem.phi_ref = 0.2;
  c.chem.k_ref = 1.0;
  c.chem.k_gamma_ref = 1e3;
  c.chem.kappa_ref = 1e3;
  c.chem.eps_ref = 1e-2;
  c.chem.d = 1e-3;
  c.chem.d_gamma = 1e-3;
  c.chem.delta = 1e-3;
  c.bc = BcSet::all(BcKind::noflow);
  c.bc[Edge::left].kind = BcKind::pressure;
  c.bc[Edge::left].pressure = 1.0;
  c.bc[Edge::left].concentration = 2.0;
  c.bc[Edge::right].kind = BcKind::pressure;
  c.bc[Edge::right].pressure = 0.0;
  c.bc[Edge::right].concentration = 1.0;
  c.initial = {1.0, 0.5, 1.0, 0.5, {}};
  c.time.t_end = 0.1;
  c.time.dt = 0.01;
  return c;
}

struct Trajectory {
  Problem pb;
  std::vector<SimState> states;
};

Trajectory simulate(const Config& c) {
  Trajectory t{make_problem(c), {}};
  RunOptions opt;
  opt.observer = [&t](const SimState& s) { t.states.push_back(s); };
  run_problem(t.pb, make_initial_fields(t.pb.mesh, c.initial), c.time, c.output, opt);
  return t;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

TEST(StepSizes, FixedScheduleWithShortLastStep) {
  TimeControls t;
  t.t_end = 1.0;
  t.dt = 0.3;
  const auto s = step_sizes(t);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_NEAR(s[3], 0.1, 1e-12);
  EXPECT_NEAR(s[0] + s[1] + s[2] + s[3], 1.0, 1e-12);
  t.t_end = 0.0;
  EXPECT_TRUE(step_sizes(t).empty());
  t.t_end = 0.5;
  t.dt = 0.1;
  EXPECT_EQ(step_sizes(t).size(), 5u);
}

TEST(InitialFields, RegionsOverrideByCellCentre) {
  auto c = base_config();
  c.initial.regions.push_back({"box", 0.0, 0.25, 0.0, 1.0, 3.0, std::nullopt});
  const Problem pb = make_problem(c);
  const auto init = make_initial_fields(pb.mesh, c.initial);
  for (int k = 0; k < pb.mesh.num_cells(); ++k) {
    const double x = pb.mesh.grid().center(k)[0];
    EXPECT_EQ(init.u[k], x < 0.25 ? 3.0 : 1.0);
    EXPECT_EQ(init.w[k], 0.5);
  }
}

TEST(InitialState, MaterialsAndClosuresAreConsistent) {
  const Problem pb = make_problem(base_config());
  const auto s = initial_state(pb, make_initial_fields(pb.mesh, base_config().initial));
  for (double v : s.phi) EXPECT_EQ(v, 0.2);
  for (double v : s.eps) EXPECT_EQ(v, 1e-2);
  for (double v : s.k.x) EXPECT_EQ(v, 1.0);
  for (double v : s.k_gamma) EXPECT_DOUBLE_EQ(v, 1e3 * 1e-2);
  EXPECT_EQ(s.step, 0);
  EXPECT_EQ(s.diag.min_phi, 0.2);
}

TEST(Advance, DecoupledChemistryLeavesMediumBitwiseUnchanged) {
  auto c = base_config();
  c.chem.lambda = 0.0;
  c.chem.eta = 0.0;
  c.chem.eta_gamma = 0.0;
  const auto t = simulate(c);
  const auto& s0 = t.states.front();
  for (const auto& s : t.states) {
    EXPECT_EQ(s.phi, s0.phi);
    EXPECT_EQ(s.eps, s0.eps);
    EXPECT_EQ(s.k.x, s0.k.x);
    EXPECT_EQ(s.k_gamma, s0.k_gamma);
    EXPECT_EQ(s.kappa, s0.kappa);
    EXPECT_EQ(s.transport.w, s0.transport.w);
  }
  // u still moved: it is a pure transport run
  EXPECT_GT(max_diff(t.states.back().transport.u, s0.transport.u), 1e-3);
}

TEST(Advance, GlobalEquilibriumIsStationary) {
  auto c = base_config();
  c.bc[Edge::left].concentration = 1.0;
  c.initial = {1.0, 0.4, 1.0, 0.4, {}};
  const auto t = simulate(c);
  const auto& s0 = t.states.front();
  for (const auto& s : t.states) {
    EXPECT_LE(max_diff(s.transport.u, s0.transport.u), 1e-9);
    EXPECT_LE(max_diff(s.transport.u_gamma, s0.transport.u_gamma), 1e-9);
    EXPECT_LE(max_diff(s.transport.w, s0.transport.w), 1e-9);
    EXPECT_LE(max_diff(s.phi, s0.phi), 1e-9);
    EXPECT_LE(max_diff(s.eps, s0.eps), 1e-11);
    EXPECT_LE(max_diff(s.flow.p, s0.flow.p), 1e-9);
  }
}

TEST(Advance, FracturePrecipitationCloses) {
  auto c = base_config();
  c.chem.lambda = 5.0;
  c.chem.eta_gamma = 20.0;
  c.time.t_end = 0.5;
  const auto t = simulate(c);
  ASSERT_EQ(t.states.size(), 51u);
  double prev_q = INFINITY;
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    const auto& a = t.states[k - 1];
    const auto& b = t.states[k];
    for (std::size_t g = 0; g < b.eps.size(); ++g) EXPECT_LE(b.eps[g], a.eps[g]);
    EXPECT_LE(b.diag.min_eps, a.diag.min_eps);
    const double q = fracture_throughflow(b.flow, 0);
    EXPECT_LE(q, prev_q * (1.0 + 1e-9)) << "step " << k;
    prev_q = q;
  }
  EXPECT_LT(t.states.back().diag.min_eps, 1e-2);
}

TEST(Advance, PermeabilitiesNeverStale) {
  const auto t = simulate(base_config());
  const auto& pb = t.pb;
  for (const auto& s : t.states) {
    for (std::size_t c = 0; c < s.phi.size(); ++c) {
      EXPECT_GE(s.phi[c], 0.0);
      EXPECT_LE(s.phi[c], 1.0);
      EXPECT_EQ(s.k.x[c], matrix_permeability(s.phi[c], pb.chem));
    }
    for (std::size_t g = 0; g < s.eps.size(); ++g) {
      EXPECT_GE(s.eps[g], 0.0);
      EXPECT_EQ(s.k_gamma[g], fracture_permeability(s.eps[g], pb.chem).k_gamma);
      EXPECT_EQ(s.kappa[g], fracture_permeability(s.eps[g], pb.chem).kappa);
    }
  }
}

TEST(Advance, RejectsNonPositiveStep) {
  const Problem pb = make_problem(base_config());
  const auto s = initial_state(pb, make_initial_fields(pb.mesh, base_config().initial));
  EXPECT_THROW(advance(pb, s, 0.0), DomainError);
}

TEST(MassLedger, ClosedBoxConservesTotalMass) {
  auto c = base_config();
  c.bc = BcSet::all(BcKind::noflow);
  c.chem.eta = 0.0;
  c.chem.eta_gamma = 0.0;
  c.chem.d = 1e-2;
  c.chem.d_gamma = 1e-2;
  c.chem.delta = 1e-2;
  c.initial = {2.0, 0.0, 0.5, 0.3, {}};
  c.initial.regions.push_back({"blob", 0.0, 0.5, 0.0, 0.5, 0.3, 1.0});
  const auto t = simulate(c);
  const double m0 = mass_totals(t.pb.mesh, t.states.front()).total();
  for (const auto& s : t.states) {
    EXPECT_NEAR(mass_totals(t.pb.mesh, s).total(), m0, 1e-8 * m0);
    EXPECT_EQ(s.ledger.boundary_in, 0.0);
    EXPECT_EQ(s.ledger.boundary_out, 0.0);
  }
  // the reaction did act
  EXPECT_GT(max_diff(t.states.back().transport.w, t.states.front().transport.w), 1e-3);
}

TEST(MassLedger, InflowOnlyTransientMatchesFluxQuadrature) {
  auto c = base_config();
  c.fractures.clear();
  c.chem.lambda = 0.0;
  c.chem.d = 5e-2;
  c.bc = BcSet::all(BcKind::noflow);
  c.bc[Edge::left].kind = BcKind::pressure;
  c.bc[Edge::left].pressure = 0.0;
  c.bc[Edge::left].concentration = 1.0;
  c.initial = {0.0, 0.0, 0.0, 0.0, {}};
  const auto t = simulate(c);
  const auto& g = t.pb.mesh.grid();
  double influx = 0.0;  // independent quadrature of the recorded face fluxes
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    const auto& s = t.states[k];
    for (int fi = 0; fi < g.num_faces(); ++fi) {
      const Face& f = g.face(fi);
      if (f.is_boundary()) influx -= f.outward_sign() * s.transport.chi[fi] * s.last_dt;
    }
  }
  const auto& last = t.states.back();
  const double gained = mass_totals(t.pb.mesh, last).total() - mass_totals(t.pb.mesh, t.states.front()).total();
  EXPECT_GT(influx, 0.0);
  EXPECT_NEAR(gained, influx, 1e-8 * influx);
  EXPECT_NEAR(last.ledger.boundary_in, influx, 1e-12 * influx);
  EXPECT_EQ(last.ledger.boundary_out, 0.0);
}

TEST(MassLedger, ZeroDataGivesZeroLedger) {
  auto c = base_config();
  c.bc[Edge::left].concentration = 0.0;
  c.bc[Edge::right].concentration = 0.0;
  c.initial = {0.0, 0.0, 0.0, 0.0, {}};
  const auto t = simulate(c);
  const auto& L = t.states.back().ledger;
  EXPECT_EQ(L.u_mass, 0.0);
  EXPECT_EQ(L.w_mass, 0.0);
  EXPECT_EQ(L.initial_mass, 0.0);
  EXPECT_EQ(L.boundary_in, 0.0);
  EXPECT_EQ(L.boundary_out, 0.0);
  EXPECT_EQ(L.storage_change, 0.0);
  EXPECT_EQ(L.closure, 0.0);
}

TEST(MassLedger, ClosesWithEvolvingMedium) {
  auto c = base_config();
  c.chem.lambda = 3.0;
  c.time.t_end = 0.3;
  const auto t = simulate(c);
  for (const auto& s : t.states) {
    EXPECT_LE(s.ledger.relative_closure, 1e-8);
    EXPECT_LE(s.ledger.max_step_relative, 1e-8);
  }
  EXPECT_NE(t.states.back().ledger.storage_change, 0.0);
}

TEST(FixedPoint, AgreesWithLaggedModeToFirstOrder) {
  auto diff_at = [](double dt) {
    auto c = base_config();
    c.time.t_end = 0.2;
    c.time.dt = dt;
    const auto lagged = simulate(c).states.back();
    c.time.fixed_point = true;
    const auto iterated = simulate(c).states.back();
    EXPECT_GT(iterated.diag.fixed_point_iterations, 1);
    EXPECT_LT(iterated.diag.fixed_point_residual, 1e-10);
    return max_diff(lagged.flow.p, iterated.flow.p) + max_diff(lagged.transport.u, iterated.transport.u);
  };
  const double a = diff_at(0.02), b = diff_at(0.01);
  EXPECT_GT(a, 0.0);
  EXPECT_LT(b, a);
  EXPECT_LT(a, 0.05);  // O(dt) with a modest constant
}

TEST(FixedPoint, NonConvergenceCarriesLastResidual) {
  auto c = base_config();
  c.time.fixed_point = true;
  c.time.fixed_point_max_iter = 2;
  c.time.fixed_point_tol = 1e-30;
  const Problem pb = make_problem(c);
  const auto s = initial_state(pb, make_initial_fields(pb.mesh, c.initial));
  try {
    advance(pb, s, 0.01);
    FAIL() << "expected FixedPointError";
  } catch (const FixedPointError& e) {
    EXPECT_GT(e.last_residual(), 0.0);
  }
}

TEST(Clogging, FlooredRunCompletesAndReportsCells) {
  auto c = base_config();
  c.chem.lambda = 20.0;
  c.chem.eta = 40.0;
  c.chem.eta_gamma = 40.0;
  c.bc[Edge::left].concentration = 3.0;
  c.time.t_end = 0.5;
  c.time.dt = 0.02;
  const auto rep = run(c);
  EXPECT_FALSE(rep.clogged_cells.empty() && rep.clogged_fracture_cells.empty());
  EXPECT_EQ(rep.min_phi, 0.0);
  for (int cell : rep.clogged_cells) EXPECT_EQ(rep.final_state.phi[cell], 0.0);
  EXPECT_TRUE(std::isfinite(rep.ledger.relative_closure));
}

TEST(CflMode, WarnRecordsAndEnforceRejects) {
  auto c = base_config();
  c.time.t_end = 0.2;
  c.time.dt = 0.2;  // far above the advective bound on this grid
  c.cfl = CflMode::warn;
  const auto rep = run(c);
  ASSERT_FALSE(rep.warnings.empty());
  EXPECT_NE(rep.warnings.back().find("CFL"), std::string::npos);
  c.cfl = CflMode::enforce;
  EXPECT_THROW(run(c), ConfigError);
}

TEST(Run, ZeroEndTimeWritesInitialStateOnce) {
  auto c = base_config();
  c.time.t_end = 0.0;
  const auto rep = run(c);
  EXPECT_EQ(rep.steps, 0);
  EXPECT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.time, 0.0);
}

TEST(Run, PatchScenarioOneStepClosesLedger) {
  auto c = base_config();
  c.fractures.clear();
  c.chem.lambda = 0.0;
  c.bc[Edge::right].kind = BcKind::outflux;
  c.bc[Edge::right].flux = 0.5;
  c.time.t_end = c.time.dt;
  const auto rep = run(c);
  EXPECT_EQ(rep.steps, 1);
  EXPECT_LE(rep.ledger.relative_closure, 1e-10);
}

TEST(Run, ClogScenarioMinApertureDecreases) {
  auto c = base_config();
  c.chem.lambda = 2.0;
  c.chem.eta_gamma = 10.0;
  const auto t = simulate(c);
  ASSERT_EQ(t.states.size(), 11u);
  EXPECT_GT(t.states.back().diag.min_eps, 0.0);
  for (std::size_t k = 1; k < t.states.size(); ++k)
    EXPECT_LT(t.states[k].diag.min_eps, t.states[k - 1].diag.min_eps);
}

TEST(Run, IdenticalInputsGiveBitIdenticalStates) {
  const auto a = simulate(base_config()).states.back();
  const auto b = simulate(base_config()).states.back();
  EXPECT_EQ(a.transport.u, b.transport.u);
  EXPECT_EQ(a.transport.w_gamma, b.transport.w_gamma);
  EXPECT_EQ(a.flow.p, b.flow.p);
  EXPECT_EQ(a.eps, b.eps);
}

TEST(Run, StepFailureNamesTheStep) {
  auto c = base_config();
  c.transport_solver = {1e-12, 1};  // cannot converge in one iteration
  try {
    run(c);
    FAIL() << "expected SolverFailure";
  } catch (const SolverFailure& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(Run, DtRefinementIsFirstOrder) {
  auto c = base_config();
  c.time.t_end = 0.2;
  c.time.dt = 0.04;
  const auto rows = dt_study(c, 4);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_GE(rows[k].ratio, 1.5);
    EXPECT_LE(rows[k].ratio, 2.5);
  }
}
