#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rfrac/transport.hpp"

using namespace rfrac;

namespace {

// A solved flow field plus the transport data that goes with it.
struct Scenario {
  MixedDimMesh mesh;
  std::vector<double> phi, eps, kg, kap;
  CellTensor k, dif;
  BcSet bc;
  FlowState flow;
  double d_gamma = 0.0, delta = 0.0;

  Scenario(MixedDimMesh m, BcSet b, double eps0, double d)
      : mesh(std::move(m)),
        phi(static_cast<std::size_t>(mesh.num_cells()), 0.25),
        eps(static_cast<std::size_t>(mesh.num_fracture_cells()), eps0),
        kg(eps.size(), 100.0),
        kap(eps.size(), 10.0),
        k(CellTensor::uniform(phi.size(), 1.0)),
        dif(CellTensor::uniform(phi.size(), d)),
        bc(b),
        d_gamma(d),
        delta(d) {
    resolve();
  }

  void resolve() {
    FlowInputs in;
    in.phi_old = phi;
    in.phi_new = phi;
    in.eps_old = eps;
    in.eps_new = eps;
    in.k = &k;
    in.k_gamma = kg;
    in.kappa = kap;
    in.bc = &bc;
    flow = solve_flow(mesh, assemble_flow(mesh, in), {1e-14, 10000});
  }

  TransportInputs inputs(double dt) const {
    TransportInputs in;
    in.phi = phi;
    in.eps = eps;
    in.diffusivity = &dif;
    in.d_gamma = d_gamma;
    in.delta = delta;
    in.dt = dt;
    in.bc = &bc;
    return in;
  }

  TransportState state(double u, double w = 0.0) const {
    TransportState s;
    s.u.assign(phi.size(), u);
    s.w.assign(phi.size(), w);
    s.u_gamma.assign(eps.size(), u);
    s.w_gamma.assign(eps.size(), w);
    return s;
  }

  double mass(const TransportState& s) const {
    double m = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) m += phi[c] * mesh.grid().volume(c) * s.u[c];
    for (int g = 0; g < mesh.num_fracture_cells(); ++g)
      m += eps[g] * mesh.fracture_cell(g).length * s.u_gamma[g];
    return m;
  }
};

BcSet left_to_right(double u_in) {
  BcSet bc = BcSet::all(BcKind::noflow);
  bc[Edge::left].kind = BcKind::pressure;
  bc[Edge::left].pressure = 1.0;
  bc[Edge::left].concentration = u_in;
  bc[Edge::right].kind = BcKind::pressure;
  bc[Edge::right].pressure = 0.0;
  bc[Edge::right].concentration = 0.0;
  return bc;
}

MixedDimMesh square(int n, bool fracture) {
  const auto g = build_matrix_grid(n, n, 1.0, 1.0);
  if (!fracture) return MixedDimMesh(g);
  return MixedDimMesh(g, {fracture_path(g, Axis::y, 0.5, 0.0, 1.0)});
}

MixedDimMesh strip(int n) { return MixedDimMesh(build_matrix_grid(n, 1, 1.0, 1.0 / n)); }

ChemParams reacting() {
  ChemParams p;
  p.lambda = 1.0;
  p.zeta = 2;
  return p;
}

double ulp(double x) { return std::nextafter(std::abs(x), INFINITY) - std::abs(x); }

}  // namespace

TEST(UpwindValue, Examples) {
  EXPECT_EQ(upwind_value(1.0, 2.0, 5.0), 2.0);
  EXPECT_EQ(upwind_value(-1.0, 2.0, 5.0), 5.0);
  EXPECT_EQ(upwind_value(0.0, 2.0, 4.0), 3.0);
}

TEST(TransportStep, ConstantStateIsPreserved) {
  Scenario s(square(8, true), left_to_right(1.0), 1e-2, 1e-3);
  s.bc[Edge::right].concentration = 1.0;
  const auto st = transport_step(s.mesh, s.flow, s.state(1.0), s.inputs(0.05), {1e-15, 1000});
  for (double v : st.u) EXPECT_NEAR(v, 1.0, 1e-12);
  for (double v : st.u_gamma) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(TransportStep, DiffusionOperatorIsSecondOrder) {
  // cos(pi x) is an eigenvector of the discrete Neumann diffusion operator,
  // so one backward Euler step reveals its eigenvalue exactly
  const double pi = std::numbers::pi;
  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    Scenario s(strip(n), BcSet::all(BcKind::noflow), 0.0, 1.0);
    std::fill(s.phi.begin(), s.phi.end(), 1.0);
    auto u0 = s.state(0.0);
    for (int c = 0; c < n; ++c) u0.u[c] = std::cos(pi * s.mesh.grid().center(c)[0]);
    const auto st = transport_step(s.mesh, s.flow, u0, s.inputs(1.0), {1e-13, 1000});
    const double mu = u0.u[0] / st.u[0] - 1.0;
    for (int c = 0; c < n; ++c) {
      if (std::abs(u0.u[c]) > 0.1) {
        EXPECT_NEAR(u0.u[c] / st.u[c] - 1.0, mu, 1e-8);
      }
    }
    err.push_back(std::abs(mu - pi * pi));
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(TransportStep, AdvectedFrontIsMonotoneAndNotTooFast) {
  const int n = 64;
  Scenario s(strip(n), left_to_right(1.0), 0.0, 0.0);
  auto st = s.state(0.0);
  const auto in = s.inputs(0.5 * cfl_bound(s.mesh, s.flow, s.inputs(1.0)));
  // Darcy velocity 1 (unit drop over unit length, k = 1), pore velocity 1 / phi
  const double speed = 1.0 / 0.25;
  double t = 0.0;
  for (int step = 0; step < 40; ++step) {
    st = transport_step(s.mesh, s.flow, st, in);
    t += in.dt;
    for (int c = 0; c < n; ++c) {
      ASSERT_GE(st.u[c], -1e-14);
      ASSERT_LE(st.u[c], 1.0 + 1e-14);
      if (c > 0) {
        ASSERT_LE(st.u[c], st.u[c - 1] + 1e-14);
      }
    }
    // position where the profile drops below one half
    double front = 1.0;
    for (int c = 0; c < n; ++c)
      if (st.u[c] < 0.5) {
        front = s.mesh.grid().x_edges()[c];
        break;
      }
    EXPECT_LE(front, speed * t + 1.0 / n);
  }
}

TEST(TransportStep, OccludedFractureCellIsFrozen) {
  Scenario s(square(6, true), left_to_right(2.0), 1e-2, 1e-3);
  s.eps[2] = 0.0;
  s.kg[2] = 0.0;
  s.kap[2] = 0.0;
  s.resolve();
  auto u0 = s.state(0.5);
  u0.u_gamma[2] = 0.7;
  const auto in = s.inputs(0.1);
  const auto sys = assemble_transport(s.mesh, s.flow, u0, in);
  const int unknown = s.mesh.num_cells() + 2;
  ASSERT_EQ(sys.frozen.size(), 1u);
  EXPECT_EQ(sys.frozen[0], unknown);
  for (const auto& l : sys.links)
    if (l.b == unknown || l.a == unknown) {
      EXPECT_EQ(l.q, 0.0);
      EXPECT_EQ(l.d, 0.0);
    }
  const auto st = transport_step(s.mesh, s.flow, u0, in);
  EXPECT_EQ(st.u_gamma[2], 0.7);
}

TEST(TransportStep, ReflectionSymmetry) {
  const int n = 8;
  Scenario s(square(n, true), left_to_right(2.0), 1e-2, 1e-2);
  auto st = s.state(0.3);
  for (int step = 0; step < 5; ++step) st = transport_step(s.mesh, s.flow, st, s.inputs(0.02));
  const auto& g = s.mesh.grid();
  for (int j = 0; j < n / 2; ++j)
    for (int i = 0; i < n; ++i) EXPECT_NEAR(st.u[g.cell(i, j)], st.u[g.cell(i, n - 1 - j)], 1e-12);
}

TEST(TransportStep, MaximumPrinciple) {
  Scenario s(square(12, true), left_to_right(1.0), 1e-2, 1e-3);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> d(0.2, 0.8);
  auto st = s.state(0.0);
  for (auto& v : st.u) v = d(rng);
  for (auto& v : st.u_gamma) v = d(rng);
  const auto in = s.inputs(cfl_bound(s.mesh, s.flow, s.inputs(1.0)));
  for (int step = 0; step < 10; ++step) {
    double lo = 1.0, hi = 1.0;  // inflow value
    for (double v : st.u) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : st.u_gamma) lo = std::min(lo, v), hi = std::max(hi, v);
    st = transport_step(s.mesh, s.flow, st, in);
    for (double v : st.u) {
      ASSERT_GE(v, lo - 1e-12);
      ASSERT_LE(v, hi + 1e-12);
    }
    for (double v : st.u_gamma) {
      ASSERT_GE(v, lo - 1e-12);
      ASSERT_LE(v, hi + 1e-12);
    }
  }
}

TEST(TransportStep, NoExchangeReproducesFractureFreeMatrix) {
  const int n = 8;
  Scenario with(square(n, true), left_to_right(2.0), 1e-2, 1e-3);
  with.delta = 0.0;
  for (auto& c : with.flow.flux_coupling) c = {0.0, 0.0};
  Scenario without(square(n, false), left_to_right(2.0), 0.0, 1e-3);
  auto a = with.state(0.0), b = without.state(0.0);
  for (int c = 0; c < n * n; ++c) {
    const double x = with.mesh.grid().center(c)[0];
    a.u[c] = b.u[c] = 1.0 + std::sin(3.0 * x);
  }
  for (int step = 0; step < 5; ++step) {
    a = transport_step(with.mesh, with.flow, a, with.inputs(0.02));
    b = transport_step(without.mesh, without.flow, b, without.inputs(0.02));
  }
  for (int c = 0; c < n * n; ++c) EXPECT_NEAR(a.u[c], b.u[c], 1e-10);
}

TEST(TransportStep, MassLedgerClosesWithFrozenStorage) {
  Scenario s(square(10, true), left_to_right(2.0), 1e-2, 1e-3);
  auto st = s.state(0.5);
  const double dt = 0.03;
  double m = s.mass(st);
  for (int step = 0; step < 10; ++step) {
    const auto next = transport_step(s.mesh, s.flow, st, s.inputs(dt), {1e-13, 1000});
    const double m1 = s.mass(next);
    const double expected = (next.boundary_in - next.boundary_out) * dt;
    EXPECT_NEAR(m1 - m, expected, 1e-8 * std::max(m1, 1e-300));
    st = next;
    m = m1;
  }
}

TEST(TransportStep, InflowWithoutConcentrationIsRejected) {
  BcSet bc = BcSet::all(BcKind::noflow);
  bc[Edge::left].kind = BcKind::outflux;
  bc[Edge::left].flux = 0.5;
  bc[Edge::right].kind = BcKind::outflux;
  bc[Edge::right].flux = -0.5;  // the right edge takes fluid in
  Scenario s(strip(4), bc, 0.0, 0.0);
  EXPECT_THROW(transport_step(s.mesh, s.flow, s.state(1.0), s.inputs(0.1)), ConfigError);
}

TEST(CflBound, UniformFlowMatchesHandComputation) {
  const int n = 10;
  Scenario s(strip(n), left_to_right(1.0), 0.0, 0.0);
  // outflow per cell = Darcy flux 1 times face area 1/n, storage = phi h^2
  const double h = 1.0 / n;
  EXPECT_NEAR(cfl_bound(s.mesh, s.flow, s.inputs(1.0)), 0.25 * h * h / h, 1e-12);
}

TEST(PrecipitateStep, ZeroRateConstantLeavesStateUnchanged) {
  Scenario s(square(4, true), left_to_right(1.0), 1e-2, 0.0);
  auto st = s.state(1.7, 0.3);
  const auto out = precipitate_step(st, s.phi, s.eps, ChemParams{}, 0.1);
  EXPECT_EQ(out.u, st.u);
  EXPECT_EQ(out.w, st.w);
  EXPECT_EQ(out.u_gamma, st.u_gamma);
}

TEST(PrecipitateStep, EquilibriumIsUnchanged) {
  Scenario s(square(4, true), left_to_right(1.0), 1e-2, 0.0);
  const auto st = s.state(1.0, 0.4);
  const auto out = precipitate_step(st, s.phi, s.eps, reacting(), 0.1);
  EXPECT_EQ(out.u, st.u);
  EXPECT_EQ(out.w, st.w);
  EXPECT_EQ(out.w_gamma, st.w_gamma);
}

TEST(PrecipitateStep, SingleCellMatchesRk4) {
  const auto p = reacting();
  TransportState st;
  st.u = {2.0};
  st.w = {0.0};
  const std::vector<double> phi{0.3}, eps{};
  const auto out = precipitate_step(st, phi, eps, p, 0.01);
  // fine fixed-step RK4 on du/dt = -(u^2 - 1)
  double u = 2.0;
  const double h = 0.01 / 1000;
  auto f = [](double v) { return -(v * v - 1.0); };
  for (int k = 0; k < 1000; ++k) {
    const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(out.u[0], u, 1e-8);
  EXPECT_NEAR(out.w[0], 2.0 - u, 1e-8);
}

TEST(PrecipitateStep, ConservesPerCellTotals) {
  Scenario s(square(6, true), left_to_right(1.0), 1e-2, 0.0);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> d(0.0, 3.0);
  auto st = s.state(0.0);
  for (auto& v : st.u) v = d(rng);
  for (auto& v : st.w) v = d(rng);
  for (auto& v : st.u_gamma) v = d(rng);
  for (auto& v : st.w_gamma) v = d(rng);
  const auto out = precipitate_step(st, s.phi, s.eps, reacting(), 0.2);
  for (std::size_t c = 0; c < st.u.size(); ++c) {
    const double s0 = st.u[c] + st.w[c];
    EXPECT_LE(std::abs(out.u[c] + out.w[c] - s0), 4 * ulp(s0));
    EXPECT_GE(out.w[c], 0.0);
  }
  for (std::size_t g = 0; g < st.u_gamma.size(); ++g) {
    const double s0 = st.u_gamma[g] + st.w_gamma[g];
    EXPECT_LE(std::abs(out.u_gamma[g] + out.w_gamma[g] - s0), 4 * ulp(s0));
  }
}

TEST(PrecipitateStep, ClosedCellsDoNotReact) {
  TransportState st;
  st.u = {2.0, 2.0};
  st.w = {0.0, 0.0};
  const std::vector<double> phi{0.0, 0.2}, eps{};
  const auto out = precipitate_step(st, phi, eps, reacting(), 0.1);
  EXPECT_EQ(out.u[0], 2.0);
  EXPECT_LT(out.u[1], 2.0);
}
