#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rfrac/chemistry.hpp"

using namespace rfrac;

namespace {

ChemParams base() {
  ChemParams p;
  p.lambda = 1.0;
  p.zeta = 2;
  p.eta = 1.0;
  p.eta_gamma = 2.0;
  return p;
}

double ulp(double x) { return std::nextafter(std::abs(x), INFINITY) - std::abs(x); }

// fixed-step RK4 on du/dt = -r_w(u, s - u)
double rk4_oracle(double u, double w, double dt, int n, const ChemParams& p) {
  const double s = u + w;
  auto f = [&](double v) { return -reaction_rate(v, s - v, p); };
  const double h = dt / n;
  for (int k = 0; k < n; ++k) {
    const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return u;
}

// RK4 on the scalar linear ODE y' = -c y over [0, 1]
double linear_rk4(double y, double c, int n) {
  const double h = 1.0 / n;
  for (int k = 0; k < n; ++k) {
    const double k1 = -c * y, k2 = -c * (y + 0.5 * h * k1), k3 = -c * (y + 0.5 * h * k2),
                 k4 = -c * (y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST(ReactionRate, Branches) {
  const auto p = base();
  EXPECT_EQ(reaction_rate(1.0, 0.0, p), 0.0);
  EXPECT_EQ(reaction_rate(2.0, 5.0, p), 3.0);
  EXPECT_EQ(reaction_rate(0.5, 0.0, p), 0.0);
  EXPECT_EQ(reaction_rate(0.5, -1.0, p), 0.0);
  EXPECT_DOUBLE_EQ(reaction_rate(0.5, 0.1, p), -0.75);
}

TEST(ReactionRate, DissolutionLowersPrecipitateUnderEuler) {
  const auto p = base();
  double u = 0.5, w = 0.1;
  const double r = reaction_rate(u, w, p);
  w += 1e-3 * r;
  u -= 1e-3 * r;
  EXPECT_LT(w, 0.1);
  EXPECT_GT(u, 0.5);
}

TEST(ReactionRate, LiteralSignFlipsMiddleBranchOnly) {
  auto p = base();
  p.paper_literal_reaction_sign = true;
  EXPECT_DOUBLE_EQ(reaction_rate(0.5, 0.1, p), 0.75);
  EXPECT_EQ(reaction_rate(2.0, 5.0, p), 3.0);
  EXPECT_EQ(reaction_rate(0.5, 0.0, p), 0.0);
}

TEST(ReactionRate, NegativeSoluteIsDomainError) {
  EXPECT_THROW(reaction_rate(-1e-12, 0.0, base()), DomainError);
}

TEST(ReactionRate, ContinuousAcrossEquilibrium) {
  const auto p = base();
  for (double du : {1e-6, 1e-9, 1e-12}) {
    EXPECT_NEAR(reaction_rate(1.0 + du, 0.3, p), 0.0, 3 * du);
    EXPECT_NEAR(reaction_rate(1.0 - du, 0.3, p), 0.0, 3 * du);
  }
}

TEST(ReactionSubstep, EquilibriumIsFixed) {
  const auto p = base();
  for (double dt : {1e-6, 0.1, 10.0}) {
    const auto r = reaction_substep(1.0, 0.3, dt, p);
    EXPECT_EQ(r.u, 1.0);
    EXPECT_EQ(r.w, 0.3);
  }
}

TEST(ReactionSubstep, DissolutionStopsExactlyAtZero) {
  const auto p = base();
  const auto r = reaction_substep(0.5, 1e-9, 10.0, p);
  EXPECT_EQ(r.w, 0.0);
  EXPECT_EQ(r.u, 0.5 + 1e-9);
  ASSERT_TRUE(r.exhausted_at.has_value());
  // tiny-step forward Euler oracle for the crossing time
  const double dt = 10.0, h = 1e-6 * dt;
  double u = 0.5, w = 1e-9, t = 0.0;
  while (w > 0.0) {
    const double rate = reaction_rate(u, w, p);
    u -= h * rate;
    w += h * rate;
    t += h;
  }
  EXPECT_NEAR(*r.exhausted_at, t, 2 * h);
}

TEST(ReactionSubstep, PrecipitationMatchesFineRk4) {
  const auto p = base();
  const auto r = reaction_substep(2.0, 0.0, 0.01, p);
  const double oracle = rk4_oracle(2.0, 0.0, 0.01, 1000, p);
  EXPECT_NEAR(r.u, oracle, 1e-8);
  EXPECT_NEAR(r.w, 2.0 - oracle, 1e-8);
  EXPECT_LT(r.u, 2.0);
  EXPECT_GT(r.w, 0.0);
  EXPECT_EQ(r.u + r.w, 2.0);
}

TEST(ReactionSubstep, LongPrecipitationApproachesEquilibrium) {
  const auto p = base();
  const auto r = reaction_substep(3.0, 0.0, 50.0, p);
  EXPECT_NEAR(r.u, 1.0, 1e-8);
  EXPECT_NEAR(r.w, 2.0, 1e-8);
}

TEST(ReactionSubstep, RejectsInvalidInput) {
  const auto p = base();
  EXPECT_THROW(reaction_substep(-1.0, 0.0, 1.0, p), DomainError);
  EXPECT_THROW(reaction_substep(1.0, -1.0, 1.0, p), DomainError);
  EXPECT_THROW(reaction_substep(1.0, 0.0, 0.0, p), DomainError);
}

TEST(ReactionSubstep, ZeroRateConstantIsIdentity) {
  auto p = base();
  p.lambda = 0.0;
  const auto r = reaction_substep(3.7, 0.2, 1.0, p);
  EXPECT_EQ(r.u, 3.7);
  EXPECT_EQ(r.w, 0.2);
}

TEST(ReactionSubstep, ConservationAndPositivityProperty) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> state(0.0, 10.0), logdt(-6.0, 0.0);
  std::uniform_int_distribution<int> zeta(1, 3);
  for (int trial = 0; trial < 3000; ++trial) {
    auto p = base();
    p.zeta = zeta(rng);
    const double u = state(rng), w = trial % 5 == 0 ? 0.0 : state(rng);
    const double dt = std::pow(10.0, logdt(rng));
    const auto r = reaction_substep(u, w, dt, p);
    const double s = u + w;
    ASSERT_LE(std::abs((r.u + r.w) - s), 4 * ulp(s)) << u << ' ' << w << ' ' << dt;
    ASSERT_GE(r.u, 0.0);
    ASSERT_GE(r.w, 0.0);
  }
}

TEST(ReactionSubstep, LiteralSignDrainsSolute) {
  auto p = base();
  p.paper_literal_reaction_sign = true;
  const auto r = reaction_substep(0.5, 0.1, 100.0, p);
  EXPECT_EQ(r.u, 0.0);
  EXPECT_DOUBLE_EQ(r.w, 0.6);
}

TEST(PorosityUpdate, Examples) {
  auto p = base();
  EXPECT_DOUBLE_EQ(porosity_update(0.2, 0.1, p), 0.2 * std::exp(-0.1));
  EXPECT_NEAR(porosity_update(0.2, 0.1, p), 0.1809674836, 1e-10);
  EXPECT_NEAR(porosity_update(0.2, 0.1, p), 0.2 * linear_rk4(1.0, 0.1, 1000), 1e-10);
  EXPECT_EQ(porosity_update(0.0, -1.0, p), 0.0);
  p.eta = 0.0;
  EXPECT_EQ(porosity_update(0.2, 123.0, p), 0.2);
}

TEST(PorosityUpdate, ClampedToUnitInterval) {
  auto p = base();
  p.eta = 10.0;
  EXPECT_EQ(porosity_update(0.5, -1.0, p), 1.0);
  EXPECT_GE(porosity_update(0.5, 1e3, p), 0.0);
}

TEST(ApertureUpdate, Examples) {
  auto p = base();
  EXPECT_EQ(aperture_update(1e-3, 0.0, p), 1e-3);
  EXPECT_EQ(aperture_update(0.0, -1.0, p), 0.0);
  EXPECT_NEAR(aperture_update(1e-3, 0.5, p), 3.678794412e-4, 1e-13);
  EXPECT_NEAR(aperture_update(1e-3, 0.5, p), 1e-3 * linear_rk4(1.0, 1.0, 1000), 1e-13);
}

TEST(ApertureUpdate, CappedAtMaximum) {
  auto p = base();
  p.eps_ref = 1e-3;
  EXPECT_EQ(aperture_update(1e-3, -10.0, p), 1e-2);
  p.eps_max = 5e-3;
  EXPECT_EQ(aperture_update(1e-3, -10.0, p), 5e-3);
}

TEST(StateUpdates, MonotoneInIncrement) {
  const auto p = base();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> st(1e-3, 0.9), inc(1e-4, 0.5);
  for (int k = 0; k < 500; ++k) {
    const double phi = st(rng), dw = inc(rng);
    EXPECT_LT(porosity_update(phi, dw, p), phi);
    EXPECT_GT(porosity_update(phi * 0.5, -dw, p), phi * 0.5);
    const double eps = 1e-4 * st(rng);
    EXPECT_LT(aperture_update(eps, dw, p), eps);
    EXPECT_GT(aperture_update(eps, -dw, p), eps);
  }
}

TEST(PorosityUpdate, SemigroupProperty) {
  const auto p = base();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> st(0.01, 0.5), inc(-0.2, 0.2);
  for (int k = 0; k < 2000; ++k) {
    const double phi = st(rng), a = inc(rng), b = inc(rng);
    const double once = porosity_update(phi, a + b, p);
    const double twice = porosity_update(porosity_update(phi, a, p), b, p);
    ASSERT_LE(std::abs(once - twice), 4 * ulp(once)) << phi << ' ' << a << ' ' << b;
  }
}

TEST(MatrixPermeability, Kozeny) {
  ChemParams p;
  p.phi_ref = 0.2;
  p.k_ref = 1e-12;
  EXPECT_EQ(matrix_permeability(0.2, p), 1e-12);
  EXPECT_EQ(matrix_permeability(0.0, p), 0.0);
  EXPECT_NEAR(matrix_permeability(0.1, p), 2.5e-13, 1e-27);
  p.alpha = 3.0;
  EXPECT_NEAR(matrix_permeability(0.1, p), 1.25e-13, 1e-27);
}

TEST(FracturePermeability, CubicLawScaling) {
  ChemParams p;
  p.eps_ref = 1e-3;
  p.k_gamma_ref = 1e-8;
  p.kappa_ref = 1e-8;
  const auto z = fracture_permeability(0.0, p);
  EXPECT_EQ(z.k_gamma, 0.0);
  EXPECT_EQ(z.kappa, 0.0);
  const auto r = fracture_permeability(1e-3, p);
  EXPECT_NEAR(r.k_gamma, 1e-11, 1e-24);
  EXPECT_NEAR(r.kappa, 1e-11, 1e-24);
  EXPECT_NEAR(fracture_permeability(2e-3, p).k_gamma, 4e-11, 1e-24);
  p.eps_ref = 0.0;
  EXPECT_THROW(fracture_permeability(1e-3, p), DomainError);
}

TEST(Permeability, MonotoneAndVanishingAtZero) {
  ChemParams p;
  p.eps_ref = 1e-3;
  double prev_k = -1.0, prev_kg = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double s = k / 100.0;
    const double km = matrix_permeability(s, p);
    const double kg = fracture_permeability(1e-2 * s, p).k_gamma;
    EXPECT_GT(km, prev_k);
    EXPECT_GT(kg, prev_kg);
    prev_k = km;
    prev_kg = kg;
  }
  EXPECT_EQ(matrix_permeability(0.0, p), 0.0);
}

TEST(ChemParams, ValidationNamesOffendingKeys) {
  ChemParams p;
  EXPECT_TRUE(p.validate().empty());
  p.phi_ref = 1.5;
  p.zeta = 0;
  p.lambda = -1.0;
  const auto v = p.validate();
  ASSERT_EQ(v.size(), 3u);
  EXPECT_NE(v[0].find("chem.lambda"), std::string::npos);
  EXPECT_NE(v[1].find("chem.zeta"), std::string::npos);
  EXPECT_NE(v[2].find("chem.phi_ref"), std::string::npos);
}
