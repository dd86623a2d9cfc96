#pragma once

// Pointwise chemistry kernels: the switched reaction rate, the (u, w)
// reaction substep, porosity/aperture evolution and permeability closures.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rfrac/error.hpp"

namespace rfrac {

struct ChemParams {
  double lambda = 0.0;      // reaction constant [1/s]
  int zeta = 1;             // r(u) = u^zeta
  double eta = 0.0;         // matrix deposition coefficient, nu(phi) = eta phi
  double eta_gamma = 0.0;   // fracture deposition coefficient, upsilon(eps) = eta_gamma eps
  double phi_ref = 0.2;     // reference porosity
  double k_ref = 1.0;       // reference matrix permeability [m^2]
  double alpha = 2.0;       // Kozeny exponent
  double k_gamma_ref = 1.0; // reference tangential fracture permeability
  double kappa_ref = 1.0;   // reference normal fracture permeability
  double eps_ref = 1e-3;    // initial aperture [m]
  double eps_max = 0.0;     // aperture cap; 0 selects 10 * eps_ref
  double d = 0.0;           // matrix diffusivity [m^2/s]
  double d_gamma = 0.0;     // tangential fracture diffusivity
  double delta = 0.0;       // normal fracture diffusivity
  /// Use the dissolution branch with the opposite sign, -lambda (r(u) - 1).
  bool paper_literal_reaction_sign = false;

  double aperture_cap() const noexcept { return eps_max > 0.0 ? eps_max : 10.0 * eps_ref; }

  /// Range violations keyed by their config path (`chem.<name>`).
  std::vector<std::string> validate() const {
    std::vector<std::string> out;
    auto need = [&out](bool ok, const char* key, const char* rule) {
      if (!ok) out.push_back(std::string("chem.") + key + ": must be " + rule);
    };
    need(lambda >= 0.0, "lambda", ">= 0");
    need(zeta >= 1, "zeta", "a positive integer");
    need(eta >= 0.0, "eta", ">= 0");
    need(eta_gamma >= 0.0, "eta_gamma", ">= 0");
    need(phi_ref > 0.0 && phi_ref <= 1.0, "phi_ref", "in (0, 1]");
    need(k_ref > 0.0, "k_ref", "> 0");
    need(alpha > 0.0, "alpha", "> 0");
    need(k_gamma_ref > 0.0, "k_gamma_ref", "> 0");
    need(kappa_ref > 0.0, "kappa_ref", "> 0");
    need(eps_ref >= 0.0, "eps_ref", ">= 0");
    need(eps_max >= 0.0, "eps_max", ">= 0");
    need(d >= 0.0, "d", ">= 0");
    need(d_gamma >= 0.0, "d_gamma", ">= 0");
    need(delta >= 0.0, "delta", ">= 0");
    return out;
  }
};

inline double ipow(double x, int n) noexcept {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

/// Net precipitation rate r_w(u, w). Positive values deposit precipitate.
inline double reaction_rate(double u, double w, const ChemParams& p) {
  if (!(u >= 0.0)) throw DomainError("reaction_rate: negative solute concentration");
  const double excess = ipow(u, p.zeta) - 1.0;
  if (excess >= 0.0) return p.lambda * excess;
  if (w > 0.0) return p.paper_literal_reaction_sign ? -p.lambda * excess : p.lambda * excess;
  return 0.0;
}

struct ReactionResult {
  double u = 0.0;
  double w = 0.0;
  /// Time into the step at which the precipitate (or, in literal-sign
  /// mode, the solute) ran out.
  std::optional<double> exhausted_at;
};

/// Integrate du/dt = -r_w, dw/dt = r_w over dt with phi frozen.
///
/// u + w is conserved by construction (only u is integrated, w = s - u).
/// RK4 sub-steps sized by the local stiffness lambda zeta u^(zeta-1); a step
/// that would drive w below zero is cut at the crossing by bisection and the
/// state is parked at (s, 0), where the rate vanishes.
inline ReactionResult reaction_substep(double u, double w, double dt, const ChemParams& p) {
  if (!(u >= 0.0) || !(w >= 0.0)) throw DomainError("reaction_substep: negative state");
  if (!(dt > 0.0)) throw DomainError("reaction_substep: dt must be positive");
  ReactionResult out{u, w, std::nullopt};
  if (p.lambda == 0.0) return out;

  const double s = u + w;
  const double excess = ipow(u, p.zeta) - 1.0;
  if (excess == 0.0) return out;             // equilibrium
  if (excess < 0.0 && w <= 0.0) return out;  // nothing left to dissolve

  // literal sign: on the dissolution branch u is driven down to zero instead
  const bool literal_dissolution = p.paper_literal_reaction_sign && excess < 0.0;
  const double sign = literal_dissolution ? 1.0 : -1.0;
  auto du = [&](double v) { return sign * p.lambda * (ipow(v, p.zeta) - 1.0); };
  // event function: remaining amount of the exhausted species
  auto remaining = [&](double v) { return literal_dissolution ? v : s - v; };

  const double umax = std::max(u, 1.0);
  const double stiff = p.lambda * p.zeta * ipow(umax, p.zeta - 1);
  const double steps = std::clamp(std::ceil(dt * stiff / 0.02), 1.0, 1e6);
  const int n = static_cast<int>(steps);
  const double h = dt / n;

  auto rk4 = [&](double v, double tau) {
    const double k1 = du(v);
    const double k2 = du(v + 0.5 * tau * k1);
    const double k3 = du(v + 0.5 * tau * k2);
    const double k4 = du(v + tau * k3);
    return v + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  double v = u;
  for (int k = 0; k < n; ++k) {
    const double next = rk4(v, h);
    if (remaining(next) <= 0.0) {
      double lo = 0.0, hi = h;
      while (hi - lo > 1e-15 * h) {
        const double mid = 0.5 * (lo + hi);
        const double r = remaining(rk4(v, mid));
        if (std::abs(r) <= 1e-12) {
          lo = hi = mid;
          break;
        }
        (r > 0.0 ? lo : hi) = mid;
      }
      out.exhausted_at = k * h + 0.5 * (lo + hi);
      if (literal_dissolution) {
        out.u = 0.0;
        out.w = s;
      } else {
        out.u = s;
        out.w = 0.0;
      }
      return out;
    }
    v = next;
  }
  out.u = v;
  out.w = s - v;
  return out;
}

/// Exact integrator of d(phi) = -eta phi dw over a precipitate increment.
inline double porosity_update(double phi, double dw, const ChemParams& p) {
  if (phi <= 0.0) return 0.0;
  return std::clamp(phi * std::exp(-p.eta * dw), 0.0, 1.0);
}

/// Exact integrator of d(eps) = -eta_gamma eps dw_gamma, capped at aperture_cap().
inline double aperture_update(double eps, double dw_gamma, const ChemParams& p) {
  if (eps <= 0.0) return 0.0;
  return std::clamp(eps * std::exp(-p.eta_gamma * dw_gamma), 0.0, p.aperture_cap());
}

/// Kozeny law k = k_ref (phi / phi_ref)^alpha.
inline double matrix_permeability(double phi, const ChemParams& p) {
  if (phi <= 0.0) return 0.0;
  const double ratio = phi / p.phi_ref;
  return p.k_ref * (p.alpha == 2.0 ? ratio * ratio : std::pow(ratio, p.alpha));
}

struct FracturePermeability {
  double k_gamma = 0.0;
  double kappa = 0.0;
};

/// k_gamma = k_gamma_ref eps^2 / eps_ref, kappa = kappa_ref eps^2 / eps_ref.
inline FracturePermeability fracture_permeability(double eps, const ChemParams& p) {
  if (!(p.eps_ref > 0.0)) throw DomainError("fracture_permeability: eps_ref must be positive");
  if (eps <= 0.0) return {};
  const double scale = eps * eps / p.eps_ref;
  return {p.k_gamma_ref * scale, p.kappa_ref * scale};
}

}  // namespace rfrac
