#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "rfrac/mesh.hpp"

namespace rfrac {

/// Boundary partition: pressure edges are Gamma_in (p and u prescribed),
/// outflux edges are Gamma_out (normal Darcy flux prescribed, free advective
/// outflow), noflow edges are Gamma_N.
enum class BcKind : std::uint8_t { pressure, outflux, noflow };

constexpr std::string_view to_string(BcKind k) noexcept {
  switch (k) {
    case BcKind::pressure: return "pressure";
    case BcKind::outflux: return "outflux";
    case BcKind::noflow: return "noflow";
  }
  return "?";
}

struct EdgeBc {
  BcKind kind = BcKind::noflow;
  double pressure = 0.0;       // p on pressure edges
  double flux = 0.0;           // outward normal Darcy flux on outflux edges
  double concentration = 0.0;  // inflow solute value on pressure edges
  // fracture-tip data on this edge; defaults derive from the matrix data
  std::optional<double> frac_pressure;
  std::optional<double> frac_flux;
  std::optional<double> frac_concentration;

  double tip_pressure() const noexcept { return frac_pressure.value_or(pressure); }
  /// Aperture-integrated outflux at a tip of aperture eps.
  double tip_flux(double eps) const noexcept { return frac_flux.value_or(eps * flux); }
  double tip_concentration() const noexcept { return frac_concentration.value_or(concentration); }
};

struct BcSet {
  std::array<EdgeBc, 4> edges{};

  EdgeBc& operator[](Edge e) noexcept { return edges[static_cast<std::size_t>(e)]; }
  const EdgeBc& operator[](Edge e) const noexcept { return edges[static_cast<std::size_t>(e)]; }

  static BcSet all(BcKind kind) {
    BcSet s;
    for (auto& e : s.edges) e.kind = kind;
    return s;
  }
};

}  // namespace rfrac
