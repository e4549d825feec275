#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "spvion/constants.hpp"

// Bulk semiconductor description and the derived quantities every other
// module needs: equilibrium densities, Fermi potential, diffusivities and
// Debye lengths.  Potentials are handled in thermal units u = phi/(kT/e)
// throughout; exponentials of u are clamped at |arg| = 60 to keep partial
// Newton states finite.

namespace spvion {

inline constexpr double kExpClamp = 60.0;

inline double clamped_exp(double x) {
  if (x > kExpClamp) x = kExpClamp;
  if (x < -kExpClamp) x = -kExpClamp;
  return std::exp(x);
}

enum class DopingType { donor, acceptor };

struct BulkMaterial {
  double ni_cm3 = 1.0e10;        // intrinsic density
  double doping_cm3 = 1.0e15;    // ionized dopant density (magnitude)
  DopingType doping = DopingType::acceptor;
  double mu_n_cm2_Vs = 1340.0;   // electron mobility
  double mu_p_cm2_Vs = 284.0;    // hole mobility
  double epsilon_r = 11.7;       // static dielectric constant
  double temperature_K = constants::kRoomTemperature_K;
  double v_th_cm_s = 1.0e7;      // carrier thermal velocity for capture rates

  double thermal_voltage() const { return thermal_voltage_V(temperature_K); }

  // Equilibrium majority/minority densities from full charge balance
  // (n_b - p_b = N_D - N_A, n_b p_b = ni^2).  The majority density uses the
  // cancellation-free branch of the quadratic; the minority density follows
  // from mass action so the product is exact in floating point.
  double majority_cm3() const {
    return 0.5 * (std::hypot(doping_cm3, 2.0 * ni_cm3) + doping_cm3);
  }
  double minority_cm3() const { return ni_cm3 * (ni_cm3 / majority_cm3()); }
  double p_b() const { return doping == DopingType::acceptor ? majority_cm3() : minority_cm3(); }
  double n_b() const { return doping == DopingType::donor ? majority_cm3() : minority_cm3(); }

  // Bulk Fermi level in thermal units, u_F = ln(p_b/n_i); positive for p-type.
  double u_F() const { return std::log(p_b() / ni_cm3); }

  double D_n_cm2_s() const { return mu_n_cm2_Vs * thermal_voltage(); }
  double D_p_cm2_s() const { return mu_p_cm2_Vs * thermal_voltage(); }

  // eps0*eps*kT/e^2 in cm^-1*cm^3: lambda^2 = this / density.
  double debye_scale_cm() const {
    return constants::kVacuumPermittivity_F_per_cm * epsilon_r * thermal_voltage() /
           constants::kElementaryCharge_C;
  }
  double debye_length_cm(double density_cm3) const {
    return std::sqrt(debye_scale_cm() / density_cm3);
  }
  double debye_majority_cm() const {
    return debye_length_cm(doping == DopingType::acceptor ? p_b() : n_b());
  }
  double debye_intrinsic_cm() const { return debye_length_cm(ni_cm3); }

  // Dielectric relaxation time eps0*eps/sigma with the equilibrium conductivity.
  double dielectric_relaxation_s() const {
    const double sigma = constants::kElementaryCharge_C *
                         (n_b() * mu_n_cm2_Vs + p_b() * mu_p_cm2_Vs);
    return constants::kVacuumPermittivity_F_per_cm * epsilon_r / sigma;
  }

  void validate() const {
    if (!(ni_cm3 > 0.0)) throw std::invalid_argument("material: ni must be > 0");
    if (doping_cm3 < 0.0) throw std::invalid_argument("material: doping must be >= 0");
    if (!(mu_n_cm2_Vs > 0.0) || !(mu_p_cm2_Vs > 0.0))
      throw std::invalid_argument("material: mobilities must be > 0");
    if (!(epsilon_r >= 1.0)) throw std::invalid_argument("material: epsilon_r must be >= 1");
    if (!(temperature_K > 0.0)) throw std::invalid_argument("material: temperature must be > 0");
    if (!(v_th_cm_s > 0.0)) throw std::invalid_argument("material: v_th must be > 0");
  }
};

// Midgap bulk recombination center (single level, per-volume).
struct BulkTrap {
  double N_t_cm3 = 1.0e12;       // trap density
  double sigma_n_cm2 = 1.0e-14;  // electron capture cross-section
  double sigma_p_cm2 = 1.0e-14;  // hole capture cross-section
  double E_t_eV = 0.0;           // level relative to midgap, +up

  double tau_n0_s(const BulkMaterial& m) const {
    return 1.0 / (sigma_n_cm2 * N_t_cm3 * m.v_th_cm_s);
  }
  double tau_p0_s(const BulkMaterial& m) const {
    return 1.0 / (sigma_p_cm2 * N_t_cm3 * m.v_th_cm_s);
  }
  // Shockley-Read emission reference densities.
  double n1_cm3(const BulkMaterial& m) const {
    return m.ni_cm3 * clamped_exp(E_t_eV / m.thermal_voltage());
  }
  double p1_cm3(const BulkMaterial& m) const {
    return m.ni_cm3 * clamped_exp(-E_t_eV / m.thermal_voltage());
  }

  void validate() const {
    if (N_t_cm3 < 0.0) throw std::invalid_argument("trap: density must be >= 0");
    if (!(sigma_n_cm2 > 0.0) || !(sigma_p_cm2 > 0.0))
      throw std::invalid_argument("trap: cross-sections must be > 0");
  }
};

// Net bulk recombination rate (single-level statistics), cm^-3 s^-1.
inline double bulk_recombination(const BulkMaterial& m, const BulkTrap& t, double n, double p) {
  const double tau_n0 = t.tau_n0_s(m);
  const double tau_p0 = t.tau_p0_s(m);
  const double denom = tau_n0 * (p + t.p1_cm3(m)) + tau_p0 * (n + t.n1_cm3(m));
  return (n * p - m.ni_cm3 * m.ni_cm3) / denom;
}

// Effective linear-response lifetime of the same trap at equilibrium:
// R = (n_b dp + p_b dn)/(ni tau_eff) reproduces the linearized rate.
inline double effective_lifetime_s(const BulkMaterial& m, const BulkTrap& t) {
  const double denom = t.tau_n0_s(m) * (m.p_b() + t.p1_cm3(m)) +
                       t.tau_p0_s(m) * (m.n_b() + t.n1_cm3(m));
  return denom / m.ni_cm3;
}

struct Illumination {
  double wavelength_nm = 1055.0;
  double flux_cm2_s = 0.0;       // photon flux N0
  double alpha_bulk_cm1 = 0.0;   // band-to-band absorption coefficient

  void validate() const {
    if (!(wavelength_nm > 0.0)) throw std::invalid_argument("illumination: wavelength must be > 0");
    if (flux_cm2_s < 0.0) throw std::invalid_argument("illumination: flux must be >= 0");
    if (alpha_bulk_cm1 < 0.0) throw std::invalid_argument("illumination: alpha must be >= 0");
  }
};

struct SlabGeometry {
  double length_cm = 0.05;       // slab thickness l
  int nodes = 401;               // mesh nodes including both boundaries
  double first_cell_fraction = 0.05;  // first cell as a fraction of the majority Debye length

  void validate() const {
    if (!(length_cm > 0.0)) throw std::invalid_argument("geometry: length must be > 0");
    if (nodes < 16) throw std::invalid_argument("geometry: need at least 16 nodes");
    if (!(first_cell_fraction > 0.0) || first_cell_fraction > 1.0)
      throw std::invalid_argument("geometry: first_cell_fraction must be in (0, 1]");
  }
};

}  // namespace spvion
