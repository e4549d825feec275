#pragma once

// Physical constants (CODATA 2018) in the unit system used throughout the
// semiconductor modules: lengths in cm, densities in cm^-3, energies in eV,
// electrostatic potential in V, time in s.  The trapped-ion modules switch to
// SI and say so locally.

namespace spvion {
namespace constants {

inline constexpr double kElementaryCharge_C = 1.602176634e-19;
inline constexpr double kBoltzmann_eV_per_K = 8.617333262e-5;
inline constexpr double kVacuumPermittivity_F_per_m = 8.8541878128e-12;
inline constexpr double kVacuumPermittivity_F_per_cm = 8.8541878128e-14;
inline constexpr double kElectronMass_kg = 9.1093837015e-31;
inline constexpr double kAtomicMassUnit_kg = 1.66053906660e-27;
inline constexpr double kHbar_Js = 1.054571817e-34;
inline constexpr double kPlanck_eV_s = 4.135667696e-15;
inline constexpr double kSpeedOfLight_m_per_s = 2.99792458e8;

// h*c expressed in eV*nm: photon energy = kPhotonEnergyScale_eV_nm / lambda_nm.
inline constexpr double kPhotonEnergyScale_eV_nm = 1239.841984;

// Coulomb coupling e^2/(4*pi*eps0) in eV*cm, for screened-impurity potentials.
inline constexpr double kCoulomb_eV_cm = 1.4399645478e-7;

// e/eps0 in V*cm: converts an areal charge density [e/cm^2] into a field
// discontinuity [V/cm].
inline constexpr double kFieldPerArealCharge_V_cm = kElementaryCharge_C / kVacuumPermittivity_F_per_cm;

inline constexpr double kRoomTemperature_K = 300.0;

}  // namespace constants

// kT/e in volts.
inline constexpr double thermal_voltage_V(double temperature_K) {
  return constants::kBoltzmann_eV_per_K * temperature_K;
}

// Photon energy in eV for a vacuum wavelength in nm.
inline constexpr double photon_energy_eV(double wavelength_nm) {
  return constants::kPhotonEnergyScale_eV_nm / wavelength_nm;
}

}  // namespace spvion
