#pragma once

// Response of the trapped ion to a charged chip surface, in SI units (the
// semiconductor modules work in cm/eV; the handoff is a single voltage).
// The chip electrostatics are condensed into two transfer ratios obtained
// from a finite-element solve of the electrode/substrate stack: fields at the
// ion position per volt on the exposed silicon surface and per volt on the
// inner dc electrode pair.  Everything downstream of those ratios is linear.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "constants.hpp"

namespace spvion {

struct ElectrostaticMap {
  double field_per_surface_volt = 1055.0;  // ion field per surface volt [V/m/V]
  double field_per_dc_volt = 2880.0;       // ion field per dc-pair volt [V/m/V]

  // Compensation-voltage-to-surface-voltage magnification.
  double ratio() const { return field_per_dc_volt / field_per_surface_volt; }

  void validate() const {
    if (!(field_per_surface_volt > 0.0) || !(field_per_dc_volt > 0.0))
      throw std::invalid_argument("electrostatic map: transfer ratios must be positive");
  }
};

// Secular motion along the axis normal to the chip, where the stray field
// both pushes and modulates the ion.
struct TrapMechanics {
  double ion_mass_kg = 171.0 * constants::kAtomicMassUnit_kg;
  double secular_frequency_rad_s = 2.0 * std::numbers::pi * 1.6e6;
  // Momentum transfer of the counter-propagating 355 nm Raman pair.
  double effective_wavevector_m1 = 2.0 * (2.0 * std::numbers::pi / 355.0e-9);

  // Zero-point width sqrt(hbar / 2 M omega), recomputed so it can never go
  // stale against the mass and frequency.
  double ground_state_size_m() const {
    return std::sqrt(constants::kHbar_Js /
                     (2.0 * ion_mass_kg * secular_frequency_rad_s));
  }

  void validate() const {
    if (!(ion_mass_kg > 0.0)) throw std::invalid_argument("trap: ion mass must be positive");
    if (!(secular_frequency_rad_s > 0.0))
      throw std::invalid_argument("trap: secular frequency must be positive");
    if (!(effective_wavevector_m1 > 0.0))
      throw std::invalid_argument("trap: effective wavevector must be positive");
  }
};

// Stray field at the ion produced by a surface voltage.
inline double spv_to_field(double surface_V, const ElectrostaticMap& map = {}) {
  return surface_V * map.field_per_surface_volt;
}

// Voltage on the dc pair that nulls a stray field at the ion; a positive
// surface voltage therefore needs a negative compensation voltage.
inline double field_to_compensation_voltage(double field_V_m,
                                            const ElectrostaticMap& map = {}) {
  return -field_V_m / map.field_per_dc_volt;
}

// Static displacement of the secular oscillator, x = eE / (M omega^2).
inline double field_to_displacement(double field_V_m, const TrapMechanics& mech = {}) {
  mech.validate();
  return constants::kElementaryCharge_C * field_V_m /
         (mech.ion_mass_kg * mech.secular_frequency_rad_s * mech.secular_frequency_rad_s);
}

// First-order Doppler shift of the beatnote, collinear projection applied.
inline double doppler_shift_Hz(double delta_k_m1, double velocity_m_s) {
  return delta_k_m1 * velocity_m_s / (2.0 * std::numbers::pi);
}

inline double velocity_from_shift_m_s(double delta_k_m1, double shift_Hz) {
  if (!(delta_k_m1 > 0.0))
    throw std::invalid_argument("velocity_from_shift: wavevector must be positive");
  return 2.0 * std::numbers::pi * shift_Hz / delta_k_m1;
}

// Lamb-Dicke factor of the drive, eta = dk * x0.
inline double lamb_dicke(const TrapMechanics& mech = {}) {
  mech.validate();
  return mech.effective_wavevector_m1 * mech.ground_state_size_m();
}

}  // namespace spvion
