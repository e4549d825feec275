#pragma once

// Paul-trap drive parameters, the transient stray-field force seen by the
// ion after photo-charging turns on, and the coherent displacement
// amplitude alpha(t) of the driven secular mode.
//
// To lowest order in the Mathieu expansion the rf drive enters only as a
// time-dependent weighting of the applied force,
//   f_rf(t) = (1 + (q_x/2) cos(omega_rf t)) / (1 + q_x/2),
// and the mode amplitude obeys
//   alpha(t) = e^{-i w t} alpha(0)
//            + (i/hbar) \int_0^t dt' e^{-i w (t-t')} f_rf(t') x0 F(t').

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "spvion/constants.hpp"

namespace spvion {

struct TrapDrive {
  double omega_rf_rad_s = 2.0 * std::numbers::pi * 22.21e6;  // rf drive angular frequency
  double omega_x_rad_s = 2.0 * std::numbers::pi * 1.6e6;     // radial secular frequency
  double q_x = 0.2;                              // Mathieu drive parameter
  double a_x = 0.0;                              // static Mathieu parameter

  void validate() const {
    if (!(omega_rf_rad_s > 0.0))
      throw std::invalid_argument("trap drive: omega_rf must be > 0");
    if (!(omega_x_rad_s > 0.0))
      throw std::invalid_argument("trap drive: omega_x must be > 0");
    if (!(omega_x_rad_s < omega_rf_rad_s))
      throw std::invalid_argument("trap drive: secular frequency must lie below the rf drive");
    if (!(q_x >= 0.0 && q_x < 1.0))
      throw std::invalid_argument("trap drive: q_x must be in [0, 1)");
  }

  // The lowest-order secular treatment used throughout assumes small
  // Mathieu parameters; callers should warn the user outside this range.
  bool lowest_order_valid() const { return q_x <= 0.4 && std::abs(a_x) <= 0.1; }
};

// Rf weighting of an applied force, normalized to 1 at the rf crest.
inline double mathieu_factor(double t_s, const TrapDrive& drive) {
  return (1.0 + 0.5 * drive.q_x * std::cos(drive.omega_rf_rad_s * t_s)) /
         (1.0 + 0.5 * drive.q_x);
}

// Stray field charging transient plus static compensation offset.
// t = 0 is the start of the interrogation; the surface has already been
// charging for t_pre.
struct StrayFieldProfile {
  double E_str_V_m = 0.0;   // steady-state stray field at the ion
  double E_com_V_m = 0.0;   // applied compensation field
  double tau_str_s = 6e-6;  // charging time constant
  double t_pre_s = 0.0;     // charging time elapsed before interrogation

  void validate() const {
    if (!(tau_str_s > 0.0))
      throw std::invalid_argument("stray field: tau_str must be > 0");
    if (t_pre_s < 0.0)
      throw std::invalid_argument("stray field: t_pre must be >= 0");
  }
};

// Net force on the ion in newtons:
//   F(t) = e * (E_str (1 - e^{-(t_pre+t)/tau}) - E_com)
inline double force_profile(double t_s, const StrayFieldProfile& field) {
  const double charged =
      field.E_str_V_m * (1.0 - std::exp(-(field.t_pre_s + t_s) / field.tau_str_s));
  return constants::kElementaryCharge_C * (charged - field.E_com_V_m);
}

// Advances alpha(t) on the same fixed grid as the master-equation stepper,
// one Simpson panel per call: with g(t) = f_rf(t) x0 F(t) / hbar,
//   alpha(t+h) = e^{-i w h} alpha(t)
//              + (i h/6) [e^{-i w h} g(t) + 4 e^{-i w h/2} g(t+h/2) + g(t+h)].
// Each panel is O(h^5), so the quadrature never limits the stepper accuracy.
class DisplacementTracker {
 public:
  DisplacementTracker(const StrayFieldProfile& field, const TrapDrive& drive,
                      double x0_m, std::complex<double> alpha0 = {0.0, 0.0})
      : field_(field), drive_(drive), x0_m_(x0_m), alpha_(alpha0) {
    field_.validate();
    drive_.validate();
    if (!(x0_m > 0.0))
      throw std::invalid_argument("displacement tracker: x0 must be > 0");
  }

  void advance(double dt_s) {
    if (!(dt_s > 0.0))
      throw std::invalid_argument("displacement tracker: dt must be > 0");
    const double w = drive_.omega_x_rad_s;
    const std::complex<double> ph_full = std::polar(1.0, -w * dt_s);
    const std::complex<double> ph_half = std::polar(1.0, -w * dt_s / 2.0);
    const double g0 = drive_term(t_s_);
    const double g1 = drive_term(t_s_ + dt_s / 2.0);
    const double g2 = drive_term(t_s_ + dt_s);
    const std::complex<double> integral =
        (dt_s / 6.0) * (ph_full * g0 + 4.0 * ph_half * g1 + g2);
    alpha_ = ph_full * alpha_ + std::complex<double>(0.0, 1.0) * integral;
    t_s_ += dt_s;
  }

  std::complex<double> alpha() const { return alpha_; }
  double time_s() const { return t_s_; }

  // Coherent-part displacement <x> = 2 x0 Re alpha.
  double displacement_m() const { return 2.0 * x0_m_ * alpha_.real(); }

  // d<x>/dt; the drive term is real, so only the rotation moves Re alpha.
  double velocity_m_s() const {
    return 2.0 * x0_m_ * drive_.omega_x_rad_s * alpha_.imag();
  }

 private:
  double drive_term(double t_s) const {
    return mathieu_factor(t_s, drive_) * x0_m_ * force_profile(t_s, field_) /
           constants::kHbar_Js;
  }

  StrayFieldProfile field_;
  TrapDrive drive_;
  double x0_m_;
  std::complex<double> alpha_;
  double t_s_ = 0.0;
};

}  // namespace spvion
