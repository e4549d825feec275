#pragma once

#include <cmath>
#include <stdexcept>

#include "spvion/material.hpp"

// Interface ("fast") surface states: a single-level Shockley-Read-Hall trap
// sheet at x = 0 that exchanges carriers with the bulk by capture/emission
// and, under illumination, by direct photoionization into the conduction
// band.  The sheet's occupation sets part of the surface charge, so it feeds
// back into the electrostatic boundary condition.

namespace spvion {

enum class StatePolarity { donor, acceptor };

struct InterfaceState {
  double Sigma_fs_cm2 = 0.0;        // state density
  double sigma_nc_cm2 = 6.48e-24;   // electron capture cross-section
  double sigma_pc_cm2 = 6.48e-24;   // hole capture cross-section
  double E_fs_eV = -0.39;           // level relative to midgap, +up
  StatePolarity polarity = StatePolarity::donor;

  // Surface recombination velocities, cm/s.
  double s_n0(const BulkMaterial& m) const { return sigma_nc_cm2 * Sigma_fs_cm2 * m.v_th_cm_s; }
  double s_p0(const BulkMaterial& m) const { return sigma_pc_cm2 * Sigma_fs_cm2 * m.v_th_cm_s; }

  // Emission reference densities of the level, cm^-3.
  double n1s(const BulkMaterial& m) const {
    return m.ni_cm3 * clamped_exp(E_fs_eV / m.thermal_voltage());
  }
  double p1s(const BulkMaterial& m) const {
    return m.ni_cm3 * clamped_exp(-E_fs_eV / m.thermal_voltage());
  }

  // Surface photoemission fluxes per unit occupation, cm^-2 s^-1:
  // n_o = sigma_n_opt * Sigma_fs * N0 (and the hole counterpart).
  double n_o(double sigma_n_opt_cm2, double flux_cm2s) const {
    return sigma_n_opt_cm2 * Sigma_fs_cm2 * flux_cm2s;
  }
  double p_o(double sigma_p_opt_cm2, double flux_cm2s) const {
    return sigma_p_opt_cm2 * Sigma_fs_cm2 * flux_cm2s;
  }

  void validate() const {
    if (Sigma_fs_cm2 < 0.0) throw std::invalid_argument("interface state: density must be >= 0");
    if (!(sigma_nc_cm2 > 0.0) || !(sigma_pc_cm2 > 0.0))
      throw std::invalid_argument("interface state: capture cross-sections must be > 0");
  }
};

// Trap sheet charge in units of e per cm^2.  A donor state is positive when
// empty of electrons; an acceptor is negative when occupied.
inline double interface_charge_e_cm2(const InterfaceState& s, double f) {
  return s.polarity == StatePolarity::donor ? (1.0 - f) * s.Sigma_fs_cm2
                                            : -f * s.Sigma_fs_cm2;
}

// Electron occupation of the level in thermal equilibrium: the Fermi factor,
// expressed through the surface electron density.
inline double equilibrium_occupation(const InterfaceState& s, const BulkMaterial& m,
                                     double n_surface) {
  return n_surface / (n_surface + s.n1s(m));
}

// Quasi-steady kinetics of the trap sheet for given boundary densities n, p
// and photoemission fluxes n_o, p_o.  f_bar solves df/dt = 0; U_s is the
// common electron/hole net flux into the sheet at that occupation.  The
// partial derivatives feed the Newton assembly of the transport solver.
struct SurfaceKinetics {
  double f_bar = 0.0;
  double U_s = 0.0;       // cm^-2 s^-1, positive when carriers recombine
  double n1_star = 0.0;   // photoemission-shifted references, cm^-3
  double p1_star = 0.0;
  double df_dn = 0.0, df_dp = 0.0;
  double dUs_dn = 0.0, dUs_dp = 0.0;  // cm/s
};

inline SurfaceKinetics surface_kinetics(const InterfaceState& s, const BulkMaterial& m,
                                        double n, double p, double n_o, double p_o) {
  SurfaceKinetics k;
  if (s.Sigma_fs_cm2 == 0.0) return k;
  const double sn = s.s_n0(m), sp = s.s_p0(m);
  k.n1_star = s.n1s(m) + n_o / sn;
  k.p1_star = s.p1s(m) + p_o / sp;
  const double D = (n + k.n1_star) / sp + (p + k.p1_star) / sn;
  k.f_bar = (n / sp + k.p1_star / sn) / D;
  k.U_s = (n * p - k.n1_star * k.p1_star) / D;
  k.df_dn = (1.0 - k.f_bar) / (sp * D);
  k.df_dp = -k.f_bar / (sn * D);
  k.dUs_dn = (p - k.U_s / sp) / D;
  k.dUs_dp = (n - k.U_s / sn) / D;
  return k;
}

// Net electron and hole capture fluxes at occupation f (not necessarily the
// steady one).  Their difference drives the occupation:
//   Sigma_fs df/dt = U_n(f) - U_p(f).
inline double electron_capture_flux(const InterfaceState& s, const BulkMaterial& m, double n,
                                    double f, double n_o) {
  const double sn = s.s_n0(m);
  return sn * n * (1.0 - f) - (sn * s.n1s(m) + n_o) * f;
}
inline double hole_capture_flux(const InterfaceState& s, const BulkMaterial& m, double p,
                                double f, double p_o) {
  const double sp = s.s_p0(m);
  return sp * p * f - (sp * s.p1s(m) + p_o) * (1.0 - f);
}

// Electrostatic boundary conditions.  u is the potential in thermal units and
// x points into the bulk, so a positive total surface charge Q (units e/cm^2)
// bends the bands down with du/dx|_0 = -Q / (eps0 eps kT / e^2).
inline double equilibrium_boundary_gradient(const BulkMaterial& m, double Sigma_ss_e_cm2,
                                            const InterfaceState& s, double f) {
  const double Q = Sigma_ss_e_cm2 + interface_charge_e_cm2(s, f);
  return -Q / m.debye_scale_cm();
}

// Gradient of the excess potential at the illuminated face.  The interface
// charge perturbation is -Sigma_fs df for either polarity, hence the sign
// flip relative to the equilibrium form.
inline double excess_boundary_gradient(const BulkMaterial& m, const InterfaceState& s,
                                       double delta_f) {
  return s.Sigma_fs_cm2 * delta_f / m.debye_scale_cm();
}

// Excess-potential gradient at the far face x = l: what remains of the
// interface charge after subtracting the integrated excess bulk charge.
// Global neutrality makes this vanish; it is the solver's health metric.
inline double far_boundary_gradient(const BulkMaterial& m, const InterfaceState& s,
                                    double delta_f, double integral_dp_minus_dn_cm2) {
  return (s.Sigma_fs_cm2 * delta_f - integral_dp_minus_dn_cm2) / m.debye_scale_cm();
}

}  // namespace spvion
