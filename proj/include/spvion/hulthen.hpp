#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spvion/constants.hpp"

// Photoionization of a shallow screened-Coulomb (Hulthen) defect: bound-state
// wavefunction and the dipole photoionization cross-section into the
// conduction band.  The screening length a and strength lambda control how
// sharply the spectrum drops away from the ionization threshold, which is
// what distinguishes a shallow defect from the flat quantum-defect response.

namespace spvion {

struct HulthenDefect {
  double a_cm = 6.4e-8;        // screening length
  double lambda = 0.64;        // screening strength, in (0, 2)
  double E_io_eV = 0.95;       // ionization energy to the band edge
  double m_eff_ratio = 0.26;   // optically excited carrier mass, m*/m0
  double field_ratio = 2.0;    // effective-field enhancement E_eff/E0
  double refractive_index = 4.0;
  double epsilon_r = 11.7;

  void validate() const {
    if (!(a_cm > 0.0)) throw std::invalid_argument("hulthen: screening length must be > 0");
    if (!(lambda > 0.0) || !(lambda < 2.0))
      throw std::invalid_argument("hulthen: lambda must lie in (0, 2)");
    if (!(E_io_eV > 0.0)) throw std::invalid_argument("hulthen: ionization energy must be > 0");
    if (!(m_eff_ratio > 0.0)) throw std::invalid_argument("hulthen: effective mass must be > 0");
  }
};

// Screened attractive potential in eV at radius x.
inline double hulthen_potential_eV(const HulthenDefect& d, double x_cm) {
  const double t = std::exp(-d.lambda * x_cm / d.a_cm);
  return -(constants::kCoulomb_eV_cm / d.epsilon_r) * (d.lambda / d.a_cm) * t / (1.0 - t);
}

// Normalized ground-state wavefunction, cm^-3/2.  The radial factor
// exp(-x/a) sinh-like pair carries the screening exponent lambda/2a; with
// that pairing the printed normalization constant is exact for every lambda.
inline double hulthen_ground_state(const HulthenDefect& d, double x_cm) {
  const double a = d.a_cm, l = d.lambda;
  const double norm = std::sqrt((4.0 - l * l) / (4.0 * std::numbers::pi * l * l * a));
  if (x_cm <= 0.0) return norm * l / a;  // finite x -> 0 limit
  const double u = std::exp(-x_cm / a) * 2.0 * std::sinh(0.5 * l * x_cm / a);
  return norm * u / x_cm;
}

// 2 m* E_io / hbar^2 in cm^-2: the squared wavenumber scale of the ionized
// electron at threshold.
inline double hulthen_c_cm2(const HulthenDefect& d) {
  const double m = d.m_eff_ratio * constants::kElectronMass_kg;
  const double E = d.E_io_eV * constants::kElementaryCharge_C;
  return 2.0 * m * E / (constants::kHbar_Js * constants::kHbar_Js) * 1e-4;
}

// Dipole photoionization cross-section in cm^2; zero below threshold.
inline double photoionization_cross_section_cm2(const HulthenDefect& d, double hw_eV) {
  if (hw_eV <= d.E_io_eV) return 0.0;
  const double x = hw_eV / d.E_io_eV - 1.0;  // excess energy in threshold units
  const double ca2 = hulthen_c_cm2(d) * d.a_cm * d.a_cm;
  const double fine = 7.2973525693e-3;
  const double pre = (d.field_ratio * d.field_ratio * d.refractive_index / d.epsilon_r) *
                     (16.0 * std::numbers::pi * fine / 3.0) * (hw_eV / d.E_io_eV) *
                     std::pow(x, 1.5);
  const double body = d.a_cm * d.a_cm * std::pow(ca2, 2.5) * (4.0 - d.lambda * d.lambda) /
                      (d.lambda * d.lambda);
  const double lo = (1.0 - 0.5 * d.lambda) * (1.0 - 0.5 * d.lambda) + ca2 * x;
  const double hi = (1.0 + 0.5 * d.lambda) * (1.0 + 0.5 * d.lambda) + ca2 * x;
  const double bracket = 1.0 / (lo * lo) - 1.0 / (hi * hi);
  return pre * body * bracket * bracket;
}

struct SpectrumPoint {
  double hw_eV = 0.0;
  double sigma_cm2 = 0.0;
  double sigma_rel = 0.0;  // normalized to the grid peak
};

struct Spectrum {
  std::vector<SpectrumPoint> points;
  double peak_hw_eV = 0.0;
  double peak_sigma_cm2 = 0.0;
};

// Cross-section sampled on a photon-energy grid and normalized to its peak.
inline Spectrum photoionization_spectrum(const HulthenDefect& d, const std::vector<double>& hw_grid) {
  Spectrum sp;
  sp.points.reserve(hw_grid.size());
  for (double hw : hw_grid) {
    SpectrumPoint pt;
    pt.hw_eV = hw;
    pt.sigma_cm2 = photoionization_cross_section_cm2(d, hw);
    if (pt.sigma_cm2 > sp.peak_sigma_cm2) {
      sp.peak_sigma_cm2 = pt.sigma_cm2;
      sp.peak_hw_eV = hw;
    }
    sp.points.push_back(pt);
  }
  if (sp.peak_sigma_cm2 > 0.0)
    for (auto& pt : sp.points) pt.sigma_rel = pt.sigma_cm2 / sp.peak_sigma_cm2;
  return sp;
}

}  // namespace spvion
