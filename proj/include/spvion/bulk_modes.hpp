#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "spvion/errors.hpp"
#include "spvion/material.hpp"

// Closed-form linear-response theory of an illuminated, insulated
// semiconductor slab: the coupled ambipolar equations for the excess carrier
// pair (dn, dp) reduce to two decoupled spatial eigenmodes with decay lengths
// r+/r- and two temporal eigenmodes with rates gamma+/gamma-.  The fast mode
// is majority-carrier screening (dielectric relaxation); the slow mode is
// quasi-neutral minority diffusion/recombination.  Everything here is the
// small-signal limit and serves as the analytic cross-check for the full
// drift-diffusion solver.

namespace spvion {

// cosh(a)/sinh(L) for 0 <= a <= L, safe against overflow for L ~ 1e3+.
inline double cosh_over_sinh(double a, double L) {
  return std::exp(a - L) * (1.0 + std::exp(-2.0 * a)) / (-std::expm1(-2.0 * L));
}
// sinh(a)/sinh(L) under the same conditions.
inline double sinh_over_sinh(double a, double L) {
  return std::exp(a - L) * (-std::expm1(-2.0 * a)) / (-std::expm1(-2.0 * L));
}

// Inverse-square length parameters of the linearized system
//   dn'' - dn/S_n^2 + dp/K_n^2 = -G/D_n
//   dp'' - dp/S_p^2 + dn/K_p^2 = -G/D_p
// Screening enters through the carrier Debye lengths, recombination through
// the minority-weighted diffusion lengths l'^2 = D tau_eff ni/(opposite
// equilibrium density).
struct LengthParams {
  double inv_Sn2 = 0.0, inv_Sp2 = 0.0;  // self-coupling, cm^-2
  double inv_Kn2 = 0.0, inv_Kp2 = 0.0;  // cross-coupling, cm^-2
  double D_n = 0.0, D_p = 0.0;          // cm^2/s
  double lambda_n = 0.0, lambda_p = 0.0;  // per-carrier Debye lengths, cm
  double lprime_n = 0.0, lprime_p = 0.0;  // recombination lengths, cm
};

inline LengthParams length_params(const BulkMaterial& m, double tau_eff_s) {
  if (!(tau_eff_s > 0.0)) throw SolverError("length_params: tau_eff must be > 0");
  LengthParams lp;
  lp.D_n = m.D_n_cm2_s();
  lp.D_p = m.D_p_cm2_s();
  const double nb = m.n_b(), pb = m.p_b(), ni = m.ni_cm3;
  lp.lambda_n = m.debye_length_cm(nb);
  lp.lambda_p = m.debye_length_cm(pb);
  lp.lprime_n = std::sqrt(lp.D_n * tau_eff_s * ni / pb);
  lp.lprime_p = std::sqrt(lp.D_p * tau_eff_s * ni / nb);
  lp.inv_Sn2 = 1.0 / (lp.lambda_n * lp.lambda_n) + 1.0 / (lp.lprime_n * lp.lprime_n);
  lp.inv_Sp2 = 1.0 / (lp.lambda_p * lp.lambda_p) + 1.0 / (lp.lprime_p * lp.lprime_p);
  // Cross terms: screening attracts the partner carrier, recombination sinks it.
  lp.inv_Kn2 = 1.0 / (lp.lambda_n * lp.lambda_n) - nb / (ni * lp.D_n * tau_eff_s);
  lp.inv_Kp2 = 1.0 / (lp.lambda_p * lp.lambda_p) - pb / (ni * lp.D_p * tau_eff_s);
  return lp;
}

struct SpatialModes {
  double xi_plus = 0.0, xi_minus = 0.0;  // eigenvalues of the length matrix, cm^-2
  double r_plus = 0.0, r_minus = 0.0;    // decay lengths 1/sqrt(xi), cm
  std::array<double, 2> v_plus{};        // (dn, dp) composition of the fast mode
  std::array<double, 2> v_minus{};       // composition of the slow mode
};

namespace detail {

// Eigenvector of [[a,-b],[-c,d]] for eigenvalue xi, taken from the better-
// conditioned row and normalized so the largest component is +1.
inline std::array<double, 2> mode_vector(double a, double b, double c, double d, double xi) {
  std::array<double, 2> v{};
  if (std::abs(a - xi) >= std::abs(d - xi)) {
    v = {b, a - xi};  // row 1: (a-xi) x = b y
  } else {
    v = {d - xi, c};  // row 2: (d-xi) y = c x
  }
  const double pivot = std::abs(v[0]) >= std::abs(v[1]) ? v[0] : v[1];
  if (pivot == 0.0) throw SolverError("spatial_modes: degenerate eigenvector");
  return {v[0] / pivot, v[1] / pivot};
}

}  // namespace detail

namespace detail {

// (x - y)^2 + cross, clamped to zero when a negative value is pure roundoff
// from the cancellation of the two terms.
inline double guarded_discriminant(double x, double y, double cross, const char* what) {
  double disc = (x - y) * (x - y) + cross;
  const double scale = (x - y) * (x - y) + std::abs(cross);
  if (disc < 0.0) {
    if (-disc <= 1e-9 * scale) return 0.0;
    throw SolverError(what);
  }
  return disc;
}

}  // namespace detail

inline SpatialModes spatial_modes(const LengthParams& lp) {
  const double a = lp.inv_Sn2, b = lp.inv_Kn2, c = lp.inv_Kp2, d = lp.inv_Sp2;
  const double disc = detail::guarded_discriminant(
      a, d, 4.0 * b * c, "spatial_modes: complex decay lengths (cross-coupling exceeds damping)");
  SpatialModes sm;
  sm.xi_plus = 0.5 * ((a + d) + std::sqrt(disc));
  // Small root via the determinant to avoid cancellation.
  sm.xi_minus = (a * d - b * c) / sm.xi_plus;
  if (!(sm.xi_plus > 0.0) || !(sm.xi_minus > 0.0))
    throw SolverError("spatial_modes: non-positive mode eigenvalue");
  sm.r_plus = 1.0 / std::sqrt(sm.xi_plus);
  sm.r_minus = 1.0 / std::sqrt(sm.xi_minus);
  sm.v_plus = detail::mode_vector(a, b, c, d, sm.xi_plus);
  sm.v_minus = detail::mode_vector(a, b, c, d, sm.xi_minus);
  return sm;
}

struct TemporalModes {
  double gamma_plus = 0.0, gamma_minus = 0.0;  // decay rates, 1/s
  double tau_plus() const { return 1.0 / gamma_plus; }
  double tau_minus() const { return 1.0 / gamma_minus; }
};

// Uniform-mode relaxation rates.  gamma+ is dielectric relaxation
// (ep mu / eps0 eps for an extrinsic material), gamma- the recombination-
// limited mode; in the insulator limit both carriers decay together and
// gamma+ -> 2/tau_eff.
inline TemporalModes temporal_modes(const LengthParams& lp) {
  const double gn = lp.D_n * lp.inv_Sn2, gp = lp.D_p * lp.inv_Sp2;
  const double cross = 4.0 * lp.D_n * lp.D_p * lp.inv_Kn2 * lp.inv_Kp2;
  const double disc = detail::guarded_discriminant(
      gn, gp, cross, "temporal_modes: complex relaxation rates (oscillatory regime)");
  TemporalModes tm;
  tm.gamma_plus = 0.5 * ((gn + gp) + std::sqrt(disc));
  const double det = lp.D_n * lp.D_p * (lp.inv_Sn2 * lp.inv_Sp2 - lp.inv_Kn2 * lp.inv_Kp2);
  tm.gamma_minus = det / tm.gamma_plus;
  if (!(tm.gamma_plus > 0.0) || !(tm.gamma_minus > 0.0))
    throw SolverError("temporal_modes: non-positive relaxation rate");
  return tm;
}

// Relaxation rates of the m-th insulated-slab harmonic (cos(m pi x / l)):
// the spatial frequency stiffens both self-couplings.
inline TemporalModes slab_harmonic_modes(const LengthParams& lp, double l_cm, int m) {
  if (!(l_cm > 0.0)) throw SolverError("slab_harmonic_modes: slab length must be > 0");
  if (m < 0) throw SolverError("slab_harmonic_modes: harmonic index must be >= 0");
  const double k = static_cast<double>(m) * std::numbers::pi / l_cm;
  LengthParams stiff = lp;
  stiff.inv_Sn2 += k * k;
  stiff.inv_Sp2 += k * k;
  return temporal_modes(stiff);
}

// Steady illuminated profile of the insulated slab: generation N0 alpha
// exp(-alpha x), zero carrier flux through both faces.  Solved by projecting
// the particular solution onto the two spatial eigenmodes; each mode then
// satisfies its flux-free boundary pair independently.
class StationaryProfile {
 public:
  StationaryProfile(const LengthParams& lp, double alpha_cm1, double flux_cm2s, double l_cm)
      : alpha_(alpha_cm1), l_(l_cm), modes_(spatial_modes(lp)) {
    if (!(alpha_cm1 > 0.0)) throw SolverError("stationary_profile: alpha must be > 0");
    if (!(l_cm > 0.0)) throw SolverError("stationary_profile: slab length must be > 0");
    const double a = lp.inv_Sn2, b = lp.inv_Kn2, c = lp.inv_Kp2, d = lp.inv_Sp2;
    const double a2 = alpha_cm1 * alpha_cm1;
    // (a - a2)(d - a2) - bc factors over the mode eigenvalues; evaluating it
    // that way keeps the resonance test free of cancellation.
    if (std::abs(a2 - modes_.xi_plus) <= 1e-9 * modes_.xi_plus ||
        std::abs(a2 - modes_.xi_minus) <= 1e-9 * modes_.xi_minus)
      throw SolverError("stationary_profile: absorption depth resonant with a spatial mode");
    const double delta = (a2 - modes_.xi_plus) * (a2 - modes_.xi_minus);
    // Particular solution (C_n, C_p) e^{-alpha x}.
    const double Y = flux_cm2s * alpha_cm1 / delta;
    C_n_ = Y / (lp.D_n * lp.D_p) * (lp.D_n * b + (d - a2) * lp.D_p);
    C_p_ = Y / (lp.D_n * lp.D_p) * ((a - a2) * lp.D_n + lp.D_p * c);
    // Mode amplitudes from (C_n, C_p) = c+ v+ + c- v-.
    const double v1 = modes_.v_plus[0], v2 = modes_.v_plus[1];
    const double u1 = modes_.v_minus[0], u2 = modes_.v_minus[1];
    const double W = v1 * u2 - v2 * u1;
    if (W == 0.0) throw SolverError("stationary_profile: degenerate mode basis");
    c_plus_ = (C_n_ * u2 - C_p_ * u1) / W;
    c_minus_ = (v1 * C_p_ - v2 * C_n_) / W;
  }

  double dn(double x) const { return mode_sum(x, 0); }
  double dp(double x) const { return mode_sum(x, 1); }
  // First and second derivatives, for flux checks and residual tests.
  double dn_x(double x) const { return mode_sum_x(x, 0); }
  double dp_x(double x) const { return mode_sum_x(x, 1); }
  double dn_xx(double x) const { return mode_sum_xx(x, 0); }
  double dp_xx(double x) const { return mode_sum_xx(x, 1); }

  double generation(double x) const { return alpha_ * std::exp(-alpha_ * x); }

  const SpatialModes& modes() const { return modes_; }
  double particular_n() const { return C_n_; }
  double particular_p() const { return C_p_; }
  double amplitude_plus() const { return c_plus_; }
  double amplitude_minus() const { return c_minus_; }

 private:
  double alpha_, l_;
  SpatialModes modes_;
  double C_n_ = 0.0, C_p_ = 0.0;
  double c_plus_ = 0.0, c_minus_ = 0.0;

  // Scalar mode profile h(x) with h'(0) = h'(l) = 0 around the particular
  // exponential, and its derivatives.
  double h(double x, double r) const {
    const double L = l_ / r, xi = x / r;
    return std::exp(-alpha_ * x) +
           alpha_ * r * (std::exp(-alpha_ * l_) * cosh_over_sinh(xi, L) -
                         cosh_over_sinh(L - xi, L));
  }
  double h_x(double x, double r) const {
    const double L = l_ / r, xi = x / r;
    return alpha_ * (-std::exp(-alpha_ * x) + std::exp(-alpha_ * l_) * sinh_over_sinh(xi, L) +
                     sinh_over_sinh(L - xi, L));
  }
  double h_xx(double x, double r) const {
    const double L = l_ / r, xi = x / r;
    return alpha_ * alpha_ * std::exp(-alpha_ * x) +
           (alpha_ / r) * (std::exp(-alpha_ * l_) * cosh_over_sinh(xi, L) -
                           cosh_over_sinh(L - xi, L));
  }

  double mode_sum(double x, int comp) const {
    return c_plus_ * modes_.v_plus[comp] * h(x, modes_.r_plus) +
           c_minus_ * modes_.v_minus[comp] * h(x, modes_.r_minus);
  }
  double mode_sum_x(double x, int comp) const {
    return c_plus_ * modes_.v_plus[comp] * h_x(x, modes_.r_plus) +
           c_minus_ * modes_.v_minus[comp] * h_x(x, modes_.r_minus);
  }
  double mode_sum_xx(double x, int comp) const {
    return c_plus_ * modes_.v_plus[comp] * h_xx(x, modes_.r_plus) +
           c_minus_ * modes_.v_minus[comp] * h_xx(x, modes_.r_minus);
  }
};

struct RelaxationPoint {
  double ni_cm3 = 0.0;
  double tau_plus_s = 0.0;
  double tau_minus_s = 0.0;
};

// tau_+/- versus intrinsic density for an undoped material family; maps out
// the insulator -> semiconductor -> conductor crossover.
inline std::vector<RelaxationPoint> relaxation_curve(const BulkMaterial& base, double tau_eff_s,
                                                     const std::vector<double>& ni_grid) {
  std::vector<RelaxationPoint> out;
  out.reserve(ni_grid.size());
  for (double ni : ni_grid) {
    BulkMaterial m = base;
    m.ni_cm3 = ni;
    m.doping_cm3 = 0.0;
    const TemporalModes tm = temporal_modes(length_params(m, tau_eff_s));
    out.push_back({ni, tm.tau_plus(), tm.tau_minus()});
  }
  return out;
}

}  // namespace spvion
