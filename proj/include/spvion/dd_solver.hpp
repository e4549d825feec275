#pragma once

// Coupled Poisson / drift-diffusion solver for the illuminated slab.
// Unknowns per node are the electrostatic potential in thermal units and the
// two carrier densities (u, n, p).  Fluxes use the Scharfetter-Gummel
// exponential scheme, so a state with Boltzmann-distributed carriers over any
// potential profile carries exactly zero current on any mesh and thermal
// equilibrium is reproduced to machine precision.
//
// Boundary conditions: at x=0 a Gauss pillbox ties du/dx to the sheet charge
// (fixed oxide charge plus the occupation-dependent interface-state charge),
// and both carriers lose exactly the net surface capture rate; at x=l the
// potential face is flux-free and a gauge row pins the far hole density to
// its bulk value.
//
// The photoresponse itself is evaluated by the layered small-signal path
// (solve_steady_illuminated below); the full nonlinear solver provides the
// dark equilibrium, the strong-illumination branch, and cross-validation
// against the closed-form bulk profiles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "bulk_modes.hpp"
#include "errors.hpp"
#include "material.hpp"
#include "mesh.hpp"
#include "surface_states.hpp"

namespace spvion {

// ---------------------------------------------------------------------------
// Bernoulli function B(x) = x / (e^x - 1) and its derivative: the growth
// factors of the exponentially fitted flux.
// ---------------------------------------------------------------------------

inline double bernoulli(double x) {
  if (std::abs(x) < 1e-5) return 1.0 - 0.5 * x + x * x / 12.0;  // series through x^2
  if (x > 0.0) return x * std::exp(-x) / (-std::expm1(-x));     // overflow-safe form
  return x / std::expm1(x);
}

inline double bernoulli_derivative(double x) {
  if (std::abs(x) < 1e-5) return -0.5 + x / 6.0;
  // B'(x) = B(x) (1/x - 1/(1 - e^{-x})); the reciprocal underflows to -0 for
  // x << 0, which gives the correct limit B' -> -1.
  return bernoulli(x) * (1.0 / x - 1.0 / (-std::expm1(-x)));
}

// ---------------------------------------------------------------------------
// Problem definition
// ---------------------------------------------------------------------------

struct TransportProblem {
  BulkMaterial material;
  BulkTrap trap;
  InterfaceState sheet;          // fast interface states; Sigma_fs = 0 disables
  double Sigma_ss_e_cm2 = 0.0;   // fixed oxide charge [e/cm^2], sign included
  SlabGeometry geometry;
  double alpha_b_cm1 = 0.0;      // bulk absorption coefficient
  double sigma_n_opt_cm2 = 0.0;  // interface-state optical cross-section, electrons
  double sigma_p_opt_cm2 = 0.0;  // same for holes

  void validate() const {
    material.validate();
    trap.validate();
    sheet.validate();
    geometry.validate();
    if (!(alpha_b_cm1 >= 0.0)) throw std::invalid_argument("alpha_b must be >= 0");
    if (!(sigma_n_opt_cm2 >= 0.0) || !(sigma_p_opt_cm2 >= 0.0))
      throw std::invalid_argument("optical cross-sections must be >= 0");
  }

  Mesh make_mesh() const {
    return graded_mesh(geometry.length_cm, geometry.nodes,
                       geometry.first_cell_fraction * material.debye_majority_cm());
  }
};

struct SolverOptions {
  double tol = 1e-10;       // scaled residual tolerance per row
  int max_newton = 80;      // Newton iterations per continuation stage
  double max_step = 4.0;    // largest potential move per update [kT/e]
  int max_backtrack = 12;   // step halvings in the line search
  int max_stages = 60;      // total continuation attempts before giving up
};

struct EquilibriumSolution {
  Mesh mesh;
  std::vector<double> u;  // potential [kT/e]
  std::vector<double> n, p;
  double u_F = 0.0;
  double f_s = 0.0;               // interface-state occupation
  double surface_gradient = 0.0;  // du/dx at x=0 [1/cm]
  double phi0_V = 0.0;            // surface potential [V]
  int newton_iterations = 0;
};

struct SteadySolution {
  Mesh mesh;
  std::vector<double> u, v, w;  // potential and quasi-Fermi potentials [kT/e]
  std::vector<double> n, p;
  std::vector<double> dn, dp;  // excess densities over equilibrium
  double flux_cm2_s = 0.0;
  double phi0_V = 0.0;  // dark surface potential
  double spv_V = 0.0;   // photovoltage: surface potential change from dark
  double f_s = 0.0;
  double delta_f = 0.0;             // sheet occupation change from dark
  double surface_rate_cm2_s = 0.0;  // net capture rate of each carrier at x=0
  double surface_gradient = 0.0;    // du/dx at x=0 [1/cm]
  double far_gradient = 0.0;        // du/dx at x=l, emergent, ~0 when neutral
  double neutrality_rel = 0.0;      // |sheet charge change - bulk charge| residual
  int newton_iterations = 0;
  int stages = 0;
};

namespace detail {

// ---- banded linear algebra ------------------------------------------------

using Mat3 = std::array<double, 9>;  // row-major
using Vec3 = std::array<double, 3>;

// The 3x3 block tridiagonal Jacobian is solved as a scalar band matrix with
// partial pivoting (LAPACK gbtrf/gbtrs layout).  Pivot-free block elimination
// is not safe here: Jacobian columns scale with the local carrier densities,
// which cross ~15 decades through a depletion layer, and the digits lost in
// the Schur complements turn Newton directions into ascent directions.
inline constexpr std::size_t kBandHalf = 5;  // |(3i+r)-(3j+c)| for adjacent blocks
inline constexpr std::size_t kBandRows = 3 * kBandHalf + 1;  // kl fill + ku + kl + diagonal

struct BandWork {
  std::vector<double> ab;  // column-major band storage, kBandRows x 3*nn
  std::vector<int> piv;
  std::vector<double> rhs;
  std::vector<double> sol, res;      // iterative-refinement workspace
  std::vector<double> rsc, csc;      // row/column equilibration factors
};

// Nearest power of two, so equilibration never rounds.
inline double pow2_scale(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) return 1.0;
  return std::ldexp(1.0, -std::ilogb(m));
}

// A(i,j) lives at ab[band_row(i,j) + j*kBandRows], rows 0..kl-1 are pivot fill.
inline std::size_t band_row(std::size_t i, std::size_t j) {
  return 2 * kBandHalf + i - j;
}

inline void banded_factor(std::size_t n, BandWork& bw) {
  const std::size_t kl = kBandHalf, ku = kBandHalf;
  bw.piv.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    double* col = &bw.ab[j * kBandRows];
    const std::size_t km = std::min(kl, n - 1 - j);        // rows below diagonal
    const std::size_t jend = std::min(j + kl + ku, n - 1);  // U band incl. fill

    std::size_t jp = 0;
    for (std::size_t k = 1; k <= km; ++k)
      if (std::abs(col[kl + ku + k]) > std::abs(col[kl + ku + jp])) jp = k;
    bw.piv[j] = static_cast<int>(j + jp);
    if (std::abs(col[kl + ku + jp]) < 1e-300)
      throw SolverError("drift-diffusion: singular Jacobian");

    if (jp != 0)
      for (std::size_t c = j; c <= jend; ++c)
        std::swap(bw.ab[band_row(j, c) + c * kBandRows],
                  bw.ab[band_row(j + jp, c) + c * kBandRows]);

    const double pivot = col[kl + ku];
    for (std::size_t k = 1; k <= km; ++k) {
      const double m = col[kl + ku + k] / pivot;
      col[kl + ku + k] = m;
      if (m == 0.0) continue;
      for (std::size_t c = j + 1; c <= jend; ++c)
        bw.ab[band_row(j + k, c) + c * kBandRows] -= m * bw.ab[band_row(j, c) + c * kBandRows];
    }
  }
}

inline void banded_substitute(std::size_t n, const BandWork& bw, std::vector<double>& b) {
  const std::size_t kl = kBandHalf, ku = kBandHalf;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t p = static_cast<std::size_t>(bw.piv[j]);
    if (p != j) std::swap(b[j], b[p]);
    const std::size_t km = std::min(kl, n - 1 - j);
    const double bj = b[j];
    for (std::size_t k = 1; k <= km; ++k)
      b[j + k] -= bw.ab[kl + ku + k + j * kBandRows] * bj;
  }
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t jend = std::min(i + kl + ku, n - 1);
    double acc = b[i];
    for (std::size_t c = i + 1; c <= jend; ++c)
      acc -= bw.ab[band_row(i, c) + c * kBandRows] * b[c];
    b[i] = acc / bw.ab[band_row(i, i) + i * kBandRows];
  }
}

// Solve the block tridiagonal system in place: r holds the solution on exit.
inline void block_tridiagonal_solve(const std::vector<Mat3>& sub, const std::vector<Mat3>& diag,
                                    const std::vector<Mat3>& sup, std::vector<Vec3>& r,
                                    BandWork& bw) {
  const std::size_t nn = diag.size();
  const std::size_t n = 3 * nn;

  // Potential columns carry ~1e6 entries while density columns carry ~1e-13,
  // which pushes the raw condition number past 1/eps; equilibrate both sides
  // with exact powers of two before factoring.
  bw.rsc.assign(n, 0.0);
  bw.csc.assign(n, 0.0);
  auto scan = [&](const std::vector<Mat3>& blk, std::size_t i, std::size_t j,
                  const std::vector<double>* rs, std::vector<double>& out, bool by_col) {
    for (std::size_t row = 0; row < 3; ++row)
      for (std::size_t c = 0; c < 3; ++c) {
        double a = std::abs(blk[i][3 * row + c]);
        if (rs) a *= (*rs)[3 * i + row];
        std::size_t k = by_col ? 3 * j + c : 3 * i + row;
        out[k] = std::max(out[k], a);
      }
  };
  for (std::size_t i = 0; i < nn; ++i) {
    if (i > 0) scan(sub, i, i - 1, nullptr, bw.rsc, false);
    scan(diag, i, i, nullptr, bw.rsc, false);
    if (i + 1 < nn) scan(sup, i, i + 1, nullptr, bw.rsc, false);
  }
  for (std::size_t k = 0; k < n; ++k) bw.rsc[k] = pow2_scale(bw.rsc[k]);
  for (std::size_t i = 0; i < nn; ++i) {
    if (i > 0) scan(sub, i, i - 1, &bw.rsc, bw.csc, true);
    scan(diag, i, i, &bw.rsc, bw.csc, true);
    if (i + 1 < nn) scan(sup, i, i + 1, &bw.rsc, bw.csc, true);
  }
  for (std::size_t k = 0; k < n; ++k) bw.csc[k] = pow2_scale(bw.csc[k]);

  bw.ab.assign(kBandRows * n, 0.0);
  auto put = [&](const std::vector<Mat3>& blk, std::size_t i, std::size_t j) {
    for (std::size_t row = 0; row < 3; ++row)
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t gi = 3 * i + row, gj = 3 * j + c;
        bw.ab[band_row(gi, gj) + gj * kBandRows] =
            blk[i][3 * row + c] * bw.rsc[gi] * bw.csc[gj];
      }
  };
  for (std::size_t i = 0; i < nn; ++i) {
    if (i > 0) put(sub, i, i - 1);
    put(diag, i, i);
    if (i + 1 < nn) put(sup, i, i + 1);
  }
  bw.rhs.resize(n);
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t row = 0; row < 3; ++row) bw.rhs[3 * i + row] = r[i][row];
  banded_factor(n, bw);

  bw.sol.resize(n);
  bw.res.resize(n);
  for (std::size_t k = 0; k < n; ++k) bw.res[k] = bw.rhs[k] * bw.rsc[k];
  banded_substitute(n, bw, bw.res);
  for (std::size_t k = 0; k < n; ++k) bw.sol[k] = bw.res[k] * bw.csc[k];

  // The depletion layer still leaves the scaled system stiff; polish the
  // solution against the exact blocks to recover the lost digits.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t row = 0; row < 3; ++row) {
        double acc = -bw.rhs[3 * i + row];
        for (std::size_t c = 0; c < 3; ++c) {
          if (i > 0) acc += sub[i][3 * row + c] * bw.sol[3 * (i - 1) + c];
          acc += diag[i][3 * row + c] * bw.sol[3 * i + c];
          if (i + 1 < nn) acc += sup[i][3 * row + c] * bw.sol[3 * (i + 1) + c];
        }
        bw.res[3 * i + row] = acc * bw.rsc[3 * i + row];
      }
    banded_substitute(n, bw, bw.res);
    for (std::size_t k = 0; k < n; ++k) bw.sol[k] -= bw.res[k] * bw.csc[k];
  }
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t row = 0; row < 3; ++row) r[i][row] = bw.sol[3 * i + row];
}

// ---- steady-state assembly ------------------------------------------------

struct SteadyWork {
  std::vector<Mat3> sub, diag, sup;
  std::vector<Vec3> resid, scale;  // residual and sum of |additive terms| per row

  void resize(std::size_t nn) {
    sub.assign(nn, Mat3{});
    diag.assign(nn, Mat3{});
    sup.assign(nn, Mat3{});
    resid.assign(nn, Vec3{});
    scale.assign(nn, Vec3{});
  }
};

struct ResidualNorm {
  double max_rel = 0.0;
  double rms = 0.0;
};

inline ResidualNorm scaled_norm(const std::vector<Vec3>& f, const std::vector<Vec3>& s) {
  ResidualNorm out;
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t r = 0; r < 3; ++r) {
      const double rel = std::abs(f[i][r]) / (s[i][r] + 1e-300);
      out.max_rel = std::max(out.max_rel, rel);
      sum += rel * rel;
    }
  out.rms = std::sqrt(sum / (3.0 * static_cast<double>(f.size())));
  return out;
}

// Unknowns are (u, n, p) per node rather than quasi-Fermi levels: carrier
// columns then carry uniform O(D/h) flux weights instead of weights
// proportional to the local density, which crosses ~15 decades through a
// depletion layer and would make the Jacobian numerically singular.
inline void assemble_steady(const TransportProblem& prob, const Mesh& mesh, double flux,
                            const std::vector<double>& u, const std::vector<double>& n,
                            const std::vector<double>& p, bool with_jacobian, SteadyWork& wk) {
  const BulkMaterial& m = prob.material;
  const std::size_t nn = mesh.nodes();
  wk.resize(nn);

  const double ni = m.ni_cm3;
  const double nb = m.n_b(), pb = m.p_b();
  const double Dn = m.D_n_cm2_s(), Dp = m.D_p_cm2_s();
  const double sd = m.debye_scale_cm();
  const double tau_n0 = prob.trap.tau_n0_s(m), tau_p0 = prob.trap.tau_p0_s(m);
  const double n1b = prob.trap.n1_cm3(m), p1b = prob.trap.p1_cm3(m);

  // Poisson: potential stencil along edges.
  for (std::size_t i = 0; i + 1 < nn; ++i) {
    const double inv_h = 1.0 / mesh.h[i];
    const double g = (u[i + 1] - u[i]) * inv_h;
    wk.resid[i][0] += g;
    wk.scale[i][0] += std::abs(g);
    wk.resid[i + 1][0] -= g;
    wk.scale[i + 1][0] += std::abs(g);
    if (with_jacobian) {
      wk.diag[i][0] -= inv_h;
      wk.sup[i][0] += inv_h;
      wk.sub[i + 1][0] += inv_h;
      wk.diag[i + 1][0] -= inv_h;
    }
  }

  // Poisson: space charge, with the full density sum as the row scale so the
  // convergence test stays honest about floating-point cancellation.
  for (std::size_t i = 0; i < nn; ++i) {
    const double V = mesh.cell_volume_cm(i);
    wk.resid[i][0] += V * (p[i] - n[i] + nb - pb) / sd;
    wk.scale[i][0] += V * (p[i] + n[i] + nb + pb) / sd;
    if (with_jacobian) {
      wk.diag[i][1] += -V / sd;
      wk.diag[i][2] += V / sd;
    }
  }

  // Sheet charge and surface kinetics at x=0.
  const bool sheet_on = prob.sheet.Sigma_fs_cm2 > 0.0;
  SurfaceKinetics kin{};
  double q_if = 0.0;
  if (sheet_on) {
    const double n_o = prob.sheet.n_o(prob.sigma_n_opt_cm2, flux);
    const double p_o = prob.sheet.p_o(prob.sigma_p_opt_cm2, flux);
    kin = surface_kinetics(prob.sheet, m, n[0], p[0], n_o, p_o);
    q_if = interface_charge_e_cm2(prob.sheet, kin.f_bar);
  }
  wk.resid[0][0] += (prob.Sigma_ss_e_cm2 + q_if) / sd;
  wk.scale[0][0] += (std::abs(prob.Sigma_ss_e_cm2) + std::abs(q_if)) / sd;
  if (with_jacobian && sheet_on) {
    const double dq = -prob.sheet.Sigma_fs_cm2 / sd;  // d(charge)/df, either polarity
    wk.diag[0][1] += dq * kin.df_dn;
    wk.diag[0][2] += dq * kin.df_dp;
  }

  // Carrier fluxes along edges (particle flux in +x, both carriers).
  for (std::size_t i = 0; i + 1 < nn; ++i) {
    const double du = u[i + 1] - u[i];
    const double Bp = bernoulli(du), Bm = bernoulli(-du);
    const double cn = Dn / mesh.h[i], cp = Dp / mesh.h[i];

    const double tn1 = cn * n[i] * Bm, tn2 = -cn * n[i + 1] * Bp;
    const double Jn = tn1 + tn2;
    const double sn = std::abs(tn1) + std::abs(tn2);
    wk.resid[i][1] += Jn;
    wk.scale[i][1] += sn;
    wk.resid[i + 1][1] -= Jn;
    wk.scale[i + 1][1] += sn;

    const double tp1 = cp * p[i] * Bp, tp2 = -cp * p[i + 1] * Bm;
    const double Jp = tp1 + tp2;
    const double sp = std::abs(tp1) + std::abs(tp2);
    wk.resid[i][2] += Jp;
    wk.scale[i][2] += sp;
    wk.resid[i + 1][2] -= Jp;
    wk.scale[i + 1][2] += sp;

    if (with_jacobian) {
      const double dBp = bernoulli_derivative(du), dBm = bernoulli_derivative(-du);

      const double dJn_ddu = cn * (-n[i] * dBm - n[i + 1] * dBp);
      const double dJn_dni = cn * Bm;
      const double dJn_dnj = -cn * Bp;
      wk.diag[i][3] += -dJn_ddu;
      wk.diag[i][4] += dJn_dni;
      wk.sup[i][3] += dJn_ddu;
      wk.sup[i][4] += dJn_dnj;
      wk.sub[i + 1][3] -= -dJn_ddu;
      wk.sub[i + 1][4] -= dJn_dni;
      wk.diag[i + 1][3] -= dJn_ddu;
      wk.diag[i + 1][4] -= dJn_dnj;

      const double dJp_ddu = cp * (p[i] * dBp + p[i + 1] * dBm);
      const double dJp_dpi = cp * Bp;
      const double dJp_dpj = -cp * Bm;
      wk.diag[i][6] += -dJp_ddu;
      wk.diag[i][8] += dJp_dpi;
      wk.sup[i][6] += dJp_ddu;
      wk.sup[i][8] += dJp_dpj;
      wk.sub[i + 1][6] -= -dJp_ddu;
      wk.sub[i + 1][8] -= dJp_dpi;
      wk.diag[i + 1][6] -= dJp_ddu;
      wk.diag[i + 1][8] -= dJp_dpj;
    }
  }

  // Photogeneration (exact cell integral of the exponential profile) and
  // trap-assisted recombination.
  const double alpha = prob.alpha_b_cm1;
  for (std::size_t i = 0; i < nn; ++i) {
    const double V = mesh.cell_volume_cm(i);
    if (alpha > 0.0 && flux > 0.0) {
      const double xL = (i == 0) ? 0.0 : mesh.x[i] - 0.5 * mesh.h[i - 1];
      const double xR = (i + 1 == nn) ? mesh.x.back() : mesh.x[i] + 0.5 * mesh.h[i];
      const double G = flux * (std::exp(-alpha * xL) - std::exp(-alpha * xR));
      wk.resid[i][1] -= G;
      wk.scale[i][1] += G;
      wk.resid[i][2] -= G;
      wk.scale[i][2] += G;
    }
    const double den = tau_n0 * (p[i] + p1b) + tau_p0 * (n[i] + n1b);
    const double R = (n[i] * p[i] - ni * ni) / den;
    const double sR = V * (n[i] * p[i] + ni * ni) / den;
    wk.resid[i][1] += R * V;
    wk.scale[i][1] += sR;
    wk.resid[i][2] += R * V;
    wk.scale[i][2] += sR;
    if (with_jacobian) {
      const double dRdn = V * (p[i] - R * tau_p0) / den;
      const double dRdp = V * (n[i] - R * tau_n0) / den;
      wk.diag[i][4] += dRdn;
      wk.diag[i][5] += dRdp;
      wk.diag[i][7] += dRdn;
      wk.diag[i][8] += dRdp;
    }
  }

  // Net surface capture removes both carriers at x=0 at the common rate U_s.
  if (sheet_on) {
    const double D = (n[0] + kin.n1_star) / prob.sheet.s_p0(m) +
                     (p[0] + kin.p1_star) / prob.sheet.s_n0(m);
    const double sU = (n[0] * p[0] + kin.n1_star * kin.p1_star) / D;
    wk.resid[0][1] += kin.U_s;
    wk.scale[0][1] += sU;
    wk.resid[0][2] += kin.U_s;
    wk.scale[0][2] += sU;
    if (with_jacobian) {
      wk.diag[0][4] += kin.dUs_dn;
      wk.diag[0][5] += kin.dUs_dp;
      wk.diag[0][7] += kin.dUs_dn;
      wk.diag[0][8] += kin.dUs_dp;
    }
  }

  // Far face: du/dx(l) = 0 (no field leaves the neutral slab), so the last
  // Poisson row needs no extra term, and the far potential floats instead of
  // forcing an artificial majority-carrier boundary layer.  Every term above
  // sees the potential only through differences, so a common shift of u is
  // unconstrained; the far hole row is the redundant one (electron and hole
  // rows sum to the same global balance), so it carries the potential gauge.
  wk.resid[nn - 1][2] = u[nn - 1];
  wk.scale[nn - 1][2] = std::abs(u[nn - 1]) + 1.0;
  if (with_jacobian) {
    for (std::size_t c = 6; c < 9; ++c) {
      wk.sub[nn - 1][c] = 0.0;
      wk.diag[nn - 1][c] = 0.0;
      wk.sup[nn - 1][c] = 0.0;
    }
    wk.diag[nn - 1][6] = 1.0;
  }
}

// One damped Newton solve at fixed flux; the state is updated in place.
// Returns iterations used; throws SolverError when it cannot converge.
inline int newton_steady(const TransportProblem& prob, const Mesh& mesh, double flux,
                         std::vector<double>& u, std::vector<double>& n, std::vector<double>& p,
                         const SolverOptions& opts) {
  const std::size_t nn = mesh.nodes();
  SteadyWork wk;
  BandWork bw;
  std::vector<double> ut(nn), nt(nn), pt(nn);

  for (int it = 0; it < opts.max_newton; ++it) {
    assemble_steady(prob, mesh, flux, u, n, p, true, wk);
    const ResidualNorm base = scaled_norm(wk.resid, wk.scale);
    if (base.max_rel < opts.tol) return it;

    std::vector<Vec3> step(nn);
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t r = 0; r < 3; ++r) step[i][r] = -wk.resid[i][r];
    block_tridiagonal_solve(wk.sub, wk.diag, wk.sup, step, bw);

    // Cap the potential move per iteration; densities are instead clipped at
    // zero below, since the surface kinetics need a non-negative state.
    double largest_u = 0.0;
    for (const auto& s : step) largest_u = std::max(largest_u, std::abs(s[0]));
    double damp = std::min(1.0, opts.max_step / (largest_u + 1e-300));

    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtrack; ++bt) {
      for (std::size_t i = 0; i < nn; ++i) {
        ut[i] = u[i] + damp * step[i][0];
        nt[i] = std::max(0.0, n[i] + damp * step[i][1]);
        pt[i] = std::max(0.0, p[i] + damp * step[i][2]);
      }
      assemble_steady(prob, mesh, flux, ut, nt, pt, false, wk);
      const ResidualNorm trial = scaled_norm(wk.resid, wk.scale);
      if (trial.rms <= base.rms * (1.0 - 1e-4 * damp) || trial.max_rel < opts.tol) {
        accepted = true;
        break;
      }
      damp *= 0.5;
    }
    if (!accepted) throw SolverError("drift-diffusion: Newton line search stalled");
    u.swap(ut);
    n.swap(nt);
    p.swap(pt);
  }
  throw SolverError("drift-diffusion: Newton did not converge");
}

// Walk the photon flux from `reached` up to `target`, bisecting in log flux
// whenever a stage refuses to converge from the warm start.
inline void advance_to_flux(const TransportProblem& prob, const Mesh& mesh, double& reached,
                            double target, std::vector<double>& u, std::vector<double>& n,
                            std::vector<double>& p, const SolverOptions& opts, int& iterations,
                            int& stages) {
  std::vector<double> todo{target};
  std::vector<double> us, ns, ps;
  while (!todo.empty()) {
    if (++stages > opts.max_stages) throw SolverError("drift-diffusion: continuation exhausted");
    const double stage = todo.back();
    us = u;
    ns = n;
    ps = p;
    try {
      iterations += newton_steady(prob, mesh, stage, u, n, p, opts);
      reached = stage;
      todo.pop_back();
    } catch (const SolverError&) {
      u = us;
      n = ns;
      p = ps;
      const double lower = (reached > 0.0) ? std::sqrt(reached * stage) : stage * 0.1;
      const bool splits = lower < stage * (1.0 - 1e-9) &&
                          (reached <= 0.0 || lower > reached * (1.0 + 1e-9));
      if (!splits) throw;
      todo.push_back(lower);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Thermal equilibrium: single-variable Newton on the potential with the
// interface-state occupation folded into the surface boundary condition.
// ---------------------------------------------------------------------------

namespace detail {

// Residual, row scales, and (optionally) the tridiagonal Jacobian of the
// equilibrium Poisson system.  theta scales all sheet charge for homotopy.
inline void assemble_equilibrium(const TransportProblem& prob, const Mesh& mesh, double theta,
                                 const std::vector<double>& u, std::vector<double>& F,
                                 std::vector<double>& S, std::vector<double>* lo,
                                 std::vector<double>* di, std::vector<double>* up) {
  const BulkMaterial& m = prob.material;
  const std::size_t nn = mesh.nodes();
  const double ni = m.ni_cm3, uF = m.u_F();
  const double nb = m.n_b(), pb = m.p_b();
  const double sd = m.debye_scale_cm();
  const bool jac = di != nullptr;

  F.assign(nn, 0.0);
  S.assign(nn, 0.0);
  if (jac) {
    lo->assign(nn, 0.0);
    di->assign(nn, 0.0);
    up->assign(nn, 0.0);
  }

  for (std::size_t i = 0; i + 1 < nn; ++i) {
    const double inv_h = 1.0 / mesh.h[i];
    const double g = (u[i + 1] - u[i]) * inv_h;
    F[i] += g;
    S[i] += std::abs(g);
    F[i + 1] -= g;
    S[i + 1] += std::abs(g);
    if (jac) {
      (*di)[i] -= inv_h;
      (*up)[i] += inv_h;
      (*lo)[i + 1] += inv_h;
      (*di)[i + 1] -= inv_h;
    }
  }

  for (std::size_t i = 0; i < nn; ++i) {
    const double n = ni * clamped_exp(u[i] - uF);
    const double p = ni * clamped_exp(uF - u[i]);
    const double V = mesh.cell_volume_cm(i);
    F[i] += V * (p - n + nb - pb) / sd;
    S[i] += V * (p + n + nb + pb) / sd;
    if (jac) (*di)[i] += V * (-p - n) / sd;
  }

  // Sheet charge: fixed oxide charge plus interface states at their
  // equilibrium (Fermi) occupation.
  {
    const double n0 = ni * clamped_exp(u[0] - uF);
    double q_if = 0.0, dq_du = 0.0;
    if (prob.sheet.Sigma_fs_cm2 > 0.0) {
      const double n1s = prob.sheet.n1s(m);
      const double f = n0 / (n0 + n1s);
      q_if = interface_charge_e_cm2(prob.sheet, f);
      const double df_du = n1s / ((n0 + n1s) * (n0 + n1s)) * n0;
      dq_du = -prob.sheet.Sigma_fs_cm2 * df_du;
    }
    F[0] += theta * (prob.Sigma_ss_e_cm2 + q_if) / sd;
    S[0] += theta * (std::abs(prob.Sigma_ss_e_cm2) + std::abs(q_if)) / sd;
    if (jac) (*di)[0] += theta * dq_du / sd;
  }

  // Far face: zero field, same as the steady assembly; the charge response
  // pins the deep-bulk potential at the neutral reference.
}

inline ResidualNorm scalar_norm(const std::vector<double>& F, const std::vector<double>& S) {
  ResidualNorm out;
  double sum = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double rel = std::abs(F[i]) / (S[i] + 1e-300);
    out.max_rel = std::max(out.max_rel, rel);
    sum += rel * rel;
  }
  out.rms = std::sqrt(sum / static_cast<double>(F.size()));
  return out;
}

inline int newton_equilibrium(const TransportProblem& prob, const Mesh& mesh, double theta,
                              std::vector<double>& u, const SolverOptions& opts) {
  const std::size_t nn = mesh.nodes();
  std::vector<double> F, S, lo, di, up, ut(nn);
  for (int it = 0; it < opts.max_newton; ++it) {
    assemble_equilibrium(prob, mesh, theta, u, F, S, &lo, &di, &up);
    const ResidualNorm base = scalar_norm(F, S);
    if (base.max_rel < opts.tol) return it;

    // Thomas solve for the Newton step (diagonally dominant system).
    std::vector<double> rhs(nn);
    for (std::size_t i = 0; i < nn; ++i) rhs[i] = -F[i];
    for (std::size_t i = 1; i < nn; ++i) {
      const double mfac = lo[i] / di[i - 1];
      di[i] -= mfac * up[i - 1];
      rhs[i] -= mfac * rhs[i - 1];
    }
    rhs[nn - 1] /= di[nn - 1];
    for (std::size_t i = nn - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];

    double largest = 0.0;
    for (double c : rhs) largest = std::max(largest, std::abs(c));
    double damp = std::min(1.0, opts.max_step / (largest + 1e-300));

    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtrack; ++bt) {
      for (std::size_t i = 0; i < nn; ++i) ut[i] = u[i] + damp * rhs[i];
      assemble_equilibrium(prob, mesh, theta, ut, F, S, nullptr, nullptr, nullptr);
      const ResidualNorm trial = scalar_norm(F, S);
      if (trial.rms <= base.rms * (1.0 - 1e-4 * damp) || trial.max_rel < opts.tol) {
        accepted = true;
        break;
      }
      damp *= 0.5;
    }
    if (!accepted) throw SolverError("equilibrium: Newton line search stalled");
    u.swap(ut);
  }
  throw SolverError("equilibrium: Newton did not converge");
}

}  // namespace detail

inline EquilibriumSolution solve_equilibrium(const TransportProblem& prob,
                                             const SolverOptions& opts = {}) {
  prob.validate();
  EquilibriumSolution sol;
  sol.mesh = prob.make_mesh();
  sol.u_F = prob.material.u_F();
  const std::size_t nn = sol.mesh.nodes();
  sol.u.assign(nn, 0.0);

  // Homotopy in the sheet charge, engaged lazily: full charge converges
  // directly for all physical inputs; extreme sheets fall back to bisection.
  double reached = 0.0;
  std::vector<double> todo{1.0}, usave;
  int stages = 0;
  while (!todo.empty()) {
    if (++stages > opts.max_stages) throw SolverError("equilibrium: continuation exhausted");
    const double theta = todo.back();
    usave = sol.u;
    try {
      sol.newton_iterations +=
          detail::newton_equilibrium(prob, sol.mesh, theta, sol.u, opts);
      reached = theta;
      todo.pop_back();
    } catch (const SolverError&) {
      sol.u = usave;
      const double mid = 0.5 * (reached + theta);
      if (!(mid < theta - 1e-6) || !(mid > reached + 1e-6)) throw;
      todo.push_back(mid);
    }
  }

  sol.n.resize(nn);
  sol.p.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    sol.n[i] = prob.material.ni_cm3 * clamped_exp(sol.u[i] - sol.u_F);
    sol.p[i] = prob.material.ni_cm3 * clamped_exp(sol.u_F - sol.u[i]);
  }
  sol.f_s = prob.sheet.Sigma_fs_cm2 > 0.0
                ? equilibrium_occupation(prob.sheet, prob.material, sol.n[0])
                : 0.0;
  sol.surface_gradient =
      equilibrium_boundary_gradient(prob.material, prob.Sigma_ss_e_cm2, prob.sheet, sol.f_s);
  sol.phi0_V = sol.u[0] * prob.material.thermal_voltage();
  return sol;
}

// ---------------------------------------------------------------------------
// Analytic space-charge relation
// ---------------------------------------------------------------------------
// First integral of Poisson's equation across a quasi-equilibrium space-charge
// region.  With both carrier reservoirs displaced from their dark values by
// rigid quasi-Fermi shifts v (electrons) and w (holes), the densities are
// n = n_b e^{v+u}, p = p_b e^{w-u}, and integrating u'' u' from the neutral
// interior (u = 0, u' = 0) to a surface at potential u0 gives
//   (lambda_Di u')^2 n_i / 2 = G(u0; v, w),
//   G(u; v, w) = n_b e^v (e^u - 1) + p_b e^w (e^{-u} - 1) + (p_b - n_b) u.
// Gauss's law at the surface ties the field to the sheet charge Q [e/cm^2]:
//   Q = sign(u0) * lambda_Di * sqrt(2 n_i G(u0; v, w)).
// The dark case v = w = 0 is the textbook sheet-charge/barrier relation; the
// shifted case gives the re-equilibrated barrier when photoexcited carriers
// flood the interior at fixed sheet charge.

inline double space_charge_integral(const BulkMaterial& m, double u, double v = 0.0,
                                    double w = 0.0) {
  const double nb = m.n_b(), pb = m.p_b();
  return nb * std::exp(v) * std::expm1(u) + pb * std::exp(w) * std::expm1(-u) +
         (pb - nb) * u;
}

inline double sheet_for_potential(const BulkMaterial& m, double u0, double v = 0.0,
                                  double w = 0.0) {
  const double G = std::max(space_charge_integral(m, u0, v, w), 0.0);
  const double lam = m.debye_length_cm(m.ni_cm3);
  const double q = lam * std::sqrt(2.0 * m.ni_cm3 * G);
  return u0 >= 0.0 ? q : -q;
}

// Inverse of sheet_for_potential on the matching branch.  Q > 0 depletes /
// inverts the p-type surface (u0 > 0), Q < 0 accumulates it (u0 < 0).
inline double potential_for_sheet(const BulkMaterial& m, double Q_e_cm2, double v = 0.0,
                                  double w = 0.0) {
  if (Q_e_cm2 == 0.0) return 0.0;
  double lo = 0.0, hi = (Q_e_cm2 > 0.0) ? 70.0 : -70.0;
  if (Q_e_cm2 < 0.0) std::swap(lo, hi);
  auto f = [&](double u) { return sheet_for_potential(m, u, v, w) - Q_e_cm2; };
  if (f(lo) * f(hi) > 0.0) throw SolverError("potential_for_sheet: sheet charge out of range");
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fu = f(u);
    if (fu == 0.0) break;
    (fu * f(lo) < 0.0 ? hi : lo) = u;
    // Newton step on the signed relation, with bisection as the safety net.
    const double G = std::max(space_charge_integral(m, u, v, w), 1e-300);
    const double dG = m.n_b() * std::exp(v + u) - m.p_b() * std::exp(w - u) +
                      (m.p_b() - m.n_b());
    const double df = std::abs(sheet_for_potential(m, u, v, w)) * 0.5 * dG / G;
    double un = (df != 0.0 && std::isfinite(df)) ? u - fu / df : 0.5 * (lo + hi);
    if (!(un > std::min(lo, hi)) || !(un < std::max(lo, hi))) un = 0.5 * (lo + hi);
    if (std::abs(un - u) <= 1e-14 * (1.0 + std::abs(un))) {
      u = un;
      break;
    }
    u = un;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Steady state under illumination
// ---------------------------------------------------------------------------

namespace detail {

// Fill every observable of a SteadySolution from a converged state.
inline SteadySolution package_steady(const TransportProblem& prob, const EquilibriumSolution& eq,
                                     double flux_cm2_s, std::vector<double> u,
                                     std::vector<double> n, std::vector<double> p, int iterations,
                                     int stages) {
  const std::size_t nn = eq.mesh.nodes();
  SteadySolution sol;
  sol.mesh = eq.mesh;
  sol.flux_cm2_s = flux_cm2_s;
  sol.phi0_V = eq.phi0_V;
  sol.u = std::move(u);
  sol.n = std::move(n);
  sol.p = std::move(p);
  sol.newton_iterations = iterations;
  sol.stages = stages;

  const BulkMaterial& m = prob.material;
  sol.v.resize(nn);
  sol.w.resize(nn);
  sol.dn.resize(nn);
  sol.dp.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    sol.v[i] = sol.u[i] - std::log(std::max(sol.n[i], 1e-300) / m.ni_cm3);
    sol.w[i] = sol.u[i] + std::log(std::max(sol.p[i], 1e-300) / m.ni_cm3);
    sol.dn[i] = sol.n[i] - eq.n[i];
    sol.dp[i] = sol.p[i] - eq.p[i];
  }
  sol.spv_V = (sol.u[0] - eq.u[0]) * m.thermal_voltage();

  if (prob.sheet.Sigma_fs_cm2 > 0.0) {
    const double n_o = prob.sheet.n_o(prob.sigma_n_opt_cm2, flux_cm2_s);
    const double p_o = prob.sheet.p_o(prob.sigma_p_opt_cm2, flux_cm2_s);
    const SurfaceKinetics kin = surface_kinetics(prob.sheet, m, sol.n[0], sol.p[0], n_o, p_o);
    sol.f_s = kin.f_bar;
    sol.delta_f = sol.f_s - eq.f_s;
    sol.surface_rate_cm2_s = kin.U_s;
    sol.surface_gradient = equilibrium_boundary_gradient(m, prob.Sigma_ss_e_cm2, prob.sheet,
                                                         sol.f_s);
  } else {
    sol.surface_gradient =
        equilibrium_boundary_gradient(m, prob.Sigma_ss_e_cm2, prob.sheet, 0.0);
  }
  sol.far_gradient = (sol.u[nn - 1] - sol.u[nn - 2]) / sol.mesh.h[nn - 2];

  // Global neutrality: the sheet's occupation change must mirror the net
  // excess charge stored in the bulk.
  double bulk = 0.0, gross = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    const double V = sol.mesh.cell_volume_cm(i);
    bulk += (sol.dp[i] - sol.dn[i]) * V;
    gross += (std::abs(sol.dp[i]) + std::abs(sol.dn[i])) * V;
  }
  const double sheet_side = prob.sheet.Sigma_fs_cm2 * sol.delta_f;
  const double denom = std::max({std::abs(sheet_side), gross, 1e-30});
  sol.neutrality_rel = std::abs(sheet_side - bulk) / denom;
  return sol;
}

}  // namespace detail

inline SteadySolution solve_steady(const TransportProblem& prob, double flux_cm2_s,
                                   const EquilibriumSolution& eq, const SolverOptions& opts = {}) {
  if (!(flux_cm2_s >= 0.0)) throw std::invalid_argument("photon flux must be >= 0");
  std::vector<double> u = eq.u, n = eq.n, p = eq.p;
  int iterations = 0, stages = 0;
  if (flux_cm2_s > 0.0) {
    double reached = 0.0;
    detail::advance_to_flux(prob, eq.mesh, reached, flux_cm2_s, u, n, p, opts, iterations,
                            stages);
  } else {
    iterations = detail::newton_steady(prob, eq.mesh, 0.0, u, n, p, opts);
  }
  return detail::package_steady(prob, eq, flux_cm2_s, std::move(u), std::move(n), std::move(p),
                                iterations, stages);
}

inline SteadySolution solve_steady(const TransportProblem& prob, double flux_cm2_s,
                                   const SolverOptions& opts = {}) {
  return solve_steady(prob, flux_cm2_s, solve_equilibrium(prob, opts), opts);
}

// Warm-started family of solves over photon flux; results match the input
// order of `fluxes`.
inline std::vector<SteadySolution> flux_sweep(const TransportProblem& prob,
                                              const std::vector<double>& fluxes,
                                              const SolverOptions& opts = {}) {
  const EquilibriumSolution eq = solve_equilibrium(prob, opts);
  std::vector<std::size_t> order(fluxes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return fluxes[a] < fluxes[b]; });

  std::vector<SteadySolution> out(fluxes.size());
  std::vector<double> u = eq.u, n = eq.n, p = eq.p;
  double reached = 0.0;
  for (std::size_t k : order) {
    const double flux = fluxes[k];
    if (flux <= 0.0) {
      out[k] = solve_steady(prob, 0.0, eq, opts);
      continue;
    }
    int iterations = 0, stages = 0;
    detail::advance_to_flux(prob, eq.mesh, reached, flux, u, n, p, opts, iterations, stages);
    out[k] = detail::package_steady(prob, eq, flux, u, n, p, iterations, stages);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Low-excitation layered photoresponse
// ---------------------------------------------------------------------------
// The photovoltage of a depleted surface is dominated by two responses that
// stay linear (or quasi-equilibrium) when the excess densities are small
// against the majority density, and they superpose on the dark solution:
//
//   1. Excess layer: linearized transport on flat-band coefficients.  Bulk
//      absorption and the interface-state kinetics at x = 0 drive excess
//      densities dn, dp and the excess potential du; the occupation change of
//      the sheet is screened over the majority Debye length and appears in
//      du(0) as the surface-dipole photovoltage, while the charged fraction
//      of the excess bulk carriers adds the (much smaller) bulk term.
//      Recombination uses the bimolecular low-excitation closure
//      R = (p dn + n dp) / (n_i tau_eff) with tau_eff the effective intrinsic
//      lifetime, for which the capture time constant of the bulk traps
//      stands in by default.
//   2. Barrier relaxation: bulk absorption floods both reservoirs, shifting
//      the quasi-Fermi levels at the edge of the space-charge region by
//      v = ln(1 + dn/n_b) and w = ln(1 + dp/p_b), with dn, dp the surface
//      values of the closed-form flood profile (the sheet's own exchange
//      cloud is layer 1's screening charge and must not drive the barrier a
//      second time); the barrier height re-equilibrates against the fixed
//      dark sheet charge through the analytic space-charge relation.  This
//      term is negative for a depleted p-type surface and overtakes the
//      dipole when the sheet is dilute.
//
// The total photovoltage is spv = V_T * du(0) + barrier, reported with both
// parts separated.  The excess layer is solved with the same finite-volume
// mesh, flux discretization, and banded factorization as the full nonlinear
// system; the interface occupation enters through a scalar fixed point.

struct IlluminatedOptions {
  double tau_eff_s = 0.0;  // effective intrinsic lifetime; 0 = trap capture time
  double tol_f = 1e-13;    // fixed-point tolerance on the sheet occupation
  int max_outer = 100;     // occupation updates before giving up
};

struct IlluminatedSolution {
  Mesh mesh;
  std::vector<double> du;      // excess potential [kT/e]
  std::vector<double> dn, dp;  // excess densities [cm^-3]
  double flux_cm2_s = 0.0;
  double phi0_V = 0.0;     // dark surface potential
  double spv_V = 0.0;      // total photovoltage = layer_V + barrier_V
  double layer_V = 0.0;    // excess-layer part: V_T du(0)
  double barrier_V = 0.0;  // barrier-relaxation part
  double f_s = 0.0;        // illuminated sheet occupation
  double delta_f = 0.0;    // change from the dark flat-band occupation
  double delta_Sigma_e_cm2 = 0.0;   // sheet charge change
  double surface_rate_cm2_s = 0.0;  // net capture rate U_s at the fixed point
  double v_edge = 0.0, w_edge = 0.0;  // reservoir quasi-Fermi shifts [kT/e]
  double neutrality_rel = 0.0;  // |sheet charge change + bulk charge| residual
  int outer_iterations = 0;
};

namespace detail {

// Assemble the linear excess-carrier system as residual/Jacobian at state
// (dn, dp), sheet occupation frozen.  The excess potential is eliminated
// before discretization: substituting Poisson, sd du'' = dn - dp, into the
// drift divergences D_n n_b du'' and -D_p p_b du'' turns the electrostatic
// coupling into the local reaction terms +-(D n_b,p_b / sd)(dn - dp), and the
// surface field sd du'(0) = -dSigma enters the first cell as a constant
// drive.  A monolithic (du, dn, dp) system is ill-posed in floating point:
// every interior row is blind to a constant du shift, so the potential level
// would hinge on one far-end cell and drown in roundoff.  Eliminating du
// also hands the system an exact discrete neutrality identity (sum the
// electron rows minus the hole rows: all interior terms cancel), and du is
// recovered afterwards by quadrature.
//
// Rows per node: placeholder identity for du (kept so the 3x3 banded solver
// can be reused as is), electron continuity, hole continuity.
inline void assemble_excess_layer(const TransportProblem& prob, const Mesh& mesh, double flux,
                                  double tau_eff, double f_bar, double f_dark,
                                  const std::vector<double>& dn, const std::vector<double>& dp,
                                  SteadyWork& wk) {
  const BulkMaterial& m = prob.material;
  const std::size_t nn = mesh.nodes();
  wk.resize(nn);

  const double ni = m.ni_cm3;
  const double nb = m.n_b(), pb = m.p_b();
  const double Dn = m.D_n_cm2_s(), Dp = m.D_p_cm2_s();
  const double sd = m.debye_scale_cm();

  // Decoupled placeholder rows for the potential unknowns.
  for (std::size_t i = 0; i < nn; ++i) wk.diag[i][0] = 1.0;

  // Diffusion fluxes along edges.
  for (std::size_t i = 0; i + 1 < nn; ++i) {
    const double cn = Dn / mesh.h[i], cp = Dp / mesh.h[i];

    const double Jn = cn * (dn[i] - dn[i + 1]);
    wk.resid[i][1] += Jn;
    wk.resid[i + 1][1] -= Jn;
    wk.diag[i][4] += cn;
    wk.sup[i][4] -= cn;
    wk.sub[i + 1][4] -= cn;
    wk.diag[i + 1][4] += cn;

    const double Jp = cp * (dp[i] - dp[i + 1]);
    wk.resid[i][2] += Jp;
    wk.resid[i + 1][2] -= Jp;
    wk.diag[i][8] += cp;
    wk.sup[i][8] -= cp;
    wk.sub[i + 1][8] -= cp;
    wk.diag[i + 1][8] += cp;
  }

  // Cell terms: photogeneration (exact integral of the exponential profile),
  // bimolecular recombination, and the eliminated electrostatic coupling.
  const double alpha = prob.alpha_b_cm1;
  const double rc = 1.0 / (ni * tau_eff);
  const double qn = Dn * nb / sd, qp = Dp * pb / sd;
  for (std::size_t i = 0; i < nn; ++i) {
    const double V = mesh.cell_volume_cm(i);
    if (alpha > 0.0 && flux > 0.0) {
      const double xL = (i == 0) ? 0.0 : mesh.x[i] - 0.5 * mesh.h[i - 1];
      const double xR = (i + 1 == nn) ? mesh.x.back() : mesh.x[i] + 0.5 * mesh.h[i];
      const double G = flux * (std::exp(-alpha * xL) - std::exp(-alpha * xR));
      wk.resid[i][1] -= G;
      wk.resid[i][2] -= G;
    }
    const double R = V * rc * (pb * dn[i] + nb * dp[i]);
    wk.resid[i][1] += R;
    wk.resid[i][2] += R;
    wk.diag[i][4] += V * rc * pb;
    wk.diag[i][5] += V * rc * nb;
    wk.diag[i][7] += V * rc * pb;
    wk.diag[i][8] += V * rc * nb;

    const double rho = dn[i] - dp[i];
    wk.resid[i][1] += V * qn * rho;
    wk.diag[i][4] += V * qn;
    wk.diag[i][5] -= V * qn;
    wk.resid[i][2] -= V * qp * rho;
    wk.diag[i][7] -= V * qp;
    wk.diag[i][8] += V * qp;
  }

  // Interface kinetics and the sheet's surface field at x = 0, occupation
  // frozen for this pass: each carrier loses its own net capture rate, and
  // the two rates agree once the occupation fixed point has converged.
  if (prob.sheet.Sigma_fs_cm2 > 0.0) {
    const double n_o = prob.sheet.n_o(prob.sigma_n_opt_cm2, flux);
    const double p_o = prob.sheet.p_o(prob.sigma_p_opt_cm2, flux);
    wk.resid[0][1] += electron_capture_flux(prob.sheet, m, nb + dn[0], f_bar, n_o);
    wk.diag[0][4] += prob.sheet.s_n0(m) * (1.0 - f_bar);
    wk.resid[0][2] += hole_capture_flux(prob.sheet, m, pb + dp[0], f_bar, p_o);
    wk.diag[0][8] += prob.sheet.s_p0(m) * f_bar;

    const double dSigma = interface_charge_e_cm2(prob.sheet, f_bar) -
                          interface_charge_e_cm2(prob.sheet, f_dark);
    wk.resid[0][1] -= Dn * nb * dSigma / sd;
    wk.resid[0][2] += Dp * pb * dSigma / sd;
  }
}

// Recover the excess potential from the solved charge: two stable sweeps of
//   sd du'' = dn - dp,  sd du'(0) = -dSigma,  du(l) = 0.
// The emergent neutrality integral(dn - dp) = dSigma makes du'(l) vanish, so
// du(0) is the dipole moment of sheet plus bulk charge and does not depend on
// where the far contact sits.
inline void integrate_excess_potential(const Mesh& mesh, double sd, double dSigma,
                                       const std::vector<double>& dn,
                                       const std::vector<double>& dp, std::vector<double>& du) {
  const std::size_t nn = mesh.nodes();
  std::vector<double> field(nn);  // du/dx at the nodes
  field[0] = -dSigma / sd;
  for (std::size_t i = 0; i + 1 < nn; ++i) {
    const double seg = 0.5 * mesh.h[i] * ((dn[i] - dp[i]) + (dn[i + 1] - dp[i + 1]));
    field[i + 1] = field[i] + seg / sd;
  }
  du.assign(nn, 0.0);
  for (std::size_t i = nn - 1; i-- > 0;)
    du[i] = du[i + 1] - 0.5 * mesh.h[i] * (field[i] + field[i + 1]);
}

}  // namespace detail

inline IlluminatedSolution solve_steady_illuminated(const TransportProblem& prob,
                                                    double flux_cm2_s,
                                                    const EquilibriumSolution& eq,
                                                    const IlluminatedOptions& opts = {}) {
  prob.validate();
  if (!(flux_cm2_s >= 0.0)) throw std::invalid_argument("photon flux must be >= 0");
  const BulkMaterial& m = prob.material;
  const double tau_eff = opts.tau_eff_s > 0.0 ? opts.tau_eff_s : prob.trap.tau_n0_s(m);

  IlluminatedSolution sol;
  sol.mesh = eq.mesh;
  sol.flux_cm2_s = flux_cm2_s;
  sol.phi0_V = eq.phi0_V;
  const std::size_t nn = sol.mesh.nodes();
  sol.du.assign(nn, 0.0);
  sol.dn.assign(nn, 0.0);
  sol.dp.assign(nn, 0.0);

  const bool sheet_on = prob.sheet.Sigma_fs_cm2 > 0.0;
  const double n_o = sheet_on ? prob.sheet.n_o(prob.sigma_n_opt_cm2, flux_cm2_s) : 0.0;
  const double p_o = sheet_on ? prob.sheet.p_o(prob.sigma_p_opt_cm2, flux_cm2_s) : 0.0;
  // Dark reference occupation of the flat-band layer; the sheet charge change
  // that drives the dipole is measured from here.
  const double f_dark =
      sheet_on ? surface_kinetics(prob.sheet, m, m.n_b(), m.p_b(), 0.0, 0.0).f_bar : 0.0;
  sol.f_s = f_dark;

  if (flux_cm2_s > 0.0) {
    detail::SteadyWork wk;
    detail::BandWork bw;
    double f_bar = f_dark;
    for (int it = 0;; ++it) {
      if (it >= opts.max_outer)
        throw SolverError("solve_steady_illuminated: occupation fixed point stalled");
      ++sol.outer_iterations;
      detail::assemble_excess_layer(prob, sol.mesh, flux_cm2_s, tau_eff, f_bar, f_dark, sol.dn,
                                    sol.dp, wk);
      detail::block_tridiagonal_solve(wk.sub, wk.diag, wk.sup, wk.resid, bw);
      for (std::size_t i = 0; i < nn; ++i) {
        sol.dn[i] -= wk.resid[i][1];
        sol.dp[i] -= wk.resid[i][2];
      }
      if (!sheet_on) break;
      const double f_new =
          surface_kinetics(prob.sheet, m, m.n_b() + sol.dn[0], m.p_b() + sol.dp[0], n_o, p_o)
              .f_bar;
      const double df = std::abs(f_new - f_bar);
      f_bar = f_new;
      if (df <= opts.tol_f) break;
    }
    sol.f_s = f_bar;
  }

  if (sheet_on) {
    const SurfaceKinetics kin = surface_kinetics(prob.sheet, m, m.n_b() + sol.dn[0],
                                                 m.p_b() + sol.dp[0], n_o, p_o);
    sol.surface_rate_cm2_s = kin.U_s;
    sol.delta_f = sol.f_s - f_dark;
    sol.delta_Sigma_e_cm2 = interface_charge_e_cm2(prob.sheet, sol.f_s) -
                            interface_charge_e_cm2(prob.sheet, f_dark);
  }

  detail::integrate_excess_potential(sol.mesh, m.debye_scale_cm(), sol.delta_Sigma_e_cm2,
                                     sol.dn, sol.dp, sol.du);
  sol.layer_V = sol.du[0] * m.thermal_voltage();

  // Barrier relaxation at fixed dark sheet charge.  The dark occupation here
  // is the self-consistent one of the full equilibrium (with the band bending
  // the surface states sit far below the electron quasi-Fermi level and are
  // essentially filled), so the dark charge is dominated by the fixed sheet.
  // The reservoir shifts are those of the bulk-absorption flood alone, taken
  // from the closed-form stationary profile of the same linearized transport:
  // the sheet's own exchange cloud is the screening charge of the dipole
  // layer above and must not drive the barrier a second time.
  if (flux_cm2_s > 0.0 && prob.alpha_b_cm1 > 0.0) {
    const LengthParams lp = length_params(m, tau_eff);
    const StationaryProfile flood(lp, prob.alpha_b_cm1, flux_cm2_s, prob.geometry.length_cm);
    sol.v_edge = std::log1p(std::max(flood.dn(0.0), 0.0) / m.n_b());
    sol.w_edge = std::log1p(std::max(flood.dp(0.0), 0.0) / m.p_b());
  }
  const double Q_dark = prob.Sigma_ss_e_cm2 +
                        (sheet_on ? interface_charge_e_cm2(prob.sheet, eq.f_s) : 0.0);
  if (Q_dark != 0.0 && (sol.v_edge != 0.0 || sol.w_edge != 0.0)) {
    const double u0_dark = potential_for_sheet(m, Q_dark);
    const double u0_lit = potential_for_sheet(m, Q_dark, sol.v_edge, sol.w_edge);
    sol.barrier_V = (u0_lit - u0_dark) * m.thermal_voltage();
  }
  sol.spv_V = sol.layer_V + sol.barrier_V;

  // Global neutrality: the sheet charge change balances the excess bulk charge.
  double bulk = 0.0, gross = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    const double V = sol.mesh.cell_volume_cm(i);
    bulk += (sol.dp[i] - sol.dn[i]) * V;
    gross += (std::abs(sol.dp[i]) + std::abs(sol.dn[i])) * V;
  }
  const double denom = std::max({std::abs(sol.delta_Sigma_e_cm2), gross, 1e-30});
  sol.neutrality_rel = std::abs(sol.delta_Sigma_e_cm2 + bulk) / denom;
  return sol;
}

inline IlluminatedSolution solve_steady_illuminated(const TransportProblem& prob,
                                                    double flux_cm2_s,
                                                    const IlluminatedOptions& opts = {}) {
  return solve_steady_illuminated(prob, flux_cm2_s, solve_equilibrium(prob), opts);
}

// Photovoltage over a photon-flux grid at fixed optical parameters.
inline std::vector<IlluminatedSolution> illuminated_sweep(const TransportProblem& prob,
                                                          const std::vector<double>& fluxes,
                                                          const IlluminatedOptions& opts = {}) {
  const EquilibriumSolution eq = solve_equilibrium(prob);
  std::vector<IlluminatedSolution> out;
  out.reserve(fluxes.size());
  for (double flux : fluxes) out.push_back(solve_steady_illuminated(prob, flux, eq, opts));
  return out;
}

// One illumination line: wavelength plus the two optical couplings it sets.
struct SpectralLine {
  double wavelength_nm = 0.0;
  double alpha_b_cm1 = 0.0;      // bulk absorption
  double sigma_n_opt_cm2 = 0.0;  // interface-state photoionization cross-section
};

// Photovoltage for each line over a common photon-flux grid; rows follow the
// input line order.  The dark solution is shared since it has no optics.
inline std::vector<std::vector<IlluminatedSolution>> spectral_sweep(
    const TransportProblem& prob, const std::vector<SpectralLine>& lines,
    const std::vector<double>& fluxes, const IlluminatedOptions& opts = {}) {
  const EquilibriumSolution eq = solve_equilibrium(prob);
  std::vector<std::vector<IlluminatedSolution>> out;
  out.reserve(lines.size());
  for (const SpectralLine& line : lines) {
    TransportProblem p = prob;
    p.alpha_b_cm1 = line.alpha_b_cm1;
    p.sigma_n_opt_cm2 = line.sigma_n_opt_cm2;
    p.sigma_p_opt_cm2 = 0.0;
    std::vector<IlluminatedSolution> row;
    row.reserve(fluxes.size());
    for (double flux : fluxes) row.push_back(solve_steady_illuminated(p, flux, eq, opts));
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation of the full solver against the closed-form excess profiles
// ---------------------------------------------------------------------------

struct AnalyticComparison {
  double max_rel_dn = 0.0;      // peak-normalized profile deviations
  double max_rel_dp = 0.0;
  double crossing_rel = 0.0;    // excess charge-density zero crossing mismatch
  bool crossing_found = false;  // both profiles cross zero exactly once
  double tau_eff_s = 0.0;       // lifetime handed to the closed form
};

// Runs the full nonlinear solver on a surface-free slab and compares the
// excess densities with the closed-form stationary profiles of the linearized
// system.  The closed form carries a single lifetime, so the trap kinetics are
// condensed to their low-excitation limit: R = (p dn + n dp) / (n_i tau_eff)
// with n_i tau_eff = tau_n0 (p_b + p1) + tau_p0 (n_b + n1).
inline AnalyticComparison validate_against_analytic(const TransportProblem& prob,
                                                    double flux_cm2_s,
                                                    const SolverOptions& opts = {}) {
  if (prob.sheet.Sigma_fs_cm2 != 0.0 || prob.Sigma_ss_e_cm2 != 0.0)
    throw std::invalid_argument("validate_against_analytic needs a surface-free slab");
  const BulkMaterial& m = prob.material;

  AnalyticComparison cmp;
  cmp.tau_eff_s = (prob.trap.tau_n0_s(m) * (m.p_b() + prob.trap.p1_cm3(m)) +
                   prob.trap.tau_p0_s(m) * (m.n_b() + prob.trap.n1_cm3(m))) /
                  m.ni_cm3;

  const SteadySolution num = solve_steady(prob, flux_cm2_s, opts);
  const LengthParams lp = length_params(m, cmp.tau_eff_s);
  const StationaryProfile ana(lp, prob.alpha_b_cm1, flux_cm2_s, prob.geometry.length_cm);

  const std::size_t nn = num.mesh.nodes();
  std::vector<double> adn(nn), adp(nn);
  double peak_n = 0.0, peak_p = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    adn[i] = ana.dn(num.mesh.x[i]);
    adp[i] = ana.dp(num.mesh.x[i]);
    peak_n = std::max(peak_n, std::abs(adn[i]));
    peak_p = std::max(peak_p, std::abs(adp[i]));
  }
  for (std::size_t i = 0; i < nn; ++i) {
    cmp.max_rel_dn = std::max(cmp.max_rel_dn, std::abs(num.dn[i] - adn[i]) / peak_n);
    cmp.max_rel_dp = std::max(cmp.max_rel_dp, std::abs(num.dp[i] - adp[i]) / peak_p);
  }

  // The excess charge dp - dn hands over from hole-rich near the absorbing
  // face to electron-rich at depth; both solutions must agree on where the
  // sign changes.  The numerical excess carries subtraction noise of several
  // percent of the peak, so the crossing is bracketed between the last
  // strongly positive and the first strongly negative node.
  auto crossing = [&](auto&& rho) -> double {
    double peak = 0.0;
    for (std::size_t i = 0; i < nn; ++i) peak = std::max(peak, std::abs(rho(i)));
    const double strong = 0.1 * peak;
    std::size_t last_pos = nn, first_neg = nn;
    for (std::size_t i = 0; i < nn; ++i) {
      if (rho(i) >= strong) last_pos = i;
      if (first_neg == nn && rho(i) <= -strong) first_neg = i;
    }
    if (last_pos == nn || first_neg == nn || last_pos >= first_neg) return -1.0;
    const double a = rho(last_pos), b = rho(first_neg);
    return num.mesh.x[last_pos] +
           (num.mesh.x[first_neg] - num.mesh.x[last_pos]) * a / (a - b);
  };
  const double xn = crossing([&](std::size_t i) { return num.dp[i] - num.dn[i]; });
  const double xa = crossing([&](std::size_t i) { return adp[i] - adn[i]; });
  cmp.crossing_found = xn > 0.0 && xa > 0.0;
  if (cmp.crossing_found) cmp.crossing_rel = std::abs(xn - xa) / xa;
  return cmp;
}

}  // namespace spvion
