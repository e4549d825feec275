#include <catch2/catch_amalgamated.hpp>

#include "spvion/constants.hpp"
#include "spvion/material.hpp"

using namespace spvion;
using Catch::Approx;

namespace {

// The p-type reference material used across the suite: Si-like, N_A = 1e15.
BulkMaterial reference_material() {
  BulkMaterial m;
  m.ni_cm3 = 1.0e10;
  m.doping_cm3 = 1.0e15;
  m.doping = DopingType::acceptor;
  m.mu_n_cm2_Vs = 1340.0;
  m.mu_p_cm2_Vs = 284.0;
  m.epsilon_r = 11.7;
  return m;
}

BulkTrap reference_trap() {
  BulkTrap t;
  t.N_t_cm3 = 1.0e12;
  t.sigma_n_cm2 = 1.0e-14;
  t.sigma_p_cm2 = 1.0e-14;
  t.E_t_eV = 0.0;
  return t;
}

}  // namespace

TEST_CASE("thermal voltage and photon energies") {
  CHECK(thermal_voltage_V(300.0) == Approx(0.02585200).epsilon(1e-6));
  CHECK(photon_energy_eV(1055.0) == Approx(1.17520).epsilon(1e-4));
  CHECK(photon_energy_eV(635.0) == Approx(1.95251).epsilon(1e-4));
  CHECK(photon_energy_eV(399.0) == Approx(3.10738).epsilon(1e-4));
  CHECK(photon_energy_eV(355.0) == Approx(3.49251).epsilon(1e-4));
}

TEST_CASE("equilibrium densities obey charge balance and mass action") {
  auto m = reference_material();
  m.validate();

  CHECK(m.p_b() == Approx(1.0e15).epsilon(1e-6));
  CHECK(m.n_b() == Approx(1.0e5).epsilon(1e-4));
  // Mass action holds to roundoff for any doping level.
  for (double N : {0.0, 1.0e10, 1.0e13, 1.0e15, 1.0e18}) {
    m.doping_cm3 = N;
    CHECK(m.n_b() * m.p_b() == Approx(m.ni_cm3 * m.ni_cm3).epsilon(1e-12));
    CHECK(m.p_b() - m.n_b() == Approx(N).margin(1e-6 * (N + m.ni_cm3)));
  }
}

TEST_CASE("Fermi potential of the reference material") {
  auto m = reference_material();
  CHECK(m.u_F() == Approx(11.512925).epsilon(1e-6));
  // In volts: +0.29764 V below midgap for p-type.
  CHECK(m.u_F() * m.thermal_voltage() == Approx(0.297632).epsilon(1e-4));

  // Donor doping mirrors the sign.
  m.doping = DopingType::donor;
  CHECK(m.u_F() == Approx(-11.512925).epsilon(1e-6));
}

TEST_CASE("Debye lengths") {
  auto m = reference_material();
  // eps0*eps*kT/e^2 scale.
  CHECK(m.debye_scale_cm() == Approx(1.671547e5).epsilon(1e-4));
  // Majority-carrier (extrinsic) screening length: 0.129 um.
  CHECK(m.debye_majority_cm() == Approx(1.29288e-5).epsilon(2e-4));
  // Intrinsic screening length: 40.9 um.
  CHECK(m.debye_intrinsic_cm() == Approx(4.0885e-3).epsilon(2e-4));
  // lambda ~ 1/sqrt(n): quadrupling the density halves the length.
  CHECK(m.debye_length_cm(4.0e15) == Approx(0.5 * m.debye_length_cm(1.0e15)).epsilon(1e-12));
}

TEST_CASE("diffusivities via the Einstein relation") {
  auto m = reference_material();
  CHECK(m.D_n_cm2_s() == Approx(34.6417).epsilon(1e-4));
  CHECK(m.D_p_cm2_s() == Approx(7.34197).epsilon(1e-4));
}

TEST_CASE("bulk trap lifetimes") {
  auto m = reference_material();
  auto t = reference_trap();
  CHECK(t.tau_n0_s(m) == Approx(1.0e-5).epsilon(1e-12));
  CHECK(t.tau_p0_s(m) == Approx(1.0e-5).epsilon(1e-12));
  // Midgap level: emission references equal ni.
  CHECK(t.n1_cm3(m) == Approx(1.0e10).epsilon(1e-12));
  CHECK(t.p1_cm3(m) == Approx(1.0e10).epsilon(1e-12));
  // Linear-response lifetime of the reference system: 1.00002 s, quoted as
  // 1.0 s at two significant figures.
  CHECK(effective_lifetime_s(m, t) == Approx(1.00002).epsilon(1e-7));
  CHECK(effective_lifetime_s(m, t) == Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bulk recombination sign and equilibrium null") {
  auto m = reference_material();
  auto t = reference_trap();
  const double n0 = m.n_b(), p0 = m.p_b();
  CHECK(bulk_recombination(m, t, n0, p0) == Approx(0.0).margin(1e-12 * n0 * p0));
  CHECK(bulk_recombination(m, t, 2.0 * n0, p0) > 0.0);
  CHECK(bulk_recombination(m, t, 0.5 * n0, p0) < 0.0);

  // Linearization matches the effective-lifetime form for small excess.
  const double dn = 1.0e-4 * n0, dp = 1.0e-4 * n0;
  const double R = bulk_recombination(m, t, n0 + dn, p0 + dp);
  const double R_lin = (m.n_b() * dp + m.p_b() * dn) / (m.ni_cm3 * effective_lifetime_s(m, t));
  CHECK(R == Approx(R_lin).epsilon(1e-3));
}

TEST_CASE("exp clamping keeps extreme arguments finite") {
  CHECK(std::isfinite(clamped_exp(500.0)));
  CHECK(std::isfinite(clamped_exp(-500.0)));
  CHECK(clamped_exp(0.0) == Approx(1.0));
  CHECK(clamped_exp(1.0) == Approx(std::exp(1.0)));
}

TEST_CASE("material validation rejects bad inputs") {
  auto m = reference_material();
  m.ni_cm3 = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = reference_material();
  m.epsilon_r = 0.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  SlabGeometry g;
  g.nodes = 4;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
