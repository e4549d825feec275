#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "spvion/ion_response.hpp"

using namespace spvion;
using Catch::Approx;

TEST_CASE("surface volt to ion field is the published transfer ratio") {
  const ElectrostaticMap map;
  CHECK(spv_to_field(1.0, map) == Approx(1055.0).epsilon(1e-12));
  CHECK(spv_to_field(0.0, map) == 0.0);
  CHECK(spv_to_field(0.273, map) == Approx(288.0).epsilon(1e-3));
  CHECK(spv_to_field(-0.5, map) == Approx(-527.5).epsilon(1e-12));
}

TEST_CASE("compensation voltage cancels the stray field") {
  const ElectrostaticMap map;
  CHECK(map.ratio() == Approx(2880.0 / 1055.0).epsilon(1e-12));
  CHECK(map.ratio() == Approx(2.73).epsilon(1e-3));

  CHECK(field_to_compensation_voltage(0.0, map) == 0.0);
  // Positive surface voltage pushes the ion; the dc pair must pull back.
  const double dv = field_to_compensation_voltage(spv_to_field(0.273, map), map);
  CHECK(dv == Approx(-0.1).epsilon(1e-3));

  SECTION("composition is a pure ratio for any surface voltage") {
    for (double spv : {-0.4, -0.005, 0.01, 0.273, 0.64}) {
      const double v = field_to_compensation_voltage(spv_to_field(spv, map), map);
      CHECK(v == Approx(-spv / map.ratio()).epsilon(1e-12));
    }
  }
}

TEST_CASE("static displacement of the secular oscillator") {
  const TrapMechanics mech;
  CHECK(field_to_displacement(0.0, mech) == 0.0);
  const double x = field_to_displacement(288.0, mech);
  CHECK(x == Approx(1.60789606e-6).epsilon(1e-8));
  CHECK(x == Approx(1.6e-6).epsilon(0.05));

  SECTION("stiffening the trap shrinks the push quadratically") {
    TrapMechanics stiff = mech;
    stiff.secular_frequency_rad_s *= 4.0;
    CHECK(field_to_displacement(288.0, stiff) == Approx(x / 16.0).epsilon(1e-12));
  }
}

TEST_CASE("Doppler shift of the beatnote") {
  const double dk = 2.0 * std::numbers::pi / 251.0e-9;  // perpendicular Raman pair
  CHECK(doppler_shift_Hz(dk, 0.0) == 0.0);
  const double f = doppler_shift_Hz(dk, 3.3e-3);  // 3.3 nm/us
  CHECK(f == Approx(13147.41).epsilon(1e-6));
  CHECK(std::abs(f - 13.0e3) < 0.5e3);

  SECTION("velocity recovers from the measured shift") {
    CHECK(velocity_from_shift_m_s(dk, f) == Approx(3.3e-3).epsilon(1e-12));
    CHECK_THROWS_AS(velocity_from_shift_m_s(0.0, f), std::invalid_argument);
  }
}

TEST_CASE("zero-point width and Lamb-Dicke factor") {
  const TrapMechanics mech;
  CHECK(mech.ground_state_size_m() == Approx(4.29784306e-9).epsilon(1e-8));
  CHECK(mech.ground_state_size_m() == Approx(4.3e-9).epsilon(0.01));
  CHECK(lamb_dicke(mech) == Approx(0.15213602).epsilon(1e-7));
  CHECK(lamb_dicke(mech) == Approx(0.152).epsilon(1e-3));

  SECTION("perpendicular geometry stretches the beatnote to 251 nm") {
    TrapMechanics perp = mech;
    perp.effective_wavevector_m1 = std::sqrt(2.0) * (2.0 * std::numbers::pi / 355.0e-9);
    const double beat_nm = 2.0 * std::numbers::pi / perp.effective_wavevector_m1 * 1e9;
    CHECK(beat_nm == Approx(251.0).epsilon(1e-3));
  }

  SECTION("closed forms hold across random trap parameters") {
    std::mt19937 rng(73);
    std::uniform_real_distribution<double> mass(9.0, 200.0);    // amu
    std::uniform_real_distribution<double> freq(0.2e6, 20e6);   // Hz
    std::uniform_real_distribution<double> wl(200e-9, 2000e-9); // m
    for (int trial = 0; trial < 64; ++trial) {
      TrapMechanics t;
      t.ion_mass_kg = mass(rng) * constants::kAtomicMassUnit_kg;
      t.secular_frequency_rad_s = 2.0 * std::numbers::pi * freq(rng);
      t.effective_wavevector_m1 = 2.0 * std::numbers::pi / wl(rng);
      const double x0 = std::sqrt(constants::kHbar_Js /
                                  (2.0 * t.ion_mass_kg * t.secular_frequency_rad_s));
      CHECK(t.ground_state_size_m() == Approx(x0).epsilon(1e-10));
      CHECK(lamb_dicke(t) == Approx(t.effective_wavevector_m1 * x0).epsilon(1e-10));
      CHECK(t.ground_state_size_m() > 0.0);
    }
  }
}

TEST_CASE("unphysical trap parameters are rejected") {
  TrapMechanics mech;
  mech.ion_mass_kg = 0.0;
  CHECK_THROWS_AS(lamb_dicke(mech), std::invalid_argument);

  mech = TrapMechanics{};
  mech.secular_frequency_rad_s = -1.0;
  CHECK_THROWS_AS(field_to_displacement(1.0, mech), std::invalid_argument);

  ElectrostaticMap map;
  map.field_per_dc_volt = 0.0;
  CHECK_THROWS_AS(map.validate(), std::invalid_argument);
}
