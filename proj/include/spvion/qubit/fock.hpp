#pragma once

// Matrix elements of the recoil displacement operator exp(i*eta*(a+a^dag))
// on the truncated oscillator ladder, plus thermal-state utilities.
//
// In the interaction picture the operator becomes D(beta) with
// beta = i*eta*exp(i*theta), theta = omega_x*t, and its Fock elements
// factor into a time-independent radial part and a pure phase:
//   <m|D|n> = R[m][d] * i^d * exp(+i*d*theta)   for m >= n, d = m-n
//   <n|D|m> = R[m][d] * i^d * exp(-i*d*theta)
//   R[m][d] = sqrt((m-d)!/m!) * eta^d * exp(-eta^2/2) * L_{m-d}^{(d)}(eta^2)
// Only the radial table is precomputed; the stepper rotates the phases.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace spvion {

// Carrier coupling ratio <n|exp(i*eta*(a+a^dag))|n> = exp(-eta^2/2) L_n(eta^2).
inline double carrier_coupling(int n, double eta) {
  if (n < 0) throw std::invalid_argument("carrier_coupling: n must be >= 0");
  const double x = eta * eta;
  double lm1 = 0.0, l = 1.0;  // L_{-1}, L_0
  for (int k = 0; k < n; ++k) {
    const double lp1 = ((2.0 * k + 1.0 - x) * l - k * lm1) / (k + 1.0);
    lm1 = l;
    l = lp1;
  }
  return std::exp(-x / 2.0) * l;
}

struct DisplacementTable {
  int n_max = 0;      // top ladder state kept
  int half_band = 0;  // diagonals beyond this are dropped
  double eta = 0.0;
  // radial[m*(half_band+1) + d] = R[m][d] for d = 0..min(half_band, m).
  std::vector<double> radial;
  // |<n_max|D|0>|; when this is not negligible the ladder is too short to
  // represent the coupling and results are suspect.
  double top_to_bottom = 0.0;
  bool truncation_suspicious = false;

  double r(int m, int d) const {
    return radial[static_cast<std::size_t>(m) * (half_band + 1) + d];
  }
};

// Builds the radial table.  Diagonals whose largest element falls below
// drop_tol are omitted from the band; their integrated effect on the
// dynamics is orders of magnitude below the solver tolerances.
inline DisplacementTable make_displacement_table(int n_max, double eta,
                                                 double drop_tol = 1e-7) {
  if (n_max < 0) throw std::invalid_argument("displacement table: n_max must be >= 0");
  if (eta < 0.0) throw std::invalid_argument("displacement table: eta must be >= 0");
  if (!(drop_tol > 0.0)) throw std::invalid_argument("displacement table: drop_tol must be > 0");

  const int K = n_max + 1;
  const double x = eta * eta;
  const double envelope = std::exp(-x / 2.0);

  // full[m][d] for all d = 0..m
  std::vector<std::vector<double>> full(K);
  for (int m = 0; m < K; ++m) full[m].assign(m + 1, 0.0);

  for (int d = 0; d <= n_max; ++d) {
    // prefactor(m) = eta^d * sqrt((m-d)!/m!) built up the column, and the
    // generalized Laguerre L_k^{(d)}(x) by the three-term recurrence in k.
    double pref = 1.0;
    for (int j = 1; j <= d; ++j) pref *= eta / std::sqrt(static_cast<double>(j));
    double lm1 = 0.0, l = 1.0;  // L_{-1}^{(d)}, L_0^{(d)}
    int k = 0;                  // lower index: element row m = k + d
    for (int m = d; m <= n_max; ++m, ++k) {
      if (m > d) {
        // advance prefactor from row m-1 to m: multiply by sqrt((m-d)/m)...
        // eta^d sqrt((m-d)!/m!) / (eta^d sqrt((m-1-d)!/(m-1)!)) = sqrt((m-d)/m)
        pref *= std::sqrt(static_cast<double>(m - d) / static_cast<double>(m));
        const double lp1 = ((2.0 * (k - 1) + d + 1.0 - x) * l - (k - 1 + d) * lm1) / k;
        lm1 = l;
        l = lp1;
      }
      full[m][d] = envelope * pref * l;
    }
  }

  // Band width: keep every diagonal that anywhere exceeds drop_tol.
  int b = 0;
  for (int d = 1; d <= n_max; ++d) {
    double peak = 0.0;
    for (int m = d; m <= n_max; ++m) peak = std::max(peak, std::abs(full[m][d]));
    if (peak >= drop_tol) b = d;
  }

  DisplacementTable table;
  table.n_max = n_max;
  table.half_band = b;
  table.eta = eta;
  table.radial.assign(static_cast<std::size_t>(K) * (b + 1), 0.0);
  for (int m = 0; m < K; ++m)
    for (int d = 0; d <= std::min(b, m); ++d)
      table.radial[static_cast<std::size_t>(m) * (b + 1) + d] = full[m][d];
  table.top_to_bottom = std::abs(full[n_max][n_max]);
  table.truncation_suspicious = table.top_to_bottom > 1e-8;
  return table;
}

// Thermal occupation probability p_n for mean phonon number nbar.
inline double thermal_population(double nbar, int n) {
  if (n < 0) throw std::invalid_argument("thermal_population: n must be >= 0");
  if (nbar < 0.0) throw std::invalid_argument("thermal_population: nbar must be >= 0");
  if (nbar == 0.0) return n == 0 ? 1.0 : 0.0;
  const double q = nbar / (nbar + 1.0);
  return std::pow(q, n) / (nbar + 1.0);
}

// Smallest n_max with thermal tail P(n > n_max) < tail_tol.
inline int thermal_tail_levels(double nbar, double tail_tol = 1e-4) {
  if (nbar <= 0.0) return 0;
  // P(n > M) = (nbar/(nbar+1))^{M+1}
  const double lq = std::log(nbar / (nbar + 1.0));
  const int M = static_cast<int>(std::ceil(std::log(tail_tol) / lq - 1.0));
  return std::max(M, 0);
}

// Default ladder truncation for an initial thermal state: generous
// mean-plus-ten-sigma headroom, and never less than the tail rule demands.
inline int default_n_max(double nbar0) {
  const int headroom =
      static_cast<int>(std::ceil(nbar0 + 10.0 * std::sqrt(nbar0 + 1.0)));
  return std::max({30, headroom, thermal_tail_levels(nbar0)});
}

}  // namespace spvion
