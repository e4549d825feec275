#pragma once

// One-dimensional graded mesh for the slab 0 <= x <= l.  Cells grow
// geometrically away from the illuminated face so the screening region
// (a few hole Debye lengths) is resolved without wasting nodes in the
// quasi-neutral bulk.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace spvion {

struct Mesh {
  std::vector<double> x;  // node positions [cm], ascending, x.front()=0, x.back()=l
  std::vector<double> h;  // edge lengths [cm], h[i] = x[i+1] - x[i]

  std::size_t nodes() const { return x.size(); }
  double length_cm() const { return x.back(); }

  // Finite-volume control volume of node i (half-cells at the faces).
  double cell_volume_cm(std::size_t i) const {
    const double left = (i == 0) ? 0.0 : h[i - 1];
    const double right = (i + 1 == x.size()) ? 0.0 : h[i];
    return 0.5 * (left + right);
  }
};

namespace detail {

// Sum of the geometric series h0 * (g^m - 1) / (g - 1) without the
// removable singularity at g = 1.
inline double graded_span(double h0, double g, std::size_t m) {
  if (std::abs(g - 1.0) < 1e-12) return h0 * static_cast<double>(m);
  return h0 * std::expm1(static_cast<double>(m) * std::log(g)) / (g - 1.0);
}

}  // namespace detail

// Geometrically graded mesh: first cell h0, each subsequent cell larger by a
// fixed ratio chosen so the last node lands on l exactly.
inline Mesh graded_mesh(double length_cm, std::size_t nodes, double h0_cm) {
  if (nodes < 3) throw std::invalid_argument("graded_mesh: need at least 3 nodes");
  if (!(length_cm > 0.0) || !(h0_cm > 0.0))
    throw std::invalid_argument("graded_mesh: length and first cell must be positive");
  const std::size_t m = nodes - 1;  // cell count
  if (h0_cm * static_cast<double>(m) > length_cm * (1.0 + 1e-12) &&
      detail::graded_span(h0_cm, 1e-6, m) > length_cm)
    throw std::invalid_argument("graded_mesh: first cell too large for requested node count");

  // Growth ratio from the span equation; monotone in g, so bisect.
  double lo = 1e-6, hi = 64.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::graded_span(h0_cm, mid, m) < length_cm)
      lo = mid;
    else
      hi = mid;
  }
  const double g = 0.5 * (lo + hi);

  Mesh mesh;
  mesh.x.resize(nodes);
  mesh.h.resize(m);
  double step = h0_cm;
  mesh.x[0] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mesh.h[i] = step;
    mesh.x[i + 1] = mesh.x[i] + step;
    step *= g;
  }
  // Absorb the residual rounding into the last cell and pin the far face.
  mesh.h[m - 1] += length_cm - mesh.x[m];
  mesh.x[m] = length_cm;
  if (!(mesh.h[m - 1] > 0.0)) throw SolverError("graded_mesh: degenerate last cell");
  return mesh;
}

// Halve every cell: used for discretization-error checks.
inline Mesh refine(const Mesh& coarse) {
  Mesh fine;
  fine.x.reserve(coarse.x.size() * 2 - 1);
  for (std::size_t i = 0; i + 1 < coarse.x.size(); ++i) {
    fine.x.push_back(coarse.x[i]);
    fine.x.push_back(0.5 * (coarse.x[i] + coarse.x[i + 1]));
  }
  fine.x.push_back(coarse.x.back());
  fine.h.resize(fine.x.size() - 1);
  for (std::size_t i = 0; i + 1 < fine.x.size(); ++i) fine.h[i] = fine.x[i + 1] - fine.x[i];
  return fine;
}

}  // namespace spvion
