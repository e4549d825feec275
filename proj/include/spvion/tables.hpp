#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "spvion/errors.hpp"

// Tabulated spectral quantities keyed by vacuum wavelength.  Lookups are
// exact-match (within a ppm) rather than interpolated: these tables hold
// measured laser lines, and silently interpolating absorption data across
// decades would hide input mistakes.

namespace spvion {

class WavelengthTable {
 public:
  WavelengthTable() = default;
  WavelengthTable(std::initializer_list<std::pair<double, double>> rows) {
    for (const auto& [wl, v] : rows) insert(wl, v);
  }

  void insert(double wavelength_nm, double value) {
    auto it = std::lower_bound(rows_.begin(), rows_.end(), wavelength_nm,
                               [](const auto& r, double w) { return r.first < w; });
    if (it != rows_.end() && same_line(it->first, wavelength_nm)) {
      it->second = value;
    } else {
      rows_.insert(it, {wavelength_nm, value});
    }
  }

  bool contains(double wavelength_nm) const { return find(wavelength_nm) != nullptr; }

  double at(double wavelength_nm, const char* what) const {
    const double* v = find(wavelength_nm);
    if (!v) {
      std::string msg = std::string(what) + ": no entry at " + format(wavelength_nm) +
                        " nm; available:";
      for (const auto& r : rows_) msg += " " + format(r.first);
      throw IoError(msg);
    }
    return *v;
  }

  const std::vector<std::pair<double, double>>& rows() const { return rows_; }

 private:
  std::vector<std::pair<double, double>> rows_;  // sorted by wavelength

  static bool same_line(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(a, b); }

  const double* find(double wavelength_nm) const {
    for (const auto& r : rows_)
      if (same_line(r.first, wavelength_nm)) return &r.second;
    return nullptr;
  }

  static std::string format(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", w);
    return buf;
  }
};

// Band-to-band absorption coefficient of the substrate at the laser lines
// used throughout, cm^-1.  1550 nm is below the gap: no linear absorption.
inline WavelengthTable default_bulk_absorption() {
  return WavelengthTable{{355.0, 1.04e6}, {399.0, 9.52e4}, {635.0, 3.8e3},
                         {1055.0, 16.3},  {1300.0, 2.7e-5}, {1550.0, 0.0}};
}

// Fitted interface-state optical cross sections at the same lines, cm^2.
// 1550 nm is below the photoionization threshold.
inline WavelengthTable default_interface_cross_sections() {
  return WavelengthTable{{355.0, 1.95e-17}, {399.0, 3.6e-17}, {635.0, 3.6e-16},
                         {1055.0, 3.24e-15}, {1300.0, 1.1e-19}, {1550.0, 0.0}};
}

}  // namespace spvion
