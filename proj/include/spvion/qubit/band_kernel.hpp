#pragma once

// Dense complex matrices over the truncated oscillator ladder, stored as
// separate real/imaginary planes with a padded row stride, plus the banded
// matrix-times-dense product that dominates the master-equation stepper.
// The coupling operator only connects ladder states a few rungs apart, so
// one product costs K*(2b+1)*K complex multiply-accumulates instead of K^3.
//
// The hot kernel keeps a 16-column accumulator tile in registers across the
// whole diagonal loop; the straightforward nested loop leaves the
// accumulator in memory and runs several times slower.  An AVX-512 path is
// selected at compile time, with a portable scalar fallback.

#include <cstddef>
#include <cstring>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace spvion {

// Row stride in doubles for a K-level plane: a multiple of the 16-column
// kernel tile, nudged off multiples of 64 so that row addresses do not all
// collide in the same L1 cache sets (a 1024-byte stride costs ~1.5x).
inline int padded_stride(int n_levels) {
  int stride = (n_levels + 15) / 16 * 16;
  if ((stride & 63) == 0) stride += 16;
  return stride;
}

// Complex K x K matrix as two row-major planes.  Padding columns stay zero:
// every routine here writes pads only with linear combinations of pads.
struct FockPlanes {
  int n_levels = 0;
  int stride = 0;
  std::vector<double> re, im;

  FockPlanes() = default;
  explicit FockPlanes(int K)
      : n_levels(K), stride(padded_stride(K)),
        re(static_cast<std::size_t>(K) * stride, 0.0),
        im(static_cast<std::size_t>(K) * stride, 0.0) {}

  void zero() {
    std::memset(re.data(), 0, re.size() * sizeof(double));
    std::memset(im.data(), 0, im.size() * sizeof(double));
  }

  double* row_re(int m) { return re.data() + static_cast<std::size_t>(m) * stride; }
  double* row_im(int m) { return im.data() + static_cast<std::size_t>(m) * stride; }
  const double* row_re(int m) const { return re.data() + static_cast<std::size_t>(m) * stride; }
  const double* row_im(int m) const { return im.data() + static_cast<std::size_t>(m) * stride; }
};

// Banded complex K x K matrix: row m holds the entries for columns
// m-half_band .. m+half_band at [m][half_band+d].  Out-of-range slots are
// kept at zero so edge rows need no special casing when building.
struct BandMatrix {
  int n_levels = 0;
  int half_band = 0;
  std::vector<double> re, im;  // K x (2*half_band+1)

  BandMatrix() = default;
  BandMatrix(int K, int b)
      : n_levels(K), half_band(b),
        re(static_cast<std::size_t>(K) * (2 * b + 1), 0.0),
        im(static_cast<std::size_t>(K) * (2 * b + 1), 0.0) {}

  int cols() const { return 2 * half_band + 1; }
};

namespace qubit_detail {

#if defined(__AVX512F__)

inline void band_mac_impl(int K, int stride, int b, const double* __restrict wre,
                          const double* __restrict wim, const double* __restrict xre,
                          const double* __restrict xim, double* __restrict yre,
                          double* __restrict yim) {
  const int w_cols = 2 * b + 1;
  // Tile-column outer, row inner: the x working set per tile column is
  // K*16 doubles per plane and stays L1-resident for any ladder size.
  for (int n0 = 0; n0 < stride; n0 += 16) {
    for (int m = 0; m < K; ++m) {
      const int dlo = (m - b < 0) ? -m : -b;
      const int dhi = (m + b >= K) ? (K - 1 - m) : b;
      const double* wr_row = wre + static_cast<std::size_t>(m) * w_cols + b;
      const double* wi_row = wim + static_cast<std::size_t>(m) * w_cols + b;
      const double* xr = xre + static_cast<std::size_t>(m + dlo) * stride + n0;
      const double* xi = xim + static_cast<std::size_t>(m + dlo) * stride + n0;
      __m512d ar0 = _mm512_setzero_pd(), ar1 = _mm512_setzero_pd();
      __m512d ai0 = _mm512_setzero_pd(), ai1 = _mm512_setzero_pd();
      for (int d = dlo; d <= dhi; ++d, xr += stride, xi += stride) {
        const __m512d cr = _mm512_set1_pd(wr_row[d]);
        const __m512d ci = _mm512_set1_pd(wi_row[d]);
        const __m512d r0 = _mm512_loadu_pd(xr);
        const __m512d r1 = _mm512_loadu_pd(xr + 8);
        const __m512d i0 = _mm512_loadu_pd(xi);
        const __m512d i1 = _mm512_loadu_pd(xi + 8);
        ar0 = _mm512_fmadd_pd(cr, r0, ar0);
        ar0 = _mm512_fnmadd_pd(ci, i0, ar0);
        ar1 = _mm512_fmadd_pd(cr, r1, ar1);
        ar1 = _mm512_fnmadd_pd(ci, i1, ar1);
        ai0 = _mm512_fmadd_pd(cr, i0, ai0);
        ai0 = _mm512_fmadd_pd(ci, r0, ai0);
        ai1 = _mm512_fmadd_pd(cr, i1, ai1);
        ai1 = _mm512_fmadd_pd(ci, r1, ai1);
      }
      double* yr = yre + static_cast<std::size_t>(m) * stride + n0;
      double* yi = yim + static_cast<std::size_t>(m) * stride + n0;
      _mm512_storeu_pd(yr, ar0);
      _mm512_storeu_pd(yr + 8, ar1);
      _mm512_storeu_pd(yi, ai0);
      _mm512_storeu_pd(yi + 8, ai1);
    }
  }
}

#else

inline void band_mac_impl(int K, int stride, int b, const double* __restrict wre,
                          const double* __restrict wim, const double* __restrict xre,
                          const double* __restrict xim, double* __restrict yre,
                          double* __restrict yim) {
  const int w_cols = 2 * b + 1;
  for (int n0 = 0; n0 < stride; n0 += 16) {
    for (int m = 0; m < K; ++m) {
      const int dlo = (m - b < 0) ? -m : -b;
      const int dhi = (m + b >= K) ? (K - 1 - m) : b;
      const double* wr_row = wre + static_cast<std::size_t>(m) * w_cols + b;
      const double* wi_row = wim + static_cast<std::size_t>(m) * w_cols + b;
      double ar[16] = {0.0}, ai[16] = {0.0};
      for (int d = dlo; d <= dhi; ++d) {
        const double cr = wr_row[d];
        const double ci = wi_row[d];
        const double* xr = xre + static_cast<std::size_t>(m + d) * stride + n0;
        const double* xi = xim + static_cast<std::size_t>(m + d) * stride + n0;
        for (int j = 0; j < 16; ++j) {
          ar[j] += cr * xr[j] - ci * xi[j];
          ai[j] += cr * xi[j] + ci * xr[j];
        }
      }
      std::memcpy(yre + static_cast<std::size_t>(m) * stride + n0, ar, sizeof(ar));
      std::memcpy(yim + static_cast<std::size_t>(m) * stride + n0, ai, sizeof(ai));
    }
  }
}

#endif

}  // namespace qubit_detail

// y = w * x (complex).  All three must share n_levels; y may not alias x.
inline void band_mac(const BandMatrix& w, const FockPlanes& x, FockPlanes& y) {
  qubit_detail::band_mac_impl(x.n_levels, x.stride, w.half_band, w.re.data(),
                              w.im.data(), x.re.data(), x.im.data(),
                              y.re.data(), y.im.data());
}

// y = x^dagger (conjugate transpose), pads cleared.
inline void plane_adjoint(const FockPlanes& x, FockPlanes& y) {
  const int K = x.n_levels;
  for (int m = 0; m < K; ++m) {
    double* yr = y.row_re(m);
    double* yi = y.row_im(m);
    for (int n = 0; n < K; ++n) {
      yr[n] = x.re[static_cast<std::size_t>(n) * x.stride + m];
      yi[n] = -x.im[static_cast<std::size_t>(n) * x.stride + m];
    }
    for (int n = K; n < x.stride; ++n) yr[n] = yi[n] = 0.0;
  }
}

// y = x
inline void plane_copy(const FockPlanes& x, FockPlanes& y) {
  std::memcpy(y.re.data(), x.re.data(), x.re.size() * sizeof(double));
  std::memcpy(y.im.data(), x.im.data(), x.im.size() * sizeof(double));
}

// y = x + a*k
inline void plane_xpay(const FockPlanes& x, double a, const FockPlanes& k,
                       FockPlanes& y) {
  const std::size_t n = x.re.size();
  const double* __restrict xr = x.re.data();
  const double* __restrict xi = x.im.data();
  const double* __restrict kr = k.re.data();
  const double* __restrict ki = k.im.data();
  double* __restrict yr = y.re.data();
  double* __restrict yi = y.im.data();
  for (std::size_t j = 0; j < n; ++j) yr[j] = xr[j] + a * kr[j];
  for (std::size_t j = 0; j < n; ++j) yi[j] = xi[j] + a * ki[j];
}

// y += a*k
inline void plane_axpy(double a, const FockPlanes& k, FockPlanes& y) {
  const std::size_t n = y.re.size();
  const double* __restrict kr = k.re.data();
  const double* __restrict ki = k.im.data();
  double* __restrict yr = y.re.data();
  double* __restrict yi = y.im.data();
  for (std::size_t j = 0; j < n; ++j) yr[j] += a * kr[j];
  for (std::size_t j = 0; j < n; ++j) yi[j] += a * ki[j];
}

// Frobenius norm squared.
inline double plane_norm2(const FockPlanes& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.re.size(); ++j) s += x.re[j] * x.re[j];
  for (std::size_t j = 0; j < x.im.size(); ++j) s += x.im[j] * x.im[j];
  return s;
}

}  // namespace spvion
