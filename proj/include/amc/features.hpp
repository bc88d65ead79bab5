#pragma once

#include "amc/types.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace amc {

namespace detail {

inline bool is_pow2(unsigned n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place, double precision.
inline void fft_pow2(std::vector<cxd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const cxd wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cxd w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        cxd u = a[i + j];
        cxd v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace detail

/// Unnormalized forward DFT: X[p] = sum_k x[k] e^{-j 2 pi p k / l}.
/// Radix-2 fast path for power-of-two lengths, direct summation otherwise.
/// Accumulates in double, stores in the frame's scalar type.
template <class Scalar>
FrameMat<Scalar> dft(const FrameMat<Scalar>& frame) {
  const auto n = static_cast<std::size_t>(frame.rows());
  if (n == 0) throw DataError("dft: empty frame");

  std::vector<cxd> x(n);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = cxd(static_cast<double>(frame(k, 0)), static_cast<double>(frame(k, 1)));

  if (detail::is_pow2(static_cast<unsigned>(n))) {
    detail::fft_pow2(x, false);
  } else {
    std::vector<cxd> out(n, cxd(0, 0));
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t k = 0; k < n; ++k)
        out[p] += x[k] * std::polar(1.0, -2.0 * M_PI * double(p) * double(k) / double(n));
    x = std::move(out);
  }

  FrameMat<Scalar> out(frame.rows(), 2);
  for (std::size_t p = 0; p < n; ++p) {
    out(p, 0) = static_cast<Scalar>(x[p].real());
    out(p, 1) = static_cast<Scalar>(x[p].imag());
  }
  return out;
}

/// Element-wise DFT of a time-domain dataset; labels, ordering and metadata
/// are preserved, domain tag flips to freq.
inline Dataset transform_dataset(const Dataset& ds) {
  if (ds.domain != Domain::Time)
    throw DataError("transform_dataset: dataset is not time-domain");
  Dataset out;
  out.labels = ds.labels;
  out.class_names = ds.class_names;
  out.domain = Domain::Freq;
  out.snr_db = ds.snr_db;
  out.seed = ds.seed;
  out.frames.reserve(ds.frames.size());
  for (const Frame& f : ds.frames) out.frames.push_back(dft(f));
  return out;
}

}  // namespace amc
