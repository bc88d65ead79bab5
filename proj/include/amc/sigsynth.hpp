#pragma once

#include "amc/rng.hpp"
#include "amc/types.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace amc {

enum class Scheme : int { CPFSK = 0, GFSK = 1, PAM4 = 2, QPSK = 3 };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::CPFSK: return "CPFSK";
    case Scheme::GFSK: return "GFSK";
    case Scheme::PAM4: return "PAM4";
    case Scheme::QPSK: return "QPSK";
  }
  throw UsageError("unknown modulation scheme");
}

inline std::vector<Scheme> default_schemes() {
  return {Scheme::CPFSK, Scheme::GFSK, Scheme::PAM4, Scheme::QPSK};
}

struct SchemeParams {
  int samples_per_symbol = 8;
  double modulation_index = 0.5;  // CPFSK / GFSK
  double gaussian_bt = 0.35;      // GFSK only

  void validate() const {
    if (samples_per_symbol < 1)
      throw UsageError("samples_per_symbol must be >= 1");
    if (gaussian_bt <= 0.0 || gaussian_bt > 1.0)
      throw UsageError("gaussian_bt must be in (0, 1]");
  }
};

struct ChannelConfig {
  double snr_db = 18.0;
  double cfo_normalized = 0.0;  // cycles per sample
  double sro_ppm = 0.0;
  std::vector<cxd> fading_taps = {cxd(1.0, 0.0)};
  bool noise_enabled = true;

  void validate() const {
    if (fading_taps.empty())
      throw UsageError("fading_taps must be nonempty");
    if (std::isinf(snr_db) && snr_db < 0)
      throw UsageError("snr_db must be finite");
  }
};

namespace detail {

// Gaussian pulse for GFSK, truncated to +-2 symbol periods, normalized to
// unit area so the total phase advance per symbol matches CPFSK.
inline std::vector<double> gaussian_pulse(double bt, int sps) {
  const int half = 2 * sps;
  const double sigma = std::sqrt(std::log(2.0)) / (2.0 * M_PI * bt);
  std::vector<double> g(2 * half + 1);
  double sum = 0.0;
  for (int i = 0; i < static_cast<int>(g.size()); ++i) {
    double t = static_cast<double>(i - half) / sps;
    g[i] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

inline CxVector phase_modulate(const std::vector<double>& freq,
                               double rad_per_sample) {
  CxVector out(freq.size());
  double phase = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k) {
    phase += rad_per_sample * freq[k];
    out[k] = std::polar(1.0, phase);
  }
  return out;
}

}  // namespace detail

/// Maps a bit sequence to a unit-average-power baseband sample sequence.
/// Rectangular pulses for the linear schemes; CPFSK/GFSK are constant
/// envelope by construction.
inline CxVector modulate(const std::vector<std::uint8_t>& bits, Scheme scheme,
                         const SchemeParams& p = {}) {
  p.validate();
  if (bits.empty()) throw DataError("modulate: empty bit sequence");
  const int sps = p.samples_per_symbol;

  switch (scheme) {
    case Scheme::QPSK: {
      // Gray map, unit-energy symbols (+-1 +- j)/sqrt(2)
      const int nsym = static_cast<int>(bits.size()) / 2;
      if (nsym == 0) throw DataError("modulate: need at least 2 bits for QPSK");
      const double a = 1.0 / std::sqrt(2.0);
      CxVector out(nsym * sps);
      for (int s = 0; s < nsym; ++s) {
        double re = bits[2 * s] ? -a : a;
        double im = bits[2 * s + 1] ? -a : a;
        out.segment(s * sps, sps).setConstant(cxd(re, im));
      }
      return out;
    }
    case Scheme::PAM4: {
      // Gray map onto {-3,-1,+1,+3}/sqrt(5); mean symbol power 1
      static const double levels[4] = {-3.0, -1.0, 1.0, 3.0};
      const int nsym = static_cast<int>(bits.size()) / 2;
      if (nsym == 0) throw DataError("modulate: need at least 2 bits for PAM4");
      const double a = 1.0 / std::sqrt(5.0);
      CxVector out(nsym * sps);
      for (int s = 0; s < nsym; ++s) {
        int gray = (bits[2 * s] << 1) | bits[2 * s + 1];
        int idx = gray ^ (gray >> 1);  // Gray decode
        out.segment(s * sps, sps).setConstant(cxd(levels[idx] * a, 0.0));
      }
      return out;
    }
    case Scheme::CPFSK: {
      // NRZ frequency pulse, phase advance pi*h per symbol
      std::vector<double> freq(bits.size() * sps);
      for (std::size_t s = 0; s < bits.size(); ++s) {
        double d = bits[s] ? 1.0 : -1.0;
        std::fill_n(freq.begin() + s * sps, sps, d);
      }
      return detail::phase_modulate(freq, M_PI * p.modulation_index / sps);
    }
    case Scheme::GFSK: {
      // Gaussian-filtered NRZ, then the same phase integrator as CPFSK
      std::vector<double> nrz(bits.size() * sps);
      for (std::size_t s = 0; s < bits.size(); ++s) {
        double d = bits[s] ? 1.0 : -1.0;
        std::fill_n(nrz.begin() + s * sps, sps, d);
      }
      const auto g = detail::gaussian_pulse(p.gaussian_bt, sps);
      const int half = static_cast<int>(g.size()) / 2;
      std::vector<double> freq(nrz.size());
      for (std::size_t k = 0; k < nrz.size(); ++k) {
        double acc = 0.0;
        for (int i = 0; i < static_cast<int>(g.size()); ++i) {
          int j = static_cast<int>(k) + i - half;
          // extend edges so the envelope stays constant at the boundaries
          j = std::clamp(j, 0, static_cast<int>(nrz.size()) - 1);
          acc += g[i] * nrz[j];
        }
        freq[k] = acc;
      }
      return detail::phase_modulate(freq, M_PI * p.modulation_index / sps);
    }
  }
  throw UsageError("modulate: unknown scheme");
}

/// x[k] = sqrt(rho) * (s (*) h)[k] + n[k], with CFO rotation and fractional
/// SRO resampling folded into the impairment chain.
inline CxVector apply_channel(const CxVector& signal, const ChannelConfig& cfg,
                              Rng& rng) {
  cfg.validate();
  const int taps = static_cast<int>(cfg.fading_taps.size());
  if (signal.size() < taps)
    throw DataError("apply_channel: signal shorter than channel response");

  // full convolution, first |signal| samples kept
  CxVector y = CxVector::Zero(signal.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    cxd acc(0.0, 0.0);
    for (int t = 0; t < taps && t <= k; ++t)
      acc += cfg.fading_taps[t] * signal[k - t];
    y[k] = acc;
  }

  if (cfg.sro_ppm != 0.0) {
    // linear-interpolation resampler at rate (1 + ppm*1e-6)
    const double rate = 1.0 + cfg.sro_ppm * 1e-6;
    CxVector z(y.size());
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      double pos = k * rate;
      auto i0 = static_cast<Eigen::Index>(std::floor(pos));
      double frac = pos - static_cast<double>(i0);
      Eigen::Index i1 = std::min(i0 + 1, y.size() - 1);
      i0 = std::min(i0, y.size() - 1);
      z[k] = (1.0 - frac) * y[i0] + frac * y[i1];
    }
    y = std::move(z);
  }

  if (cfg.cfo_normalized != 0.0) {
    for (Eigen::Index k = 0; k < y.size(); ++k)
      y[k] *= std::polar(1.0, 2.0 * M_PI * cfg.cfo_normalized * k);
  }

  const double amplitude = std::pow(10.0, cfg.snr_db / 20.0);  // sqrt(rho)
  y *= amplitude;

  if (cfg.noise_enabled) {
    // complex AWGN ~ CN(0,1): each component N(0, 1/2)
    const double s = std::sqrt(0.5);
    for (Eigen::Index k = 0; k < y.size(); ++k)
      y[k] += cxd(s * rng.gaussian(), s * rng.gaussian());
  }
  return y;
}

template <class Scalar>
FrameMat<Scalar> normalize_unit_energy(const FrameMat<Scalar>& frame) {
  const double energy = frame.template cast<double>().squaredNorm();
  if (energy <= 0.0)
    throw DataError("normalize_unit_energy: all-zero frame");
  return (frame.template cast<double>() / std::sqrt(energy))
      .template cast<Scalar>();
}

inline Frame frame_from_complex(const CxVector& x, int len, int offset = 0) {
  Frame f(len, 2);
  for (int k = 0; k < len; ++k) {
    f(k, 0) = static_cast<float>(x[offset + k].real());
    f(k, 1) = static_cast<float>(x[offset + k].imag());
  }
  return f;
}

/// Builds per_class frames per scheme: random bits -> modulate ->
/// channel -> crop at a random symbol-aligned offset -> unit energy.
/// Each frame draws from its own (seed, class, index) substream, so the
/// result is independent of generation order.
inline Dataset synthesize_dataset(int per_class, int frame_len,
                                  const std::vector<Scheme>& schemes,
                                  const ChannelConfig& cfg, std::uint64_t seed,
                                  const SchemeParams& params = {}) {
  if (per_class < 1) throw UsageError("per_class must be >= 1");
  if (schemes.empty()) throw UsageError("scheme list must be nonempty");
  cfg.validate();
  params.validate();

  const int sps = params.samples_per_symbol;
  // enough symbols for the frame plus room for a random crop offset
  const int pad_symbols = 4;
  const int nsym = (frame_len + sps - 1) / sps + 2 * pad_symbols;
  const int nbits = 2 * nsym;  // 2 bits/symbol covers every scheme

  Dataset ds;
  ds.domain = Domain::Time;
  ds.snr_db = cfg.snr_db;
  ds.seed = seed;
  for (Scheme s : schemes) ds.class_names.emplace_back(scheme_name(s));
  ds.frames.reserve(static_cast<std::size_t>(per_class) * schemes.size());
  ds.labels.reserve(ds.frames.capacity());

  for (std::size_t c = 0; c < schemes.size(); ++c) {
    for (int i = 0; i < per_class; ++i) {
      Rng rng = Rng::substream(seed, c, static_cast<std::uint64_t>(i));
      std::vector<std::uint8_t> bits(nbits);
      for (auto& b : bits) b = rng.bit() ? 1 : 0;
      CxVector s = modulate(bits, schemes[c], params);
      CxVector x = apply_channel(s, cfg, rng);
      const int max_off = static_cast<int>(x.size()) - frame_len;
      if (max_off < 0)
        throw NumericError("synthesize_dataset: generated sequence too short");
      const int off_symbols = max_off / sps;
      const int offset =
          off_symbols > 0
              ? sps * static_cast<int>(rng.uniform_index(off_symbols + 1))
              : 0;
      Frame f = frame_from_complex(x, frame_len, offset);
      ds.frames.push_back(normalize_unit_energy(f));
      ds.labels.push_back(static_cast<std::uint8_t>(c));
    }
  }
  return ds;
}

}  // namespace amc
