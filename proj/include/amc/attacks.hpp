#pragma once

#include "amc/zoo.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace amc {

enum class AttackMethod { FGSM, BIM };

/// Budget reading: Radius bounds the l2 norm of delta directly (the
/// single-step multiplier); Power bounds its square.
enum class NormConvention { Radius, Power };

struct AttackConfig {
  AttackMethod method = AttackMethod::FGSM;
  double power_budget = 0.02;  // P_T
  double alpha = 0.002;        // BIM step length
  int iterations = 10;         // BIM only
  NormConvention convention = NormConvention::Radius;

  double effective_radius() const {
    return convention == NormConvention::Radius ? power_budget
                                                : std::sqrt(power_budget);
  }
  void validate() const {
    if (power_budget < 0) throw UsageError("power budget must be >= 0");
    if (method == AttackMethod::BIM) {
      if (iterations < 1) throw UsageError("iterations must be >= 1");
      if (alpha <= 0 || alpha > effective_radius() + 1e-12)
        throw UsageError("alpha must be in (0, effective radius]");
    }
  }
};

inline const char* attack_method_name(AttackMethod m) {
  return m == AttackMethod::FGSM ? "fgsm" : "bim";
}
inline const char* norm_convention_name(NormConvention c) {
  return c == NormConvention::Radius ? "radius" : "power";
}

/// FNV-1a over the surrogate's parameter bytes; identifies the model an
/// attack was crafted against.
inline std::uint64_t model_checksum(Model& m) {
  std::uint64_t h = 1469598103934665603ULL;
  m.net.for_each_param([&](auto p, auto) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
    for (Eigen::Index i = 0; i < p.size() * static_cast<Eigen::Index>(sizeof(float)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  });
  return h;
}

namespace detail {

inline void require_time_surrogate(const Model& surrogate) {
  if (surrogate.domain != Domain::Time)
    throw DataError(
        "attack surrogate must be a time-domain model (the threat model "
        "blinds the adversary to the frequency classifier)");
}

// Gradient of the per-sample loss w.r.t. the flat input.
inline VectorX<float> input_gradient(Model& surrogate,
                                     const VectorX<float>& x, int label) {
  std::vector<VectorX<float>> grads;
  backprop_batch(surrogate.net, {x}, {label}, Mode::Eval, nullptr, &grads);
  return grads[0];
}

}  // namespace detail

/// Single-step l2 attack: delta = r * grad / ||grad||2 with r the effective
/// radius. A vanishing gradient leaves the frame untouched (flagged via
/// zero_gradient when the caller asks).
inline Frame fgsm(Model& surrogate, const Frame& frame, int label,
                  double power_budget,
                  NormConvention convention = NormConvention::Radius,
                  bool* zero_gradient = nullptr) {
  detail::require_time_surrogate(surrogate);
  if (zero_gradient) *zero_gradient = false;
  const double r = convention == NormConvention::Radius
                       ? power_budget
                       : std::sqrt(power_budget);
  if (r == 0.0) return frame;

  VectorX<float> x = flatten_frame<float>(frame);
  VectorX<float> g = detail::input_gradient(surrogate, x, label);
  const double gnorm = g.template cast<double>().norm();
  if (gnorm == 0.0) {
    if (zero_gradient) *zero_gradient = true;
    return frame;
  }
  VectorX<float> xt = x + (g * static_cast<float>(r / gnorm));
  return unflatten_frame(xt);
}

/// Iterated FGSM: each iteration recomputes the gradient at the current
/// point, steps alpha along it, then projects the cumulative perturbation
/// back onto the l2 ball of the effective radius.
inline Frame bim(Model& surrogate, const Frame& frame, int label,
                 double power_budget, double alpha, int iterations,
                 NormConvention convention = NormConvention::Radius,
                 bool* zero_gradient = nullptr) {
  detail::require_time_surrogate(surrogate);
  if (iterations < 1) throw UsageError("bim: iterations must be >= 1");
  if (zero_gradient) *zero_gradient = false;
  const double r = convention == NormConvention::Radius
                       ? power_budget
                       : std::sqrt(power_budget);
  if (r == 0.0) return frame;
  if (alpha <= 0 || alpha > r + 1e-12)
    throw UsageError("bim: alpha must be in (0, effective radius]");

  const VectorX<float> x0 = flatten_frame<float>(frame);
  VectorX<float> delta = VectorX<float>::Zero(x0.size());
  bool any_step = false;
  for (int k = 0; k < iterations; ++k) {
    VectorX<float> g =
        detail::input_gradient(surrogate, VectorX<float>(x0 + delta), label);
    const double gnorm = g.template cast<double>().norm();
    if (gnorm == 0.0) continue;
    any_step = true;
    delta += g * static_cast<float>(alpha / gnorm);
    const double dnorm = delta.template cast<double>().norm();
    if (dnorm > r) delta *= static_cast<float>(r / dnorm);
  }
  if (!any_step && zero_gradient) *zero_gradient = true;
  return unflatten_frame(VectorX<float>(x0 + delta));
}

/// Untargeted whole-dataset attack: every frame is perturbed against its
/// true label. Labels and ordering are preserved; attack provenance is
/// recorded on the output dataset.
inline Dataset perturb_dataset(Model& surrogate, const Dataset& ds,
                               const AttackConfig& cfg,
                               int* zero_gradient_count = nullptr) {
  cfg.validate();
  detail::require_time_surrogate(surrogate);
  if (ds.domain != Domain::Time)
    throw DataError("perturb_dataset: dataset must be time-domain");
  if (ds.frame_len() != 0 && ds.frame_len() != surrogate.len)
    throw DataError("perturb_dataset: frame length mismatch");

  Dataset out;
  out.labels = ds.labels;
  out.class_names = ds.class_names;
  out.domain = Domain::Time;
  out.snr_db = ds.snr_db;
  out.seed = ds.seed;
  out.frames.reserve(ds.frames.size());

  int zeros = 0;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    bool zg = false;
    Frame f = cfg.method == AttackMethod::FGSM
                  ? fgsm(surrogate, ds.frames[i], ds.labels[i],
                         cfg.power_budget, cfg.convention, &zg)
                  : bim(surrogate, ds.frames[i], ds.labels[i],
                        cfg.power_budget, cfg.alpha, cfg.iterations,
                        cfg.convention, &zg);
    if (zg) ++zeros;
    out.frames.push_back(std::move(f));
  }
  if (zero_gradient_count) *zero_gradient_count = zeros;

  AttackInfo info;
  info.method = attack_method_name(cfg.method);
  info.budget = cfg.power_budget;
  info.alpha = cfg.method == AttackMethod::BIM ? cfg.alpha : 0.0;
  info.iterations =
      cfg.method == AttackMethod::BIM ? static_cast<std::uint32_t>(cfg.iterations) : 1u;
  info.convention = norm_convention_name(cfg.convention);
  info.surrogate_checksum = model_checksum(surrogate);
  out.attack = info;
  return out;
}

}  // namespace amc
