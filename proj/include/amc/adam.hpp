#pragma once

#include "amc/net.hpp"

#include <cmath>
#include <vector>

namespace amc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one flat pair per parameter tensor,
/// allocated lazily on the first step.
template <class S>
struct AdamState {
  std::vector<VectorX<S>> m, v;
  long step = 0;
  AdamConfig cfg;
};

template <class S>
void adam_step(Network<S>& net, AdamState<S>& state) {
  if (state.step == 0) {
    net.for_each_param([&](auto p, auto) {
      state.m.push_back(VectorX<S>::Zero(p.size()));
      state.v.push_back(VectorX<S>::Zero(p.size()));
    });
  }
  ++state.step;
  const auto& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, state.step);
  const double bc2 = 1.0 - std::pow(c.beta2, state.step);

  std::size_t idx = 0;
  net.for_each_param([&](auto p, auto g) {
    if (idx >= state.m.size() || state.m[idx].size() != p.size())
      throw DataError("adam_step: state/parameter shape mismatch");
    auto& m = state.m[idx];
    auto& v = state.v[idx];
    m = S(c.beta1) * m + S(1.0 - c.beta1) * g;
    v = S(c.beta2) * v.array() + S(1.0 - c.beta2) * g.array().square();
    p.array() -= S(c.learning_rate) * (m.array() / S(bc1)) /
                 ((v.array() / S(bc2)).sqrt() + S(c.epsilon));
    ++idx;
  });
}

}  // namespace amc
