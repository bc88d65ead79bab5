#pragma once

#include "amc/layers.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace amc {

/// A feed-forward layer stack with exact reverse-mode gradients for both
/// parameters and inputs. Parameter order within a layer is fixed (dense:
/// W, b; conv: K, b; lstm: Wx, Wh, b) and defines the checkpoint layout.
template <class S>
class Network {
 public:
  std::vector<Layer<S>> layers;

  int in_size() const {
    return layers.empty()
               ? 0
               : std::visit([](const auto& l) { return l.in_size(); },
                            layers.front());
  }
  int out_size() const {
    return layers.empty()
               ? 0
               : std::visit([](const auto& l) { return l.out_size(); },
                            layers.back());
  }

  VectorX<S> forward(VectorX<S> x, Mode mode, Rng* rng = nullptr) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = std::visit([&](auto& l) { return l.forward(x, mode, rng); },
                     layers[i]);
      if (!x.allFinite())
        throw NumericError("non-finite activation after layer " +
                           std::to_string(i) + " (" +
                           layer_kind(layers[i]) + ")");
    }
    return x;
  }

  /// Backpropagates from the gradient at the output of the last forward
  /// call; accumulates parameter gradients and returns the input gradient.
  VectorX<S> backward(VectorX<S> dout) {
    for (std::size_t i = layers.size(); i-- > 0;) {
      dout = std::visit([&](auto& l) { return l.backward(dout); }, layers[i]);
      if (!dout.allFinite())
        throw NumericError("non-finite gradient at layer " +
                           std::to_string(i) + " (" +
                           layer_kind(layers[i]) + ")");
    }
    return dout;
  }

  /// Visits every (param, grad) pair as flat maps, in checkpoint order.
  template <class F>
  void for_each_param(F&& f) {
    for (auto& lv : layers) {
      std::visit(
          [&](auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DenseLayer<S>>) {
              f(Eigen::Map<VectorX<S>>(l.W.data(), l.W.size()),
                Eigen::Map<VectorX<S>>(l.dW.data(), l.dW.size()));
              f(Eigen::Map<VectorX<S>>(l.b.data(), l.b.size()),
                Eigen::Map<VectorX<S>>(l.db.data(), l.db.size()));
            } else if constexpr (std::is_same_v<T, Conv2dLayer<S>>) {
              f(Eigen::Map<VectorX<S>>(l.K.data(), l.K.size()),
                Eigen::Map<VectorX<S>>(l.dK.data(), l.dK.size()));
              f(Eigen::Map<VectorX<S>>(l.b.data(), l.b.size()),
                Eigen::Map<VectorX<S>>(l.db.data(), l.db.size()));
            } else if constexpr (std::is_same_v<T, LstmLayer<S>>) {
              f(Eigen::Map<VectorX<S>>(l.Wx.data(), l.Wx.size()),
                Eigen::Map<VectorX<S>>(l.dWx.data(), l.dWx.size()));
              f(Eigen::Map<VectorX<S>>(l.Wh.data(), l.Wh.size()),
                Eigen::Map<VectorX<S>>(l.dWh.data(), l.dWh.size()));
              f(Eigen::Map<VectorX<S>>(l.b.data(), l.b.size()),
                Eigen::Map<VectorX<S>>(l.db.data(), l.db.size()));
            }
          },
          lv);
    }
  }

  Eigen::Index param_count() {
    Eigen::Index n = 0;
    for_each_param([&](auto p, auto) { n += p.size(); });
    return n;
  }

  void zero_grads() {
    for_each_param([](auto, auto g) { g.setZero(); });
  }

  void scale_grads(S factor) {
    for_each_param([&](auto, auto g) { g *= factor; });
  }
};

constexpr double kLogFloor = 1e-12;

/// Per-sample categorical cross entropy, -log(yhat[label]) with an epsilon
/// floor inside the log.
template <class S>
double cross_entropy(const VectorX<S>& yhat, int label) {
  if (label < 0 || label >= yhat.size())
    throw DataError("cross_entropy: label out of range");
  return -std::log(std::max(static_cast<double>(yhat[label]), kLogFloor));
}

/// dL/dyhat for the per-sample loss above (zero where the floor is active,
/// matching the clamped forward value).
template <class S>
VectorX<S> cross_entropy_grad(const VectorX<S>& yhat, int label) {
  VectorX<S> g = VectorX<S>::Zero(yhat.size());
  const double p = static_cast<double>(yhat[label]);
  if (p > kLogFloor) g[label] = static_cast<S>(-1.0 / p);
  return g;
}

struct BatchResult {
  double mean_loss = 0.0;
  int correct = 0;
};

/// Forward + backward over a batch of flat inputs. Leaves mean-loss
/// parameter gradients in the network; optionally returns per-sample input
/// gradients (of the mean loss).
template <class S>
BatchResult backprop_batch(Network<S>& net,
                           const std::vector<VectorX<S>>& inputs,
                           const std::vector<int>& labels, Mode mode,
                           Rng* rng = nullptr,
                           std::vector<VectorX<S>>* input_grads = nullptr) {
  if (inputs.empty()) throw DataError("backprop_batch: empty batch");
  if (inputs.size() != labels.size())
    throw DataError("backprop_batch: batch/label size mismatch");
  const auto n = inputs.size();
  net.zero_grads();
  if (input_grads) input_grads->resize(n);

  BatchResult res;
  for (std::size_t i = 0; i < n; ++i) {
    VectorX<S> yhat = net.forward(inputs[i], mode, rng);
    res.mean_loss += cross_entropy(yhat, labels[i]);
    Eigen::Index pred;
    yhat.maxCoeff(&pred);
    if (pred == labels[i]) ++res.correct;
    VectorX<S> din = net.backward(cross_entropy_grad(yhat, labels[i]));
    if (input_grads) (*input_grads)[i] = din / static_cast<S>(n);
  }
  net.scale_grads(S(1) / static_cast<S>(n));
  res.mean_loss /= static_cast<double>(n);
  return res;
}

}  // namespace amc
