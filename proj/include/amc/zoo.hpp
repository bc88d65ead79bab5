#pragma once

#include "amc/adam.hpp"
#include "amc/net.hpp"
#include "amc/types.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace amc {

enum class Arch : int { FCNN = 0, CNN = 1, RNN = 2, CRNN = 3 };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::FCNN: return "fcnn";
    case Arch::CNN: return "cnn";
    case Arch::RNN: return "rnn";
    case Arch::CRNN: return "crnn";
  }
  throw UsageError("unknown architecture");
}

inline Arch arch_from_name(const std::string& s) {
  if (s == "fcnn") return Arch::FCNN;
  if (s == "cnn") return Arch::CNN;
  if (s == "rnn") return Arch::RNN;
  if (s == "crnn") return Arch::CRNN;
  throw UsageError("unknown architecture: " + s);
}

/// Canonical flat layout of a frame: row-major (l, 2), i.e. I/Q interleaved.
template <class S, class T>
VectorX<S> flatten_frame(const FrameMat<T>& f) {
  VectorX<S> v(f.rows() * 2);
  for (Eigen::Index k = 0; k < f.rows(); ++k) {
    v[2 * k] = static_cast<S>(f(k, 0));
    v[2 * k + 1] = static_cast<S>(f(k, 1));
  }
  return v;
}

template <class S>
Frame unflatten_frame(const VectorX<S>& v) {
  Frame f(v.size() / 2, 2);
  for (Eigen::Index k = 0; k < f.rows(); ++k) {
    f(k, 0) = static_cast<float>(v[2 * k]);
    f(k, 1) = static_cast<float>(v[2 * k + 1]);
  }
  return f;
}

/// Builds one of the four fixed stacks. width_divisor shrinks every hidden
/// width by the same factor (used by the gradient-check tests); 1 gives the
/// reference configuration.
template <class S>
Network<S> build_network(Arch arch, int len, int num_classes,
                         std::uint64_t seed, int width_divisor = 1) {
  if (len < 8) throw UsageError("frame length too short");
  if (num_classes < 2) throw UsageError("need at least 2 classes");
  const int d = std::max(1, width_divisor);
  auto w = [&](int units) { return std::max(1, units / d); };

  Rng rng = Rng::substream(seed, 0x1abe1ed, static_cast<std::uint64_t>(arch));
  Network<S> net;
  auto& L = net.layers;
  const int C = num_classes;

  switch (arch) {
    case Arch::FCNN: {
      L.emplace_back(FlattenLayer<S>(2 * len));
      L.emplace_back(DenseLayer<S>(2 * len, w(256), rng));
      L.emplace_back(ReluLayer<S>(w(256)));
      L.emplace_back(DropoutLayer<S>(w(256), 0.2));
      L.emplace_back(DenseLayer<S>(w(256), w(128), rng));
      L.emplace_back(ReluLayer<S>(w(128)));
      L.emplace_back(DropoutLayer<S>(w(128), 0.2));
      L.emplace_back(DenseLayer<S>(w(128), w(128), rng));
      L.emplace_back(ReluLayer<S>(w(128)));
      L.emplace_back(DropoutLayer<S>(w(128), 0.2));
      L.emplace_back(DenseLayer<S>(w(128), C, rng));
      L.emplace_back(SoftmaxLayer<S>(C));
      break;
    }
    case Arch::CNN: {
      const int c1 = w(256), c2 = w(64);
      L.emplace_back(TransposeLayer<S>(len, 2));  // (l,2) -> (2,l) = CHW 1x2xl
      L.emplace_back(Conv2dLayer<S>(1, 2, len, c1, 2, 5, rng));
      L.emplace_back(ReluLayer<S>(c1 * (len - 4)));
      L.emplace_back(DropoutLayer<S>(c1 * (len - 4), 0.2));
      L.emplace_back(Conv2dLayer<S>(c1, 1, len - 4, c2, 1, 3, rng));
      L.emplace_back(ReluLayer<S>(c2 * (len - 6)));
      L.emplace_back(DropoutLayer<S>(c2 * (len - 6), 0.2));
      L.emplace_back(FlattenLayer<S>(c2 * (len - 6)));
      L.emplace_back(DenseLayer<S>(c2 * (len - 6), w(128), rng));
      L.emplace_back(ReluLayer<S>(w(128)));
      L.emplace_back(DenseLayer<S>(w(128), C, rng));
      L.emplace_back(SoftmaxLayer<S>(C));
      break;
    }
    case Arch::RNN: {
      const int u = w(75);
      L.emplace_back(LstmLayer<S>(2, u, len, rng));
      L.emplace_back(LastStepLayer<S>(len, u));
      L.emplace_back(DenseLayer<S>(u, w(128), rng));
      L.emplace_back(ReluLayer<S>(w(128)));
      L.emplace_back(DenseLayer<S>(w(128), C, rng));
      L.emplace_back(SoftmaxLayer<S>(C));
      break;
    }
    case Arch::CRNN: {
      const int c1 = w(128), c2 = w(64), u = w(32);
      const int T = len - 6;
      L.emplace_back(TransposeLayer<S>(len, 2));
      L.emplace_back(Conv2dLayer<S>(1, 2, len, c1, 2, 5, rng));
      L.emplace_back(ReluLayer<S>(c1 * (len - 4)));
      L.emplace_back(Conv2dLayer<S>(c1, 1, len - 4, c2, 1, 3, rng));
      L.emplace_back(ReluLayer<S>(c2 * T));
      L.emplace_back(TransposeLayer<S>(c2, T));  // (C,T) -> (T,F) sequence
      L.emplace_back(LstmLayer<S>(c2, u, T, rng));
      L.emplace_back(LastStepLayer<S>(T, u));
      L.emplace_back(DenseLayer<S>(u, C, rng));
      L.emplace_back(SoftmaxLayer<S>(C));
      break;
    }
  }
  return net;
}

struct EpochStats {
  double train_acc = 0, val_acc = 0, train_loss = 0, val_loss = 0;
};

struct Model {
  Arch arch = Arch::CNN;
  Domain domain = Domain::Time;
  int len = 128;
  int num_classes = 4;
  std::uint64_t seed = 0;
  Network<float> net;
  std::vector<EpochStats> history;

  int epochs_trained() const { return static_cast<int>(history.size()); }
};

inline Model build_model(Arch arch, Domain domain, int len, int num_classes,
                         std::uint64_t seed) {
  Model m;
  m.arch = arch;
  m.domain = domain;
  m.len = len;
  m.num_classes = num_classes;
  m.seed = seed;
  m.net = build_network<float>(arch, len, num_classes, seed);
  return m;
}

struct TrainConfig {
  int epochs = 75;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Likelihood vector for one frame (eval mode, pure).
inline VectorX<float> predict(Model& model, const Frame& frame) {
  if (frame.rows() != model.len)
    throw DataError("predict: frame length mismatch");
  return model.net.forward(flatten_frame<float>(frame), Mode::Eval);
}

/// Argmax class; ties break to the lowest index.
inline int classify(Model& model, const Frame& frame) {
  VectorX<float> y = predict(model, frame);
  Eigen::Index best;
  y.maxCoeff(&best);
  return static_cast<int>(best);
}

namespace detail {

inline double accuracy_on(Model& model, const std::vector<VectorX<float>>& xs,
                          const std::vector<int>& ys, double* mean_loss) {
  int correct = 0;
  double loss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    VectorX<float> yhat = model.net.forward(xs[i], Mode::Eval);
    Eigen::Index best;
    yhat.maxCoeff(&best);
    if (static_cast<int>(best) == ys[i]) ++correct;
    loss += cross_entropy(yhat, ys[i]);
  }
  if (mean_loss) *mean_loss = xs.empty() ? 0 : loss / xs.size();
  return xs.empty() ? 0 : static_cast<double>(correct) / xs.size();
}

}  // namespace detail

/// Shuffled mini-batch training with Adam. Per-epoch reshuffle from a
/// seeded substream; the last partial batch is kept. Train accuracy/loss
/// are accumulated from the training batches themselves.
inline void train(Model& model, const Dataset& ds,
                  const std::vector<int>& train_idx,
                  const std::vector<int>& val_idx, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw UsageError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (ds.domain != model.domain)
    throw DataError("train: dataset domain does not match model domain");
  if (train_idx.empty() || val_idx.empty())
    throw DataError("train: empty split");

  std::vector<VectorX<float>> train_x, val_x;
  std::vector<int> train_y, val_y;
  for (int i : train_idx) {
    train_x.push_back(flatten_frame<float>(ds.frames[i]));
    train_y.push_back(ds.labels[i]);
  }
  for (int i : val_idx) {
    val_x.push_back(flatten_frame<float>(ds.frames[i]));
    val_y.push_back(ds.labels[i]);
  }

  AdamState<float> opt;
  opt.cfg.learning_rate = cfg.learning_rate;
  Rng dropout_rng = Rng::substream(cfg.seed, 0xd20, model.seed);

  std::vector<int> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng =
        Rng::substream(cfg.seed, 0x50ff1e, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order.begin(), order.end());

    double epoch_loss = 0;
    int epoch_correct = 0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t bsz =
          std::min<std::size_t>(cfg.batch_size, order.size() - done);
      std::vector<VectorX<float>> bx(bsz);
      std::vector<int> by(bsz);
      for (std::size_t j = 0; j < bsz; ++j) {
        bx[j] = train_x[order[done + j]];
        by[j] = train_y[order[done + j]];
      }
      BatchResult r =
          backprop_batch(model.net, bx, by, Mode::Train, &dropout_rng);
      adam_step(model.net, opt);
      epoch_loss += r.mean_loss * bsz;
      epoch_correct += r.correct;
      done += bsz;
    }

    EpochStats s;
    s.train_loss = epoch_loss / order.size();
    s.train_acc = static_cast<double>(epoch_correct) / order.size();
    s.val_acc = detail::accuracy_on(model, val_x, val_y, &s.val_loss);
    model.history.push_back(s);
  }
}

}  // namespace amc
