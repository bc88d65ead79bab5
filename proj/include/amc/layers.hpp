#pragma once

#include "amc/rng.hpp"
#include "amc/types.hpp"

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace amc {

enum class Mode { Train, Eval };

template <class S>
using RowMajorMap =
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ConstRowMajorMap = Eigen::Map<
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace detail {

template <class S>
void fill_uniform(S* data, Eigen::Index n, double limit, Rng& rng) {
  for (Eigen::Index i = 0; i < n; ++i)
    data[i] = static_cast<S>(rng.uniform(-limit, limit));
}

}  // namespace detail

/// y = W x + b. Activation lives in a separate layer.
template <class S>
struct DenseLayer {
  MatrixX<S> W;
  VectorX<S> b;
  MatrixX<S> dW;
  VectorX<S> db;
  VectorX<S> in_cache;

  DenseLayer(int in_size, int out_size, Rng& rng)
      : W(out_size, in_size),
        b(VectorX<S>::Zero(out_size)),
        dW(MatrixX<S>::Zero(out_size, in_size)),
        db(VectorX<S>::Zero(out_size)) {
    detail::fill_uniform(W.data(), W.size(), std::sqrt(1.0 / in_size), rng);
  }

  int in_size() const { return static_cast<int>(W.cols()); }
  int out_size() const { return static_cast<int>(W.rows()); }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    if (in.size() != W.cols())
      throw DataError("dense: input size mismatch");
    in_cache = in;
    return W * in + b;
  }

  VectorX<S> backward(const VectorX<S>& dout) {
    dW.noalias() += dout * in_cache.transpose();
    db += dout;
    return W.transpose() * dout;
  }
};

/// Valid-padding stride-1 cross-correlation over a (C,H,W) row-major input.
/// Implemented as im2col followed by one GEMM.
template <class S>
struct Conv2dLayer {
  int cin, h, w, cout, kh, kw;
  int oh, ow;
  MatrixX<S> K;  // cout x (cin*kh*kw)
  VectorX<S> b;
  MatrixX<S> dK;
  VectorX<S> db;
  MatrixX<S> cols_cache;  // (cin*kh*kw) x (oh*ow)

  Conv2dLayer(int cin_, int h_, int w_, int cout_, int kh_, int kw_, Rng& rng)
      : cin(cin_), h(h_), w(w_), cout(cout_), kh(kh_), kw(kw_),
        oh(h_ - kh_ + 1), ow(w_ - kw_ + 1),
        K(cout_, cin_ * kh_ * kw_),
        b(VectorX<S>::Zero(cout_)),
        dK(MatrixX<S>::Zero(cout_, cin_ * kh_ * kw_)),
        db(VectorX<S>::Zero(cout_)) {
    if (kh > h || kw > w)
      throw DataError("conv2d: kernel larger than input");
    detail::fill_uniform(K.data(), K.size(),
                         std::sqrt(1.0 / (cin * kh * kw)), rng);
  }

  int in_size() const { return cin * h * w; }
  int out_size() const { return cout * oh * ow; }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    if (in.size() != in_size())
      throw DataError("conv2d: input size mismatch");
    cols_cache.resize(cin * kh * kw, oh * ow);
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const int pos = oy * ow + ox;
        for (int c = 0; c < cin; ++c)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              cols_cache(c * kh * kw + ky * kw + kx, pos) =
                  in[c * h * w + (oy + ky) * w + (ox + kx)];
      }
    VectorX<S> out(out_size());
    RowMajorMap<S> om(out.data(), cout, oh * ow);
    om.noalias() = K * cols_cache;
    om.colwise() += b;
    return out;
  }

  VectorX<S> backward(const VectorX<S>& dout) {
    ConstRowMajorMap<S> dm(dout.data(), cout, oh * ow);
    dK.noalias() += dm * cols_cache.transpose();
    db += dm.rowwise().sum();
    MatrixX<S> dcols = K.transpose() * dm;
    VectorX<S> din = VectorX<S>::Zero(in_size());
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const int pos = oy * ow + ox;
        for (int c = 0; c < cin; ++c)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              din[c * h * w + (oy + ky) * w + (ox + kx)] +=
                  dcols(c * kh * kw + ky * kw + kx, pos);
      }
    return din;
  }
};

/// Standard LSTM over a (T,F) row-major input sequence; emits the full
/// (T,units) output sequence. Gate order in the stacked weights: input,
/// forget, cell candidate, output. Initial hidden and cell state are zero.
template <class S>
struct LstmLayer {
  int input_size, units, steps;
  MatrixX<S> Wx;  // 4U x F
  MatrixX<S> Wh;  // 4U x U
  VectorX<S> b;   // 4U
  MatrixX<S> dWx, dWh;
  VectorX<S> db;

  // per-step caches for BPTT
  MatrixX<S> x_seq, gi, gf, gg, go, c_seq, h_seq, tanh_c;

  LstmLayer(int input_size_, int units_, int steps_, Rng& rng)
      : input_size(input_size_), units(units_), steps(steps_),
        Wx(4 * units_, input_size_),
        Wh(4 * units_, units_),
        b(VectorX<S>::Zero(4 * units_)),
        dWx(MatrixX<S>::Zero(4 * units_, input_size_)),
        dWh(MatrixX<S>::Zero(4 * units_, units_)),
        db(VectorX<S>::Zero(4 * units_)) {
    const double limit = std::sqrt(1.0 / (input_size + units));
    detail::fill_uniform(Wx.data(), Wx.size(), limit, rng);
    detail::fill_uniform(Wh.data(), Wh.size(), limit, rng);
    // forget-gate bias starts at 1
    b.segment(units, units).setConstant(S(1));
  }

  int in_size() const { return steps * input_size; }
  int out_size() const { return steps * units; }

  static S sigmoid(S z) { return S(1) / (S(1) + std::exp(-z)); }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    if (in.size() != in_size())
      throw DataError("lstm: input size mismatch");
    const int T = steps, U = units;
    x_seq.resize(input_size, T);
    gi.resize(U, T); gf.resize(U, T); gg.resize(U, T); go.resize(U, T);
    c_seq.resize(U, T); h_seq.resize(U, T); tanh_c.resize(U, T);

    VectorX<S> h = VectorX<S>::Zero(U);
    VectorX<S> c = VectorX<S>::Zero(U);
    VectorX<S> out(T * U);
    for (int t = 0; t < T; ++t) {
      x_seq.col(t) =
          Eigen::Map<const VectorX<S>>(in.data() + t * input_size, input_size);
      VectorX<S> z = Wx * x_seq.col(t) + Wh * h + b;
      for (int u = 0; u < U; ++u) {
        gi(u, t) = sigmoid(z[u]);
        gf(u, t) = sigmoid(z[U + u]);
        gg(u, t) = std::tanh(z[2 * U + u]);
        go(u, t) = sigmoid(z[3 * U + u]);
      }
      c = gf.col(t).cwiseProduct(c) + gi.col(t).cwiseProduct(gg.col(t));
      c_seq.col(t) = c;
      tanh_c.col(t) = c.array().tanh();
      h = go.col(t).cwiseProduct(tanh_c.col(t));
      h_seq.col(t) = h;
      out.segment(t * U, U) = h;
    }
    return out;
  }

  VectorX<S> backward(const VectorX<S>& dout) {
    const int T = steps, U = units;
    VectorX<S> din = VectorX<S>::Zero(in_size());
    VectorX<S> dh = VectorX<S>::Zero(U);
    VectorX<S> dc = VectorX<S>::Zero(U);
    VectorX<S> dz(4 * U);
    for (int t = T - 1; t >= 0; --t) {
      dh += dout.segment(t * U, U);
      VectorX<S> c_prev =
          t > 0 ? VectorX<S>(c_seq.col(t - 1)) : VectorX<S>::Zero(U);
      dc += dh.cwiseProduct(go.col(t))
                .cwiseProduct((S(1) - tanh_c.col(t).array().square()).matrix());
      VectorX<S> d_go = dh.cwiseProduct(tanh_c.col(t));
      dz.segment(0, U) =
          dc.cwiseProduct(gg.col(t))
              .cwiseProduct(gi.col(t).cwiseProduct(
                  (VectorX<S>::Ones(U) - gi.col(t))));
      dz.segment(U, U) =
          dc.cwiseProduct(c_prev).cwiseProduct(
              gf.col(t).cwiseProduct(VectorX<S>::Ones(U) - gf.col(t)));
      dz.segment(2 * U, U) =
          dc.cwiseProduct(gi.col(t))
              .cwiseProduct((S(1) - gg.col(t).array().square()).matrix());
      dz.segment(3 * U, U) = d_go.cwiseProduct(
          go.col(t).cwiseProduct(VectorX<S>::Ones(U) - go.col(t)));

      dWx.noalias() += dz * x_seq.col(t).transpose();
      if (t > 0) dWh.noalias() += dz * h_seq.col(t - 1).transpose();
      db += dz;

      din.segment(t * input_size, input_size) = Wx.transpose() * dz;
      dh = Wh.transpose() * dz;
      dc = dc.cwiseProduct(gf.col(t));
    }
    return din;
  }
};

template <class S>
struct ReluLayer {
  int size;
  VectorX<S> mask;
  explicit ReluLayer(int size_) : size(size_) {}
  int in_size() const { return size; }
  int out_size() const { return size; }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    mask = (in.array() > S(0)).template cast<S>();
    return in.cwiseProduct(mask);
  }
  VectorX<S> backward(const VectorX<S>& dout) {
    return dout.cwiseProduct(mask);
  }
};

/// Inverted dropout: surviving activations are scaled by 1/(1-rate) at
/// train time so eval is a plain pass-through.
template <class S>
struct DropoutLayer {
  int size;
  double rate;
  VectorX<S> mask;

  DropoutLayer(int size_, double rate_) : size(size_), rate(rate_) {
    if (rate < 0.0 || rate >= 1.0)
      throw UsageError("dropout rate must be in [0,1)");
  }
  int in_size() const { return size; }
  int out_size() const { return size; }

  VectorX<S> forward(const VectorX<S>& in, Mode mode, Rng* rng) {
    if (mode == Mode::Eval || rate == 0.0) {
      mask = VectorX<S>::Ones(size);
      return in;
    }
    if (!rng) throw UsageError("dropout: train mode requires an rng");
    mask.resize(size);
    const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
    for (int i = 0; i < size; ++i)
      mask[i] = rng->uniform() < rate ? S(0) : keep_scale;
    return in.cwiseProduct(mask);
  }
  VectorX<S> backward(const VectorX<S>& dout) {
    return dout.cwiseProduct(mask);
  }
};

template <class S>
struct SoftmaxLayer {
  int size;
  VectorX<S> out_cache;
  explicit SoftmaxLayer(int size_) : size(size_) {}
  int in_size() const { return size; }
  int out_size() const { return size; }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    if (!in.allFinite()) throw NumericError("softmax: non-finite logits");
    VectorX<S> shifted = in.array() - in.maxCoeff();
    VectorX<S> e = shifted.array().exp();
    out_cache = e / e.sum();
    return out_cache;
  }
  VectorX<S> backward(const VectorX<S>& dout) {
    const S dot = dout.dot(out_cache);
    return (out_cache.array() * (dout.array() - dot)).matrix();
  }
};

/// Shape-only view change; flat values pass through untouched.
template <class S>
struct FlattenLayer {
  int size;
  explicit FlattenLayer(int size_) : size(size_) {}
  int in_size() const { return size; }
  int out_size() const { return size; }
  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) { return in; }
  VectorX<S> backward(const VectorX<S>& dout) { return dout; }
};

/// Selects the final step of a row-major (steps, features) sequence.
template <class S>
struct LastStepLayer {
  int steps, features;
  LastStepLayer(int steps_, int features_) : steps(steps_), features(features_) {}
  int in_size() const { return steps * features; }
  int out_size() const { return features; }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    return in.segment((steps - 1) * features, features);
  }
  VectorX<S> backward(const VectorX<S>& dout) {
    VectorX<S> din = VectorX<S>::Zero(in_size());
    din.segment((steps - 1) * features, features) = dout;
    return din;
  }
};

/// Reinterprets a row-major (rows, cols) block as row-major (cols, rows).
/// Bridges frame layout (l,2) to conv channel-major layout and conv output
/// to LSTM sequence layout.
template <class S>
struct TransposeLayer {
  int rows, cols;  // of the input view
  TransposeLayer(int rows_, int cols_) : rows(rows_), cols(cols_) {}
  int in_size() const { return rows * cols; }
  int out_size() const { return rows * cols; }

  VectorX<S> forward(const VectorX<S>& in, Mode, Rng*) {
    VectorX<S> out(in.size());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
    return out;
  }
  VectorX<S> backward(const VectorX<S>& dout) {
    VectorX<S> din(dout.size());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) din[r * cols + c] = dout[c * rows + r];
    return din;
  }
};

template <class S>
using Layer =
    std::variant<DenseLayer<S>, Conv2dLayer<S>, LstmLayer<S>, ReluLayer<S>,
                 DropoutLayer<S>, SoftmaxLayer<S>, FlattenLayer<S>,
                 LastStepLayer<S>, TransposeLayer<S>>;

template <class S>
const char* layer_kind(const Layer<S>& l) {
  return std::visit(
      [](const auto& v) -> const char* {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DenseLayer<S>>) return "dense";
        else if constexpr (std::is_same_v<T, Conv2dLayer<S>>) return "conv2d";
        else if constexpr (std::is_same_v<T, LstmLayer<S>>) return "lstm";
        else if constexpr (std::is_same_v<T, ReluLayer<S>>) return "relu";
        else if constexpr (std::is_same_v<T, DropoutLayer<S>>) return "dropout";
        else if constexpr (std::is_same_v<T, SoftmaxLayer<S>>) return "softmax";
        else if constexpr (std::is_same_v<T, FlattenLayer<S>>) return "flatten";
        else if constexpr (std::is_same_v<T, LastStepLayer<S>>) return "last_step";
        else return "transpose";
      },
      l);
}

}  // namespace amc
