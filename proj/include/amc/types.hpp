#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace amc {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One received frame as an l x 2 real matrix, column 0 = in-phase (real),
/// column 1 = quadrature (imaginary).
template <class Scalar>
using FrameMat = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

using Frame = FrameMat<float>;

using cxd = std::complex<double>;
using CxVector = Eigen::Matrix<cxd, Eigen::Dynamic, 1>;

enum class Domain : std::uint8_t { Time = 0, Freq = 1 };

inline const char* domain_name(Domain d) {
  return d == Domain::Time ? "time" : "freq";
}

/// Attack provenance carried by perturbed datasets (serialized as a tagged
/// trailer after the frame records).
struct AttackInfo {
  std::string method;      // "fgsm" | "bim"
  double budget = 0.0;     // P_T
  double alpha = 0.0;      // per-iteration step (bim)
  std::uint32_t iterations = 1;
  std::string convention;  // "radius" | "power"
  std::uint64_t surrogate_checksum = 0;
};

/// Labeled collection of frames sharing one length, domain and SNR.
struct Dataset {
  std::vector<Frame> frames;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> class_names;
  Domain domain = Domain::Time;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::optional<AttackInfo> attack;

  int frame_len() const {
    return frames.empty() ? 0 : static_cast<int>(frames.front().rows());
  }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return frames.size(); }
};

// Error categories map one-to-one onto CLI exit codes.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 1
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 2
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 3
};

}  // namespace amc
