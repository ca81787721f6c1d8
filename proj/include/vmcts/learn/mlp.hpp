/**
 * Fully connected ReLU network with a linear output layer and explicit
 * reverse-mode gradients. Batches are column-major: one sample per column.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <type_traits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmcts/common.hpp"

namespace vmcts::learn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default hidden layout: three hidden layers of 256 units.
inline std::vector<int> default_widths(int in, int out) { return {in, 256, 256, 256, out}; }

struct MlpGrads {
  std::vector<Matrix> dW;
  std::vector<Vector> db;

  void add(const MlpGrads& o) {
    for (std::size_t i = 0; i < dW.size(); ++i) {
      dW[i] += o.dW[i];
      db[i] += o.db[i];
    }
  }
  double squared_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dW.size(); ++i) s += dW[i].squaredNorm() + db[i].squaredNorm();
    return s;
  }
};

class Mlp {
 public:
  Mlp() = default;

  /// He-uniform weights, zero biases.
  Mlp(std::vector<int> widths, Rng& rng) : widths_(std::move(widths)) {
    check_widths();
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const int in = widths_[l], out = widths_[l + 1];
      const double bound = std::sqrt(6.0 / in);
      Matrix w(out, in);
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
      W.push_back(std::move(w));
      b.push_back(Vector::Zero(out));
    }
  }

  static Mlp zeros(std::vector<int> widths) {
    Mlp m;
    m.widths_ = std::move(widths);
    m.check_widths();
    for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
      m.W.push_back(Matrix::Zero(m.widths_[l + 1], m.widths_[l]));
      m.b.push_back(Vector::Zero(m.widths_[l + 1]));
    }
    return m;
  }

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  std::size_t layers() const { return W.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W.size(); ++l) n += static_cast<std::size_t>(W[l].size() + b[l].size());
    return n;
  }

  /// Activations of every layer, input first; kept for the backward pass.
  struct Tape {
    std::vector<Matrix> act;
  };

  Matrix forward_batch(const Matrix& x, Tape* tape = nullptr) const {
    if (x.rows() != input_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
    Matrix h = x;
    if (tape) {
      tape->act.clear();
      tape->act.push_back(h);
    }
    for (std::size_t l = 0; l < W.size(); ++l) {
      Matrix z = W[l] * h;
      z.colwise() += b[l];
      if (l + 1 < W.size()) z = z.cwiseMax(0.0);
      h = std::move(z);
      if (tape) tape->act.push_back(h);
    }
    return h;
  }

  Vector forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
    Matrix m = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    return forward_batch(m).col(0);
  }

  /// Gradients of sum(d_out .* output) with respect to all parameters.
  MlpGrads backward(const Tape& tape, const Matrix& d_out) const {
    MlpGrads g;
    g.dW.resize(W.size());
    g.db.resize(W.size());
    Matrix delta = d_out;
    for (std::size_t l = W.size(); l-- > 0;) {
      g.dW[l] = delta * tape.act[l].transpose();
      g.db[l] = delta.rowwise().sum();
      if (l == 0) break;
      delta = W[l].transpose() * delta;
      const Matrix& a = tape.act[l];
      delta = delta.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
    return g;
  }

  MlpGrads zero_grads() const {
    MlpGrads g;
    for (std::size_t l = 0; l < W.size(); ++l) {
      g.dW.push_back(Matrix::Zero(W[l].rows(), W[l].cols()));
      g.db.push_back(Vector::Zero(b[l].size()));
    }
    return g;
  }

  /// Visits every parameter in a fixed order (layer, weights row-major, then biases).
  template <class F>
  void for_each_parameter(F&& f) {
    for (std::size_t l = 0; l < W.size(); ++l) {
      for (Eigen::Index r = 0; r < W[l].rows(); ++r)
        for (Eigen::Index c = 0; c < W[l].cols(); ++c) f(W[l](r, c));
      for (Eigen::Index r = 0; r < b[l].size(); ++r) f(b[l](r));
    }
  }

  bool operator==(const Mlp& o) const {
    if (widths_ != o.widths_) return false;
    for (std::size_t l = 0; l < W.size(); ++l)
      if (W[l] != o.W[l] || b[l] != o.b[l]) return false;
    return true;
  }

  std::vector<Matrix> W;
  std::vector<Vector> b;

 private:
  void check_widths() const {
    if (widths_.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
    for (int w : widths_)
      if (w <= 0) throw std::invalid_argument("mlp: widths must be positive");
  }

  std::vector<int> widths_;
};

// ---------------------------------------------------------------------------
// Checkpoints: "VMCTSMLP", u32 version, u32 width count, u64 widths, then per
// layer the weight matrix row-major followed by the bias vector, all as
// little-endian IEEE-754 doubles.

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>)
    std::memcpy(&bits, &v, sizeof(double));
  else
    bits = static_cast<std::uint64_t>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    double v;
    std::memcpy(&v, &bits, sizeof(double));
    return v;
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace detail

inline void save_checkpoint(const Mlp& net, std::ostream& os) {
  os.write("VMCTSMLP", 8);
  detail::put_le<std::uint32_t>(os, kCheckpointVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.widths().size()));
  for (int w : net.widths()) detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(w));
  for (std::size_t l = 0; l < net.layers(); ++l) {
    for (Eigen::Index r = 0; r < net.W[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.W[l].cols(); ++c) detail::put_le<double>(os, net.W[l](r, c));
    for (Eigen::Index r = 0; r < net.b[l].size(); ++r) detail::put_le<double>(os, net.b[l](r));
  }
}

inline Mlp load_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "VMCTSMLP") throw std::runtime_error("checkpoint: bad magic");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  const auto n = detail::get_le<std::uint32_t>(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < n; ++i) widths.push_back(static_cast<int>(detail::get_le<std::uint64_t>(is)));
  Mlp net = Mlp::zeros(widths);
  for (std::size_t l = 0; l < net.layers(); ++l) {
    for (Eigen::Index r = 0; r < net.W[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.W[l].cols(); ++c) net.W[l](r, c) = detail::get_le<double>(is);
    for (Eigen::Index r = 0; r < net.b[l].size(); ++r) net.b[l](r) = detail::get_le<double>(is);
  }
  return net;
}

inline void save_checkpoint(const Mlp& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  save_checkpoint(net, os);
}

inline Mlp load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  return load_checkpoint(is);
}

}  // namespace vmcts::learn
