/**
 * Value and diagonal-Gaussian policy heads, the regularized training loss,
 * Adam and mini-batch epochs.
 *
 * Loss per batch of B samples:
 *   c_V * mean (V(s) - target)^2
 *   + c_KL * lambda * mean KL(N(0, I) || pi(.|s))
 *   - c_A * mean sum_a A(a) log pi(a|s)
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "vmcts/learn/mlp.hpp"

namespace vmcts::learn {

inline constexpr double kLogStdMin = -6.907755278982137;  // log(1e-3)
inline constexpr double kLogStdMax = 0.6931471805599453;  // log(2)

/// Backbone emitting [mean_1..mean_A, raw_log_std_1..raw_log_std_A].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, int action_dim, std::vector<int> hidden, Rng& rng) : action_dim_(action_dim) {
    std::vector<int> w{state_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(2 * action_dim);
    net = Mlp(w, rng);
  }
  explicit GaussianPolicy(Mlp backbone) : net(std::move(backbone)), action_dim_(net.output_dim() / 2) {
    if (net.output_dim() % 2 != 0) throw std::invalid_argument("policy: backbone output must be even");
  }

  int action_dim() const { return action_dim_; }

  struct Params {
    Vector mean;
    Vector log_std;
  };

  Params params(std::span<const double> state) const {
    const Vector out = net.forward(state);
    Params p{out.head(action_dim_), out.tail(action_dim_)};
    for (int d = 0; d < action_dim_; ++d) p.log_std(d) = std::clamp(p.log_std(d), kLogStdMin, kLogStdMax);
    return p;
  }

  double log_density(std::span<const double> state, std::span<const double> action) const {
    const auto p = params(state);
    double lp = 0.0;
    for (int d = 0; d < action_dim_; ++d) {
      const double z = (action[d] - p.mean(d)) / std::exp(p.log_std(d));
      lp += -0.5 * z * z - p.log_std(d) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return lp;
  }

  /// Gaussian sample clipped to the action box.
  std::vector<double> sample(std::span<const double> state, Rng& rng) const {
    const auto p = params(state);
    std::vector<double> a(static_cast<std::size_t>(action_dim_));
    for (int d = 0; d < action_dim_; ++d)
      a[d] = std::clamp(p.mean(d) + std::exp(p.log_std(d)) * rng.normal(), -1.0, 1.0);
    return a;
  }

  Mlp net;

 private:
  int action_dim_ = 0;
};

/// KL(N(0, I) || N(mean, diag(exp(log_std))^2)).
inline double kl_unit_to(const Vector& mean, const Vector& log_std) {
  double kl = 0.0;
  for (Eigen::Index d = 0; d < mean.size(); ++d) {
    const double var = std::exp(2.0 * log_std(d));
    kl += log_std(d) + (1.0 + mean(d) * mean(d)) / (2.0 * var) - 0.5;
  }
  return kl;
}

struct TrainSample {
  std::vector<double> state;
  double value_target = 0.0;
  std::vector<std::vector<double>> actions;
  std::vector<double> advantages;
};

struct LossCoefficients {
  double value = 1.0;
  double kl = 10.0;
  double advantage = 1.0;
};

struct LossResult {
  double loss = 0.0;
  double value_term = 0.0;
  double kl_term = 0.0;
  double advantage_term = 0.0;
  MlpGrads value_grads;
  MlpGrads policy_grads;
};

inline LossResult loss_and_grads(const Mlp& value_net, const GaussianPolicy& policy,
                                 std::span<const TrainSample> batch, double lambda,
                                 const LossCoefficients& coef = {}) {
  LossResult r;
  r.value_grads = value_net.zero_grads();
  r.policy_grads = policy.net.zero_grads();
  if (batch.empty()) return r;

  const int in = value_net.input_dim();
  const int A = policy.action_dim();
  const auto B = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(B);

  Matrix x(in, B);
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    if (static_cast<int>(s.state.size()) != in) throw std::invalid_argument("loss: state dimension mismatch");
    for (int d = 0; d < in; ++d) x(d, i) = s.state[d];
  }

  Mlp::Tape vt;
  const Matrix v = value_net.forward_batch(x, &vt);
  Matrix dv(1, B);
  for (Eigen::Index i = 0; i < B; ++i) {
    const double e = v(0, i) - batch[static_cast<std::size_t>(i)].value_target;
    r.value_term += coef.value * e * e * inv_b;
    dv(0, i) = 2.0 * coef.value * e * inv_b;
  }
  r.value_grads = value_net.backward(vt, dv);

  Mlp::Tape pt;
  const Matrix out = policy.net.forward_batch(x, &pt);
  Matrix dout = Matrix::Zero(out.rows(), B);
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    for (int d = 0; d < A; ++d) {
      const double mu = out(d, i);
      const double raw = out(A + d, i);
      const double ls = std::clamp(raw, kLogStdMin, kLogStdMax);
      const bool inside = raw > kLogStdMin && raw < kLogStdMax;
      const double var = std::exp(2.0 * ls);

      const double kw = coef.kl * lambda * inv_b;
      r.kl_term += kw * (ls + (1.0 + mu * mu) / (2.0 * var) - 0.5);
      double dmu = kw * mu / var;
      double dls = kw * (1.0 - (1.0 + mu * mu) / var);

      for (std::size_t k = 0; k < s.actions.size(); ++k) {
        const double adv = s.advantages[k];
        const double z = (s.actions[k][d] - mu) / std::exp(ls);
        const double lp = -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
        const double aw = coef.advantage * adv * inv_b;
        r.advantage_term -= aw * lp;
        dmu -= aw * z / std::exp(ls);
        dls -= aw * (z * z - 1.0);
      }
      dout(d, i) = dmu;
      dout(A + d, i) = inside ? dls : 0.0;
    }
  }
  r.policy_grads = policy.net.backward(pt, dout);
  r.loss = r.value_term + r.kl_term + r.advantage_term;
  if (!std::isfinite(r.loss) || !std::isfinite(r.value_grads.squared_norm()) ||
      !std::isfinite(r.policy_grads.squared_norm()))
    throw TrainingDiverged("loss or gradient is not finite");
  return r;
}

// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-7;
};

class Adam {
 public:
  Adam(const Mlp& net, AdamConfig cfg = {}) : cfg_(cfg), m_(net.zero_grads()), v_(net.zero_grads()) {}

  void step(Mlp& net, const MlpGrads& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto upd = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
      param.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
    };
    for (std::size_t l = 0; l < net.layers(); ++l) {
      upd(net.W[l], g.dW[l], m_.dW[l], v_.dW[l]);
      upd(net.b[l], g.db[l], m_.db[l], v_.db[l]);
    }
  }

  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  MlpGrads m_, v_;
  std::uint64_t t_ = 0;
};

struct Learner {
  Mlp value;
  GaussianPolicy policy;
  Adam value_opt;
  Adam policy_opt;

  Learner(int state_dim, int action_dim, Rng& rng, std::vector<int> hidden = {256, 256, 256}, AdamConfig cfg = {})
      : value([&] {
          std::vector<int> w{state_dim};
          w.insert(w.end(), hidden.begin(), hidden.end());
          w.push_back(1);
          return Mlp(w, rng);
        }()),
        policy(state_dim, action_dim, hidden, rng),
        value_opt(value, cfg),
        policy_opt(policy.net, cfg) {}
};

/// Shuffled mini-batches; returns per-batch losses. At most `max_batches` are used.
inline std::vector<double> train_epoch(Learner& nets, std::span<const TrainSample> data, double lambda, Rng& rng,
                                       std::size_t batch_size = 256, std::size_t max_batches = 40,
                                       const LossCoefficients& coef = {}) {
  std::vector<double> trace;
  if (data.empty() || batch_size == 0) return trace;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  std::vector<TrainSample> batch;
  for (std::size_t start = 0; start < order.size() && trace.size() < max_batches; start += batch_size) {
    batch.clear();
    for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) batch.push_back(data[order[k]]);
    const auto r = loss_and_grads(nets.value, nets.policy, batch, lambda, coef);
    nets.value_opt.step(nets.value, r.value_grads);
    nets.policy_opt.step(nets.policy.net, r.policy_grads);
    trace.push_back(r.loss);
  }
  return trace;
}

inline double value_mse(const Mlp& value, std::span<const TrainSample> data) {
  if (data.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : data) {
    const double e = value.forward(d.state)(0) - d.value_target;
    s += e * e;
  }
  return s / static_cast<double>(data.size());
}

}  // namespace vmcts::learn
