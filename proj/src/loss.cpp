#include "mwgan/loss.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mwgan {

void validate(const LossConfig& cfg) {
  if (cfg.m < 1) {
    throw std::invalid_argument("loss config: m must be >= 1, got " + std::to_string(cfg.m));
  }
  if (!(cfg.tau > 0)) {
    throw std::invalid_argument("loss config: tau must be positive");
  }
}

MomentSummary central_moments(std::span<const real> values, int m) {
  if (values.empty()) throw std::invalid_argument("central_moments: empty input");
  if (m < 1) throw std::invalid_argument("central_moments: m must be >= 1");

  MomentSummary out;
  const std::size_t n = values.size();

  bool constant = true;
  for (real v : values) {
    if (v != values[0]) {
      constant = false;
      break;
    }
  }
  if (constant) {
    out.mu1 = values[0];
    out.central.assign(static_cast<std::size_t>(m - 1), real(0));
    return out;
  }

  long double sum = 0;
  for (real v : values) sum += v;
  const long double mu1 = sum / static_cast<long double>(n);
  out.mu1 = static_cast<real>(mu1);

  if (m > 1) {
    std::vector<long double> acc(static_cast<std::size_t>(m - 1), 0.0L);
    for (real v : values) {
      const long double d = static_cast<long double>(v) - mu1;
      long double p = d;
      for (int j = 2; j <= m; ++j) {
        p *= d;
        acc[static_cast<std::size_t>(j - 2)] += p;
      }
    }
    out.central.resize(static_cast<std::size_t>(m - 1));
    for (int j = 2; j <= m; ++j) {
      out.central[static_cast<std::size_t>(j - 2)] =
          static_cast<real>(acc[static_cast<std::size_t>(j - 2)] / static_cast<long double>(n));
    }
  }
  return out;
}

NodePtr critic_loss(const NodePtr& preds_real, const NodePtr& preds_gen) {
  if (preds_real->value.size() == 0 || preds_gen->value.size() == 0) {
    throw std::invalid_argument("critic_loss: empty prediction vector");
  }
  return sub(mean(preds_gen), mean(preds_real));
}

NodePtr generator_loss(const NodePtr& preds_real, const NodePtr& preds_gen, int m) {
  if (m < 1) throw std::invalid_argument("generator_loss: m must be >= 1, got " + std::to_string(m));
  if (preds_real->value.size() == 0 || preds_gen->value.size() == 0) {
    throw std::invalid_argument("generator_loss: empty prediction vector");
  }
  NodePtr mean_neg = mean(preds_gen);
  if (m == 1) return scale(mean_neg, real(-1));

  // Real-batch statistics are constants with respect to the generator.
  NodePtr pos = detach(preds_real);
  NodePtr mean_pos = mean(pos);
  NodePtr loss = sub(mean_pos, mean_neg);

  NodePtr dev_neg = sub(preds_gen, mean_neg);
  NodePtr dev_pos = sub(pos, mean_pos);
  // Powers are built incrementally so the moment layer stays linear in m*b.
  NodePtr pow_neg = dev_neg;
  NodePtr pow_pos = dev_pos;
  for (int j = 2; j <= m; ++j) {
    pow_neg = mul(pow_neg, dev_neg);
    pow_pos = mul(pow_pos, dev_pos);
    loss = add(loss, abs_val(sub(mean(pow_neg), mean(pow_pos))));
  }
  return loss;
}

void clip_tensor(Tensor& t, real tau) {
  if (!(tau > 0)) throw std::invalid_argument("clip_tensor: tau must be positive");
  for (real& v : t.data) v = std::clamp(v, -tau, tau);
}

}  // namespace mwgan
