#pragma once

#include <span>
#include <vector>

#include "mwgan/autodiff.hpp"
#include "mwgan/tensor.hpp"

namespace mwgan {

/// First raw moment plus central moments of a critic-score batch.
/// central[j-2] holds mu_j for j = 2..m, so it is empty when m == 1.
struct MomentSummary {
  real mu1 = 0;
  std::vector<real> central;
};

struct LossConfig {
  int m = 1;          // number of moments in the generator loss
  real tau = 0.01;    // critic weight-clip bound
};

/// Rejects m < 1 or tau <= 0.
void validate(const LossConfig& cfg);

/// Two-pass batch moments: mu1 = mean, mu_j = mean((x - mu1)^j).
/// A constant batch yields exactly zero central moments.
MomentSummary central_moments(std::span<const real> values, int m);

/// mean(preds_gen) - mean(preds_real). Minimizing drives real scores up.
NodePtr critic_loss(const NodePtr& preds_real, const NodePtr& preds_gen);

// Generator loss over the first m moments of the critic-score batches.
// m == 1 is the plain -mean(preds_gen); m > 1 starts from the signed
// first-moment gap and adds absolute gaps of central moments 2..m. The real
// batch is detached, so gradients flow only through preds_gen.
NodePtr generator_loss(const NodePtr& preds_real, const NodePtr& preds_gen, int m);

/// Clamps every parameter entry into [-tau, tau].
void clip_tensor(Tensor& t, real tau);

}  // namespace mwgan
