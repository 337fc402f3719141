#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mwgan/autodiff.hpp"
#include "mwgan/loss.hpp"
#include "mwgan/rng.hpp"
#include "mwgan/tensor.hpp"

namespace mwgan {

struct NetConfig {
  std::size_t seq_len = 0;    // l, framed sequence length
  std::size_t alphabet = 0;   // u, one-hot width
  std::size_t channels = 32;  // c, motif channels
  std::size_t kernel = 5;     // k, convolution width over the position axis
  std::size_t noise_dim = 64; // y
  real lrelu_slope = 0.2;
  real dropout_rate = 0.1;
};

/// One named parameter tensor with its Adam state slots.
struct Param {
  std::string name;
  NodePtr node;     // leaf; value is updated in place by the optimizer
  Tensor adam_m;
  Tensor adam_v;
};

/// Ordered, stably named parameter collection for one network.
struct ModelParams {
  std::vector<Param> items;
  std::int64_t step = 0;  // Adam timestep t

  NodePtr add(const std::string& name, Tensor init);
  std::size_t total_count() const;
  real max_abs() const;
  void clip(real tau);
  void fill_uniform(real bound, Rng& rng);
};

/// Feedforward widths from l down to 1, halving with ceil at each step.
std::vector<std::size_t> head_widths(std::size_t seq_len);

// Critic f: two position-axis convolutions (u -> c -> 1) followed by a stack
// of halving linear layers, every layer's output passed through leaky ReLU
// and delimited with dropout while training. Output is one scalar per
// sequence.
struct CriticNet {
  NetConfig cfg;
  ModelParams params;

  static CriticNet make(const NetConfig& cfg, real init_bound, Rng& rng);
  /// batch as a graph node of shape b x l x u; returns scores of shape {b}.
  NodePtr forward(const NodePtr& batch, bool train, Rng& rng) const;
  NodePtr forward(const Tensor& batch, bool train, Rng& rng) const;
};

// Generator g: noise inflates to l*u, is viewed as an l x u matrix and passed
// through two convolutions (u -> c -> u); softmax over the embedding axis
// turns every position into a probability row.
struct GeneratorNet {
  NetConfig cfg;
  ModelParams params;

  static GeneratorNet make(const NetConfig& cfg, real init_bound, Rng& rng);
  /// noise of shape b x y; returns b x l x u row-probabilities.
  NodePtr forward(const NodePtr& noise, bool train, Rng& rng) const;
  NodePtr forward(const Tensor& noise, bool train, Rng& rng) const;
};

/// i.i.d. standard normal noise matrix, b x y, from the given stream.
Tensor sample_noise(std::size_t b, std::size_t y, Rng& rng);

/// Closed-form parameter counts; pure functions of the config.
std::size_t critic_param_count(const NetConfig& cfg);
std::size_t generator_param_count(const NetConfig& cfg);

// Checkpoint container: versioned binary file holding a key=value config echo
// plus named tensors. Round-trips bit exactly.
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
  const std::string* find(const std::string& key) const;
};

Checkpoint make_checkpoint(const CriticNet& critic, const GeneratorNet& gen,
                           std::vector<std::pair<std::string, std::string>> extra_config);
void restore_params(ModelParams& params, const Checkpoint& ckpt, const std::string& prefix);

}  // namespace mwgan
