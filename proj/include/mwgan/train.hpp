#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mwgan/data.hpp"
#include "mwgan/eval.hpp"
#include "mwgan/io.hpp"
#include "mwgan/nn.hpp"
#include "mwgan/rng.hpp"

namespace mwgan {

struct AdamConfig {
  real beta1 = 0.9;
  real beta2 = 0.999;
  real eps = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 0;
  std::size_t batch_size = 128;
  real lr = 0.001;
  int m = 1;                             // moments in the generator loss
  real tau = 0.01;                       // critic clip bound
  std::size_t critic_steps_per_gen = 5;  // generator trained on 1-in-N batches
  std::uint64_t seed = 0;
  std::size_t eval_sample_count = 20000;
  std::size_t eval_k = 6;
  double eval_pseudocount = 1e-10;
  AdamConfig adam;
  std::size_t channels = 32;
  std::size_t kernel = 5;
  std::size_t noise_dim = 64;
  real lrelu_slope = 0.2;
  real dropout_rate = 0.1;
  real init_bound = 0;   // 0 means: initialize uniformly in [-tau, tau]
  real max_f_warn = 0.5; // warn when max |f| leaves the small-output regime
};

// Loss columns hold the training-mode values (dropout active), averaged over
// the epoch's updates; the KL comes from a fresh eval-mode sample.
struct EpochRecord {
  std::size_t epoch = 0;
  double critic_loss = 0;
  double gen_loss = 0;
  double kl = 0;
  double max_f = 0;
  double seconds = 0;  // wall clock, measured regardless of CSV timing mode
};

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double critic_loss = 0;
  double gen_loss = 0;         // nan when the generator was not updated
  double gen_signed_term = 0;  // signed first-moment component, nan likewise
  bool gen_updated = false;
};

/// Single-tensor Adam update with bias correction; state updated in place.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, real lr,
                 const AdamConfig& cfg, std::int64_t t);

/// Applies one Adam step to every parameter, reading gradients from the
/// parameter nodes' adjoints. Increments the shared timestep.
void adam_step(ModelParams& params, real lr, const AdamConfig& cfg);

NetConfig make_net_config(const TrainConfig& cfg, const Corpus& corpus);

// Mutable state of one training run: both nets, the named random streams and
// the background k-mer distribution. All stochastic draws come from the
// streams below, in a fixed order, so a (seed, config, corpus) triple pins
// every logged number.
struct TrainState {
  CriticNet critic;
  GeneratorNet gen;
  Rng rng_shuffle;
  Rng rng_noise;
  Rng rng_dropout;
  Rng rng_eval;
  KmerDistribution background;

  static TrainState make(const Corpus& corpus, const TrainConfig& cfg);
};

/// Draws sample_count sequences from the generator in eval mode and decodes
/// them against the alphabet, batching the forward passes.
std::vector<std::string> sample_decoded(const GeneratorNet& gen, const Alphabet& alphabet,
                                        std::size_t sample_count, Rng& stream);

/// One epoch of the schedule: the critic learns on every batch, the generator
/// on batch indices divisible by critic_steps_per_gen, and the epoch closes
/// with a fresh-sample k-mer KL estimate.
EpochRecord train_epoch(TrainState& state, const Corpus& corpus, const TrainConfig& cfg,
                        std::size_t epoch_index, std::vector<BatchRecord>* batch_log);

struct RunResult {
  std::vector<EpochRecord> epochs;
  std::vector<BatchRecord> batches;  // filled when keep_batch_log is set
  double wall_seconds = 0;
  TrainState state;
};

struct TrainHooks {
  bool keep_batch_log = false;
  std::string diagnostic_dir;  // where to drop a snapshot if an epoch aborts
  std::function<void(const EpochRecord&, const TrainState&)> on_epoch;
};

RunResult train_run(const Corpus& corpus, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Config echo stored in checkpoints and manifests.
KeyValues config_echo(const TrainConfig& cfg, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Replicate orchestration over a (moments x seeds) grid.

struct ExperimentConfig {
  TrainConfig base;               // per-cell m and seed are overwritten
  std::vector<int> moments;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;            // empty: keep results in memory only
  std::size_t jobs = 1;
  bool csv_timing = false;
  bool write_checkpoints = true;
};

struct CellResult {
  int m = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0;
  double rho_critic_kl = 0;  // nan when the series is degenerate
  double rho_gen_kl = 0;
  double final_kl = 0;
};

struct MomentRow {
  int m = 0;
  double mean_runtime_s = 0;
  double rho_critic_kl = 0;  // pooled over the replicate series
  double rho_gen_kl = 0;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::vector<MomentRow> rows;
};

ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& cfg);

// Metrics CSV emission; the exact header is part of the external contract.
extern const char* const kMetricsHeader;    // epoch,critic_loss,gen_loss,kl,max_f,seconds
extern const char* const kBatchLogHeader;   // epoch,batch,critic_loss,gen_loss,gen_updated
void write_metrics_csv(const std::string& path, const std::vector<EpochRecord>& records,
                       bool include_timing);
void write_batch_csv(const std::string& path, const std::vector<BatchRecord>& records);

/// Spearman rho that reports nan instead of throwing on degenerate series.
double safe_spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace mwgan
