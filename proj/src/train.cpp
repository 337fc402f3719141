#include "mwgan/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "mwgan/loss.hpp"

namespace mwgan {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, real lr,
                 const AdamConfig& cfg, std::int64_t t) {
  if (param.shape != grad.shape || param.shape != m.shape || param.shape != v.shape) {
    throw std::invalid_argument("adam_update: shape mismatch " + shape_str(param.shape) + " vs " +
                                shape_str(grad.shape));
  }
  if (t < 1) throw std::invalid_argument("adam_update: timestep must be >= 1");
  const real bc1 = real(1) - static_cast<real>(std::pow(cfg.beta1, static_cast<double>(t)));
  const real bc2 = real(1) - static_cast<real>(std::pow(cfg.beta2, static_cast<double>(t)));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const real g = grad[i];
    m[i] = cfg.beta1 * m[i] + (real(1) - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (real(1) - cfg.beta2) * g * g;
    const real m_hat = m[i] / bc1;
    const real v_hat = v[i] / bc2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

void adam_step(ModelParams& params, real lr, const AdamConfig& cfg) {
  ++params.step;
  for (Param& p : params.items) {
    adam_update(p.node->value, p.node->adjoint, p.adam_m, p.adam_v, lr, cfg, params.step);
  }
}

NetConfig make_net_config(const TrainConfig& cfg, const Corpus& corpus) {
  NetConfig net;
  net.seq_len = corpus.seq_len;
  net.alphabet = corpus.alphabet.size();
  net.channels = cfg.channels;
  net.kernel = cfg.kernel;
  net.noise_dim = cfg.noise_dim;
  net.lrelu_slope = cfg.lrelu_slope;
  net.dropout_rate = cfg.dropout_rate;
  return net;
}

TrainState TrainState::make(const Corpus& corpus, const TrainConfig& cfg) {
  if (corpus.framed.empty()) throw std::invalid_argument("train: empty corpus");
  validate(LossConfig{cfg.m, cfg.tau});
  const NetConfig net = make_net_config(cfg, corpus);
  const real bound = cfg.init_bound > 0 ? cfg.init_bound : cfg.tau;
  Rng rng_init_critic = derive_stream(cfg.seed, "init/critic");
  Rng rng_init_gen = derive_stream(cfg.seed, "init/gen");
  TrainState state{
      CriticNet::make(net, bound, rng_init_critic),
      GeneratorNet::make(net, bound, rng_init_gen),
      derive_stream(cfg.seed, "shuffle"),
      derive_stream(cfg.seed, "noise"),
      derive_stream(cfg.seed, "dropout"),
      derive_stream(cfg.seed, "eval"),
      {}};
  state.background = kmer_distribution(corpus.framed, cfg.eval_k);
  return state;
}

std::vector<std::string> sample_decoded(const GeneratorNet& gen, const Alphabet& alphabet,
                                        std::size_t sample_count, Rng& stream) {
  std::vector<std::string> out;
  out.reserve(sample_count);
  std::size_t remaining = sample_count;
  while (remaining > 0) {
    const std::size_t b = std::min<std::size_t>(256, remaining);
    const Tensor noise = sample_noise(b, gen.cfg.noise_dim, stream);
    const NodePtr probs = gen.forward(noise, /*train=*/false, stream);
    for (auto& s : decode(probs->value, alphabet)) out.push_back(std::move(s));
    remaining -= b;
  }
  return out;
}

namespace {

double max_abs_value(const Tensor& t) {
  double m = 0;
  for (real v : t.data) m = std::max(m, static_cast<double>(std::fabs(v)));
  return m;
}

}  // namespace

EpochRecord train_epoch(TrainState& state, const Corpus& corpus, const TrainConfig& cfg,
                        std::size_t epoch_index, std::vector<BatchRecord>* batch_log) {
  const auto t0 = Clock::now();
  if (corpus.framed.size() < cfg.batch_size) {
    throw std::invalid_argument("train_epoch: corpus of " + std::to_string(corpus.framed.size()) +
                                " sequences is smaller than one batch of " +
                                std::to_string(cfg.batch_size));
  }
  if (cfg.critic_steps_per_gen == 0) {
    throw std::invalid_argument("train_epoch: critic_steps_per_gen must be >= 1");
  }

  std::vector<std::size_t> order(corpus.framed.size());
  std::iota(order.begin(), order.end(), 0);
  state.rng_shuffle.shuffle(order);
  const std::size_t n_batches = corpus.framed.size() / cfg.batch_size;

  EpochRecord rec;
  rec.epoch = epoch_index;
  double critic_loss_sum = 0;
  double gen_loss_sum = 0;
  std::size_t gen_updates = 0;
  double max_f = 0;

  std::vector<std::string> batch_lines(cfg.batch_size);
  for (std::size_t bi = 0; bi < n_batches; ++bi) {
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      batch_lines[i] = corpus.framed[order[bi * cfg.batch_size + i]];
    }
    const Tensor real_batch = encode_framed(batch_lines, corpus.alphabet);

    // Critic step: generated sequences enter as data, not as a graph.
    const Tensor noise = sample_noise(cfg.batch_size, cfg.noise_dim, state.rng_noise);
    const NodePtr fake = state.gen.forward(noise, /*train=*/true, state.rng_dropout);
    const NodePtr preds_real = state.critic.forward(real_batch, /*train=*/true, state.rng_dropout);
    const NodePtr preds_fake =
        state.critic.forward(fake->value, /*train=*/true, state.rng_dropout);
    const NodePtr c_loss = critic_loss(preds_real, preds_fake);
    backward(c_loss);
    adam_step(state.critic.params, cfg.lr, cfg.adam);
    state.critic.params.clip(cfg.tau);
    if (state.critic.params.max_abs() > cfg.tau) {
      throw std::logic_error("train_epoch: clip invariant violated");
    }
    max_f = std::max({max_f, max_abs_value(preds_real->value), max_abs_value(preds_fake->value)});
    const double c_loss_v = static_cast<double>(c_loss->value[0]);
    critic_loss_sum += c_loss_v;

    BatchRecord brec;
    brec.epoch = epoch_index;
    brec.batch = bi;
    brec.critic_loss = c_loss_v;
    brec.gen_loss = std::numeric_limits<double>::quiet_NaN();
    brec.gen_signed_term = std::numeric_limits<double>::quiet_NaN();

    if (bi % cfg.critic_steps_per_gen == 0) {
      const Tensor noise2 = sample_noise(cfg.batch_size, cfg.noise_dim, state.rng_noise);
      const NodePtr gen_out = state.gen.forward(noise2, /*train=*/true, state.rng_dropout);
      const NodePtr preds_neg =
          state.critic.forward(gen_out, /*train=*/true, state.rng_dropout);
      const NodePtr preds_pos =
          state.critic.forward(real_batch, /*train=*/true, state.rng_dropout);
      const NodePtr g_loss = generator_loss(preds_pos, preds_neg, cfg.m);
      backward(g_loss);
      adam_step(state.gen.params, cfg.lr, cfg.adam);
      max_f = std::max(
          {max_f, max_abs_value(preds_neg->value), max_abs_value(preds_pos->value)});
      const double g_loss_v = static_cast<double>(g_loss->value[0]);
      gen_loss_sum += g_loss_v;
      ++gen_updates;
      brec.gen_loss = g_loss_v;
      double mean_pos = 0, mean_neg = 0;
      for (real v : preds_pos->value.data) mean_pos += static_cast<double>(v);
      for (real v : preds_neg->value.data) mean_neg += static_cast<double>(v);
      mean_pos /= static_cast<double>(preds_pos->value.size());
      mean_neg /= static_cast<double>(preds_neg->value.size());
      brec.gen_signed_term = cfg.m == 1 ? -mean_neg : mean_pos - mean_neg;
      brec.gen_updated = true;
    }
    if (batch_log) batch_log->push_back(brec);
  }

  rec.critic_loss = critic_loss_sum / static_cast<double>(n_batches);
  rec.gen_loss = gen_updates ? gen_loss_sum / static_cast<double>(gen_updates)
                             : std::numeric_limits<double>::quiet_NaN();
  rec.max_f = max_f;
  if (max_f > cfg.max_f_warn) {
    std::cerr << "warning: epoch " << epoch_index << ": max |f| = " << max_f << " exceeds "
              << cfg.max_f_warn << "; the bounded-critic regime no longer holds\n";
  }

  // Post-epoch quality estimate on a fresh evaluation sample.
  const std::vector<std::string> decoded =
      sample_decoded(state.gen, corpus.alphabet, cfg.eval_sample_count, state.rng_eval);
  const KmerDistribution gen_dist = kmer_distribution(decoded, cfg.eval_k);
  if (gen_dist.empty()) {
    std::cerr << "warning: epoch " << epoch_index
              << ": generated sample yielded no k-mers; reporting infinite KL\n";
    rec.kl = std::numeric_limits<double>::infinity();
  } else {
    rec.kl = kl_divergence(gen_dist, state.background, cfg.eval_pseudocount);
  }
  rec.seconds = seconds_since(t0);
  return rec;
}

RunResult train_run(const Corpus& corpus, const TrainConfig& cfg, const TrainHooks& hooks) {
  const auto t0 = Clock::now();
  RunResult result{{}, {}, 0, TrainState::make(corpus, cfg)};
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    try {
      EpochRecord rec = train_epoch(result.state, corpus, cfg, e + 1,
                                    hooks.keep_batch_log ? &result.batches : nullptr);
      result.epochs.push_back(rec);
      if (hooks.on_epoch) hooks.on_epoch(rec, result.state);
    } catch (const std::exception& err) {
      if (!hooks.diagnostic_dir.empty()) {
        fs::create_directories(hooks.diagnostic_dir);
        const std::string snap =
            (fs::path(hooks.diagnostic_dir) / ("diagnostic_epoch" + std::to_string(e + 1) + ".ckpt"))
                .string();
        Checkpoint ckpt = make_checkpoint(result.state.critic, result.state.gen,
                                          config_echo(cfg, corpus));
        ckpt.config.emplace_back("aborted_epoch", std::to_string(e + 1));
        ckpt.config.emplace_back("abort_reason", err.what());
        ckpt.save(snap);
        throw std::runtime_error(std::string(err.what()) + " (epoch " + std::to_string(e + 1) +
                                 " aborted; diagnostic snapshot at " + snap + ")");
      }
      throw;
    }
  }
  result.wall_seconds = seconds_since(t0);
  return result;
}

KeyValues config_echo(const TrainConfig& cfg, const Corpus& corpus) {
  KeyValues kv;
  kv.emplace_back("alphabet_residues", corpus.alphabet.residues());
  kv.emplace_back("seq_len", std::to_string(corpus.seq_len));
  kv.emplace_back("epochs", std::to_string(cfg.epochs));
  kv.emplace_back("batch_size", std::to_string(cfg.batch_size));
  kv.emplace_back("lr", format_double(static_cast<double>(cfg.lr)));
  kv.emplace_back("m", std::to_string(cfg.m));
  kv.emplace_back("tau", format_double(static_cast<double>(cfg.tau)));
  kv.emplace_back("critic_steps_per_gen", std::to_string(cfg.critic_steps_per_gen));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("eval_sample_count", std::to_string(cfg.eval_sample_count));
  kv.emplace_back("eval_k", std::to_string(cfg.eval_k));
  kv.emplace_back("eval_pseudocount", format_double(cfg.eval_pseudocount));
  kv.emplace_back("adam_beta1", format_double(static_cast<double>(cfg.adam.beta1)));
  kv.emplace_back("adam_beta2", format_double(static_cast<double>(cfg.adam.beta2)));
  kv.emplace_back("adam_eps", format_double(static_cast<double>(cfg.adam.eps)));
  kv.emplace_back("channels", std::to_string(cfg.channels));
  kv.emplace_back("kernel", std::to_string(cfg.kernel));
  kv.emplace_back("noise_dim", std::to_string(cfg.noise_dim));
  kv.emplace_back("lrelu_slope", format_double(static_cast<double>(cfg.lrelu_slope)));
  kv.emplace_back("dropout_rate", format_double(static_cast<double>(cfg.dropout_rate)));
  kv.emplace_back("init_bound", format_double(static_cast<double>(cfg.init_bound)));
  return kv;
}

const char* const kMetricsHeader = "epoch,critic_loss,gen_loss,kl,max_f,seconds";
const char* const kBatchLogHeader = "epoch,batch,critic_loss,gen_loss,gen_updated";

void write_metrics_csv(const std::string& path, const std::vector<EpochRecord>& records,
                       bool include_timing) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    out += ",";
    out += format_double(r.critic_loss);
    out += ",";
    out += format_double(r.gen_loss);
    out += ",";
    out += format_double(r.kl);
    out += ",";
    out += format_double(r.max_f);
    out += ",";
    out += format_double(include_timing ? r.seconds : 0.0);
    out += "\n";
  }
  write_text_file(path, out);
}

void write_batch_csv(const std::string& path, const std::vector<BatchRecord>& records) {
  std::string out = std::string(kBatchLogHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    out += ",";
    out += std::to_string(r.batch);
    out += ",";
    out += format_double(r.critic_loss);
    out += ",";
    out += format_double(r.gen_loss);
    out += ",";
    out += r.gen_updated ? "1" : "0";
    out += "\n";
  }
  write_text_file(path, out);
}

double safe_spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  for (double v : xs) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
  }
  for (double v : ys) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
  }
  const bool xs_const = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
  const bool ys_const = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
  if (xs_const || ys_const) return std::numeric_limits<double>::quiet_NaN();
  return spearman_rho(xs, ys);
}

ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& cfg) {
  if (cfg.moments.empty() || cfg.seeds.empty()) {
    throw std::invalid_argument("run_experiment: moments and seeds must be nonempty");
  }
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.seeds.size(); ++j) {
      if (cfg.seeds[i] == cfg.seeds[j]) {
        throw std::invalid_argument("run_experiment: duplicate seed " +
                                    std::to_string(cfg.seeds[i]));
      }
    }
  }
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  struct Cell {
    int m;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int m : cfg.moments) {
    for (std::uint64_t s : cfg.seeds) cells.push_back({m, s});
  }

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell cell = cells[i];
      TrainConfig tc = cfg.base;
      tc.m = cell.m;
      tc.seed = cell.seed;
      TrainHooks hooks;
      if (!cfg.out_dir.empty()) hooks.diagnostic_dir = cfg.out_dir;
      const auto t0 = Clock::now();
      RunResult run = train_run(corpus, tc, hooks);
      CellResult& out = results[i];
      out.m = cell.m;
      out.seed = cell.seed;
      out.epochs = std::move(run.epochs);
      out.wall_seconds = seconds_since(t0);
      std::vector<double> closs, gloss, kls;
      for (const auto& e : out.epochs) {
        closs.push_back(e.critic_loss);
        gloss.push_back(e.gen_loss);
        kls.push_back(e.kl);
      }
      out.rho_critic_kl = safe_spearman(closs, kls);
      out.rho_gen_kl = safe_spearman(gloss, kls);
      out.final_kl = kls.empty() ? std::numeric_limits<double>::quiet_NaN() : kls.back();
      if (!cfg.out_dir.empty()) {
        const std::string stem = "m" + std::to_string(cell.m) + "_seed" + std::to_string(cell.seed);
        write_metrics_csv((fs::path(cfg.out_dir) / (stem + ".metrics.csv")).string(), out.epochs,
                          cfg.csv_timing);
        if (cfg.write_checkpoints) {
          Checkpoint ckpt =
              make_checkpoint(run.state.critic, run.state.gen, config_echo(tc, corpus));
          ckpt.save((fs::path(cfg.out_dir) / (stem + ".ckpt")).string());
        }
      }
      {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "cell m=" << cell.m << " seed=" << cell.seed << " done in "
                  << format_double(out.wall_seconds) << " s, final kl "
                  << format_double(out.final_kl) << "\n";
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult res;
  res.cells = std::move(results);
  for (int m : cfg.moments) {
    MomentRow row;
    row.m = m;
    double runtime_sum = 0;
    std::size_t count = 0;
    std::vector<double> closs, gloss, kls;
    for (const auto& cell : res.cells) {
      if (cell.m != m) continue;
      runtime_sum += cell.wall_seconds;
      ++count;
      for (const auto& e : cell.epochs) {
        closs.push_back(e.critic_loss);
        gloss.push_back(e.gen_loss);
        kls.push_back(e.kl);
      }
    }
    row.mean_runtime_s = count ? runtime_sum / static_cast<double>(count) : 0;
    row.rho_critic_kl = safe_spearman(closs, kls);
    row.rho_gen_kl = safe_spearman(gloss, kls);
    res.rows.push_back(row);
  }

  if (!cfg.out_dir.empty()) {
    std::string cells_csv = "m,seed,runtime_s,rho_critic_kl,rho_gen_kl,final_kl\n";
    for (const auto& cell : res.cells) {
      cells_csv += std::to_string(cell.m) + "," + std::to_string(cell.seed) + "," +
                   format_double(cfg.csv_timing ? cell.wall_seconds : 0.0) + "," +
                   format_double(cell.rho_critic_kl) + "," + format_double(cell.rho_gen_kl) + "," +
                   format_double(cell.final_kl) + "\n";
    }
    write_text_file((fs::path(cfg.out_dir) / "cells.csv").string(), cells_csv);
    std::string summary_csv = "m,mean_runtime_s,rho_critic_kl,rho_gen_kl\n";
    for (const auto& row : res.rows) {
      summary_csv += std::to_string(row.m) + "," +
                     format_double(cfg.csv_timing ? row.mean_runtime_s : 0.0) + "," +
                     format_double(row.rho_critic_kl) + "," + format_double(row.rho_gen_kl) + "\n";
    }
    write_text_file((fs::path(cfg.out_dir) / "summary.csv").string(), summary_csv);
  }
  return res;
}

}  // namespace mwgan
