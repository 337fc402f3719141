#include "mwgan/cli.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "mwgan/plot.hpp"

namespace mwgan {

namespace fs = std::filesystem;

namespace {

std::string now_unix() { return std::to_string(static_cast<long long>(std::time(nullptr))); }

void append_corpus_fingerprint(KeyValues& kv, const Corpus& corpus) {
  kv.emplace_back("n_sequences", std::to_string(corpus.framed.size()));
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(content_hash(corpus.framed)));
  kv.emplace_back("corpus_hash", hash);
}

}  // namespace

Corpus load_corpus_dir(const std::string& dir) {
  const fs::path base(dir);
  const std::string manifest_path = (base / "manifest.txt").string();
  const std::string corpus_path = (base / "corpus.txt").string();
  const KeyValues manifest = read_manifest(manifest_path);
  const std::string* residues = find_key(manifest, "alphabet_residues");
  if (!residues) {
    throw std::runtime_error("corpus manifest " + manifest_path + " lacks alphabet_residues");
  }
  return load_corpus_file(corpus_path, Alphabet::from_residues(*residues));
}

void run_prepare(const PrepareOptions& opts) {
  if (opts.out_dir.empty()) throw std::invalid_argument("prepare: --out is required");
  if (opts.fasta_path.empty() == opts.synth_path.empty()) {
    throw std::invalid_argument("prepare: exactly one of --fasta / --synth is required");
  }

  std::vector<SequenceRecord> records;
  Alphabet alphabet = Alphabet::amino();
  Rng rng = derive_stream(opts.seed, "prepare");
  if (!opts.fasta_path.empty()) {
    alphabet = Alphabet::from_residues(opts.alphabet);
    if (opts.sample_n > 0) {
      records = load_fasta(opts.fasta_path, opts.min_len, opts.max_len, opts.sample_n, rng);
    } else {
      for (auto& rec : parse_fasta(opts.fasta_path)) {
        if (rec.residues.size() >= opts.min_len && rec.residues.size() <= opts.max_len) {
          records.push_back(std::move(rec));
        }
      }
    }
  } else {
    const SynthSpec spec = parse_synth_spec(opts.synth_path);
    alphabet = Alphabet::from_residues(spec.residues);
    records = synth_corpus(spec, rng);
    std::erase_if(records, [&](const SequenceRecord& r) {
      return r.residues.size() < opts.min_len || r.residues.size() > opts.max_len;
    });
    if (opts.sample_n > 0) {
      if (opts.sample_n > records.size()) {
        throw std::runtime_error("prepare: requested sample of " + std::to_string(opts.sample_n) +
                                 " but only " + std::to_string(records.size()) +
                                 " records available");
      }
      for (std::size_t i = 0; i < opts.sample_n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(records.size() - i));
        std::swap(records[i], records[j]);
      }
      records.resize(opts.sample_n);
    }
  }
  if (records.empty()) {
    throw std::runtime_error("prepare: no records survive the length filter [" +
                             std::to_string(opts.min_len) + "," + std::to_string(opts.max_len) +
                             "]");
  }

  const Corpus corpus = corpus_from_records(records, alphabet);
  fs::create_directories(opts.out_dir);
  write_corpus_file((fs::path(opts.out_dir) / "corpus.txt").string(), corpus);

  KeyValues kv;
  kv.emplace_back("command", "prepare");
  kv.emplace_back("input", opts.fasta_path.empty() ? opts.synth_path : opts.fasta_path);
  kv.emplace_back("input_kind", opts.fasta_path.empty() ? "synthetic" : "fasta");
  kv.emplace_back("min_len", std::to_string(opts.min_len));
  kv.emplace_back("max_len", std::to_string(opts.max_len));
  kv.emplace_back("sample_n", std::to_string(opts.sample_n));
  kv.emplace_back("seed", std::to_string(opts.seed));
  kv.emplace_back("alphabet_residues", corpus.alphabet.residues());
  kv.emplace_back("seq_len", std::to_string(corpus.seq_len));
  append_corpus_fingerprint(kv, corpus);
  kv.emplace_back("layout", "corpus.txt manifest.txt");
  kv.emplace_back("created_unix", now_unix());
  write_manifest((fs::path(opts.out_dir) / "manifest.txt").string(), kv);
  std::cout << "prepared " << corpus.framed.size() << " sequences, framed length "
            << corpus.seq_len << ", alphabet size " << corpus.alphabet.size() << "\n";
}

void run_train_cmd(const TrainOptions& opts) {
  if (opts.corpus_dir.empty() || opts.out_dir.empty()) {
    throw std::invalid_argument("train: --corpus and --out are required");
  }
  const Corpus corpus = load_corpus_dir(opts.corpus_dir);
  fs::create_directories(opts.out_dir);

  TrainHooks hooks;
  hooks.keep_batch_log = opts.batch_log;
  hooks.diagnostic_dir = opts.out_dir;
  if (opts.ckpt_per_epoch) {
    hooks.on_epoch = [&](const EpochRecord& rec, const TrainState& state) {
      Checkpoint ckpt =
          make_checkpoint(state.critic, state.gen, config_echo(opts.config, corpus));
      ckpt.save((fs::path(opts.out_dir) / ("epoch" + std::to_string(rec.epoch) + ".ckpt"))
                    .string());
    };
  }
  const RunResult result = train_run(corpus, opts.config, hooks);

  write_metrics_csv((fs::path(opts.out_dir) / "metrics.csv").string(), result.epochs,
                    opts.csv_timing);
  if (opts.batch_log) {
    write_batch_csv((fs::path(opts.out_dir) / "batches.csv").string(), result.batches);
  }
  Checkpoint ckpt =
      make_checkpoint(result.state.critic, result.state.gen, config_echo(opts.config, corpus));
  ckpt.save((fs::path(opts.out_dir) / "final.ckpt").string());

  KeyValues kv;
  kv.emplace_back("command", "train");
  kv.emplace_back("corpus_dir", opts.corpus_dir);
  for (auto& e : config_echo(opts.config, corpus)) kv.push_back(std::move(e));
  append_corpus_fingerprint(kv, corpus);
  kv.emplace_back("csv_timing", opts.csv_timing ? "on" : "off");
  kv.emplace_back("layout", opts.batch_log ? "metrics.csv batches.csv final.ckpt manifest.txt"
                                           : "metrics.csv final.ckpt manifest.txt");
  kv.emplace_back("wall_seconds", format_double(result.wall_seconds));
  kv.emplace_back("created_unix", now_unix());
  write_manifest((fs::path(opts.out_dir) / "manifest.txt").string(), kv);
  std::cout << "trained " << opts.config.epochs << " epochs";
  if (!result.epochs.empty()) {
    std::cout << ", final kl " << format_double(result.epochs.back().kl);
  }
  std::cout << "\n";
}

void run_generate_cmd(const GenerateOptions& opts) {
  if (opts.checkpoint_path.empty() || opts.out_fasta.empty()) {
    throw std::invalid_argument("generate: --checkpoint and --out are required");
  }
  const Checkpoint ckpt = Checkpoint::load(opts.checkpoint_path);
  auto get = [&](const char* key) -> const std::string& {
    const std::string* v = ckpt.find(key);
    if (!v) {
      throw std::runtime_error("generate: checkpoint lacks config key '" + std::string(key) + "'");
    }
    return *v;
  };
  const Alphabet alphabet = Alphabet::from_residues(get("alphabet_residues"));
  NetConfig net;
  net.seq_len = std::stoull(get("seq_len"));
  net.alphabet = alphabet.size();
  net.channels = std::stoull(get("channels"));
  net.kernel = std::stoull(get("kernel"));
  net.noise_dim = std::stoull(get("noise_dim"));
  net.lrelu_slope = static_cast<real>(std::stod(get("lrelu_slope")));
  net.dropout_rate = static_cast<real>(std::stod(get("dropout_rate")));

  Rng init_rng = derive_stream(0, "generate/init");
  GeneratorNet gen = GeneratorNet::make(net, real(1), init_rng);
  restore_params(gen.params, ckpt, "gen/");

  Rng stream = derive_stream(opts.seed, "generate");
  const std::vector<std::string> decoded = sample_decoded(gen, alphabet, opts.n, stream);
  std::string out;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    out += ">gen_" + std::to_string(i) + "\n" + decoded[i] + "\n";
  }
  write_text_file(opts.out_fasta, out);
  std::cout << "wrote " << decoded.size() << " sequences to " << opts.out_fasta << "\n";
}

double run_eval_cmd(const EvalOptions& opts) {
  if (opts.generated_fasta.empty() || opts.background_path.empty()) {
    throw std::invalid_argument("eval: --generated and --background are required");
  }
  std::vector<std::string> foreground;
  for (auto& rec : parse_fasta(opts.generated_fasta)) foreground.push_back(std::move(rec.residues));

  std::vector<std::string> background;
  if (fs::is_directory(opts.background_path)) {
    background = load_corpus_dir(opts.background_path).framed;
  } else {
    for (auto& rec : parse_fasta(opts.background_path)) background.push_back(std::move(rec.residues));
  }

  const KmerDistribution fg = kmer_distribution(foreground, opts.k);
  if (fg.empty()) {
    throw std::runtime_error("eval: no k-mers in " + opts.generated_fasta + " at k=" +
                             std::to_string(opts.k));
  }
  const KmerDistribution bg = kmer_distribution(background, opts.k);
  if (bg.empty()) {
    throw std::runtime_error("eval: no k-mers in " + opts.background_path + " at k=" +
                             std::to_string(opts.k));
  }
  const double kl = kl_divergence(fg, bg, opts.pseudocount);
  std::cout << "kl_nats = " << format_double(kl) << "\n";
  if (!opts.out_csv.empty()) {
    const bool exists = fs::exists(opts.out_csv);
    std::ofstream os(opts.out_csv, std::ios::binary | std::ios::app);
    if (!os) throw std::runtime_error("eval: cannot open " + opts.out_csv);
    if (!exists) os << "foreground,background,k,pseudocount,kl_nats\n";
    os << opts.generated_fasta << "," << opts.background_path << "," << opts.k << ","
       << format_double(opts.pseudocount) << "," << format_double(kl) << "\n";
  }
  return kl;
}

void run_plot_cmd(const PlotOptions& opts) {
  if (opts.out_svg.empty()) throw std::invalid_argument("plot: --out is required");
  plot_metrics_files(opts.csv_paths, opts.labels, opts.out_svg);
  std::cout << "wrote " << opts.out_svg << "\n";
}

void run_experiment_cmd(const ExperimentOptions& opts) {
  if (opts.corpus_dir.empty() || opts.out_dir.empty()) {
    throw std::invalid_argument("experiment: --corpus and --out are required");
  }
  const Corpus corpus = load_corpus_dir(opts.corpus_dir);
  ExperimentConfig ec;
  ec.base = opts.base;
  ec.moments = opts.moments;
  ec.seeds = opts.seeds;
  ec.out_dir = opts.out_dir;
  ec.jobs = opts.jobs;
  ec.csv_timing = opts.csv_timing;
  const ExperimentResult res = run_experiment(corpus, ec);

  KeyValues kv;
  kv.emplace_back("command", "experiment");
  kv.emplace_back("corpus_dir", opts.corpus_dir);
  std::string moments_str, seeds_str;
  for (int m : opts.moments) moments_str += (moments_str.empty() ? "" : ",") + std::to_string(m);
  for (auto s : opts.seeds) seeds_str += (seeds_str.empty() ? "" : ",") + std::to_string(s);
  kv.emplace_back("moments", moments_str);
  kv.emplace_back("seeds", seeds_str);
  for (auto& e : config_echo(opts.base, corpus)) kv.push_back(std::move(e));
  append_corpus_fingerprint(kv, corpus);
  kv.emplace_back("jobs", std::to_string(opts.jobs));
  kv.emplace_back("layout", "m<M>_seed<S>.metrics.csv m<M>_seed<S>.ckpt cells.csv summary.csv");
  kv.emplace_back("created_unix", now_unix());
  write_manifest((fs::path(opts.out_dir) / "manifest.txt").string(), kv);

  std::cout << "m,mean_runtime_s,rho_critic_kl,rho_gen_kl\n";
  for (const auto& row : res.rows) {
    std::cout << row.m << "," << format_double(row.mean_runtime_s) << ","
              << format_double(row.rho_critic_kl) << "," << format_double(row.rho_gen_kl) << "\n";
  }
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (int v : parse_int_list(s)) out.push_back(static_cast<std::uint64_t>(v));
  return out;
}

void add_train_config_flags(CLI::App* cmd, TrainConfig& cfg, std::string& config_path) {
  cmd->add_option("--epochs", cfg.epochs, "Training epochs");
  cmd->add_option("--batch", cfg.batch_size, "Batch size b");
  cmd->add_option("--lr", cfg.lr, "Learning rate for both optimizers");
  cmd->add_option("--m", cfg.m, "Moments in the generator loss (1 = standard)");
  cmd->add_option("--tau", cfg.tau, "Critic weight-clip bound");
  cmd->add_option("--critic-steps-per-gen", cfg.critic_steps_per_gen,
                  "Generator trains on 1-in-N batches");
  cmd->add_option("--seed", cfg.seed, "Random seed");
  cmd->add_option("--eval-n", cfg.eval_sample_count, "Sequences sampled per epoch for KL");
  cmd->add_option("--eval-k", cfg.eval_k, "k-mer length for evaluation");
  cmd->add_option("--pseudocount", cfg.eval_pseudocount, "KL pseudocount");
  cmd->add_option("--channels", cfg.channels, "Convolution channels c");
  cmd->add_option("--kernel", cfg.kernel, "Convolution kernel width k");
  cmd->add_option("--noise-dim", cfg.noise_dim, "Generator noise dimension y");
  cmd->add_option("--dropout", cfg.dropout_rate, "Dropout rate between layers");
  cmd->add_option("--init-bound", cfg.init_bound,
                  "Uniform init bound (0: use the clip bound tau)");
  cmd->add_option("--config", config_path,
                  "key = value file supplying defaults for the flags above");
}

// Applies `key = value` config-file entries for every flag the user did not
// pass explicitly, so precedence is flags, then file, then defaults.
void apply_config_file(const CLI::App& cmd, TrainConfig& cfg, const std::string& path) {
  if (path.empty()) return;
  const KeyValues kv = read_manifest(path);
  for (const auto& [key, value] : kv) {
    if (cmd.count("--" + key) > 0) continue;
    if (key == "epochs") {
      cfg.epochs = std::stoull(value);
    } else if (key == "batch") {
      cfg.batch_size = std::stoull(value);
    } else if (key == "lr") {
      cfg.lr = static_cast<real>(std::stod(value));
    } else if (key == "m") {
      cfg.m = std::stoi(value);
    } else if (key == "tau") {
      cfg.tau = static_cast<real>(std::stod(value));
    } else if (key == "critic-steps-per-gen") {
      cfg.critic_steps_per_gen = std::stoull(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "eval-n") {
      cfg.eval_sample_count = std::stoull(value);
    } else if (key == "eval-k") {
      cfg.eval_k = std::stoull(value);
    } else if (key == "pseudocount") {
      cfg.eval_pseudocount = std::stod(value);
    } else if (key == "channels") {
      cfg.channels = std::stoull(value);
    } else if (key == "kernel") {
      cfg.kernel = std::stoull(value);
    } else if (key == "noise-dim") {
      cfg.noise_dim = std::stoull(value);
    } else if (key == "dropout") {
      cfg.dropout_rate = static_cast<real>(std::stod(value));
    } else if (key == "init-bound") {
      cfg.init_bound = static_cast<real>(std::stod(value));
    } else {
      throw std::invalid_argument("config file " + path + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"WGAN training with higher-order central-moment generator losses"};
  app.require_subcommand(1);

  PrepareOptions prep;
  CLI::App* prepare = app.add_subcommand("prepare", "Build a framed corpus cache");
  prepare->add_option("--fasta", prep.fasta_path, "FASTA input file");
  prepare->add_option("--synth", prep.synth_path, "Synthetic Markov corpus spec (JSON)");
  prepare->add_option("--alphabet", prep.alphabet, "Residue alphabet for FASTA input");
  prepare->add_option("--min-len", prep.min_len, "Minimum residue length kept");
  prepare->add_option("--max-len", prep.max_len, "Maximum residue length kept");
  prepare->add_option("--sample-n", prep.sample_n, "Subsample size (0 keeps all)");
  prepare->add_option("--seed", prep.seed, "Sampling seed");
  prepare->add_option("--out", prep.out_dir, "Output directory")->required();

  TrainOptions tr;
  std::string train_config_path;
  CLI::App* train = app.add_subcommand("train", "Train a WGAN on a prepared corpus");
  train->add_option("--corpus", tr.corpus_dir, "Prepared corpus directory")->required();
  train->add_option("--out", tr.out_dir, "Output directory")->required();
  train->add_flag("--batch-log", tr.batch_log, "Also write per-batch losses");
  train->add_flag("--ckpt-per-epoch", tr.ckpt_per_epoch,
                  "Write a checkpoint after every epoch, not just the final one");
  train->add_flag("--csv-timing", tr.csv_timing,
                  "Record wall-clock seconds in metrics.csv (breaks byte reproducibility)");
  add_train_config_flags(train, tr.config, train_config_path);

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Sample sequences from a checkpoint");
  generate->add_option("--checkpoint", gen.checkpoint_path, "Checkpoint file")->required();
  generate->add_option("--n", gen.n, "Number of sequences");
  generate->add_option("--seed", gen.seed, "Sampling seed");
  generate->add_option("--out", gen.out_fasta, "Output FASTA path")->required();

  EvalOptions ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "k-mer KL of generated sequences");
  eval_cmd->add_option("--generated", ev.generated_fasta, "Generated FASTA")->required();
  eval_cmd->add_option("--background", ev.background_path, "Corpus directory or FASTA")
      ->required();
  eval_cmd->add_option("--k", ev.k, "k-mer length");
  eval_cmd->add_option("--pseudocount", ev.pseudocount, "Pseudocount for missing support");
  eval_cmd->add_option("--out-csv", ev.out_csv, "Append a CSV row here");

  PlotOptions pl;
  std::string labels_arg;
  CLI::App* plot = app.add_subcommand("plot", "Render KL-vs-epoch curves as SVG");
  plot->add_option("csvs", pl.csv_paths, "Metrics CSV files")->required();
  plot->add_option("--labels", labels_arg, "Comma-separated legend labels");
  plot->add_option("--out", pl.out_svg, "Output SVG path")->required();

  ExperimentOptions ex;
  std::string moments_arg = "1,2,3,4";
  std::string seeds_arg = "0,1,2,3,4";
  CLI::App* experiment =
      app.add_subcommand("experiment", "Replicate grid over moments and seeds");
  experiment->add_option("--corpus", ex.corpus_dir, "Prepared corpus directory")->required();
  experiment->add_option("--out", ex.out_dir, "Output directory")->required();
  experiment->add_option("--moments", moments_arg, "Comma-separated m values");
  experiment->add_option("--seeds", seeds_arg, "Comma-separated seeds");
  experiment->add_option("--jobs", ex.jobs, "Parallel cells");
  experiment->add_flag("--csv-timing", ex.csv_timing,
                       "Record wall-clock runtimes in CSV outputs");
  std::string experiment_config_path;
  add_train_config_flags(experiment, ex.base, experiment_config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*prepare) run_prepare(prep);
    if (*train) {
      apply_config_file(*train, tr.config, train_config_path);
      run_train_cmd(tr);
    }
    if (*generate) run_generate_cmd(gen);
    if (*eval_cmd) {
      run_eval_cmd(ev);
    }
    if (*plot) {
      if (!labels_arg.empty()) {
        std::string cur;
        for (char c : labels_arg + ",") {
          if (c == ',') {
            pl.labels.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
      }
      run_plot_cmd(pl);
    }
    if (*experiment) {
      apply_config_file(*experiment, ex.base, experiment_config_path);
      ex.moments = parse_int_list(moments_arg);
      ex.seeds = parse_u64_list(seeds_arg);
      run_experiment_cmd(ex);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mwgan
