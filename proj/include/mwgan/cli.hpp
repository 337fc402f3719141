#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mwgan/train.hpp"

namespace mwgan {

// Subcommand entry points. The thin main() in tools/ parses flags into these
// option structs; tests drive them directly.

struct PrepareOptions {
  std::string fasta_path;   // exactly one of fasta_path / synth_path
  std::string synth_path;
  std::string alphabet = "ACDEFGHIKLMNPQRSTVWY";  // residues for FASTA input
  std::size_t min_len = 1;
  std::size_t max_len = 100000;
  std::size_t sample_n = 0;  // 0 keeps every filtered record
  std::uint64_t seed = 0;
  std::string out_dir;
};
void run_prepare(const PrepareOptions& opts);

struct TrainOptions {
  std::string corpus_dir;
  std::string out_dir;
  TrainConfig config;
  bool batch_log = false;
  bool csv_timing = false;
  bool ckpt_per_epoch = false;  // default: final checkpoint only
};
void run_train_cmd(const TrainOptions& opts);

struct GenerateOptions {
  std::string checkpoint_path;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out_fasta;
};
void run_generate_cmd(const GenerateOptions& opts);

struct EvalOptions {
  std::string generated_fasta;
  std::string background_path;  // corpus directory or FASTA file
  std::size_t k = 6;
  double pseudocount = 1e-10;
  std::string out_csv;  // optional
};
/// Returns the KL in nats (also printed and appended to out_csv when set).
double run_eval_cmd(const EvalOptions& opts);

struct PlotOptions {
  std::vector<std::string> csv_paths;
  std::vector<std::string> labels;  // empty: use file stems
  std::string out_svg;
};
void run_plot_cmd(const PlotOptions& opts);

struct ExperimentOptions {
  std::string corpus_dir;
  std::string out_dir;
  TrainConfig base;
  std::vector<int> moments{1, 2, 3, 4};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t jobs = 1;
  bool csv_timing = false;
};
void run_experiment_cmd(const ExperimentOptions& opts);

/// Loads a prepared corpus directory (corpus.txt + manifest.txt).
Corpus load_corpus_dir(const std::string& dir);

/// Full argv-level entry point; returns the process exit code
/// (0 success, 2 usage error, 1 runtime error).
int cli_main(int argc, char** argv);

}  // namespace mwgan
