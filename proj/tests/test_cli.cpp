#include "mwgan/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "mwgan/io.hpp"
#include "mwgan/nn.hpp"

using namespace mwgan;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mwgan_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const fs::path& path, const std::string& content) {
  write_text_file(path.string(), content);
  return path.string();
}

std::string synth_spec_json() {
  return R"({
    "alphabet": "ABCD",
    "n": 60,
    "length": 8,
    "start": [0.7, 0.1, 0.1, 0.1],
    "transition": [
      [0.85, 0.05, 0.05, 0.05],
      [0.45, 0.45, 0.05, 0.05],
      [0.45, 0.05, 0.45, 0.05],
      [0.45, 0.05, 0.05, 0.45]
    ]
  })";
}

std::string prepare_synth_corpus(const fs::path& dir) {
  const fs::path spec = dir / "spec.json";
  write_file(spec, synth_spec_json());
  PrepareOptions opts;
  opts.synth_path = spec.string();
  opts.out_dir = (dir / "corpus").string();
  opts.seed = 7;
  run_prepare(opts);
  return opts.out_dir;
}

int run_cli(std::vector<std::string> args) {
  std::vector<char*> argv;
  static std::vector<std::string> storage;
  storage = std::move(args);
  storage.insert(storage.begin(), "mwgan");
  for (auto& s : storage) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("prepare writes a reproducible corpus cache") {
  const fs::path dir = fresh_dir("prepare");
  const std::string corpus_dir = prepare_synth_corpus(dir);
  CHECK(fs::exists(fs::path(corpus_dir) / "corpus.txt"));
  CHECK(fs::exists(fs::path(corpus_dir) / "manifest.txt"));

  const KeyValues manifest = read_manifest((fs::path(corpus_dir) / "manifest.txt").string());
  const std::string* hash1 = find_key(manifest, "corpus_hash");
  REQUIRE(hash1 != nullptr);
  const std::string bytes1 = read_text_file((fs::path(corpus_dir) / "corpus.txt").string());

  // rerun into a different directory: same seed, same bytes, same hash
  PrepareOptions again;
  again.synth_path = (dir / "spec.json").string();
  again.out_dir = (dir / "corpus2").string();
  again.seed = 7;
  run_prepare(again);
  const KeyValues manifest2 = read_manifest((fs::path(again.out_dir) / "manifest.txt").string());
  CHECK(*find_key(manifest2, "corpus_hash") == *hash1);
  CHECK(read_text_file((fs::path(again.out_dir) / "corpus.txt").string()) == bytes1);

  const Corpus corpus = load_corpus_dir(corpus_dir);
  CHECK(corpus.framed.size() == 60);
  CHECK(corpus.seq_len == 10);
}

TEST_CASE("prepare rejects impossible requests") {
  const fs::path dir = fresh_dir("prepare_bad");
  const std::string fasta = write_file(dir / "in.fasta", ">a\nAC\n>b\nCACA\n");

  PrepareOptions none;
  none.fasta_path = fasta;
  none.alphabet = "AC";
  none.min_len = 10;
  none.max_len = 20;
  none.out_dir = (dir / "none").string();
  CHECK_THROWS_WITH_AS(run_prepare(none), doctest::Contains("no records"), std::runtime_error);

  PrepareOptions oversample;
  oversample.fasta_path = fasta;
  oversample.alphabet = "AC";
  oversample.sample_n = 5;
  oversample.out_dir = (dir / "over").string();
  CHECK_THROWS_AS(run_prepare(oversample), std::runtime_error);

  PrepareOptions both;
  both.fasta_path = fasta;
  both.synth_path = fasta;
  both.out_dir = (dir / "both").string();
  CHECK_THROWS_AS(run_prepare(both), std::invalid_argument);
}

TEST_CASE("train command writes the pinned outputs") {
  const fs::path dir = fresh_dir("train");
  const std::string corpus_dir = prepare_synth_corpus(dir);

  TrainOptions opts;
  opts.corpus_dir = corpus_dir;
  opts.out_dir = (dir / "run").string();
  opts.batch_log = true;
  opts.config.epochs = 2;
  opts.config.batch_size = 16;
  opts.config.m = 2;
  opts.config.channels = 4;
  opts.config.kernel = 3;
  opts.config.noise_dim = 6;
  opts.config.eval_sample_count = 32;
  opts.config.eval_k = 2;
  run_train_cmd(opts);

  const std::string metrics = read_text_file((dir / "run" / "metrics.csv").string());
  CHECK(metrics.substr(0, metrics.find('\n')) == "epoch,critic_loss,gen_loss,kl,max_f,seconds");
  CHECK(fs::exists(dir / "run" / "final.ckpt"));
  CHECK(fs::exists(dir / "run" / "batches.csv"));
  const KeyValues manifest = read_manifest((dir / "run" / "manifest.txt").string());
  CHECK(find_key(manifest, "corpus_hash") != nullptr);
  CHECK(*find_key(manifest, "m") == "2");

  SUBCASE("rerun reproduces metrics bytes") {
    TrainOptions redo = opts;
    redo.out_dir = (dir / "run2").string();
    run_train_cmd(redo);
    CHECK(read_text_file((dir / "run2" / "metrics.csv").string()) == metrics);
  }
  SUBCASE("zero epochs yield a header-only csv") {
    TrainOptions zero = opts;
    zero.config.epochs = 0;
    zero.out_dir = (dir / "run0").string();
    run_train_cmd(zero);
    CHECK(read_text_file((dir / "run0" / "metrics.csv").string()) ==
          "epoch,critic_loss,gen_loss,kl,max_f,seconds\n");
  }
  SUBCASE("per-epoch checkpoints on request") {
    TrainOptions every = opts;
    every.ckpt_per_epoch = true;
    every.out_dir = (dir / "run_every").string();
    run_train_cmd(every);
    CHECK(fs::exists(dir / "run_every" / "epoch1.ckpt"));
    CHECK(fs::exists(dir / "run_every" / "epoch2.ckpt"));
    CHECK(fs::exists(dir / "run_every" / "final.ckpt"));
    // the last per-epoch snapshot equals the final checkpoint
    CHECK(read_text_file((dir / "run_every" / "epoch2.ckpt").string()) ==
          read_text_file((dir / "run_every" / "final.ckpt").string()));
  }
}

TEST_CASE("generate is deterministic per seed and honors n") {
  const fs::path dir = fresh_dir("generate");
  const std::string corpus_dir = prepare_synth_corpus(dir);
  TrainOptions train;
  train.corpus_dir = corpus_dir;
  train.out_dir = (dir / "run").string();
  train.config.epochs = 1;
  train.config.batch_size = 16;
  train.config.channels = 4;
  train.config.kernel = 3;
  train.config.noise_dim = 6;
  train.config.eval_sample_count = 16;
  train.config.eval_k = 2;
  // wide init keeps the untrained generator's argmax noise-sensitive, so
  // different sampling seeds must produce different sequences
  train.config.init_bound = 0.5;
  run_train_cmd(train);
  const std::string ckpt = (dir / "run" / "final.ckpt").string();

  GenerateOptions gen;
  gen.checkpoint_path = ckpt;
  gen.n = 8;
  gen.seed = 3;
  gen.out_fasta = (dir / "a.fasta").string();
  run_generate_cmd(gen);
  gen.out_fasta = (dir / "b.fasta").string();
  run_generate_cmd(gen);
  CHECK(read_text_file((dir / "a.fasta").string()) == read_text_file((dir / "b.fasta").string()));
  gen.seed = 4;
  gen.out_fasta = (dir / "c.fasta").string();
  run_generate_cmd(gen);
  CHECK(read_text_file((dir / "a.fasta").string()) != read_text_file((dir / "c.fasta").string()));

  GenerateOptions empty;
  empty.checkpoint_path = ckpt;
  empty.n = 0;
  empty.out_fasta = (dir / "empty.fasta").string();
  run_generate_cmd(empty);
  CHECK(read_text_file((dir / "empty.fasta").string()).empty());

  GenerateOptions corrupt;
  corrupt.checkpoint_path = write_file(dir / "bad.ckpt", "not a checkpoint");
  corrupt.n = 1;
  corrupt.out_fasta = (dir / "bad.fasta").string();
  CHECK_THROWS_AS(run_generate_cmd(corrupt), std::runtime_error);
}

TEST_CASE("a zero-parameter checkpoint decodes to one repeated symbol") {
  const fs::path dir = fresh_dir("generate_zero");
  NetConfig net;
  net.seq_len = 8;
  net.alphabet = 6;  // ABCD + framing
  net.channels = 4;
  net.kernel = 3;
  net.noise_dim = 6;
  Rng rng(1);
  CriticNet critic = CriticNet::make(net, real(0), rng);
  GeneratorNet gen_net = GeneratorNet::make(net, real(0), rng);
  Checkpoint ckpt = make_checkpoint(critic, gen_net,
                                    {{"alphabet_residues", "ABCD"},
                                     {"seq_len", "8"},
                                     {"channels", "4"},
                                     {"kernel", "3"},
                                     {"noise_dim", "6"},
                                     {"lrelu_slope", "0.2"},
                                     {"dropout_rate", "0.1"}});
  const std::string path = (dir / "zero.ckpt").string();
  ckpt.save(path);

  GenerateOptions gen;
  gen.checkpoint_path = path;
  gen.n = 3;
  gen.seed = 9;
  gen.out_fasta = (dir / "zero.fasta").string();
  run_generate_cmd(gen);
  const auto records = parse_fasta(gen.out_fasta);
  REQUIRE(records.size() == 3);
  for (const auto& rec : records) {
    CHECK(rec.residues == std::string(net.seq_len, 'A'));
  }
}

TEST_CASE("eval reports zero KL for a corpus against itself") {
  const fs::path dir = fresh_dir("eval");
  const std::string fasta =
      write_file(dir / "seqs.fasta", ">a\nABCAABC\n>b\nBCAABCA\n>c\nAABBCC\n");
  EvalOptions opts;
  opts.generated_fasta = fasta;
  opts.background_path = fasta;
  opts.k = 2;
  opts.out_csv = (dir / "report.csv").string();
  CHECK(run_eval_cmd(opts) == 0.0);
  const std::string csv = read_text_file(opts.out_csv);
  CHECK(csv.find("foreground,background,k,pseudocount,kl_nats") == 0);
  CHECK(csv.find(",0\n") != std::string::npos);

  EvalOptions too_big = opts;
  too_big.k = 50;
  CHECK_THROWS_WITH_AS(run_eval_cmd(too_big), doctest::Contains("no k-mers"),
                       std::runtime_error);

  // a corpus directory also serves as background
  const std::string corpus_dir = prepare_synth_corpus(dir);
  EvalOptions vs_corpus;
  vs_corpus.generated_fasta = fasta;
  vs_corpus.background_path = corpus_dir;
  vs_corpus.k = 2;
  const double kl = run_eval_cmd(vs_corpus);
  CHECK(kl >= 0.0);
}

TEST_CASE("plot emits one polyline per series and checks headers") {
  const fs::path dir = fresh_dir("plot");
  const std::string header = "epoch,critic_loss,gen_loss,kl,max_f,seconds\n";
  std::vector<std::string> csvs;
  for (int m = 1; m <= 4; ++m) {
    std::string content = header;
    for (int e = 1; e <= 5; ++e) {
      content += std::to_string(e) + ",-0.1,0.2," + std::to_string(1.0 / (m * e)) + ",0.01,0\n";
    }
    csvs.push_back(write_file(dir / ("m" + std::to_string(m) + ".csv"), content));
  }

  SUBCASE("single series") {
    PlotOptions opts;
    opts.csv_paths = {csvs[0]};
    opts.out_svg = (dir / "one.svg").string();
    run_plot_cmd(opts);
    const std::string svg = read_text_file(opts.out_svg);
    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++count;
      pos += 9;
    }
    CHECK(count == 1);
    CHECK(svg.find("m1") != std::string::npos);  // legend defaults to the stem
  }
  SUBCASE("four series with explicit labels") {
    PlotOptions opts;
    opts.csv_paths = csvs;
    opts.labels = {"m=1", "m=2", "m=3", "m=4"};
    opts.out_svg = (dir / "four.svg").string();
    run_plot_cmd(opts);
    const std::string svg = read_text_file(opts.out_svg);
    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++count;
      pos += 9;
    }
    CHECK(count == 4);
    for (const auto& label : opts.labels) CHECK(svg.find(label) != std::string::npos);
  }
  SUBCASE("header-only input still renders axes") {
    PlotOptions opts;
    opts.csv_paths = {write_file(dir / "empty.csv", header)};
    opts.out_svg = (dir / "empty.svg").string();
    run_plot_cmd(opts);
    const std::string svg = read_text_file(opts.out_svg);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("<polyline") == std::string::npos);
    CHECK(svg.find("<line") != std::string::npos);
  }
  SUBCASE("header mismatch errors") {
    PlotOptions opts;
    opts.csv_paths = {write_file(dir / "bad.csv", "epoch,kl\n1,0.5\n")};
    opts.out_svg = (dir / "bad.svg").string();
    CHECK_THROWS_AS(run_plot_cmd(opts), std::runtime_error);
  }
}

TEST_CASE("cli_main maps outcomes to exit codes") {
  const fs::path dir = fresh_dir("exit_codes");
  CHECK(run_cli({"definitely-not-a-command"}) == 2);
  CHECK(run_cli({"train"}) == 2);  // missing required flags
  CHECK(run_cli({"--help"}) == 0);
  // parseable but failing at runtime: corpus directory does not exist
  CHECK(run_cli({"train", "--corpus", (dir / "nope").string(), "--out",
                 (dir / "out").string(), "--epochs", "1"}) == 1);
}

TEST_CASE("config file fills unset flags, flags win") {
  const fs::path dir = fresh_dir("config_file");
  const std::string corpus_dir = prepare_synth_corpus(dir);
  const std::string cfg_path = write_file(dir / "train.cfg",
                                          "# toy defaults\n"
                                          "m = 3\n"
                                          "epochs = 0\n"
                                          "batch = 16\n"
                                          "channels = 4\n"
                                          "kernel = 3\n"
                                          "noise-dim = 6\n"
                                          "eval-n = 16\n"
                                          "eval-k = 2\n");
  const std::string out1 = (dir / "out1").string();
  CHECK(run_cli({"train", "--corpus", corpus_dir, "--out", out1, "--config", cfg_path}) == 0);
  const KeyValues m1 = read_manifest((fs::path(out1) / "manifest.txt").string());
  CHECK(*find_key(m1, "m") == "3");
  CHECK(*find_key(m1, "epochs") == "0");

  const std::string out2 = (dir / "out2").string();
  CHECK(run_cli({"train", "--corpus", corpus_dir, "--out", out2, "--config", cfg_path, "--m",
                 "2"}) == 0);
  const KeyValues m2 = read_manifest((fs::path(out2) / "manifest.txt").string());
  CHECK(*find_key(m2, "m") == "2");
}

TEST_CASE("installed binary smoke run") {
  const fs::path dir = fresh_dir("binary");
  const std::string spec = write_file(dir / "spec.json", synth_spec_json());
  const std::string cmd = std::string(MWGAN_BIN_PATH) + " prepare --synth " + spec + " --out " +
                          (dir / "corpus").string() + " --seed 5 > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "corpus" / "corpus.txt"));
}
