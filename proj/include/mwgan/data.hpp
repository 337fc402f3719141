#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mwgan/rng.hpp"
#include "mwgan/tensor.hpp"

namespace mwgan {

constexpr char kStartChar = '^';
constexpr char kEndChar = '$';

/// Ordered symbol set: residues first, then '^' and '$'. Indices form a
/// bijection onto 0..u-1, so decode can tie-break by lowest index.
struct Alphabet {
  std::string symbols;
  std::array<int, 256> index{};

  static Alphabet from_residues(const std::string& residues);
  /// The 20 amino acids plus framing characters (u = 22).
  static Alphabet amino();

  std::size_t size() const { return symbols.size(); }
  std::string residues() const { return symbols.substr(0, symbols.size() - 2); }
  std::size_t start_index() const { return symbols.size() - 2; }
  std::size_t end_index() const { return symbols.size() - 1; }
  int index_of(char c) const { return index[static_cast<unsigned char>(c)]; }
  bool is_residue(char c) const {
    const int i = index_of(c);
    return i >= 0 && static_cast<std::size_t>(i) < symbols.size() - 2;
  }
};

struct SequenceRecord {
  std::string id;
  std::string residues;
};

/// '^' + residues + '$' padding up to target_len. Residues must fit in
/// target_len - 2.
std::string frame_sequence(const SequenceRecord& rec, const Alphabet& alphabet,
                           std::size_t target_len);

/// One-hot encodes framed strings into a b x l x u batch.
Tensor encode_framed(std::span<const std::string> framed, const Alphabet& alphabet);

/// Frames and one-hot encodes records; empty input gives a 0 x l x u tensor.
Tensor frame_and_encode(std::span<const SequenceRecord> records, const Alphabet& alphabet,
                        std::size_t target_len);

// Argmax per position with lowest-index tie break, truncated at the first
// '$'; leading '^' stripped. Accepts any nonnegative row scores, so soft
// generator outputs decode the same way as exact one-hots.
std::vector<std::string> decode(const Tensor& batch, const Alphabet& alphabet);

std::vector<SequenceRecord> parse_fasta(const std::string& path);

/// FASTA ingestion with [min,max] length filtering and a seeded subsample of
/// exactly sample_n records (without replacement).
std::vector<SequenceRecord> load_fasta(const std::string& path, std::size_t min_len,
                                       std::size_t max_len, std::size_t sample_n, Rng& rng);

struct LengthDist {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive; lo == hi means fixed length
};

/// Order-1 Markov chain over a residue alphabet.
struct SynthSpec {
  std::string residues;
  std::vector<double> start;                    // start-symbol distribution
  std::vector<std::vector<double>> transition;  // row-stochastic
  LengthDist length;
  std::size_t n = 0;
};

std::vector<SequenceRecord> synth_corpus(const SynthSpec& spec, Rng& rng);

SynthSpec parse_synth_spec(const std::string& path);

/// Cached corpus: framed sequences one per line, with the alphabet and
/// framed length recorded in the sibling manifest.
struct Corpus {
  Alphabet alphabet;
  std::size_t seq_len = 0;
  std::vector<std::string> framed;
};

Corpus corpus_from_records(std::span<const SequenceRecord> records, const Alphabet& alphabet);
void write_corpus_file(const std::string& path, const Corpus& corpus);
Corpus load_corpus_file(const std::string& path, const Alphabet& alphabet);

/// FNV-1a content fingerprint used in run manifests.
std::uint64_t content_hash(std::span<const std::string> lines);

}  // namespace mwgan
