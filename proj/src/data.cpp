#include "mwgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mwgan {

Alphabet Alphabet::from_residues(const std::string& residues) {
  if (residues.empty()) throw std::invalid_argument("Alphabet: empty residue set");
  Alphabet a;
  a.symbols = residues;
  a.symbols += kStartChar;
  a.symbols += kEndChar;
  a.index.fill(-1);
  for (std::size_t i = 0; i < a.symbols.size(); ++i) {
    const auto c = static_cast<unsigned char>(a.symbols[i]);
    if (a.index[c] != -1) {
      throw std::invalid_argument(std::string("Alphabet: duplicate symbol '") + a.symbols[i] + "'");
    }
    a.index[c] = static_cast<int>(i);
  }
  return a;
}

Alphabet Alphabet::amino() { return from_residues("ACDEFGHIKLMNPQRSTVWY"); }

std::string frame_sequence(const SequenceRecord& rec, const Alphabet& alphabet,
                           std::size_t target_len) {
  if (rec.residues.empty()) {
    throw std::invalid_argument("frame_sequence: record '" + rec.id + "' is empty");
  }
  if (rec.residues.size() > target_len - 2) {
    throw std::invalid_argument("frame_sequence: record '" + rec.id + "' has length " +
                                std::to_string(rec.residues.size()) + ", exceeds target " +
                                std::to_string(target_len) + " minus framing");
  }
  for (char c : rec.residues) {
    if (!alphabet.is_residue(c)) {
      throw std::invalid_argument("frame_sequence: record '" + rec.id +
                                  "' contains symbol outside the alphabet: '" + std::string(1, c) +
                                  "'");
    }
  }
  std::string framed;
  framed.reserve(target_len);
  framed += kStartChar;
  framed += rec.residues;
  framed.append(target_len - 1 - rec.residues.size(), kEndChar);
  return framed;
}

Tensor encode_framed(std::span<const std::string> framed, const Alphabet& alphabet) {
  const std::size_t u = alphabet.size();
  const std::size_t len = framed.empty() ? 0 : framed.front().size();
  Tensor out({framed.size(), len, u});
  for (std::size_t s = 0; s < framed.size(); ++s) {
    if (framed[s].size() != len) {
      throw std::invalid_argument("encode_framed: ragged framed lengths " + std::to_string(len) +
                                  " vs " + std::to_string(framed[s].size()));
    }
    for (std::size_t p = 0; p < len; ++p) {
      const int idx = alphabet.index_of(framed[s][p]);
      if (idx < 0) {
        throw std::invalid_argument(std::string("encode_framed: symbol '") + framed[s][p] +
                                    "' not in alphabet");
      }
      out.at(s, p, static_cast<std::size_t>(idx)) = 1;
    }
  }
  return out;
}

Tensor frame_and_encode(std::span<const SequenceRecord> records, const Alphabet& alphabet,
                        std::size_t target_len) {
  if (records.empty()) return Tensor({0, target_len, alphabet.size()});
  std::vector<std::string> framed;
  framed.reserve(records.size());
  for (const auto& rec : records) framed.push_back(frame_sequence(rec, alphabet, target_len));
  return encode_framed(framed, alphabet);
}

std::vector<std::string> decode(const Tensor& batch, const Alphabet& alphabet) {
  if (batch.rank() != 3 || batch.shape[2] != alphabet.size()) {
    throw std::invalid_argument("decode: expected b x l x u batch with u=" +
                                std::to_string(alphabet.size()) + ", got " +
                                shape_str(batch.shape));
  }
  std::vector<std::string> out;
  out.reserve(batch.shape[0]);
  for (std::size_t s = 0; s < batch.shape[0]; ++s) {
    std::string seq;
    for (std::size_t p = 0; p < batch.shape[1]; ++p) {
      std::size_t best = 0;
      real best_v = batch.at(s, p, 0);
      for (std::size_t c = 1; c < batch.shape[2]; ++c) {
        if (batch.at(s, p, c) > best_v) {
          best_v = batch.at(s, p, c);
          best = c;
        }
      }
      seq += alphabet.symbols[best];
    }
    if (const auto stop = seq.find(kEndChar); stop != std::string::npos) {
      seq.resize(stop);
    }
    std::size_t begin = 0;
    while (begin < seq.size() && seq[begin] == kStartChar) ++begin;
    out.push_back(seq.substr(begin));
  }
  return out;
}

std::vector<SequenceRecord> parse_fasta(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("fasta: cannot open " + path);
  std::vector<SequenceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  SequenceRecord cur;
  bool in_record = false;
  auto flush = [&](std::size_t at_line) {
    if (!in_record) return;
    if (cur.residues.empty()) {
      throw std::runtime_error("fasta: record '" + cur.id + "' has no sequence (line " +
                               std::to_string(at_line) + " of " + path + ")");
    }
    records.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush(line_no);
      cur.id = line.substr(1);
      in_record = true;
    } else {
      if (!in_record) {
        throw std::runtime_error("fasta: sequence data before any '>' header at line " +
                                 std::to_string(line_no) + " of " + path);
      }
      for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        cur.residues += c;
      }
    }
  }
  flush(line_no + 1);
  return records;
}

std::vector<SequenceRecord> load_fasta(const std::string& path, std::size_t min_len,
                                       std::size_t max_len, std::size_t sample_n, Rng& rng) {
  std::vector<SequenceRecord> all = parse_fasta(path);
  std::vector<SequenceRecord> kept;
  for (auto& rec : all) {
    if (rec.residues.size() >= min_len && rec.residues.size() <= max_len) {
      kept.push_back(std::move(rec));
    }
  }
  if (sample_n > kept.size()) {
    throw std::runtime_error("load_fasta: requested sample of " + std::to_string(sample_n) +
                             " but only " + std::to_string(kept.size()) +
                             " records pass the length filter");
  }
  // Partial Fisher-Yates: uniform sample without replacement, seed-determined.
  for (std::size_t i = 0; i < sample_n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(kept.size() - i));
    std::swap(kept[i], kept[j]);
  }
  kept.resize(sample_n);
  return kept;
}

std::vector<SequenceRecord> synth_corpus(const SynthSpec& spec, Rng& rng) {
  const std::size_t r = spec.residues.size();
  if (r == 0) throw std::invalid_argument("synth_corpus: empty residue alphabet");
  if (spec.start.size() != r || spec.transition.size() != r) {
    throw std::invalid_argument("synth_corpus: start/transition size must match alphabet");
  }
  auto check_stochastic = [](const std::vector<double>& row, const std::string& what) {
    double sum = 0;
    for (double p : row) {
      if (p < 0) throw std::invalid_argument("synth_corpus: negative probability in " + what);
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("synth_corpus: " + what + " sums to " + std::to_string(sum) +
                                  ", expected 1");
    }
  };
  check_stochastic(spec.start, "start distribution");
  for (std::size_t i = 0; i < r; ++i) {
    check_stochastic(spec.transition[i], "transition row " + std::to_string(i));
  }
  if (spec.length.lo == 0 || spec.length.hi < spec.length.lo) {
    throw std::invalid_argument("synth_corpus: invalid length range");
  }

  auto draw = [&rng](const std::vector<double>& dist) {
    const double x = rng.uniform01();
    double acc = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      acc += dist[i];
      if (x < acc) return i;
    }
    return dist.size() - 1;
  };

  std::vector<SequenceRecord> records;
  records.reserve(spec.n);
  for (std::size_t s = 0; s < spec.n; ++s) {
    const std::size_t len =
        spec.length.lo +
        (spec.length.hi > spec.length.lo
             ? static_cast<std::size_t>(rng.below(spec.length.hi - spec.length.lo + 1))
             : 0);
    std::string seq;
    seq.reserve(len);
    std::size_t state = draw(spec.start);
    seq += spec.residues[state];
    for (std::size_t p = 1; p < len; ++p) {
      state = draw(spec.transition[state]);
      seq += spec.residues[state];
    }
    records.push_back({"synth_" + std::to_string(s), std::move(seq)});
  }
  return records;
}

SynthSpec parse_synth_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("synth spec: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("synth spec: " + path + ": " + e.what());
  }
  SynthSpec spec;
  spec.residues = j.at("alphabet").get<std::string>();
  spec.n = j.at("n").get<std::size_t>();
  const auto& len = j.at("length");
  if (len.is_number_unsigned() || len.is_number_integer()) {
    spec.length.lo = spec.length.hi = len.get<std::size_t>();
  } else {
    spec.length.lo = len.at("min").get<std::size_t>();
    spec.length.hi = len.at("max").get<std::size_t>();
  }
  if (j.contains("start")) {
    spec.start = j.at("start").get<std::vector<double>>();
  } else {
    spec.start.assign(spec.residues.size(), 1.0 / static_cast<double>(spec.residues.size()));
  }
  spec.transition = j.at("transition").get<std::vector<std::vector<double>>>();
  return spec;
}

Corpus corpus_from_records(std::span<const SequenceRecord> records, const Alphabet& alphabet) {
  if (records.empty()) throw std::invalid_argument("corpus: no records");
  std::size_t max_len = 0;
  for (const auto& rec : records) max_len = std::max(max_len, rec.residues.size());
  Corpus corpus;
  corpus.alphabet = alphabet;
  corpus.seq_len = max_len + 2;  // '^' plus at least one '$'
  corpus.framed.reserve(records.size());
  for (const auto& rec : records) {
    corpus.framed.push_back(frame_sequence(rec, alphabet, corpus.seq_len));
  }
  return corpus;
}

void write_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("corpus: cannot open for writing: " + path);
  for (const auto& line : corpus.framed) os << line << '\n';
  if (!os) throw std::runtime_error("corpus: write failed: " + path);
}

Corpus load_corpus_file(const std::string& path, const Alphabet& alphabet) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("corpus: cannot open " + path);
  Corpus corpus;
  corpus.alphabet = alphabet;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (corpus.framed.empty()) {
      corpus.seq_len = line.size();
    } else if (line.size() != corpus.seq_len) {
      throw std::runtime_error("corpus: line " + std::to_string(line_no) + " has length " +
                               std::to_string(line.size()) + ", expected " +
                               std::to_string(corpus.seq_len));
    }
    for (char c : line) {
      if (alphabet.index_of(c) < 0) {
        throw std::runtime_error("corpus: line " + std::to_string(line_no) +
                                 " has symbol outside the alphabet: '" + std::string(1, c) + "'");
      }
    }
    corpus.framed.push_back(line);
  }
  if (corpus.framed.empty()) throw std::runtime_error("corpus: " + path + " is empty");
  return corpus;
}

std::uint64_t content_hash(std::span<const std::string> lines) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  };
  for (const auto& line : lines) {
    for (char c : line) mix(c);
    mix('\n');
  }
  return h;
}

}  // namespace mwgan
