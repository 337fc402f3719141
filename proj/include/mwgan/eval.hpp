#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace mwgan {

/// Categorical distribution over length-k substrings. Counts are kept in an
/// ordered map so summation order, and therefore every reported divergence,
/// is deterministic.
struct KmerDistribution {
  std::size_t k = 0;
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  double probability(const std::string& word) const;
  bool empty() const { return total == 0; }
};

// Counts every overlapping k-window of each sequence. Windows containing a
// framing character are skipped, so framed corpus lines and decoded generator
// output feed the same statistics. Sequences shorter than k contribute
// nothing.
KmerDistribution kmer_distribution(std::span<const std::string> sequences, std::size_t k);

// KL(foreground || background) in nats. Words absent from the background
// support are scored against the pseudocount instead; foreground zeros
// contribute nothing.
double kl_divergence(const KmerDistribution& foreground, const KmerDistribution& background,
                     double pseudocount);

/// Exact 1-D earth-mover distance between equal-size empirical samples:
/// mean absolute difference of the sorted values.
double emd_1d(std::span<const double> samples_a, std::span<const double> samples_b);

/// Spearman rank correlation; ties get average ranks. Errors on length
/// mismatch, fewer than two points, or a constant input.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

}  // namespace mwgan
