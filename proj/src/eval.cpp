#include "mwgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mwgan/data.hpp"

namespace mwgan {

double KmerDistribution::probability(const std::string& word) const {
  const auto it = counts.find(word);
  if (it == counts.end() || total == 0) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(total);
}

KmerDistribution kmer_distribution(std::span<const std::string> sequences, std::size_t k) {
  if (k < 1) throw std::invalid_argument("kmer_distribution: k must be >= 1");
  KmerDistribution dist;
  dist.k = k;
  for (const auto& seq : sequences) {
    if (seq.size() < k) continue;
    for (std::size_t i = 0; i + k <= seq.size(); ++i) {
      bool framed = false;
      for (std::size_t j = 0; j < k; ++j) {
        const char c = seq[i + j];
        if (c == kStartChar || c == kEndChar) {
          framed = true;
          break;
        }
      }
      if (framed) continue;
      ++dist.counts[seq.substr(i, k)];
      ++dist.total;
    }
  }
  return dist;
}

double kl_divergence(const KmerDistribution& foreground, const KmerDistribution& background,
                     double pseudocount) {
  if (foreground.k != background.k) {
    throw std::invalid_argument("kl_divergence: k mismatch " + std::to_string(foreground.k) +
                                " vs " + std::to_string(background.k));
  }
  if (foreground.empty()) throw std::invalid_argument("kl_divergence: empty foreground");
  if (!(pseudocount > 0)) throw std::invalid_argument("kl_divergence: pseudocount must be > 0");

  double kl = 0;
  for (const auto& [word, count] : foreground.counts) {
    const double p = static_cast<double>(count) / static_cast<double>(foreground.total);
    const double q_raw = background.probability(word);
    const double q = q_raw > 0 ? q_raw : pseudocount;
    kl += p * std::log(p / q);
  }
  return kl;
}

double emd_1d(std::span<const double> samples_a, std::span<const double> samples_b) {
  if (samples_a.size() != samples_b.size()) {
    throw std::invalid_argument("emd_1d: sample counts differ: " +
                                std::to_string(samples_a.size()) + " vs " +
                                std::to_string(samples_b.size()));
  }
  if (samples_a.empty()) throw std::invalid_argument("emd_1d: empty samples");
  std::vector<double> a(samples_a.begin(), samples_a.end());
  std::vector<double> b(samples_b.begin(), samples_b.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&xs](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("spearman_rho: length mismatch " + std::to_string(xs.size()) +
                                " vs " + std::to_string(ys.size()));
  }
  if (xs.size() < 2) throw std::invalid_argument("spearman_rho: need at least two points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw std::invalid_argument("spearman_rho: constant input vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mwgan
