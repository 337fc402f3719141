#pragma once

// Test-only oracles, kept independent of the library implementation paths
// they are used to verify.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "mwgan/autodiff.hpp"

namespace mwgan::oracle {

// Relative gap between an analytic and a finite-difference gradient entry,
// with an absolute escape for values that are both essentially zero.
inline double grad_gap(double analytic, double fd) {
  const double denom = std::max(std::fabs(analytic), std::fabs(fd));
  if (denom < 1e-6) return std::fabs(analytic - fd) < 1e-8 ? 0.0 : 1.0;
  return std::fabs(analytic - fd) / denom;
}

// Central finite differences (f(p+h) - f(p-h)) / 2h against the adjoints
// produced by backward(). rebuild() must construct the scalar root from the
// leaves' current values. Returns the worst relative gap over every entry of
// every leaf.
inline double max_gradient_gap(const std::vector<NodePtr>& leaves,
                               const std::function<NodePtr()>& rebuild, double h = 1e-5) {
  NodePtr root = rebuild();
  backward(root);
  std::vector<std::vector<double>> analytic;
  for (const auto& leaf : leaves) {
    analytic.emplace_back(leaf->adjoint.data.begin(), leaf->adjoint.data.end());
  }
  double worst = 0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor& value = leaves[li]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const real saved = value[i];
      value[i] = saved + static_cast<real>(h);
      const double f_plus = static_cast<double>(rebuild()->value[0]);
      value[i] = saved - static_cast<real>(h);
      const double f_minus = static_cast<double>(rebuild()->value[0]);
      value[i] = saved;
      const double fd = (f_plus - f_minus) / (2 * h);
      worst = std::max(worst, grad_gap(analytic[li][i], fd));
    }
  }
  return worst;
}

/// Direct-summation batch moments at quad precision: mu1 then mu_2..mu_m.
inline std::vector<double> moments_direct(const std::vector<double>& xs, int m) {
  __float128 sum = 0;
  for (double x : xs) sum += x;
  const __float128 mu = sum / static_cast<__float128>(xs.size());
  std::vector<double> out{static_cast<double>(mu)};
  for (int j = 2; j <= m; ++j) {
    __float128 acc = 0;
    for (double x : xs) {
      const __float128 d = static_cast<__float128>(x) - mu;
      __float128 p = 1;
      for (int t = 0; t < j; ++t) p *= d;
      acc += p;
    }
    out.push_back(static_cast<double>(acc / static_cast<__float128>(xs.size())));
  }
  return out;
}

/// Minimal mean transport cost over all pairings; factorial cost, tiny n only.
inline double emd_bruteforce(std::vector<double> a, std::vector<double> b) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0;
    for (std::size_t i = 0; i < a.size(); ++i) cost += std::fabs(a[i] - b[perm[i]]);
    best = std::min(best, cost / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace mwgan::oracle
