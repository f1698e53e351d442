#include <algorithm>
#include <cmath>
#include <numeric>

#include "chainforge/dynamics.hpp"

namespace chainforge {

namespace {

constexpr std::size_t kExactLimit = 400;

// Mid-ranks of the pooled sample, doubled so that ties stay integral.
std::vector<long> doubled_ranks(const std::vector<double>& pooled, std::vector<std::size_t>& tie_sizes) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
  std::vector<long> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && pooled[order[j]] == pooled[order[i]]) ++j;
    // positions i+1 .. j, doubled mean = i + 1 + j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = static_cast<long>(i + 1 + j);
    tie_sizes.push_back(j - i);
    i = j;
  }
  return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, Alternative alternative) {
  if (a.empty() || b.empty()) throw EmptySample();
  const auto na = a.size();
  const auto nb = b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> ties;
  const auto ranks = doubled_ranks(pooled, ties);

  long r2 = 0;
  for (std::size_t i = 0; i < na; ++i) r2 += ranks[i];
  const long u2 = r2 - static_cast<long>(na * (na + 1));  // 2 * U_a
  const long mean2 = static_cast<long>(na * nb);          // 2 * E[U_a]

  MannWhitneyResult res;
  res.u_a = static_cast<double>(u2) / 2.0;
  res.u_b = static_cast<double>(na * nb) - res.u_a;

  if (na * nb <= kExactLimit) {
    res.exact = true;
    // ways[k][s]: subsets of size k with doubled rank sum s.
    const long max_sum = std::accumulate(ranks.begin(), ranks.end(), 0L);
    std::vector<std::vector<double>> ways(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      const auto r = static_cast<std::size_t>(ranks[i]);
      for (std::size_t k = std::min(na, i + 1); k >= 1; --k) {
        auto& dst = ways[k];
        const auto& src = ways[k - 1];
        for (std::size_t s = dst.size(); s-- > r;) dst[s] += src[s - r];
      }
    }
    const long offset = static_cast<long>(na * (na + 1));
    double total = 0.0, hit = 0.0;
    for (std::size_t s = 0; s < ways[na].size(); ++s) {
      const double w = ways[na][s];
      if (w == 0.0) continue;
      total += w;
      const long u = static_cast<long>(s) - offset;
      bool extreme = false;
      switch (alternative) {
        case Alternative::TwoSided: extreme = std::labs(u - mean2) >= std::labs(u2 - mean2); break;
        case Alternative::Greater: extreme = u >= u2; break;
        case Alternative::Less: extreme = u <= u2; break;
      }
      if (extreme) hit += w;
    }
    res.p_value = std::min(1.0, hit / total);
    return res;
  }

  const double n = static_cast<double>(na + nb);
  double tie_term = 0.0;
  for (auto t : ties) tie_term += static_cast<double>(t * t * t - t);
  const double var =
      static_cast<double>(na) * static_cast<double>(nb) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double sd = std::sqrt(var);
  const double diff = res.u_a - static_cast<double>(mean2) / 2.0;
  switch (alternative) {
    case Alternative::TwoSided: res.p_value = 2.0 * normal_sf((std::abs(diff) - 0.5) / sd); break;
    case Alternative::Greater: res.p_value = normal_sf((diff - 0.5) / sd); break;
    case Alternative::Less: res.p_value = normal_sf((-diff - 0.5) / sd); break;
  }
  res.p_value = std::clamp(res.p_value, 0.0, 1.0);
  return res;
}

std::vector<double> holm_bonferroni(std::span<const double> p_values) {
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidP("p-value out of range: " + std::to_string(p));
  }
  const auto m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return p_values[i] < p_values[j]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double adj = std::min(1.0, static_cast<double>(m - k) * p_values[order[k]]);
    running = std::max(running, adj);
    out[order[k]] = running;
  }
  return out;
}

ZTestResult proportion_z_test(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2,
                              Alternative alternative) {
  if (n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2) {
    throw InvalidCounts("invalid counts " + std::to_string(x1) + "/" + std::to_string(n1) + " vs " +
                        std::to_string(x2) + "/" + std::to_string(n2));
  }
  const double p1 = static_cast<double>(x1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(x2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
  const double se =
      std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  ZTestResult res;
  res.z = se > 0.0 ? (p1 - p2) / se : 0.0;
  switch (alternative) {
    case Alternative::TwoSided: res.p_value = std::erfc(std::abs(res.z) / std::sqrt(2.0)); break;
    case Alternative::Greater: res.p_value = normal_sf(res.z); break;
    case Alternative::Less: res.p_value = normal_sf(-res.z); break;
  }
  return res;
}

}  // namespace chainforge
