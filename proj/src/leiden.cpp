#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>

#include "chainforge/cluster.hpp"

namespace chainforge {

namespace {

constexpr double kTheta = 0.01;
constexpr double kEpsilon = 1e-12;

using Rng = std::mt19937_64;

std::size_t random_below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double random_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[random_below(rng, i)]);
}

// Weighted undirected graph; self-loop weight counts each internal edge once.
struct Level {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
  std::vector<double> self;
  std::vector<double> degree;  // sum of incident weights, self-loops twice

  std::size_t size() const { return adj.size(); }
};

struct Context {
  double resolution;
  double two_m;
};

// Scratch accumulator of weights from one node to neighbouring communities.
struct NeighbourWeights {
  std::vector<double> weight;
  std::vector<std::uint32_t> touched;

  explicit NeighbourWeights(std::size_t n) : weight(n, 0.0) {}

  void add(std::uint32_t c, double w) {
    if (weight[c] == 0.0) touched.push_back(c);
    weight[c] += w;
  }
  void clear() {
    for (auto c : touched) weight[c] = 0.0;
    touched.clear();
  }
};

// Greedy moves until no node improves; returns whether anything moved.
bool move_nodes(const Level& g, const Context& ctx, std::vector<std::uint32_t>& comm, Rng& rng) {
  const auto n = g.size();
  std::vector<double> total(n, 0.0);
  std::vector<std::uint32_t> members(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    total[comm[v]] += g.degree[v];
    ++members[comm[v]];
  }
  std::vector<std::uint32_t> empty;
  for (std::uint32_t c = n; c-- > 0;) {
    if (members[c] == 0) empty.push_back(c);
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  shuffle(order, rng);
  std::deque<std::uint32_t> queue(order.begin(), order.end());
  std::vector<char> queued(n, 1);
  NeighbourWeights nw(n);
  bool moved = false;

  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    queued[v] = 0;
    const auto old = comm[v];
    const double k = g.degree[v];

    for (const auto& [u, w] : g.adj[v]) nw.add(comm[u], w);
    total[old] -= k;
    --members[old];

    auto gain = [&](std::uint32_t c) { return nw.weight[c] - ctx.resolution * k * total[c] / ctx.two_m; };
    std::uint32_t best = old;
    double best_gain = gain(old);
    for (auto c : nw.touched) {
      const double gc = gain(c);
      if (gc > best_gain + kEpsilon) {
        best = c;
        best_gain = gc;
      }
    }
    if (members[old] > 0 && !empty.empty() && 0.0 > best_gain + kEpsilon) {
      best = empty.back();
      best_gain = 0.0;
    }
    nw.clear();

    if (best != old) {
      if (!empty.empty() && best == empty.back()) empty.pop_back();
      if (members[old] == 0) empty.push_back(old);
      moved = true;
      for (const auto& [u, w] : g.adj[v]) {
        if (comm[u] != best && !queued[u]) {
          queued[u] = 1;
          queue.push_back(u);
        }
      }
    }
    comm[v] = best;
    total[best] += k;
    ++members[best];
  }
  return moved;
}

// Refinement: within each community, singletons merge randomly into
// well-connected sub-communities with non-negative gain.
std::vector<std::uint32_t> refine(const Level& g, const Context& ctx, const std::vector<std::uint32_t>& comm,
                                  Rng& rng) {
  const auto n = g.size();
  std::vector<std::uint32_t> refined(n);
  std::iota(refined.begin(), refined.end(), 0u);
  std::vector<double> total(g.degree);
  std::vector<std::uint32_t> members(n, 1);
  std::vector<double> external(n, 0.0);

  std::vector<std::vector<std::uint32_t>> groups(n);
  for (std::uint32_t v = 0; v < n; ++v) groups[comm[v]].push_back(v);

  NeighbourWeights nw(n);
  for (auto& group : groups) {
    if (group.size() < 2) continue;
    const auto c = comm[group.front()];
    double group_total = 0.0;
    for (auto v : group) group_total += g.degree[v];
    for (auto v : group) {
      for (const auto& [u, w] : g.adj[v]) {
        if (comm[u] == c) external[v] += w;
      }
    }
    auto well_connected = [&](double ext, double tot) {
      return ext >= ctx.resolution * tot * (group_total - tot) / ctx.two_m - kEpsilon;
    };

    std::vector<std::uint32_t> order;
    for (auto v : group) {
      if (well_connected(external[v], g.degree[v])) order.push_back(v);
    }
    shuffle(order, rng);

    for (auto v : order) {
      if (members[refined[v]] != 1) continue;
      const double k = g.degree[v];
      const auto own = refined[v];
      for (const auto& [u, w] : g.adj[v]) {
        if (comm[u] == c && refined[u] != own) nw.add(refined[u], w);
      }
      std::vector<std::pair<std::uint32_t, double>> candidates{{own, 0.0}};
      for (auto r : nw.touched) {
        if (!well_connected(external[r], total[r])) continue;
        const double delta = nw.weight[r] - ctx.resolution * k * total[r] / ctx.two_m;
        if (delta >= 0.0) candidates.emplace_back(r, delta);
      }

      std::uint32_t chosen = own;
      if (candidates.size() > 1) {
        double top = 0.0;
        for (const auto& [_, d] : candidates) top = std::max(top, d);
        std::vector<double> cumulative;
        double sum = 0.0;
        for (const auto& [_, d] : candidates) {
          sum += std::exp((d - top) / kTheta);
          cumulative.push_back(sum);
        }
        const double x = random_unit(rng) * sum;
        std::size_t i = std::upper_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin();
        chosen = candidates[std::min(i, candidates.size() - 1)].first;
      }
      if (chosen != own) {
        const double w_to = nw.weight[chosen];
        external[chosen] = external[chosen] + external[v] - 2.0 * w_to;
        total[chosen] += k;
        ++members[chosen];
        total[own] = 0.0;
        members[own] = 0;
        refined[v] = chosen;
      }
      nw.clear();
    }
  }
  return refined;
}

// Renumbers labels to 0..k-1 in order of first appearance.
std::uint32_t compact(std::vector<std::uint32_t>& labels) {
  const auto top = labels.empty() ? 0u : *std::max_element(labels.begin(), labels.end());
  std::vector<std::uint32_t> map(labels.empty() ? 0 : top + 1, UINT32_MAX);
  std::uint32_t next = 0;
  for (auto& l : labels) {
    if (map[l] == UINT32_MAX) map[l] = next++;
    l = map[l];
  }
  return next;
}

Level aggregate(const Level& g, const std::vector<std::uint32_t>& part, std::uint32_t count) {
  Level out;
  out.adj.resize(count);
  out.self.assign(count, 0.0);
  out.degree.assign(count, 0.0);
  std::vector<std::map<std::uint32_t, double>> acc(count);
  for (std::uint32_t v = 0; v < g.size(); ++v) {
    const auto a = part[v];
    out.self[a] += g.self[v];
    out.degree[a] += g.degree[v];
    for (const auto& [u, w] : g.adj[v]) {
      const auto b = part[u];
      if (a == b) {
        if (v < u) out.self[a] += w;
      } else {
        acc[a][b] += w;
      }
    }
  }
  for (std::uint32_t a = 0; a < count; ++a) out.adj[a].assign(acc[a].begin(), acc[a].end());
  return out;
}

double level_quality(const Level& g, const Context& ctx, const std::vector<std::uint32_t>& comm) {
  if (ctx.two_m == 0.0) return 0.0;
  const auto n = g.size();
  std::vector<double> internal(n, 0.0), total(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    internal[comm[v]] += g.self[v];
    total[comm[v]] += g.degree[v];
    for (const auto& [u, w] : g.adj[v]) {
      if (v < u && comm[u] == comm[v]) internal[comm[v]] += w;
    }
  }
  const double m = ctx.two_m / 2.0;
  double q = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    q += internal[c] / m - ctx.resolution * (total[c] / ctx.two_m) * (total[c] / ctx.two_m);
  }
  return q;
}

// Splits every community into its connected components.
void split_disconnected(const Level& g, std::vector<std::uint32_t>& comm) {
  const auto n = g.size();
  std::vector<std::uint32_t> out(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (out[s] != UINT32_MAX) continue;
    out[s] = next;
    std::vector<std::uint32_t> stack{s};
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (const auto& [u, _] : g.adj[v]) {
        if (comm[u] == comm[s] && out[u] == UINT32_MAX) {
          out[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  comm = std::move(out);
}

// Simple undirected view over the given node subset.
Level base_level(const PrunedGraph& p, const std::vector<std::uint32_t>& local) {
  Level g;
  const auto n = std::count_if(local.begin(), local.end(), [](auto x) { return x != UINT32_MAX; });
  g.adj.resize(n);
  g.self.assign(n, 0.0);
  g.degree.assign(n, 0.0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> undirected;
  for (const auto& [a, b] : p.edges) {
    if (a == b || local[a] == UINT32_MAX || local[b] == UINT32_MAX) continue;
    undirected.emplace_back(std::min(local[a], local[b]), std::max(local[a], local[b]));
  }
  std::sort(undirected.begin(), undirected.end());
  undirected.erase(std::unique(undirected.begin(), undirected.end()), undirected.end());
  for (const auto& [a, b] : undirected) {
    g.adj[a].emplace_back(b, 1.0);
    g.adj[b].emplace_back(a, 1.0);
    g.degree[a] += 1.0;
    g.degree[b] += 1.0;
  }
  return g;
}

}  // namespace

double modularity(const PrunedGraph& p, const std::vector<std::vector<std::string>>& communities,
                  double resolution) {
  std::vector<std::uint32_t> label_of(p.nodes.size(), UINT32_MAX);
  for (std::uint32_t c = 0; c < communities.size(); ++c) {
    for (const auto& name : communities[c]) {
      auto idx = p.index_of(name);
      if (idx && label_of[*idx] == UINT32_MAX) label_of[*idx] = c;
    }
  }
  std::vector<std::uint32_t> local(p.nodes.size(), UINT32_MAX), labels;
  for (std::uint32_t i = 0; i < p.nodes.size(); ++i) {
    if (label_of[i] == UINT32_MAX) continue;
    local[i] = static_cast<std::uint32_t>(labels.size());
    labels.push_back(label_of[i]);
  }
  const auto g = base_level(p, local);
  double two_m = 0.0;
  for (double d : g.degree) two_m += d;
  compact(labels);
  return level_quality(g, Context{resolution, two_m}, labels);
}

Partition detect_communities(const PrunedGraph& p, const CommunityParams& params) {
  Partition out;
  std::vector<char> isolated(p.nodes.size(), 1);
  for (const auto& [a, b] : p.edges) isolated[a] = isolated[b] = 0;
  std::vector<std::uint32_t> local(p.nodes.size(), UINT32_MAX);
  std::vector<std::uint32_t> original;
  for (std::uint32_t i = 0; i < p.nodes.size(); ++i) {
    if (!isolated[i]) {
      local[i] = static_cast<std::uint32_t>(original.size());
      original.push_back(i);
    }
  }
  if (original.empty()) return out;

  const Level base = base_level(p, local);
  double two_m = 0.0;
  for (double d : base.degree) two_m += d;
  const Context ctx{params.resolution, two_m};
  Rng rng(params.rng_seed);

  const auto n = base.size();
  std::vector<std::uint32_t> flat(n);
  std::iota(flat.begin(), flat.end(), 0u);

  if (two_m > 0.0) {
    Level g = base;
    std::vector<std::uint32_t> node_of(n);  // base node -> current level node
    std::iota(node_of.begin(), node_of.end(), 0u);
    std::vector<std::uint32_t> comm(n);
    std::iota(comm.begin(), comm.end(), 0u);

    for (int pass = 0; pass < params.max_passes; ++pass) {
      const bool moved = move_nodes(g, ctx, comm, rng);
      for (std::uint32_t v = 0; v < n; ++v) flat[v] = comm[node_of[v]];
      out.quality_trace.push_back(level_quality(base, ctx, flat));

      auto labels = comm;
      const auto communities = compact(labels);
      if (communities == g.size()) break;

      auto refined = refine(g, ctx, comm, rng);
      const auto count = compact(refined);
      if (!moved && pass > 0 && count == g.size()) break;

      std::vector<std::uint32_t> next_comm(count);
      for (std::uint32_t v = 0; v < g.size(); ++v) next_comm[refined[v]] = comm[v];
      compact(next_comm);
      g = aggregate(g, refined, count);
      for (auto& x : node_of) x = refined[x];
      comm = std::move(next_comm);
    }
  }

  split_disconnected(base, flat);
  out.quality = level_quality(base, ctx, flat);
  out.quality_trace.push_back(out.quality);

  std::map<std::uint32_t, std::vector<std::string>> groups;
  for (std::uint32_t v = 0; v < n; ++v) groups[flat[v]].push_back(p.nodes[original[v]]);
  for (auto& [_, members] : groups) {
    std::sort(members.begin(), members.end());
    out.communities.push_back(std::move(members));
  }
  std::sort(out.communities.begin(), out.communities.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });
  return out;
}

}  // namespace chainforge
