#include "chainforge/chain.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <thread>

#include "chainforge/requirement.hpp"

namespace chainforge {

namespace {

using VersionSet = std::map<std::uint32_t, std::set<std::uint32_t>>;  // pkg -> releases
using EdgeIndex = std::pair<std::uint32_t, std::uint32_t>;
using RelsIndex = std::map<std::uint32_t, std::set<std::uint32_t>>;  // up rel -> down rels

struct RoundResult {
  std::map<EdgeIndex, RelsIndex> edges;
  VersionSet dependents;

  void absorb(RoundResult&& other) {
    for (auto& [key, rels] : other.edges) {
      auto& mine = edges[key];
      for (auto& [up, downs] : rels) mine[up].merge(downs);
    }
    for (auto& [pkg, rels] : other.dependents) dependents[pkg].merge(rels);
  }
};

void query(const DependencyDb& db, std::uint32_t pkg, const std::set<std::uint32_t>& rels, RoundResult& out) {
  for (auto rel : rels) {
    for (const auto& row : db.rows_for_upstream(pkg, rel)) {
      out.edges[{pkg, row.down_pkg}][rel].insert(row.down_rel);
      out.dependents[row.down_pkg].insert(row.down_rel);
    }
  }
}

RoundResult run_round(const DependencyDb& db, const VersionSet& unvisited, unsigned threads) {
  std::vector<const VersionSet::value_type*> work;
  for (const auto& entry : unvisited) work.push_back(&entry);
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(work.size())));
  std::vector<RoundResult> parts(n);
  auto task = [&](unsigned t) {
    for (std::size_t i = t; i < work.size(); i += n) query(db, work[i]->first, work[i]->second, parts[t]);
  };
  if (n == 1) {
    task(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(task, t);
    for (auto& th : pool) th.join();
  }
  RoundResult merged = std::move(parts[0]);
  for (unsigned t = 1; t < n; ++t) merged.absorb(std::move(parts[t]));
  return merged;
}

}  // namespace

bool PackageNode::operator==(const PackageNode& o) const {
  return name == o.name && is_seed == o.is_seed && vs == o.vs;
}

bool DependencyEdge::operator==(const DependencyEdge& o) const {
  return up == o.up && down == o.down && rels == o.rels;
}

bool SupplyChainGraph::operator==(const SupplyChainGraph& o) const {
  return nodes == o.nodes && edges == o.edges && seeds == o.seeds && registry_hash == o.registry_hash &&
         built_at == o.built_at;
}

SupplyChainGraph build_supply_chain(const DependencyDb& db, std::span<const std::string> seeds,
                                    const ChainOptions& options) {
  const Registry& reg = db.registry();

  std::set<std::uint32_t> seed_pkgs;
  for (const auto& raw : seeds) {
    std::optional<std::size_t> idx;
    try {
      idx = reg.find(normalize_name(raw));
    } catch (const InvalidName&) {
    }
    if (!idx) {
      if (options.skip_unknown_seeds) continue;
      throw UnknownSeed(raw);
    }
    seed_pkgs.insert(static_cast<std::uint32_t>(*idx));
  }

  VersionSet present;
  VersionSet unvisited;
  for (auto pkg : seed_pkgs) {
    auto& all = present[pkg];
    for (std::uint32_t r = 0; r < reg.packages()[pkg].releases.size(); ++r) all.insert(r);
    unvisited[pkg] = all;
  }

  std::map<EdgeIndex, RelsIndex> edges;
  while (!unvisited.empty()) {
    RoundResult round = run_round(db, unvisited, options.threads);
    for (auto& [key, rels] : round.edges) {
      auto& mine = edges[key];
      for (auto& [up, downs] : rels) mine[up].merge(downs);
    }
    VersionSet next;
    for (auto& [pkg, rels] : round.dependents) {
      auto& have = present[pkg];
      for (auto rel : rels) {
        if (have.insert(rel).second) next[pkg].insert(rel);
      }
    }
    unvisited = std::move(next);
  }

  SupplyChainGraph g;
  g.registry_hash = reg.content_hash();
  for (const auto& [pkg, rels] : present) {
    const auto& package = reg.packages()[pkg];
    PackageNode node;
    node.name = package.name;
    node.is_seed = seed_pkgs.count(pkg) > 0;
    for (auto r : rels) node.vs.push_back(package.releases[r].version);
    g.nodes.emplace(node.name, std::move(node));
  }
  for (const auto& [key, rels] : edges) {
    const auto& up = reg.packages()[key.first];
    const auto& down = reg.packages()[key.second];
    DependencyEdge edge{up.name, down.name, {}};
    for (const auto& [up_rel, down_rels] : rels) {
      auto& list = edge.rels[up.releases[up_rel].version];
      for (auto d : down_rels) list.push_back(down.releases[d].version);
    }
    g.edges.emplace(EdgeKey{up.name, down.name}, std::move(edge));
  }
  for (auto pkg : seed_pkgs) g.seeds.push_back(reg.packages()[pkg].name);
  std::sort(g.seeds.begin(), g.seeds.end());
  return g;
}

GraphStats graph_stats(const SupplyChainGraph& g) {
  GraphStats s;
  s.packages = g.nodes.size();
  for (const auto& [_, node] : g.nodes) s.versions += node.vs.size();
  s.edges = g.edges.size();
  return s;
}

std::vector<std::string> check_invariants(const SupplyChainGraph& g) {
  std::vector<std::string> problems;
  auto has_version = [&](const std::string& pkg, const Version& v) {
    auto it = g.nodes.find(pkg);
    return it != g.nodes.end() && std::binary_search(it->second.vs.begin(), it->second.vs.end(), v);
  };

  for (const auto& seed : g.seeds) {
    auto it = g.nodes.find(seed);
    if (it == g.nodes.end() || !it->second.is_seed) problems.push_back("seed " + seed + " missing");
  }
  for (const auto& [name, node] : g.nodes) {
    if (node.is_seed != std::binary_search(g.seeds.begin(), g.seeds.end(), name)) {
      problems.push_back("seed flag of " + name + " disagrees with seed list");
    }
    if (node.vs.empty()) problems.push_back(name + " has no versions");
    if (!std::is_sorted(node.vs.begin(), node.vs.end()) ||
        std::adjacent_find(node.vs.begin(), node.vs.end()) != node.vs.end()) {
      problems.push_back(name + " versions not strictly ascending");
    }
  }

  std::map<std::string, std::set<Version>> reached;
  std::map<std::string, std::vector<std::string>> out_edges;
  for (const auto& [key, edge] : g.edges) {
    if (key.first != edge.up || key.second != edge.down) problems.push_back("edge key mismatch");
    if (!g.nodes.count(edge.up) || !g.nodes.count(edge.down)) {
      problems.push_back("edge " + edge.up + "->" + edge.down + " has a missing endpoint");
      continue;
    }
    if (edge.rels.empty()) problems.push_back("edge " + edge.up + "->" + edge.down + " has empty rels");
    out_edges[edge.up].push_back(edge.down);
    for (const auto& [uv, downs] : edge.rels) {
      if (!has_version(edge.up, uv)) {
        problems.push_back("rels key " + normalize(uv) + " not in vs of " + edge.up);
      }
      if (downs.empty()) problems.push_back("empty rels entry on " + edge.up + "->" + edge.down);
      for (const auto& dv : downs) {
        if (!has_version(edge.down, dv)) {
          problems.push_back("rels value " + normalize(dv) + " not in vs of " + edge.down);
        }
        reached[edge.down].insert(dv);
      }
    }
  }

  // Every non-seed version must be reached through some edge.
  for (const auto& [name, node] : g.nodes) {
    if (node.is_seed) continue;
    const auto& got = reached[name];
    for (const auto& v : node.vs) {
      if (!got.count(v)) problems.push_back("version " + normalize(v) + " of " + name + " is unreached");
    }
  }

  // Every node must be reachable from a seed.
  std::set<std::string> seen(g.seeds.begin(), g.seeds.end());
  std::deque<std::string> queue(g.seeds.begin(), g.seeds.end());
  while (!queue.empty()) {
    auto cur = std::move(queue.front());
    queue.pop_front();
    for (const auto& next : out_edges[cur]) {
      if (seen.insert(next).second) queue.push_back(next);
    }
  }
  for (const auto& [name, _] : g.nodes) {
    if (!seen.count(name)) problems.push_back(name + " is not reachable from any seed");
  }
  return problems;
}

}  // namespace chainforge
