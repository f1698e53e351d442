#include "chainforge/cluster.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace chainforge {

namespace {

struct LocalGraph {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> in_degree;  // self-loops excluded
  std::size_t self_loops = 0;
  std::size_t edges = 0;
};

LocalGraph index_edges(const std::vector<std::string>& members, const std::vector<NamedEdge>& edges) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < members.size(); ++i) pos.emplace(members[i], i);
  if (pos.size() != members.size()) throw DegenerateCluster("duplicate cluster member");
  LocalGraph g;
  g.out.resize(members.size());
  g.in_degree.assign(members.size(), 0);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [up, down] : edges) {
    auto a = pos.find(up);
    auto b = pos.find(down);
    if (a == pos.end() || b == pos.end()) {
      throw DegenerateCluster("edge " + up + "->" + down + " leaves the cluster");
    }
    if (!seen.emplace(a->second, b->second).second) continue;
    ++g.edges;
    if (a->second == b->second) {
      ++g.self_loops;
      continue;
    }
    g.out[a->second].push_back(b->second);
    ++g.in_degree[b->second];
  }
  return g;
}

// Longest path length from any root, or nullopt when the graph has a cycle.
std::optional<std::size_t> dag_depth(const LocalGraph& g) {
  const auto n = g.out.size();
  std::vector<std::size_t> indeg(g.in_degree), level(n, 0), queue;
  for (std::size_t v = 0; v < n; ++v) {
    if (indeg[v] == 0) queue.push_back(v);
  }
  std::size_t depth = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const auto v = queue[i];
    depth = std::max(depth, level[v]);
    for (auto u : g.out[v]) {
      level[u] = std::max(level[u], level[v] + 1);
      if (--indeg[u] == 0) queue.push_back(u);
    }
  }
  if (queue.size() != n) return std::nullopt;
  return depth;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

}  // namespace

std::optional<std::uint32_t> PrunedGraph::index_of(std::string_view name) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), name);
  if (it == nodes.end() || *it != name) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes.begin());
}

PrunedGraph make_pruned_graph(std::vector<std::string> nodes,
                              const std::vector<std::pair<std::string, std::string>>& edges) {
  PrunedGraph p;
  for (const auto& [a, b] : edges) {
    nodes.push_back(a);
    nodes.push_back(b);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  p.nodes = std::move(nodes);
  std::vector<char> touched(p.nodes.size(), 0);
  for (const auto& [a, b] : edges) {
    const auto i = *p.index_of(a);
    const auto j = *p.index_of(b);
    p.edges.emplace_back(i, j);
    touched[i] = touched[j] = 1;
  }
  std::sort(p.edges.begin(), p.edges.end());
  p.edges.erase(std::unique(p.edges.begin(), p.edges.end()), p.edges.end());
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    if (!touched[i]) p.isolated.push_back(p.nodes[i]);
  }
  return p;
}

PrunedGraph prune(const SupplyChainGraph& g) {
  std::vector<std::string> nodes;
  for (const auto& [name, node] : g.nodes) {
    if (!node.is_seed) nodes.push_back(name);
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [key, _] : g.edges) {
    if (g.nodes.at(key.first).is_seed || g.nodes.at(key.second).is_seed) continue;
    edges.push_back(key);
  }
  return make_pruned_graph(std::move(nodes), edges);
}

double isolated_ratio(const PrunedGraph& p) {
  if (p.nodes.empty()) throw EmptyGraph();
  return static_cast<double>(p.isolated.size()) / static_cast<double>(p.nodes.size());
}

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::Arrow: return "Arrow";
    case Shape::Star: return "Star";
    case Shape::Tree: return "Tree";
    case Shape::Forest: return "Forest";
    case Shape::Other: return "Other";
  }
  return "Other";
}

Shape classify_shape(const std::vector<std::string>& members, const std::vector<NamedEdge>& edges) {
  if (members.empty()) throw DegenerateCluster("empty cluster");
  const auto g = index_edges(members, edges);
  if (g.edges == 0) throw DegenerateCluster("cluster has no edges");
  if (g.self_loops > 0 || !dag_depth(g)) return Shape::Other;

  const auto n = members.size();
  if (n == 2 && g.edges == 1) return Shape::Arrow;

  std::vector<std::size_t> roots;
  for (std::size_t v = 0; v < n; ++v) {
    if (g.in_degree[v] == 0) roots.push_back(v);
  }
  if (roots.size() == 1) return g.out[roots[0]].size() == g.edges ? Shape::Star : Shape::Tree;

  for (std::size_t t = 0; t < n; ++t) {
    if (g.in_degree[t] == n - 1 && g.edges == n - 1) return Shape::Other;
  }
  return Shape::Forest;
}

ClusterMetrics cluster_metrics(const std::vector<std::string>& members, const std::vector<NamedEdge>& edges,
                               Shape shape) {
  const auto g = index_edges(members, edges);
  ClusterMetrics m;
  m.size = members.size();
  m.avg_degree = m.size ? static_cast<double>(g.edges) / static_cast<double>(m.size) : 0.0;
  if (shape != Shape::Other) m.depth = dag_depth(g).value_or(0);

  std::size_t core = 0;
  for (std::size_t v = 0; v < members.size(); ++v) {
    if (g.in_degree[v] == 0) m.roots.push_back(members[v]);
    const auto key = [&](std::size_t x) {
      return std::make_tuple(-static_cast<long long>(g.out[x].size()), g.in_degree[x], members[x]);
    };
    if (key(v) < key(core)) core = v;
  }
  std::sort(m.roots.begin(), m.roots.end());
  if (!members.empty()) m.core = members[core];
  return m;
}

std::vector<Cluster> build_clusters(const PrunedGraph& p, const Partition& partition) {
  std::vector<std::size_t> community(p.nodes.size(), SIZE_MAX);
  for (std::size_t c = 0; c < partition.communities.size(); ++c) {
    for (const auto& name : partition.communities[c]) {
      if (auto idx = p.index_of(name)) community[*idx] = c;
    }
  }
  std::vector<Cluster> clusters(partition.communities.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    clusters[c].id = c;
    clusters[c].members = partition.communities[c];
  }
  for (const auto& [a, b] : p.edges) {
    if (community[a] != SIZE_MAX && community[a] == community[b]) {
      clusters[community[a]].edges.emplace_back(p.nodes[a], p.nodes[b]);
    }
  }
  for (auto& c : clusters) {
    c.shape = classify_shape(c.members, c.edges);
    c.metrics = cluster_metrics(c.members, c.edges, c.shape);
  }
  return clusters;
}

ShapeReport shape_report(const std::vector<Cluster>& clusters) {
  ShapeReport r;
  std::map<Shape, std::vector<double>> degrees;
  std::map<Shape, std::vector<double>> depths;
  for (auto s : {Shape::Arrow, Shape::Star, Shape::Tree, Shape::Forest, Shape::Other}) r.shapes[s] = {};
  for (const auto& c : clusters) {
    auto& s = r.shapes[c.shape];
    ++s.clusters;
    s.packages += c.members.size();
    r.total_packages += c.members.size();
    degrees[c.shape].push_back(c.metrics.avg_degree);
    depths[c.shape].push_back(static_cast<double>(c.metrics.depth));
    if (c.members.size() > 10) r.large_clusters.push_back(c.id);
  }
  r.total_clusters = clusters.size();
  for (auto& [shape, s] : r.shapes) {
    if (r.total_clusters) s.cluster_share = static_cast<double>(s.clusters) / static_cast<double>(r.total_clusters);
    if (r.total_packages) s.package_share = static_cast<double>(s.packages) / static_cast<double>(r.total_packages);
    if (!degrees[shape].empty()) s.median_avg_degree = median(degrees[shape]);
    if ((shape == Shape::Tree || shape == Shape::Forest) && !depths[shape].empty()) {
      double sum = 0.0;
      for (double d : depths[shape]) sum += d;
      s.mean_depth = sum / static_cast<double>(depths[shape].size());
    }
  }
  return r;
}

ClusterAnalysis analyze_clusters(const SupplyChainGraph& g, const CommunityParams& params) {
  ClusterAnalysis a;
  a.params = params;
  a.pruned = prune(g);
  a.partition = detect_communities(a.pruned, params);
  a.clusters = build_clusters(a.pruned, a.partition);
  a.report = shape_report(a.clusters);
  return a;
}

std::string cluster_report_json(const ClusterAnalysis& a, const std::string& registry_hash) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["params"] = {{"rng_seed", a.params.rng_seed},
                   {"resolution", a.params.resolution},
                   {"max_passes", a.params.max_passes},
                   {"registry_hash", registry_hash}};
  doc["pruned"] = {{"nodes", a.pruned.nodes.size()}, {"edges", a.pruned.edges.size()}};
  doc["isolated"] = {{"count", a.pruned.isolated.size()},
                     {"ratio", a.pruned.nodes.empty() ? 0.0 : isolated_ratio(a.pruned)}};
  doc["modularity"] = a.partition.quality;
  auto clusters = ordered_json::array();
  for (const auto& c : a.clusters) {
    ordered_json j;
    j["id"] = c.id;
    j["members"] = c.members;
    j["shape"] = std::string(to_string(c.shape));
    j["size"] = c.metrics.size;
    j["edges"] = c.edges.size();
    j["avg_degree"] = c.metrics.avg_degree;
    j["depth"] = c.metrics.depth;
    j["roots"] = c.metrics.roots;
    j["core"] = c.metrics.core;
    clusters.push_back(std::move(j));
  }
  doc["clusters"] = std::move(clusters);
  ordered_json summary;
  summary["clusters"] = a.report.total_clusters;
  summary["packages"] = a.report.total_packages;
  ordered_json shapes;
  for (const auto& [shape, s] : a.report.shapes) {
    ordered_json j;
    j["clusters"] = s.clusters;
    j["cluster_share"] = s.cluster_share;
    j["packages"] = s.packages;
    j["package_share"] = s.package_share;
    j["median_avg_degree"] = s.median_avg_degree ? ordered_json(*s.median_avg_degree) : ordered_json();
    if (shape == Shape::Tree || shape == Shape::Forest) {
      j["mean_depth"] = s.mean_depth ? ordered_json(*s.mean_depth) : ordered_json();
    }
    shapes[std::string(to_string(shape))] = std::move(j);
  }
  summary["shapes"] = std::move(shapes);
  auto large = ordered_json::array();
  for (auto id : a.report.large_clusters) {
    const auto& c = a.clusters[id];
    large.push_back({{"id", id}, {"size", c.metrics.size}, {"core", c.metrics.core}});
  }
  summary["large_clusters"] = std::move(large);
  doc["summary"] = std::move(summary);
  return doc.dump(2) + "\n";
}

std::string cluster_dot(const Cluster& c) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out.push_back('\\');
      out.push_back(ch);
    }
    return out + "\"";
  };
  std::ostringstream out;
  out << "digraph cluster_" << c.id << " {\n";
  out << "  label=" << quote(std::string(to_string(c.shape)) + " cluster " + std::to_string(c.id)) << ";\n";
  for (const auto& m : c.members) {
    out << "  " << quote(m);
    if (m == c.metrics.core) out << " [style=bold]";
    out << ";\n";
  }
  for (const auto& [a, b] : c.edges) out << "  " << quote(a) << " -> " << quote(b) << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace chainforge
