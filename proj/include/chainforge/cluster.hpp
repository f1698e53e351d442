#pragma once

// Package-level clustering of supply chains: seed pruning, Leiden community
// detection under modularity, shape classification and cluster metrics.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainforge/chain.hpp"

namespace chainforge {

class EmptyGraph : public std::invalid_argument {
 public:
  EmptyGraph() : std::invalid_argument("graph has no nodes") {}
};

class DegenerateCluster : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Directed package-level graph. Edges are (up, down) indices into `nodes`,
// sorted and unique; self-loops are kept.
struct PrunedGraph {
  std::vector<std::string> nodes;  // sorted
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<std::string> isolated;  // sorted; no incident edge, self-loops included

  std::optional<std::uint32_t> index_of(std::string_view name) const;
};

// Builds a PrunedGraph from named endpoints. Endpoints missing from `nodes`
// are added; duplicate edges collapse.
PrunedGraph make_pruned_graph(std::vector<std::string> nodes,
                              const std::vector<std::pair<std::string, std::string>>& edges);

// Removes seeds and their incident edges and collapses versions.
PrunedGraph prune(const SupplyChainGraph& g);

double isolated_ratio(const PrunedGraph& p);

struct CommunityParams {
  std::uint64_t rng_seed = 0;
  double resolution = 1.0;
  int max_passes = 50;
};

struct Partition {
  // Each community sorted by name; communities by size descending, then by
  // first member.
  std::vector<std::vector<std::string>> communities;
  // Modularity of the flat partition after each pass, then after the final
  // connectivity split.
  std::vector<double> quality_trace;
  double quality = 0.0;
};

// Leiden over the undirected simple view of the non-isolated nodes.
Partition detect_communities(const PrunedGraph& p, const CommunityParams& params = {});

// Modularity of `communities` over the undirected simple view of `p`
// (self-loops and edge direction ignored). Nodes not listed are ignored.
double modularity(const PrunedGraph& p, const std::vector<std::vector<std::string>>& communities,
                  double resolution = 1.0);

enum class Shape { Arrow, Star, Tree, Forest, Other };

std::string_view to_string(Shape s);

using NamedEdge = std::pair<std::string, std::string>;

// Cascade: cycles/self-loops/mutual pairs, Arrow, single root (Star or
// Tree), several roots (inverse star is Other, else Forest).
Shape classify_shape(const std::vector<std::string>& members, const std::vector<NamedEdge>& edges);

struct ClusterMetrics {
  std::size_t size = 0;
  double avg_degree = 0.0;
  std::size_t depth = 0;
  std::vector<std::string> roots;
  std::string core;
};

ClusterMetrics cluster_metrics(const std::vector<std::string>& members, const std::vector<NamedEdge>& edges,
                               Shape shape);

struct Cluster {
  std::size_t id = 0;
  std::vector<std::string> members;
  std::vector<NamedEdge> edges;  // induced, directed, self-loops included
  Shape shape = Shape::Other;
  ClusterMetrics metrics;
};

// Induced subgraphs of each community, classified and measured.
std::vector<Cluster> build_clusters(const PrunedGraph& p, const Partition& partition);

struct ShapeSummary {
  std::size_t clusters = 0;
  double cluster_share = 0.0;
  std::size_t packages = 0;
  double package_share = 0.0;
  std::optional<double> median_avg_degree;
  std::optional<double> mean_depth;  // Tree and Forest only
};

struct ShapeReport {
  std::map<Shape, ShapeSummary> shapes;  // every shape present, zero-filled
  std::size_t total_clusters = 0;
  std::size_t total_packages = 0;
  std::vector<std::size_t> large_clusters;  // ids of clusters with more than 10 members
};

ShapeReport shape_report(const std::vector<Cluster>& clusters);

struct ClusterAnalysis {
  CommunityParams params;
  PrunedGraph pruned;
  Partition partition;
  std::vector<Cluster> clusters;
  ShapeReport report;
};

ClusterAnalysis analyze_clusters(const SupplyChainGraph& g, const CommunityParams& params = {});

// {params, isolated: {count, ratio}, clusters: [...], summary: {...}}
std::string cluster_report_json(const ClusterAnalysis& a, const std::string& registry_hash);

std::string cluster_dot(const Cluster& c);

}  // namespace chainforge
