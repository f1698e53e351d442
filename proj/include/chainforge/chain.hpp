#pragma once

// Version-sensitive supply-chain graphs grown from seed packages over the
// dependency database.
//
// Edges point from an upstream package to its dependent (up -> down). Each
// edge carries `rels`: for every upstream version, the downstream versions
// that depend on it. Each node carries `vs`: the versions present in the
// chain. Seeds contribute all of their registry versions; every other
// package contributes exactly the versions reached through some edge.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chainforge/registry.hpp"
#include "chainforge/version.hpp"

namespace chainforge {

class UnknownSeed : public std::invalid_argument {
 public:
  explicit UnknownSeed(std::string name)
      : std::invalid_argument("seed package '" + name + "' is not in the registry"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

struct PackageNode {
  std::string name;
  std::vector<Version> vs;  // ascending, unique
  bool is_seed = false;

  bool operator==(const PackageNode&) const;
};

struct DependencyEdge {
  std::string up;
  std::string down;
  // up version -> ascending down versions
  std::map<Version, std::vector<Version>> rels;

  bool operator==(const DependencyEdge&) const;
};

using EdgeKey = std::pair<std::string, std::string>;

struct SupplyChainGraph {
  std::map<std::string, PackageNode> nodes;
  std::map<EdgeKey, DependencyEdge> edges;
  std::vector<std::string> seeds;  // sorted, normalized
  std::string registry_hash;
  std::optional<std::string> built_at;

  bool operator==(const SupplyChainGraph&) const;
};

struct ChainOptions {
  // Drop unknown seeds instead of failing.
  bool skip_unknown_seeds = false;
  // Workers for the per-round dependent queries; does not affect results.
  unsigned threads = 1;
};

SupplyChainGraph build_supply_chain(const DependencyDb& db, std::span<const std::string> seeds,
                                    const ChainOptions& options = {});

struct GraphStats {
  std::size_t packages = 0;
  std::size_t versions = 0;
  std::size_t edges = 0;

  bool operator==(const GraphStats&) const = default;
};

GraphStats graph_stats(const SupplyChainGraph& g);

// Structural invariants (reachability from seeds, version closure, rels
// within vs, no empty rels). Returns human-readable violations; empty when
// the graph is well formed.
std::vector<std::string> check_invariants(const SupplyChainGraph& g);

}  // namespace chainforge
