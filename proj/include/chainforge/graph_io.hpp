#pragma once

// Serialization of supply-chain graphs.
//
// JSON is lossless:
//
//   {
//     "format": "chainforge-supply-chain",
//     "schema_version": 1,
//     "registry_hash": "<sha256>",
//     "built_at": "2021-11-01T00:00:00Z",          (optional)
//     "seeds": ["tensorflow"],
//     "nodes": [{"name": "...", "is_seed": true, "vs": ["1.0", ...]}, ...],
//     "edges": [{"up": "...", "down": "...", "rels": {"1.0": ["0.2", ...]}}, ...]
//   }
//
// Nodes are sorted by name, edges by (up, down), versions ascending.
// edge-csv, dot and graphml are export-only.

#include <stdexcept>
#include <string>
#include <string_view>

#include "chainforge/chain.hpp"

namespace chainforge {

class UnsupportedFormat : public std::invalid_argument {
 public:
  explicit UnsupportedFormat(const std::string& format)
      : std::invalid_argument("unsupported export format '" + format + "'") {}
};

enum class GraphFormat { Json, EdgeCsv, Dot, GraphMl };

GraphFormat parse_graph_format(std::string_view name);

struct ExportOptions {
  // Omit built_at so that output depends on graph content only.
  bool stable = false;
  // Label dot/graphml nodes with their version counts.
  bool version_counts = true;
};

std::string export_graph(const SupplyChainGraph& g, GraphFormat format, const ExportOptions& options = {});
std::string export_graph(const SupplyChainGraph& g, std::string_view format, const ExportOptions& options = {});

// Throws FormatError on malformed documents.
SupplyChainGraph import_graph_json(std::string_view text);

}  // namespace chainforge
