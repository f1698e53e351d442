#include "chainforge/graph_io.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "chainforge/registry.hpp"
#include "json.hpp"

namespace chainforge {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kFormatTag = "chainforge-supply-chain";
constexpr int kSchemaVersion = 1;

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t version_pairs(const DependencyEdge& e) {
  std::size_t n = 0;
  for (const auto& [_, downs] : e.rels) n += downs.size();
  return n;
}

std::string to_json(const SupplyChainGraph& g, const ExportOptions& options) {
  ordered_json doc;
  doc["format"] = kFormatTag;
  doc["schema_version"] = kSchemaVersion;
  doc["registry_hash"] = g.registry_hash;
  if (g.built_at && !options.stable) doc["built_at"] = *g.built_at;
  doc["seeds"] = g.seeds;
  auto nodes = ordered_json::array();
  for (const auto& [name, node] : g.nodes) {
    ordered_json n;
    n["name"] = name;
    n["is_seed"] = node.is_seed;
    auto vs = ordered_json::array();
    for (const auto& v : node.vs) vs.push_back(v.raw.empty() ? normalize(v) : v.raw);
    n["vs"] = std::move(vs);
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  auto edges = ordered_json::array();
  for (const auto& [_, edge] : g.edges) {
    ordered_json e;
    e["up"] = edge.up;
    e["down"] = edge.down;
    ordered_json rels = ordered_json::object();
    for (const auto& [uv, downs] : edge.rels) {
      auto list = ordered_json::array();
      for (const auto& dv : downs) list.push_back(dv.raw.empty() ? normalize(dv) : dv.raw);
      rels[uv.raw.empty() ? normalize(uv) : uv.raw] = std::move(list);
    }
    e["rels"] = std::move(rels);
    edges.push_back(std::move(e));
  }
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

std::string to_edge_csv(const SupplyChainGraph& g) {
  std::string out = "up,down,up_version,down_version\n";
  for (const auto& [_, edge] : g.edges) {
    for (const auto& [uv, downs] : edge.rels) {
      for (const auto& dv : downs) {
        out += csv_field(edge.up) + "," + csv_field(edge.down) + "," + csv_field(normalize(uv)) + "," +
               csv_field(normalize(dv)) + "\n";
      }
    }
  }
  return out;
}

std::string to_dot(const SupplyChainGraph& g, const ExportOptions& options) {
  std::ostringstream out;
  out << "digraph supply_chain {\n";
  out << "  rankdir=LR;\n";
  for (const auto& [name, node] : g.nodes) {
    out << "  " << dot_quote(name);
    std::string label = name;
    if (options.version_counts) label += "\\n" + std::to_string(node.vs.size()) + " versions";
    out << " [label=" << dot_quote(label);
    if (node.is_seed) out << ", shape=box, style=bold";
    out << "];\n";
  }
  for (const auto& [_, edge] : g.edges) {
    out << "  " << dot_quote(edge.up) << " -> " << dot_quote(edge.down);
    if (options.version_counts) out << " [weight=" << version_pairs(edge) << "]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_graphml(const SupplyChainGraph& g, const ExportOptions& options) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
      << "         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
      << "         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
         "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n";
  out << "  <key id=\"is_seed\" for=\"node\" attr.name=\"is_seed\" attr.type=\"boolean\"/>\n";
  if (options.version_counts) {
    out << "  <key id=\"versions\" for=\"node\" attr.name=\"versions\" attr.type=\"int\"/>\n";
    out << "  <key id=\"version_pairs\" for=\"edge\" attr.name=\"version_pairs\" attr.type=\"int\"/>\n";
  }
  out << "  <graph id=\"supply_chain\" edgedefault=\"directed\">\n";
  for (const auto& [name, node] : g.nodes) {
    out << "    <node id=\"" << xml_escape(name) << "\">\n";
    out << "      <data key=\"is_seed\">" << (node.is_seed ? "true" : "false") << "</data>\n";
    if (options.version_counts) out << "      <data key=\"versions\">" << node.vs.size() << "</data>\n";
    out << "    </node>\n";
  }
  std::size_t id = 0;
  for (const auto& [_, edge] : g.edges) {
    out << "    <edge id=\"e" << id++ << "\" source=\"" << xml_escape(edge.up) << "\" target=\""
        << xml_escape(edge.down) << "\"";
    if (options.version_counts) {
      out << ">\n      <data key=\"version_pairs\">" << version_pairs(edge) << "</data>\n    </edge>\n";
    } else {
      out << "/>\n";
    }
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

Version json_version(const nlohmann::json& j) {
  if (!j.is_string()) throw FormatError("version must be a string");
  auto v = try_parse_version(j.get<std::string>());
  if (!v) throw FormatError("invalid version '" + j.get<std::string>() + "'");
  return *v;
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const nlohmann::json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

GraphFormat parse_graph_format(std::string_view name) {
  if (name == "json") return GraphFormat::Json;
  if (name == "edge-csv" || name == "csv") return GraphFormat::EdgeCsv;
  if (name == "dot") return GraphFormat::Dot;
  if (name == "graphml") return GraphFormat::GraphMl;
  throw UnsupportedFormat(std::string(name));
}

std::string export_graph(const SupplyChainGraph& g, GraphFormat format, const ExportOptions& options) {
  switch (format) {
    case GraphFormat::Json: return to_json(g, options);
    case GraphFormat::EdgeCsv: return to_edge_csv(g);
    case GraphFormat::Dot: return to_dot(g, options);
    case GraphFormat::GraphMl: return to_graphml(g, options);
  }
  throw UnsupportedFormat("?");
}

std::string export_graph(const SupplyChainGraph& g, std::string_view format, const ExportOptions& options) {
  return export_graph(g, parse_graph_format(format), options);
}

SupplyChainGraph import_graph_json(std::string_view text) {
  auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw FormatError("graph file is not a JSON object");
  if (string_field(doc, "format") != kFormatTag) throw FormatError("not a supply-chain graph document");
  const auto& schema = field(doc, "schema_version");
  if (!schema.is_number_integer() || schema.get<int>() != kSchemaVersion) {
    throw FormatError("unsupported graph schema version");
  }

  SupplyChainGraph g;
  try {
    g.registry_hash = string_field(doc, "registry_hash");
    if (auto it = doc.find("built_at"); it != doc.end() && !it->is_null()) {
      if (!it->is_string()) throw FormatError("built_at must be a string");
      g.built_at = it->get<std::string>();
    }
    const auto& seeds = field(doc, "seeds");
    if (!seeds.is_array()) throw FormatError("seeds must be an array");
    for (const auto& s : seeds) {
      if (!s.is_string()) throw FormatError("seed names must be strings");
      g.seeds.push_back(s.get<std::string>());
    }
    std::sort(g.seeds.begin(), g.seeds.end());

    const auto& nodes = field(doc, "nodes");
    if (!nodes.is_array()) throw FormatError("nodes must be an array");
    for (const auto& n : nodes) {
      if (!n.is_object()) throw FormatError("node must be an object");
      PackageNode node;
      node.name = string_field(n, "name");
      const auto& seed = field(n, "is_seed");
      if (!seed.is_boolean()) throw FormatError("is_seed must be a boolean");
      node.is_seed = seed.get<bool>();
      const auto& vs = field(n, "vs");
      if (!vs.is_array()) throw FormatError("vs must be an array");
      for (const auto& v : vs) node.vs.push_back(json_version(v));
      std::sort(node.vs.begin(), node.vs.end());
      node.vs.erase(std::unique(node.vs.begin(), node.vs.end()), node.vs.end());
      auto name = node.name;
      if (!g.nodes.emplace(name, std::move(node)).second) throw FormatError("duplicate node '" + name + "'");
    }

    const auto& edges = field(doc, "edges");
    if (!edges.is_array()) throw FormatError("edges must be an array");
    for (const auto& e : edges) {
      if (!e.is_object()) throw FormatError("edge must be an object");
      DependencyEdge edge;
      edge.up = string_field(e, "up");
      edge.down = string_field(e, "down");
      if (!g.nodes.count(edge.up) || !g.nodes.count(edge.down)) {
        throw FormatError("edge " + edge.up + "->" + edge.down + " references an unknown node");
      }
      const auto& rels = field(e, "rels");
      if (!rels.is_object()) throw FormatError("rels must be an object");
      for (const auto& [key, downs] : rels.items()) {
        auto uv = try_parse_version(key);
        if (!uv) throw FormatError("invalid version '" + key + "'");
        if (!downs.is_array()) throw FormatError("rels values must be arrays");
        auto& list = edge.rels[*uv];
        for (const auto& dv : downs) list.push_back(json_version(dv));
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
      }
      EdgeKey key{edge.up, edge.down};
      if (!g.edges.emplace(key, std::move(edge)).second) {
        throw FormatError("duplicate edge " + key.first + "->" + key.second);
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed graph document: ") + ex.what());
  }
  return g;
}

}  // namespace chainforge
