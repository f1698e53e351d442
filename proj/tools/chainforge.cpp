// chainforge: command-line driver for the supply-chain pipeline.
//
//   chainforge ingest-db      --input metadata.jsonl --db deps.cfdb
//   chainforge build-sc       --db deps.cfdb --seeds tensorflow,tensorflow-cpu --out sc/
//   chainforge clusters       --input sc/graph.json --out sc/
//   chainforge disengagement  --db deps.cfdb --input sc/graph.json --out sc/
//   chainforge report         --db deps.cfdb --input sc/graph.json --downloads dl.csv --out report.md
//   chainforge export         --input sc/graph.json --format graphml --out sc/graph.graphml
//
// Exit status: 0 on success, 1 on input or processing errors, 2 on usage
// errors. CHAINFORGE_LOG=debug|info|warn|error controls stderr verbosity.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "chainforge/chain.hpp"
#include "chainforge/cluster.hpp"
#include "chainforge/dynamics.hpp"
#include "chainforge/graph_io.hpp"
#include "chainforge/registry.hpp"
#include "chainforge/timestamp.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "chainforge 1.0.0";

enum class Level { Debug, Info, Warn, Error };

Level log_level() {
  static const Level level = [] {
    const char* env = std::getenv("CHAINFORGE_LOG");
    const std::string v = env ? env : "";
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    if (v == "error" || v == "quiet") return Level::Error;
    return Level::Warn;
  }();
  return level;
}

void log(Level level, const std::string& msg) {
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  if (level < log_level()) return;
  std::cerr << "chainforge: " << kNames[static_cast<int>(level)] << ": " << msg << "\n";
}

// Thrown for problems with the inputs named on the command line.
struct CommandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string now_utc() {
  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch());
  return chainforge::format_timestamp(secs.count());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw chainforge::IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Stages files next to their targets and renames them into place together,
// so a failing command leaves no partial outputs behind.
class Outputs {
 public:
  void add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void commit() {
    std::vector<fs::path> staged;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& p : staged) fs::remove(p, ec);
    };
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      auto tmp = path;
      tmp += ".partial";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      staged.push_back(tmp);
      out << content;
      out.close();
      if (!out) {
        cleanup();
        throw chainforge::IoError("cannot write '" + path.string() + "'");
      }
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      fs::rename(staged[i], files_[i].first, ec);
      if (ec) {
        cleanup();
        throw chainforge::IoError("cannot write '" + files_[i].first.string() + "': " + ec.message());
      }
      log(Level::Info, "wrote " + files_[i].first.string());
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

chainforge::SupplyChainGraph load_graph(const fs::path& path) {
  return chainforge::import_graph_json(read_file(path));
}

void require_same_registry(const chainforge::SupplyChainGraph& g, const chainforge::Registry& r) {
  if (g.registry_hash != r.content_hash()) {
    throw CommandError("graph was built from registry " + g.registry_hash + " but the db holds registry " +
                       r.content_hash());
  }
}

std::vector<std::string> non_seed_members(const chainforge::SupplyChainGraph& g) {
  std::vector<std::string> out;
  for (const auto& [name, node] : g.nodes) {
    if (!node.is_seed) out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string db;
  std::string manifest;
  bool include_extra_gated = true;
  unsigned threads = 1;
  bool stable = false;
};

int cmd_ingest(const IngestArgs& a) {
  log(Level::Info, "ingesting " + a.input);
  auto reg = std::make_shared<const chainforge::Registry>(chainforge::ingest_file(a.input));
  const auto& st = reg->stats();
  if (st.malformed_lines) log(Level::Warn, std::to_string(st.malformed_lines) + " malformed lines skipped");
  const auto db = chainforge::build_dependency_db(
      reg, chainforge::DbOptions{.include_extra_gated = a.include_extra_gated, .threads = a.threads});

  ordered_json m;
  m["command"] = "ingest-db";
  m["tool"] = kToolVersion;
  m["registry_hash"] = reg->content_hash();
  m["packages"] = reg->packages().size();
  m["releases"] = reg->release_count();
  m["records"] = db.size();
  m["skipped_versions"] = st.skipped_versions;
  m["skipped_requirements"] = db.stats().skipped_requirements;
  m["options"] = {{"include_extra_gated", a.include_extra_gated}};
  m["ingest"] = {{"lines", st.lines},
                 {"distributions", st.distributions},
                 {"malformed_lines", st.malformed_lines},
                 {"skipped_versions", st.skipped_versions}};
  const auto& ds = db.stats();
  m["resolution"] = {{"requirements", ds.requirements},
                     {"skipped_requirements", ds.skipped_requirements},
                     {"unknown_packages", ds.unknown_packages},
                     {"excluded_extra_gated", ds.excluded_extra_gated}};
  if (!a.stable) m["created_at"] = now_utc();
  const auto text = m.dump(2) + "\n";

  if (fs::path(a.db).has_parent_path()) fs::create_directories(fs::path(a.db).parent_path());
  db.save(a.db);
  if (!a.manifest.empty()) {
    Outputs out;
    out.add(a.manifest, text);
    out.commit();
  }
  std::cout << text;
  return 0;
}

struct BuildArgs {
  std::string db;
  std::vector<std::string> seeds;
  std::string out;
  std::vector<std::string> formats;
  unsigned threads = 1;
  bool skip_unknown = false;
  bool stable = false;
};

const std::map<std::string, std::string>& export_extensions() {
  static const std::map<std::string, std::string> ext{
      {"json", "json"}, {"edge-csv", "csv"}, {"dot", "dot"}, {"graphml", "graphml"}};
  return ext;
}

int cmd_build(const BuildArgs& a) {
  const auto db = chainforge::DependencyDb::load(a.db);
  auto g = chainforge::build_supply_chain(
      db, a.seeds, chainforge::ChainOptions{.skip_unknown_seeds = a.skip_unknown, .threads = a.threads});
  if (!a.stable) g.built_at = now_utc();
  if (g.seeds.empty()) throw CommandError("no seed package exists in the registry");
  const auto problems = chainforge::check_invariants(g);
  if (!problems.empty()) throw std::logic_error("graph invariant violated: " + problems.front());

  const auto stats = chainforge::graph_stats(g);
  ordered_json s;
  s["packages"] = stats.packages;
  s["versions"] = stats.versions;
  s["edges"] = stats.edges;
  s["seeds"] = g.seeds;
  s["registry_hash"] = g.registry_hash;

  const fs::path dir(a.out);
  Outputs out;
  const chainforge::ExportOptions opts{.stable = a.stable};
  out.add(dir / "graph.json", chainforge::export_graph(g, chainforge::GraphFormat::Json, opts));
  for (const auto& f : a.formats) {
    if (f == "json") continue;
    out.add(dir / ("graph." + export_extensions().at(f)), chainforge::export_graph(g, f, opts));
  }
  out.add(dir / "stats.json", s.dump(2) + "\n");
  out.commit();
  std::cout << s.dump() << "\n";
  return 0;
}

struct ClusterArgs {
  std::string input;
  std::string out;
  std::uint64_t rng_seed = 0;
  double resolution = 1.0;
  int max_passes = 50;
  bool dot = false;
};

int cmd_clusters(const ClusterArgs& a) {
  const auto g = load_graph(a.input);
  const auto analysis = chainforge::analyze_clusters(
      g, chainforge::CommunityParams{.rng_seed = a.rng_seed, .resolution = a.resolution, .max_passes = a.max_passes});
  const fs::path dir(a.out);
  Outputs out;
  out.add(dir / "clusters.json", chainforge::cluster_report_json(analysis, g.registry_hash));
  if (a.dot) {
    for (const auto& c : analysis.clusters) {
      out.add(dir / "clusters" / ("cluster_" + std::to_string(c.id) + ".dot"), chainforge::cluster_dot(c));
    }
  }
  out.commit();
  ordered_json line;
  line["clusters"] = analysis.clusters.size();
  line["isolated"] = analysis.pruned.isolated.size();
  for (const auto& [shape, s] : analysis.report.shapes) line[std::string(chainforge::to_string(shape))] = s.clusters;
  std::cout << line.dump() << "\n";
  return 0;
}

struct DisengagementArgs {
  std::string db;
  std::string input;
  std::string out;
  bool include_prereleases = true;
};

int cmd_disengagement(const DisengagementArgs& a) {
  const auto db = chainforge::DependencyDb::load(a.db);
  const auto g = load_graph(a.input);
  require_same_registry(g, db.registry());
  const chainforge::DisengagementOptions opts{.include_prereleases = a.include_prereleases};
  const auto records = chainforge::detect_disengaged(g, db.registry(), opts);
  const auto trend = chainforge::quarterly_trend(records);
  Outputs out;
  out.add(fs::path(a.out) / "disengagement.json",
          chainforge::disengagement_report_json(records, trend, g.registry_hash, opts));
  out.commit();
  ordered_json line;
  line["disengaged"] = records.size();
  line["quarters"] = trend.quarters.size();
  line["unknown_quarter"] = trend.unknown;
  std::cout << line.dump() << "\n";
  return 0;
}

struct ReportArgs {
  std::string db;
  std::string input;
  std::string downloads;
  std::string out;
  std::string format = "json";
  std::vector<std::string> sections{"graph", "shapes", "popularity", "disengagement"};
  std::optional<double> threshold;
  std::uint64_t rng_seed = 0;
  double resolution = 1.0;
  bool include_prereleases = true;
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << x;
  return ss.str();
}

std::string report_markdown(const ordered_json& doc) {
  std::ostringstream md;
  md << "# Supply-chain report\n\n";
  md << "Registry: `" << doc["registry_hash"].get<std::string>() << "`\n";
  const auto& s = doc["sections"];
  if (s.contains("graph")) {
    const auto& g = s["graph"];
    md << "\n## Graph\n\n| packages | versions | edges |\n|---:|---:|---:|\n";
    md << "| " << g["packages"] << " | " << g["versions"] << " | " << g["edges"] << " |\n";
    md << "\nSeeds: " << g["seeds"].size() << "\n";
  }
  if (s.contains("shapes")) {
    const auto& c = s["shapes"];
    md << "\n## Cluster shapes\n\n";
    md << "Pruned graph: " << c["pruned"]["nodes"] << " nodes, " << c["pruned"]["edges"] << " edges; "
       << c["isolated"]["count"] << " isolated (" << fmt(c["isolated"]["ratio"].get<double>() * 100.0, 1)
       << "%).\n\n";
    md << "| shape | clusters | share | packages | package share | median avg degree |\n";
    md << "|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [name, v] : c["summary"]["shapes"].items()) {
      md << "| " << name << " | " << v["clusters"] << " | " << fmt(v["cluster_share"].get<double>()) << " | "
         << v["packages"] << " | " << fmt(v["package_share"].get<double>()) << " | "
         << (v["median_avg_degree"].is_null() ? std::string("-") : fmt(v["median_avg_degree"].get<double>()))
         << " |\n";
    }
    const auto& large = c["summary"]["large_clusters"];
    if (!large.empty()) {
      md << "\nLarge clusters:\n\n";
      for (const auto& l : large) md << "- cluster " << l["id"] << ": " << l["size"] << " packages, core `"
                                     << l["core"].get<std::string>() << "`\n";
    }
  }
  if (s.contains("popularity")) {
    const auto& p = s["popularity"];
    md << "\n## Popular packages\n\n";
    md << "Threshold (" << p["mode"].get<std::string>() << "): " << fmt(p["threshold"].get<double>(), 1)
       << " monthly downloads; " << p["count"] << " of " << p["members"] << " packages are popular.\n";
    if (!p["popular"].empty()) {
      md << "\n";
      for (const auto& name : p["popular"]) md << "- " << name.get<std::string>() << "\n";
    }
  }
  if (s.contains("disengagement")) {
    const auto& d = s["disengagement"];
    md << "\n## Disengagement\n\nPackages that left the supply chain: " << d["total"] << ".\n";
    if (!d["trend"].empty()) {
      md << "\n| quarter | packages |\n|---|---:|\n";
      for (const auto& [q, n] : d["trend"].items()) md << "| " << q << " | " << n << " |\n";
    }
    if (d["unknown_quarter"].get<std::size_t>() > 0) {
      md << "\nWithout upload time: " << d["unknown_quarter"] << "\n";
    }
  }
  return md.str();
}

int cmd_report(const ReportArgs& a) {
  auto wants = [&](const char* s) { return std::find(a.sections.begin(), a.sections.end(), s) != a.sections.end(); };
  std::vector<std::string> missing;
  if (a.input.empty() || !fs::exists(a.input)) missing.push_back("graph (--input)");
  if (wants("disengagement") && (a.db.empty() || !fs::exists(a.db))) missing.push_back("db (--db)");
  if (wants("popularity") && (a.downloads.empty() || !fs::exists(a.downloads))) {
    missing.push_back("downloads (--downloads)");
  }
  if (!missing.empty()) {
    std::string msg = "missing inputs:";
    for (const auto& m : missing) msg += " " + m;
    throw CommandError(msg);
  }

  const auto g = load_graph(a.input);
  ordered_json doc;
  doc["registry_hash"] = g.registry_hash;
  ordered_json sections = ordered_json::object();

  if (wants("graph")) {
    const auto st = chainforge::graph_stats(g);
    sections["graph"] = {{"packages", st.packages}, {"versions", st.versions}, {"edges", st.edges},
                         {"seeds", g.seeds}};
  }
  if (wants("shapes")) {
    const auto analysis = chainforge::analyze_clusters(
        g, chainforge::CommunityParams{.rng_seed = a.rng_seed, .resolution = a.resolution});
    auto report = ordered_json::parse(chainforge::cluster_report_json(analysis, g.registry_hash));
    report.erase("clusters");
    sections["shapes"] = std::move(report);
  }
  if (wants("popularity")) {
    std::ifstream in(a.downloads);
    if (!in) throw chainforge::IoError("cannot open '" + a.downloads + "'");
    const auto table = chainforge::parse_downloads_csv(in);
    const auto rule = a.threshold ? chainforge::PopularityRule::explicit_threshold(*a.threshold)
                                  : chainforge::PopularityRule::ecosystem_mean();
    const auto members = non_seed_members(g);
    const auto popular = chainforge::popular_packages(members, table, rule);
    sections["popularity"] = {{"mode", a.threshold ? "explicit" : "ecosystem_mean"},
                              {"threshold", chainforge::popularity_threshold(table, rule)},
                              {"members", members.size()},
                              {"count", popular.size()},
                              {"popular", popular}};
  }
  if (wants("disengagement")) {
    const auto db = chainforge::DependencyDb::load(a.db);
    require_same_registry(g, db.registry());
    const chainforge::DisengagementOptions opts{.include_prereleases = a.include_prereleases};
    const auto records = chainforge::detect_disengaged(g, db.registry(), opts);
    const auto trend = chainforge::quarterly_trend(records);
    ordered_json t = ordered_json::object();
    for (const auto& [q, n] : trend.quarters) t[q] = n;
    sections["disengagement"] = {{"include_prereleases", a.include_prereleases},
                                 {"total", records.size()},
                                 {"trend", t},
                                 {"unknown_quarter", trend.unknown}};
  }
  doc["sections"] = std::move(sections);

  const auto text = a.format == "md" ? report_markdown(doc) : doc.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    Outputs out;
    out.add(a.out, text);
    out.commit();
  }
  return 0;
}

struct ExportArgs {
  std::string input;
  std::string format;
  std::string out;
  bool stable = false;
};

int cmd_export(const ExportArgs& a) {
  const auto g = load_graph(a.input);
  const auto text = chainforge::export_graph(g, a.format, chainforge::ExportOptions{.stable = a.stable});
  if (a.out.empty()) {
    std::cout << text;
  } else {
    Outputs out;
    out.add(a.out, text);
    out.commit();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Package supply-chain analysis"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest-db", "Ingest registry metadata and build the dependency db");
  c_ingest->add_option("--input", ingest.input, "Metadata dump (JSON Lines)")->required();
  c_ingest->add_option("--db", ingest.db, "Dependency db to write")->required();
  c_ingest->add_option("--out", ingest.manifest, "Also write the manifest to this file");
  c_ingest->add_flag("--include-extra-gated,!--exclude-extra-gated", ingest.include_extra_gated,
                     "Keep requirements that only apply with an extra (default on)");
  c_ingest->add_option("--threads", ingest.threads, "Worker threads")->check(CLI::PositiveNumber);
  c_ingest->add_flag("--stable", ingest.stable, "Omit timestamps from outputs");

  BuildArgs build;
  auto* c_build = app.add_subcommand("build-sc", "Build a supply-chain graph from seed packages");
  c_build->add_option("--db", build.db, "Dependency db")->required()->check(CLI::ExistingFile);
  c_build->add_option("--seeds", build.seeds, "Comma-separated seed packages")->required()->delimiter(',');
  c_build->add_option("--out", build.out, "Output directory")->required();
  c_build->add_option("--format", build.formats, "Extra exports: edge-csv,dot,graphml")
      ->delimiter(',')
      ->check(CLI::IsMember({"json", "edge-csv", "dot", "graphml"}));
  c_build->add_option("--threads", build.threads, "Worker threads")->check(CLI::PositiveNumber);
  c_build->add_flag("--skip-unknown-seeds", build.skip_unknown, "Ignore seeds missing from the registry");
  c_build->add_flag("--stable", build.stable, "Omit timestamps from outputs");

  ClusterArgs clusters;
  std::string cluster_format;
  auto* c_clusters = app.add_subcommand("clusters", "Detect and classify clusters of a supply chain");
  c_clusters->add_option("--input", clusters.input, "Graph JSON")->required();
  c_clusters->add_option("--out", clusters.out, "Output directory")->required();
  c_clusters->add_option("--rng-seed", clusters.rng_seed, "Random seed");
  c_clusters->add_option("--resolution", clusters.resolution, "Modularity resolution")->check(CLI::PositiveNumber);
  c_clusters->add_option("--max-passes", clusters.max_passes, "Maximum Leiden passes")->check(CLI::PositiveNumber);
  c_clusters->add_option("--format", cluster_format, "Set to 'dot' to also write one DOT file per cluster")
      ->check(CLI::IsMember({"json", "dot"}));

  DisengagementArgs dis;
  auto* c_dis = app.add_subcommand("disengagement", "Find packages that left the supply chain");
  c_dis->add_option("--db", dis.db, "Dependency db")->required();
  c_dis->add_option("--input", dis.input, "Graph JSON")->required();
  c_dis->add_option("--out", dis.out, "Output directory")->required();
  c_dis->add_flag("--include-prereleases,!--final-only", dis.include_prereleases,
                  "Count prereleases when finding the latest version (default on)");

  ReportArgs report;
  std::optional<double> threshold;
  auto* c_report = app.add_subcommand("report", "Consolidated summary of a supply chain");
  c_report->add_option("--db", report.db, "Dependency db");
  c_report->add_option("--input", report.input, "Graph JSON");
  c_report->add_option("--downloads", report.downloads, "CSV of monthly downloads (package,downloads)");
  c_report->add_option("--popularity-threshold", threshold, "Explicit download threshold (default: ecosystem mean)");
  c_report->add_option("--sections", report.sections, "Comma-separated: graph,shapes,popularity,disengagement")
      ->delimiter(',')
      ->check(CLI::IsMember({"graph", "shapes", "popularity", "disengagement"}));
  c_report->add_option("--format", report.format, "json or md")->check(CLI::IsMember({"json", "md"}));
  c_report->add_option("--out", report.out, "Output file (default stdout)");
  c_report->add_option("--rng-seed", report.rng_seed, "Random seed for clustering");
  c_report->add_option("--resolution", report.resolution, "Modularity resolution")->check(CLI::PositiveNumber);
  c_report->add_flag("--include-prereleases,!--final-only", report.include_prereleases,
                     "Count prereleases when finding the latest version (default on)");

  ExportArgs exp;
  auto* c_export = app.add_subcommand("export", "Convert a graph JSON to another format");
  c_export->add_option("--input", exp.input, "Graph JSON")->required();
  c_export->add_option("--format", exp.format, "json, edge-csv, dot or graphml")->required();
  c_export->add_option("--out", exp.out, "Output file (default stdout)");
  c_export->add_flag("--stable", exp.stable, "Omit timestamps from outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_build) return cmd_build(build);
    if (*c_clusters) {
      clusters.dot = cluster_format == "dot";
      return cmd_clusters(clusters);
    }
    if (*c_dis) return cmd_disengagement(dis);
    if (*c_report) {
      report.threshold = threshold;
      return cmd_report(report);
    }
    if (*c_export) return cmd_export(exp);
  } catch (const chainforge::UnsupportedFormat& e) {
    log(Level::Error, e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return 1;
  }
  return 2;
}
