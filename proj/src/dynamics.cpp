#include "chainforge/dynamics.hpp"

#include <algorithm>
#include <charconv>

#include "chainforge/requirement.hpp"
#include "json.hpp"

namespace chainforge {

namespace {

struct Latest {
  const ReleaseRecord* sc = nullptr;
  const ReleaseRecord* pypi = nullptr;
  std::vector<const ReleaseRecord*> candidates;  // ascending
};

Latest latest_versions(const PackageNode& node, const Registry& r, const DisengagementOptions& options) {
  const auto* pkg = r.package(node.name);
  if (!pkg) throw InputMismatch("package '" + node.name + "' is not in the registry");
  Latest out;
  for (const auto& v : node.vs) {
    const auto* rel = r.release(node.name, v);
    if (!rel) throw InputMismatch("version " + normalize(v) + " of '" + node.name + "' is not in the registry");
    if (!out.sc || out.sc->version < rel->version) out.sc = rel;
  }
  if (!out.sc) throw InputMismatch("package '" + node.name + "' has no versions in the chain");
  for (const auto& rel : pkg->releases) {
    if (options.include_prereleases || !rel.version.is_prerelease()) out.candidates.push_back(&rel);
  }
  if (out.candidates.empty()) {
    for (const auto& rel : pkg->releases) out.candidates.push_back(&rel);
  }
  out.pypi = out.candidates.back();
  return out;
}

void check_registry(const SupplyChainGraph& g, const Registry& r) {
  if (!g.registry_hash.empty() && g.registry_hash != r.content_hash()) {
    throw InputMismatch("graph was built from registry " + g.registry_hash + " but the registry is " +
                        r.content_hash());
  }
}

}  // namespace

std::map<std::string, Engagement> classify_engagement(const SupplyChainGraph& g, const Registry& r,
                                                      const DisengagementOptions& options) {
  check_registry(g, r);
  std::map<std::string, Engagement> out;
  for (const auto& [name, node] : g.nodes) {
    if (node.is_seed) continue;
    const auto latest = latest_versions(node, r, options);
    const auto c = compare(latest.sc->version, latest.pypi->version);
    Engagement e = c < 0 ? Engagement::Disengaged : c == 0 ? Engagement::Current : Engagement::Ahead;
    if (e == Engagement::Ahead && options.include_prereleases) {
      throw InputMismatch("chain version of '" + name + "' is newer than every registry version");
    }
    out.emplace(name, e);
  }
  return out;
}

std::vector<DisengagementRecord> detect_disengaged(const SupplyChainGraph& g, const Registry& r,
                                                   const DisengagementOptions& options) {
  std::vector<DisengagementRecord> out;
  for (const auto& [name, state] : classify_engagement(g, r, options)) {
    if (state != Engagement::Disengaged) continue;
    const auto latest = latest_versions(g.nodes.at(name), r, options);
    const auto* next = *std::find_if(latest.candidates.begin(), latest.candidates.end(),
                                     [&](const ReleaseRecord* rel) { return latest.sc->version < rel->version; });
    DisengagementRecord rec;
    rec.package = name;
    rec.v_sc = latest.sc->version;
    rec.v_pypi = latest.pypi->version;
    rec.event_version = next->version;
    rec.event_time = next->upload_time;
    // A later version uploaded before v_sc (a backport line) takes effect
    // no earlier than v_sc itself.
    if (rec.event_time && latest.sc->upload_time) rec.event_time = std::max(*rec.event_time, *latest.sc->upload_time);
    rec.quarter = rec.event_time ? quarter_of(*rec.event_time) : "unknown";
    out.push_back(std::move(rec));
  }
  return out;
}

QuarterlyTrend quarterly_trend(std::span<const DisengagementRecord> records) {
  QuarterlyTrend t;
  std::map<int, std::size_t> counts;
  for (const auto& rec : records) {
    if (!rec.event_time) {
      ++t.unknown;
      continue;
    }
    ++counts[quarter_index(rec.quarter)];
  }
  if (counts.empty()) return t;
  for (int q = counts.begin()->first; q <= counts.rbegin()->first; ++q) {
    auto it = counts.find(q);
    t.quarters.emplace_back(quarter_name(q), it == counts.end() ? 0 : it->second);
  }
  return t;
}

std::string disengagement_report_json(std::span<const DisengagementRecord> records, const QuarterlyTrend& trend,
                                      const std::string& registry_hash, const DisengagementOptions& options) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["params"] = {{"include_prereleases", options.include_prereleases}, {"registry_hash", registry_hash}};
  auto recs = ordered_json::array();
  for (const auto& r : records) {
    ordered_json j;
    j["package"] = r.package;
    j["v_sc"] = normalize(r.v_sc);
    j["v_pypi"] = normalize(r.v_pypi);
    j["event_version"] = normalize(r.event_version);
    j["event_time"] = r.event_time ? ordered_json(format_timestamp(*r.event_time)) : ordered_json();
    j["quarter"] = r.quarter;
    recs.push_back(std::move(j));
  }
  doc["records"] = std::move(recs);
  ordered_json t = ordered_json::object();
  for (const auto& [q, n] : trend.quarters) t[q] = n;
  doc["trend"] = std::move(t);
  doc["unknown_quarter"] = trend.unknown;
  doc["total"] = records.size();
  return doc.dump(2) + "\n";
}

std::uint64_t DownloadsTable::downloads(const std::string& package) const {
  std::string key;
  try {
    key = normalize_name(package);
  } catch (const InvalidName&) {
    return 0;
  }
  auto it = counts.find(key);
  return it == counts.end() ? 0 : it->second;
}

DownloadsTable parse_downloads_csv(std::istream& in) {
  DownloadsTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw FormatError("downloads line " + std::to_string(lineno) + ": expected 'package,downloads'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\"");
      const auto e = s.find_last_not_of(" \t\"");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto name = trim(line.substr(0, comma));
    const auto count = trim(line.substr(comma + 1));
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), value);
    if (ec != std::errc() || ptr != count.data() + count.size() || count.empty()) {
      if (lineno == 1 && t.counts.empty()) continue;  // header
      throw FormatError("downloads line " + std::to_string(lineno) + ": invalid count '" + count + "'");
    }
    std::string key;
    try {
      key = normalize_name(name);
    } catch (const InvalidName&) {
      throw FormatError("downloads line " + std::to_string(lineno) + ": invalid package name '" + name + "'");
    }
    t.counts[key] += value;
  }
  if (in.bad()) throw IoError("read error while reading downloads");
  return t;
}

double popularity_threshold(const DownloadsTable& d, const PopularityRule& rule) {
  if (rule.kind == PopularityRule::Kind::Explicit) return rule.threshold;
  if (d.counts.empty()) return 0.0;
  long double sum = 0;
  for (const auto& [_, n] : d.counts) sum += n;
  return static_cast<double>(sum / static_cast<long double>(d.counts.size()));
}

std::vector<std::string> popular_packages(std::span<const std::string> members, const DownloadsTable& d,
                                          const PopularityRule& rule) {
  const double t = popularity_threshold(d, rule);
  std::vector<std::string> out;
  for (const auto& m : members) {
    if (static_cast<double>(d.downloads(m)) > t) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace chainforge
