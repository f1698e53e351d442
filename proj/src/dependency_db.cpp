#include <algorithm>
#include <cstring>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "chainforge/registry.hpp"
#include "chainforge/requirement.hpp"

namespace chainforge {

namespace {

using Row = DependencyDb::Row;

bool row_less(const Row& a, const Row& b) {
  if (a.key() != b.key()) return a.key() < b.key();
  return a.extra_gated < b.extra_gated;
}

struct Shard {
  std::vector<Row> rows;
  DbStats stats;
};

// Resolves every requirement of the releases of packages [first, last).
Shard resolve_range(const Registry& reg, const std::vector<std::vector<Version>>& versions,
                    const DbOptions& options, std::size_t first, std::size_t last) {
  Shard shard;
  std::unordered_map<std::string, std::optional<Requirement>> cache;
  const auto& packages = reg.packages();
  for (std::size_t d = first; d < last; ++d) {
    const auto& releases = packages[d].releases;
    for (std::size_t j = 0; j < releases.size(); ++j) {
      for (const auto& text : releases[j].requires_dist) {
        ++shard.stats.requirements;
        auto [it, inserted] = cache.try_emplace(text);
        if (inserted) {
          try {
            it->second = parse_requirement(text);
          } catch (const InvalidRequirement&) {
            it->second.reset();
          }
        }
        if (!it->second) {
          ++shard.stats.skipped_requirements;
          continue;
        }
        const Requirement& req = *it->second;
        auto up = reg.find(req.name);
        if (!up) {
          ++shard.stats.unknown_packages;
          continue;
        }
        const bool gated = req.extra_gated();
        if (gated && !options.include_extra_gated) {
          ++shard.stats.excluded_extra_gated;
          continue;
        }
        const auto& candidates = versions[*up];
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          if (*up == d && i == j) continue;  // a release never depends on itself
          if (matches(req.specifiers, candidates[i])) {
            shard.rows.push_back(Row{static_cast<std::uint32_t>(*up), static_cast<std::uint32_t>(i),
                                     static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(j),
                                     static_cast<std::uint8_t>(gated)});
          }
        }
      }
    }
  }
  return shard;
}

// Duplicate edges from several requirements on the same package collapse;
// the edge is extra-gated only if every contributing requirement was.
void canonicalize(std::vector<Row>& rows) {
  std::sort(rows.begin(), rows.end(), row_less);
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.key() == b.key(); }),
             rows.end());
}

// --- binary persistence -----------------------------------------------------

constexpr char kMagic[4] = {'C', 'F', 'D', 'B'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw FormatError("truncated dependency db '" + path_ + "'");
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ull << 32)) throw FormatError("corrupt dependency db '" + path_ + "'");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("truncated dependency db '" + path_ + "'");
    return s;
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

DependencyDb::DependencyDb(std::shared_ptr<const Registry> registry, std::vector<Row> rows,
                           DbOptions options, DbStats stats)
    : registry_(std::move(registry)), rows_(std::move(rows)), options_(options), stats_(stats) {
  by_down_.resize(rows_.size());
  for (std::uint32_t i = 0; i < by_down_.size(); ++i) by_down_[i] = i;
  std::sort(by_down_.begin(), by_down_.end(), [this](std::uint32_t a, std::uint32_t b) {
    const Row& x = rows_[a];
    const Row& y = rows_[b];
    return std::tie(x.down_pkg, x.down_rel, x.up_pkg, x.up_rel) <
           std::tie(y.down_pkg, y.down_rel, y.up_pkg, y.up_rel);
  });
}

std::span<const Row> DependencyDb::rows_for_upstream(std::uint32_t pkg, std::uint32_t rel) const {
  auto lo = std::lower_bound(rows_.begin(), rows_.end(), std::pair{pkg, rel},
                             [](const Row& r, const std::pair<std::uint32_t, std::uint32_t>& k) {
                               return std::tie(r.up_pkg, r.up_rel) < std::tie(k.first, k.second);
                             });
  auto hi = std::upper_bound(lo, rows_.end(), std::pair{pkg, rel},
                             [](const std::pair<std::uint32_t, std::uint32_t>& k, const Row& r) {
                               return std::tie(k.first, k.second) < std::tie(r.up_pkg, r.up_rel);
                             });
  return {lo, hi};
}

std::vector<Row> DependencyDb::rows_for_downstream(std::uint32_t pkg, std::uint32_t rel) const {
  auto lo = std::lower_bound(by_down_.begin(), by_down_.end(), std::pair{pkg, rel},
                             [this](std::uint32_t i, const std::pair<std::uint32_t, std::uint32_t>& k) {
                               return std::tie(rows_[i].down_pkg, rows_[i].down_rel) <
                                      std::tie(k.first, k.second);
                             });
  std::vector<Row> out;
  for (; lo != by_down_.end() && rows_[*lo].down_pkg == pkg && rows_[*lo].down_rel == rel; ++lo) {
    out.push_back(rows_[*lo]);
  }
  return out;
}

DepRecord DependencyDb::materialize(const Row& row) const {
  const auto& pkgs = registry_->packages();
  return DepRecord{pkgs[row.up_pkg].name, pkgs[row.up_pkg].releases[row.up_rel].version,
                   pkgs[row.down_pkg].name, pkgs[row.down_pkg].releases[row.down_rel].version,
                   row.extra_gated != 0};
}

std::vector<DepRecord> DependencyDb::records() const {
  std::vector<DepRecord> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(materialize(row));
  return out;
}

DependencyDb build_dependency_db(std::shared_ptr<const Registry> registry, const DbOptions& options) {
  const Registry& reg = *registry;
  std::vector<std::vector<Version>> versions;
  versions.reserve(reg.packages().size());
  for (const auto& pkg : reg.packages()) {
    auto& vs = versions.emplace_back();
    for (const auto& rel : pkg.releases) vs.push_back(rel.version);
  }

  const std::size_t n = reg.packages().size();
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(options.threads, n));
  std::vector<Shard> shards(workers);
  if (workers == 1) {
    shards[0] = resolve_range(reg, versions, options, 0, n);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t first = n * w / workers;
      const std::size_t last = n * (w + 1) / workers;
      threads.emplace_back([&, w, first, last] { shards[w] = resolve_range(reg, versions, options, first, last); });
    }
    for (auto& t : threads) t.join();
  }

  std::vector<Row> rows;
  DbStats stats;
  for (auto& shard : shards) {
    rows.insert(rows.end(), shard.rows.begin(), shard.rows.end());
    stats.requirements += shard.stats.requirements;
    stats.skipped_requirements += shard.stats.skipped_requirements;
    stats.unknown_packages += shard.stats.unknown_packages;
    stats.excluded_extra_gated += shard.stats.excluded_extra_gated;
  }
  canonicalize(rows);
  return DependencyDb(std::move(registry), std::move(rows), options, stats);
}

void DependencyDb::save(const std::filesystem::path& path) const {
  // Written beside the target and renamed so readers never see a partial file.
  const auto tmp = std::filesystem::path(path.string() + ".partial");
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.pod(kFormatVersion);
  w.str(registry_->content_hash());
  w.pod<std::uint8_t>(options_.include_extra_gated);
  for (auto v : {stats_.requirements, stats_.skipped_requirements, stats_.unknown_packages,
                 stats_.excluded_extra_gated}) {
    w.pod(v);
  }
  const auto& ingest = registry_->stats();
  for (auto v : {ingest.lines, ingest.distributions, ingest.malformed_lines, ingest.skipped_versions}) {
    w.pod(v);
  }
  w.pod<std::uint64_t>(registry_->packages().size());
  for (const auto& pkg : registry_->packages()) {
    w.str(pkg.name);
    w.pod<std::uint64_t>(pkg.releases.size());
    for (const auto& rel : pkg.releases) {
      w.str(rel.version.raw);
      w.pod<std::uint8_t>(rel.upload_time.has_value());
      w.pod<std::int64_t>(rel.upload_time.value_or(0));
      w.pod<std::uint64_t>(rel.requires_dist.size());
      for (const auto& req : rel.requires_dist) w.str(req);
    }
  }
  w.pod<std::uint64_t>(rows_.size());
  for (const auto& r : rows_) {
    w.pod(r.up_pkg);
    w.pod(r.up_rel);
    w.pod(r.down_pkg);
    w.pod(r.down_rel);
    w.pod(r.extra_gated);
  }
  for (auto i : by_down_) w.pod(i);
  out.close();
  std::error_code ec;
  if (!out) {
    std::filesystem::remove(tmp, ec);
    throw IoError("write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move db into place at '" + path.string() + "'");
  }
}

DependencyDb DependencyDb::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Reader r(in, path.string());
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw FormatError("'" + path.string() + "' is not a dependency db");
  }
  if (r.pod<std::uint32_t>() != kFormatVersion) {
    throw FormatError("unsupported dependency db version in '" + path.string() + "'");
  }
  const std::string stored_hash = r.str();
  DbOptions options;
  options.include_extra_gated = r.pod<std::uint8_t>() != 0;
  DbStats stats;
  stats.requirements = r.pod<std::uint64_t>();
  stats.skipped_requirements = r.pod<std::uint64_t>();
  stats.unknown_packages = r.pod<std::uint64_t>();
  stats.excluded_extra_gated = r.pod<std::uint64_t>();

  auto reg = std::make_shared<Registry>();
  reg->stats_.lines = r.pod<std::uint64_t>();
  reg->stats_.distributions = r.pod<std::uint64_t>();
  reg->stats_.malformed_lines = r.pod<std::uint64_t>();
  reg->stats_.skipped_versions = r.pod<std::uint64_t>();
  const auto npkg = r.pod<std::uint64_t>();
  reg->packages_.reserve(npkg);
  for (std::uint64_t p = 0; p < npkg; ++p) {
    Registry::Package pkg;
    pkg.name = r.str();
    const auto nrel = r.pod<std::uint64_t>();
    for (std::uint64_t k = 0; k < nrel; ++k) {
      ReleaseRecord rec;
      rec.package = pkg.name;
      const std::string text = r.str();
      auto version = try_parse_version(text);
      if (!version) throw FormatError("corrupt version '" + text + "' in '" + path.string() + "'");
      rec.version = std::move(*version);
      const bool has_time = r.pod<std::uint8_t>() != 0;
      const auto t = r.pod<std::int64_t>();
      if (has_time) rec.upload_time = t;
      const auto nreq = r.pod<std::uint64_t>();
      for (std::uint64_t q = 0; q < nreq; ++q) rec.requires_dist.push_back(r.str());
      pkg.releases.push_back(std::move(rec));
    }
    reg->packages_.push_back(std::move(pkg));
  }
  reg->finalize();
  if (reg->content_hash() != stored_hash) {
    throw FormatError("registry hash mismatch in '" + path.string() + "'");
  }

  const auto nrows = r.pod<std::uint64_t>();
  std::vector<Row> rows;
  rows.reserve(nrows);
  for (std::uint64_t i = 0; i < nrows; ++i) {
    Row row{};
    row.up_pkg = r.pod<std::uint32_t>();
    row.up_rel = r.pod<std::uint32_t>();
    row.down_pkg = r.pod<std::uint32_t>();
    row.down_rel = r.pod<std::uint32_t>();
    row.extra_gated = r.pod<std::uint8_t>();
    if (row.up_pkg >= npkg || row.down_pkg >= npkg ||
        row.up_rel >= reg->packages_[row.up_pkg].releases.size() ||
        row.down_rel >= reg->packages_[row.down_pkg].releases.size()) {
      throw FormatError("dangling record in '" + path.string() + "'");
    }
    rows.push_back(row);
  }
  // The stored secondary index is rebuilt by the constructor; skip it.
  for (std::uint64_t i = 0; i < nrows; ++i) r.pod<std::uint32_t>();
  return DependencyDb(std::move(reg), std::move(rows), options, stats);
}

namespace {

std::vector<DependentGroup> group(const Registry& reg, const std::vector<Row>& rows, bool by_down) {
  std::vector<DependentGroup> out;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ends;
  for (const auto& row : rows) {
    ends.emplace_back(by_down ? row.down_pkg : row.up_pkg, by_down ? row.down_rel : row.up_rel);
  }
  std::sort(ends.begin(), ends.end());
  for (const auto& [pkg, rel] : ends) {
    const auto& p = reg.packages()[pkg];
    if (out.empty() || out.back().first != p.name) out.emplace_back(p.name, std::vector<Version>{});
    out.back().second.push_back(p.releases[rel].version);
  }
  return out;
}

std::optional<std::pair<std::uint32_t, std::uint32_t>> locate(const Registry& reg, std::string_view name,
                                                              const Version& version) {
  std::string canonical;
  try {
    canonical = normalize_name(name);
  } catch (const InvalidName&) {
    return std::nullopt;
  }
  auto pkg = reg.find(canonical);
  if (!pkg) return std::nullopt;
  auto rel = reg.release_index(*pkg, version);
  if (!rel) return std::nullopt;
  return std::pair{static_cast<std::uint32_t>(*pkg), static_cast<std::uint32_t>(*rel)};
}

}  // namespace

std::vector<DependentGroup> get_dependents(const DependencyDb& db, std::string_view name,
                                           const Version& version) {
  auto at = locate(db.registry(), name, version);
  if (!at) return {};
  auto span = db.rows_for_upstream(at->first, at->second);
  return group(db.registry(), std::vector<Row>(span.begin(), span.end()), true);
}

std::vector<DependentGroup> get_dependencies(const DependencyDb& db, std::string_view name,
                                             const Version& version) {
  auto at = locate(db.registry(), name, version);
  if (!at) return {};
  return group(db.registry(), db.rows_for_downstream(at->first, at->second), false);
}

}  // namespace chainforge
