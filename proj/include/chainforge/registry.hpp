#pragma once

// Registry of package releases ingested from distribution-metadata dumps,
// and the ecosystem-wide version-level dependency database built from it.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chainforge/timestamp.hpp"
#include "chainforge/version.hpp"

namespace chainforge {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReleaseRecord {
  std::string package;
  Version version;
  std::optional<Timestamp> upload_time;
  // Union over the version's distributions, sorted and unique.
  std::vector<std::string> requires_dist;
};

struct IngestStats {
  std::uint64_t lines = 0;
  std::uint64_t distributions = 0;
  std::uint64_t malformed_lines = 0;
  std::uint64_t skipped_versions = 0;
};

class Registry {
 public:
  struct Package {
    std::string name;
    std::vector<ReleaseRecord> releases;  // ascending by version
  };

  const std::vector<Package>& packages() const noexcept { return packages_; }
  std::optional<std::size_t> find(std::string_view name) const;
  const Package* package(std::string_view name) const;
  const ReleaseRecord* release(std::string_view name, const Version& version) const;
  // Index of `version` within the package's release list.
  std::optional<std::size_t> release_index(std::size_t package, const Version& version) const;

  std::size_t release_count() const noexcept { return release_count_; }
  // Hex SHA-256 over the canonical registry content; independent of
  // input order and partitioning.
  const std::string& content_hash() const noexcept { return hash_; }
  const IngestStats& stats() const noexcept { return stats_; }

 private:
  friend class RegistryBuilder;
  friend class DependencyDb;
  void finalize();

  std::vector<Package> packages_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t release_count_ = 0;
  std::string hash_;
  IngestStats stats_;
};

// Accumulates distribution records; duplicates of a (package, version) are
// merged by requires_dist union and earliest upload time.
class RegistryBuilder {
 public:
  // Returns false when the line was counted as malformed or skipped.
  bool add_line(std::string_view line);
  void add(ReleaseRecord record);
  void merge(RegistryBuilder&& other);
  Registry finish() &&;

  const IngestStats& stats() const noexcept { return stats_; }

 private:
  struct Entry {
    Version version;
    std::string text;
    std::optional<Timestamp> upload_time;
    std::vector<std::string> requires_dist;
  };
  void add_entry(std::string package, Entry entry);

  // package -> entries, merged by version in finish()
  std::unordered_map<std::string, std::vector<Entry>> packages_;
  IngestStats stats_;
  std::uint64_t parsed_json_lines_ = 0;
};

Registry ingest(std::istream& in);
Registry ingest_file(const std::filesystem::path& path);

// Ascending versions of a package; empty for unknown names.
std::vector<Version> get_all_versions(const Registry& r, std::string_view name);

struct DepRecord {
  std::string up_name;
  Version up_version;
  std::string down_name;
  Version down_version;
  bool extra_gated = false;
};

struct DbOptions {
  bool include_extra_gated = true;
  unsigned threads = 1;
};

struct DbStats {
  std::uint64_t requirements = 0;
  std::uint64_t skipped_requirements = 0;
  std::uint64_t unknown_packages = 0;
  std::uint64_t excluded_extra_gated = 0;
};

class DependencyDb {
 public:
  // Registry coordinates: package index and release index within it.
  struct Row {
    std::uint32_t up_pkg;
    std::uint32_t up_rel;
    std::uint32_t down_pkg;
    std::uint32_t down_rel;
    std::uint8_t extra_gated;

    auto key() const { return std::tie(up_pkg, up_rel, down_pkg, down_rel); }
    bool operator==(const Row&) const = default;
  };

  DependencyDb(std::shared_ptr<const Registry> registry, std::vector<Row> rows, DbOptions options,
               DbStats stats);

  const Registry& registry() const noexcept { return *registry_; }
  std::shared_ptr<const Registry> registry_ptr() const noexcept { return registry_; }
  const DbOptions& options() const noexcept { return options_; }
  const DbStats& stats() const noexcept { return stats_; }

  std::size_t size() const noexcept { return rows_.size(); }
  // Sorted by (up_pkg, up_rel, down_pkg, down_rel).
  std::span<const Row> rows() const noexcept { return rows_; }
  // Rows whose upstream endpoint is (pkg, rel); binary search.
  std::span<const Row> rows_for_upstream(std::uint32_t pkg, std::uint32_t rel) const;
  // Rows whose downstream endpoint is (pkg, rel), via the secondary index.
  std::vector<Row> rows_for_downstream(std::uint32_t pkg, std::uint32_t rel) const;

  DepRecord materialize(const Row& row) const;
  std::vector<DepRecord> records() const;

  void save(const std::filesystem::path& path) const;
  static DependencyDb load(const std::filesystem::path& path);

 private:
  std::shared_ptr<const Registry> registry_;
  std::vector<Row> rows_;
  // Row positions sorted by (down_pkg, down_rel, up_pkg, up_rel).
  std::vector<std::uint32_t> by_down_;
  DbOptions options_;
  DbStats stats_;
};

DependencyDb build_dependency_db(std::shared_ptr<const Registry> registry, const DbOptions& options = {});

using DependentGroup = std::pair<std::string, std::vector<Version>>;

// Downstream packages whose releases depend on (name, version), name-sorted.
std::vector<DependentGroup> get_dependents(const DependencyDb& db, std::string_view name,
                                           const Version& version);
// Upstream counterpart served by the secondary index.
std::vector<DependentGroup> get_dependencies(const DependencyDb& db, std::string_view name,
                                             const Version& version);

}  // namespace chainforge
