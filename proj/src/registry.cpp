#include "chainforge/registry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <istream>

#include "chainforge/requirement.hpp"
#include "json.hpp"

namespace chainforge {

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry

std::optional<std::size_t> Registry::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Registry::Package* Registry::package(std::string_view name) const {
  auto idx = find(name);
  return idx ? &packages_[*idx] : nullptr;
}

std::optional<std::size_t> Registry::release_index(std::size_t package, const Version& version) const {
  const auto& releases = packages_.at(package).releases;
  auto it = std::lower_bound(releases.begin(), releases.end(), version,
                             [](const ReleaseRecord& r, const Version& v) { return r.version < v; });
  if (it == releases.end() || it->version != version) return std::nullopt;
  return static_cast<std::size_t>(it - releases.begin());
}

const ReleaseRecord* Registry::release(std::string_view name, const Version& version) const {
  auto pkg = find(name);
  if (!pkg) return nullptr;
  auto rel = release_index(*pkg, version);
  return rel ? &packages_[*pkg].releases[*rel] : nullptr;
}

void Registry::finalize() {
  index_.clear();
  release_count_ = 0;
  std::string canonical;
  for (std::size_t i = 0; i < packages_.size(); ++i) {
    const auto& pkg = packages_[i];
    index_.emplace(pkg.name, i);
    release_count_ += pkg.releases.size();
    for (const auto& rel : pkg.releases) {
      canonical += pkg.name;
      canonical += '\n';
      canonical += rel.version.raw;
      canonical += '\n';
      if (rel.upload_time) canonical += std::to_string(*rel.upload_time);
      canonical += '\n';
      for (const auto& req : rel.requires_dist) {
        canonical += req;
        canonical += '\x1f';
      }
      canonical += '\n';
    }
  }
  hash_ = sha256_hex(canonical);
}

// ---------------------------------------------------------------------------
// RegistryBuilder

bool RegistryBuilder::add_line(std::string_view line) {
  if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) return false;
  ++stats_.lines;
  auto doc = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (doc.is_discarded()) {
    ++stats_.malformed_lines;
    return false;
  }
  ++parsed_json_lines_;
  if (!doc.is_object()) {
    ++stats_.malformed_lines;
    return false;
  }
  auto name_it = doc.find("name");
  auto version_it = doc.find("version");
  if (name_it == doc.end() || !name_it->is_string() || version_it == doc.end() ||
      !version_it->is_string()) {
    ++stats_.malformed_lines;
    return false;
  }

  std::string name;
  try {
    name = normalize_name(name_it->get<std::string>());
  } catch (const InvalidName&) {
    ++stats_.malformed_lines;
    return false;
  }

  std::vector<std::string> requires_dist;
  if (auto it = doc.find("requires_dist"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) {
      ++stats_.malformed_lines;
      return false;
    }
    for (const auto& item : *it) {
      if (!item.is_string()) {
        ++stats_.malformed_lines;
        return false;
      }
      requires_dist.push_back(item.get<std::string>());
    }
  }

  std::optional<Timestamp> upload_time;
  if (auto it = doc.find("upload_time"); it != doc.end() && it->is_string()) {
    upload_time = parse_timestamp(it->get<std::string>());
  }

  auto version = try_parse_version(version_it->get<std::string>());
  if (!version) {
    ++stats_.skipped_versions;
    return false;
  }

  ++stats_.distributions;
  Entry entry{*version, normalize(*version), upload_time, std::move(requires_dist)};
  add_entry(std::move(name), std::move(entry));
  return true;
}

void RegistryBuilder::add(ReleaseRecord record) {
  std::string text = normalize(record.version);
  Entry entry{std::move(record.version), std::move(text), record.upload_time,
              std::move(record.requires_dist)};
  add_entry(normalize_name(record.package), std::move(entry));
}

void RegistryBuilder::add_entry(std::string package, Entry entry) {
  packages_[std::move(package)].push_back(std::move(entry));
}

void RegistryBuilder::merge(RegistryBuilder&& other) {
  for (auto& [name, entries] : other.packages_) {
    auto& mine = packages_[name];
    std::move(entries.begin(), entries.end(), std::back_inserter(mine));
  }
  stats_.lines += other.stats_.lines;
  stats_.distributions += other.stats_.distributions;
  stats_.malformed_lines += other.stats_.malformed_lines;
  stats_.skipped_versions += other.stats_.skipped_versions;
  parsed_json_lines_ += other.parsed_json_lines_;
  other.packages_.clear();
}

Registry RegistryBuilder::finish() && {
  if (stats_.lines > 0 && parsed_json_lines_ == 0) {
    throw FormatError("input is not JSON Lines: none of " + std::to_string(stats_.lines) +
                      " lines parsed as JSON");
  }
  Registry reg;
  reg.stats_ = stats_;
  std::vector<std::string> names;
  names.reserve(packages_.size());
  for (const auto& [name, _] : packages_) names.push_back(name);
  std::sort(names.begin(), names.end());

  for (const auto& name : names) {
    auto& entries = packages_[name];
    // Equivalent versions ("1.0" and "1.0.0") collapse into one release;
    // the smallest canonical spelling represents it.
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (auto c = compare(a.version, b.version); c != 0) return c < 0;
      return a.text < b.text;
    });
    Registry::Package pkg;
    pkg.name = name;
    for (std::size_t i = 0; i < entries.size();) {
      std::size_t j = i;
      ReleaseRecord rec;
      rec.package = name;
      rec.version = entries[i].version;
      rec.version.raw = entries[i].text;
      for (; j < entries.size() && entries[j].version == entries[i].version; ++j) {
        const auto& e = entries[j];
        if (e.upload_time && (!rec.upload_time || *e.upload_time < *rec.upload_time)) {
          rec.upload_time = e.upload_time;
        }
        rec.requires_dist.insert(rec.requires_dist.end(), e.requires_dist.begin(), e.requires_dist.end());
      }
      std::sort(rec.requires_dist.begin(), rec.requires_dist.end());
      rec.requires_dist.erase(std::unique(rec.requires_dist.begin(), rec.requires_dist.end()),
                              rec.requires_dist.end());
      pkg.releases.push_back(std::move(rec));
      i = j;
    }
    reg.packages_.push_back(std::move(pkg));
  }
  packages_.clear();
  reg.finalize();
  return reg;
}

Registry ingest(std::istream& in) {
  RegistryBuilder builder;
  std::string line;
  while (std::getline(in, line)) builder.add_line(line);
  if (in.bad()) throw IoError("read error while ingesting metadata");
  return std::move(builder).finish();
}

Registry ingest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return ingest(in);
}

std::vector<Version> get_all_versions(const Registry& r, std::string_view name) {
  std::vector<Version> out;
  std::string canonical;
  try {
    canonical = normalize_name(name);
  } catch (const InvalidName&) {
    return out;
  }
  if (const auto* pkg = r.package(canonical)) {
    for (const auto& rel : pkg->releases) out.push_back(rel.version);
  }
  return out;
}

}  // namespace chainforge
