#pragma once

// Package version values following the PEP 440 grammar: parsing,
// canonical rendering and total ordering.

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chainforge {

class InvalidVersion : public std::invalid_argument {
 public:
  InvalidVersion(std::string text, std::size_t position);

  const std::string& text() const noexcept { return text_; }
  std::size_t position() const noexcept { return position_; }

 private:
  std::string text_;
  std::size_t position_;
};

enum class PrePhase : std::uint8_t { Alpha, Beta, ReleaseCandidate };

struct PreRelease {
  PrePhase phase = PrePhase::Alpha;
  std::uint64_t number = 0;

  bool operator==(const PreRelease&) const = default;
};

// A local version segment is either numeric or a lowercase alphanumeric word.
using LocalSegment = std::variant<std::uint64_t, std::string>;

struct Version {
  std::uint64_t epoch = 0;
  std::vector<std::uint64_t> release;
  std::optional<PreRelease> pre;
  std::optional<std::uint64_t> post;
  std::optional<std::uint64_t> dev;
  std::vector<LocalSegment> local;
  std::string raw;

  bool is_prerelease() const noexcept { return pre.has_value() || dev.has_value(); }
  bool is_postrelease() const noexcept { return post.has_value(); }
  bool is_devrelease() const noexcept { return dev.has_value(); }
  bool has_local() const noexcept { return !local.empty(); }

  // Copy without the local segment.
  Version public_version() const;
  // Copy with only epoch and release.
  Version base_version() const;

  // Equality and ordering are the PEP 440 ones; raw text does not take part.
  friend bool operator==(const Version& a, const Version& b);
  friend std::weak_ordering operator<=>(const Version& a, const Version& b);
};

Version parse_version(std::string_view text);
std::optional<Version> try_parse_version(std::string_view text);

// Canonical text form ("1!2.0rc1.post3.dev4+ubuntu.7").
std::string normalize(const Version& v);

std::weak_ordering compare(const Version& a, const Version& b);

}  // namespace chainforge
