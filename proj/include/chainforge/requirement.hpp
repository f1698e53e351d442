#pragma once

// Dependency declarations (PEP 508) and version specifier sets (PEP 440).

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chainforge/version.hpp"

namespace chainforge {

class InvalidName : public std::invalid_argument {
 public:
  explicit InvalidName(const std::string& text)
      : std::invalid_argument("invalid package name '" + text + "'") {}
};

class InvalidRequirement : public std::invalid_argument {
 public:
  InvalidRequirement(std::string text, std::size_t position, const std::string& why);

  const std::string& text() const noexcept { return text_; }
  std::size_t position() const noexcept { return position_; }

 private:
  std::string text_;
  std::size_t position_;
};

enum class SpecOp { Equal, NotEqual, LessEqual, GreaterEqual, Less, Greater, Compatible, Arbitrary };

std::string_view to_string(SpecOp op);

struct Specifier {
  SpecOp op = SpecOp::Equal;
  // Operand as written, without the trailing ".*".
  std::string operand;
  bool wildcard = false;
  // Parsed operand; only `===` may carry an operand that is not a version.
  std::optional<Version> version;

  // Whether this clause alone lets pre-releases through.
  bool admits_prereleases() const;
};

struct SpecifierSet {
  std::vector<Specifier> clauses;
  // Overrides the clause-derived pre-release admission when set.
  std::optional<bool> prereleases;

  bool admits_prereleases() const;
  bool empty() const noexcept { return clauses.empty(); }
};

struct Marker {
  std::string text;
  bool extra_gated = false;
};

struct Requirement {
  std::string name;
  std::vector<std::string> extras;  // sorted, unique, normalized
  SpecifierSet specifiers;
  std::optional<std::string> url;
  std::optional<Marker> marker;

  bool extra_gated() const noexcept { return marker && marker->extra_gated; }
};

// Canonical package name: lowercase with runs of "-", "_", "." collapsed to "-".
std::string normalize_name(std::string_view text);

Specifier parse_specifier(std::string_view text);
SpecifierSet parse_specifier_set(std::string_view text);
Requirement parse_requirement(std::string_view text);

std::string to_string(const Specifier& s);
std::string to_string(const SpecifierSet& s);

// Single clause, without the set-level pre-release gate.
bool clause_matches(const Specifier& s, const Version& v);
bool matches(const SpecifierSet& s, const Version& v);

// Candidates accepted by `s`, ascending.
std::vector<Version> satisfying_versions(const SpecifierSet& s, std::span<const Version> candidates);

}  // namespace chainforge
