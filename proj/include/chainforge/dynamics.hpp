#pragma once

// Ecosystem dynamics: packages leaving a supply chain, quarterly trends,
// download-based popularity and the statistical tests used to compare
// groups of packages.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chainforge/chain.hpp"
#include "chainforge/registry.hpp"
#include "chainforge/timestamp.hpp"
#include "chainforge/version.hpp"

namespace chainforge {

// The graph does not belong to the registry it is analysed against.
class InputMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DisengagementOptions {
  // When false, "latest" considers final releases only (falling back to all
  // releases for packages that never had a final one).
  bool include_prereleases = true;
};

struct DisengagementRecord {
  std::string package;
  Version v_sc;    // latest version in the chain
  Version v_pypi;  // latest version in the registry
  Version event_version;  // first release after v_sc
  std::optional<Timestamp> event_time;
  std::string quarter;  // "YYYYQn" or "unknown"
};

enum class Engagement { Current, Disengaged, Ahead };

// Engagement of every non-seed node. Ahead only occurs when prereleases are
// excluded and the chain holds a prerelease newer than the latest final.
std::map<std::string, Engagement> classify_engagement(const SupplyChainGraph& g, const Registry& r,
                                                      const DisengagementOptions& options = {});

// Sorted by package name.
std::vector<DisengagementRecord> detect_disengaged(const SupplyChainGraph& g, const Registry& r,
                                                   const DisengagementOptions& options = {});

struct QuarterlyTrend {
  std::vector<std::pair<std::string, std::size_t>> quarters;  // contiguous, ascending
  std::size_t unknown = 0;
};

QuarterlyTrend quarterly_trend(std::span<const DisengagementRecord> records);

std::string disengagement_report_json(std::span<const DisengagementRecord> records, const QuarterlyTrend& trend,
                                      const std::string& registry_hash, const DisengagementOptions& options);

struct DownloadsTable {
  std::map<std::string, std::uint64_t> counts;  // normalized names
  std::optional<std::pair<std::string, std::string>> window;

  std::uint64_t downloads(const std::string& package) const;
};

// CSV "package,downloads" with an optional header row. Repeated packages
// (after name normalization) are summed. Throws FormatError.
DownloadsTable parse_downloads_csv(std::istream& in);

struct PopularityRule {
  enum class Kind { EcosystemMean, Explicit };
  Kind kind = Kind::EcosystemMean;
  double threshold = 0.0;  // Explicit only

  static PopularityRule ecosystem_mean() { return {}; }
  static PopularityRule explicit_threshold(double t) { return {Kind::Explicit, t}; }
};

double popularity_threshold(const DownloadsTable& d, const PopularityRule& rule);

// Members whose downloads are strictly above the threshold, sorted.
std::vector<std::string> popular_packages(std::span<const std::string> members, const DownloadsTable& d,
                                          const PopularityRule& rule);

class EmptySample : public std::invalid_argument {
 public:
  EmptySample() : std::invalid_argument("sample is empty") {}
};

class InvalidP : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidCounts : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Greater: the first sample tends to be larger.
enum class Alternative { TwoSided, Greater, Less };

struct MannWhitneyResult {
  double u_a = 0.0;
  double u_b = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

// Exact null distribution (ties respected) when n_a * n_b <= 400, otherwise
// the tie-corrected normal approximation with continuity correction.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 Alternative alternative = Alternative::TwoSided);

std::vector<double> holm_bonferroni(std::span<const double> p_values);

struct ZTestResult {
  double z = 0.0;
  double p_value = 1.0;
};

// Pooled two-proportion z-test of x1/n1 against x2/n2.
ZTestResult proportion_z_test(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2,
                              Alternative alternative = Alternative::Greater);

}  // namespace chainforge
