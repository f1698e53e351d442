#pragma once

// Random generators shared by unit, property and acceptance tests.
// Everything is driven by an explicit std::mt19937_64 so failures reproduce.

#include <cctype>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chainforge/version.hpp"

namespace chainforge::testing {

using Rng = std::mt19937_64;

inline std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + rng() % (hi - lo + 1);
}

inline bool coin(Rng& rng, int percent) { return static_cast<int>(rng() % 100) < percent; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng() % items.size()];
}

// A structurally random version together with a non-canonical spelling of it.
struct GeneratedVersion {
  Version expected;
  std::string spelling;
};

inline GeneratedVersion random_version(Rng& rng, bool allow_local = true) {
  GeneratedVersion g;
  Version& v = g.expected;
  std::string& s = g.spelling;
  auto sep = [&]() -> std::string {
    static const std::vector<std::string> seps{"", ".", "-", "_"};
    return pick(rng, seps);
  };
  auto cased = [&](std::string word) {
    if (coin(rng, 30)) {
      for (auto& c : word) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return word;
  };

  if (coin(rng, 10)) s += cased("v");
  if (coin(rng, 15)) {
    v.epoch = uniform(rng, 0, 3);
    s += std::to_string(v.epoch) + "!";
  }
  const auto segments = uniform(rng, 1, 4);
  for (std::uint64_t i = 0; i < segments; ++i) {
    v.release.push_back(uniform(rng, 0, 12));
    if (i) s += '.';
    s += std::to_string(v.release.back());
  }
  if (coin(rng, 30)) {
    static const std::vector<std::pair<std::string, PrePhase>> labels{
        {"a", PrePhase::Alpha},   {"alpha", PrePhase::Alpha},         {"b", PrePhase::Beta},
        {"beta", PrePhase::Beta}, {"rc", PrePhase::ReleaseCandidate}, {"c", PrePhase::ReleaseCandidate},
        {"pre", PrePhase::ReleaseCandidate}, {"preview", PrePhase::ReleaseCandidate}};
    const auto& [word, phase] = pick(rng, labels);
    v.pre = PreRelease{phase, uniform(rng, 0, 5)};
    s += sep() + cased(word);
    if (v.pre->number != 0 || coin(rng, 50)) s += sep() + std::to_string(v.pre->number);
  }
  if (coin(rng, 20)) {
    v.post = uniform(rng, 0, 5);
    if (*v.post != 0 && std::isdigit(static_cast<unsigned char>(s.back())) && coin(rng, 25)) {
      s += "-" + std::to_string(*v.post);
    } else {
      static const std::vector<std::string> words{"post", "rev", "r"};
      s += sep() + cased(pick(rng, words));
      if (*v.post != 0 || coin(rng, 50)) s += sep() + std::to_string(*v.post);
    }
  }
  if (coin(rng, 20)) {
    v.dev = uniform(rng, 0, 5);
    s += sep() + cased("dev");
    if (*v.dev != 0 || coin(rng, 50)) s += sep() + std::to_string(*v.dev);
  }
  if (allow_local && coin(rng, 15)) {
    static const std::vector<std::string> words{"ubuntu", "cpu", "cu113", "abc", "x"};
    const auto parts = uniform(rng, 1, 3);
    s += '+';
    for (std::uint64_t i = 0; i < parts; ++i) {
      if (i) {
        static const std::vector<std::string> local_seps{".", "-", "_"};
        s += pick(rng, local_seps);
      }
      if (coin(rng, 50)) {
        const auto n = uniform(rng, 0, 20);
        v.local.emplace_back(n);
        s += std::to_string(n);
      } else {
        const auto& w = pick(rng, words);
        v.local.emplace_back(w);
        s += cased(w);
      }
    }
  }
  v.raw = s;
  return g;
}

// A final (non pre-release) version with a small release tuple, so that
// random candidates and operands collide often.
inline Version small_version(Rng& rng, int prerelease_percent = 15) {
  Version v;
  const auto segments = uniform(rng, 1, 3);
  for (std::uint64_t i = 0; i < segments; ++i) v.release.push_back(uniform(rng, 0, 3));
  if (coin(rng, prerelease_percent)) {
    v.pre = PreRelease{static_cast<PrePhase>(uniform(rng, 0, 2)), uniform(rng, 0, 2)};
  }
  if (coin(rng, 8)) v.post = uniform(rng, 0, 2);
  if (coin(rng, prerelease_percent / 2)) v.dev = uniform(rng, 0, 2);
  v.raw = normalize(v);
  return v;
}

}  // namespace chainforge::testing

#include "chainforge/requirement.hpp"

namespace chainforge::testing {

inline Specifier random_specifier(Rng& rng) {
  static const std::vector<SpecOp> ops{SpecOp::Equal,   SpecOp::NotEqual, SpecOp::LessEqual,
                                       SpecOp::GreaterEqual, SpecOp::Less, SpecOp::Greater,
                                       SpecOp::Compatible};
  Specifier s;
  s.op = pick(rng, ops);
  Version operand = small_version(rng, 10);
  if (s.op == SpecOp::Compatible && operand.release.size() < 2) operand.release.push_back(uniform(rng, 0, 3));
  if ((s.op == SpecOp::Equal || s.op == SpecOp::NotEqual) && coin(rng, 30)) {
    operand = operand.base_version();
    s.wildcard = true;
  }
  operand.raw = normalize(operand);
  s.operand = operand.raw;
  s.version = operand;
  return s;
}

inline SpecifierSet random_specifier_set(Rng& rng) {
  SpecifierSet set;
  const auto n = uniform(rng, 0, 3);
  for (std::uint64_t i = 0; i < n; ++i) set.clauses.push_back(random_specifier(rng));
  return set;
}

}  // namespace chainforge::testing

#include "json.hpp"

namespace chainforge::testing {

struct RegistryShape {
  int max_packages = 20;
  int max_versions = 10;
  int max_requirements = 4;
};

// JSON Lines for a random registry. Names are spelled in non-canonical
// variants, some lines are duplicates of a version with different
// requirements, and a few requirement strings are broken or point at
// unknown packages.
inline std::vector<std::string> random_registry_lines(Rng& rng, const RegistryShape& shape = {}) {
  const int npkg = static_cast<int>(uniform(rng, 1, shape.max_packages));
  std::vector<std::string> lines;
  auto spelled = [&](int p) {
    static const std::vector<std::string> forms{"pkg-", "Pkg_", "PKG.", "pkg--"};
    return pick(rng, forms) + std::to_string(p);
  };
  for (int p = 0; p < npkg; ++p) {
    const int nver = static_cast<int>(uniform(rng, 1, shape.max_versions));
    std::vector<std::string> seen;
    for (int k = 0; k < nver; ++k) {
      Version v = small_version(rng, 15);
      const std::string text = normalize(v);
      const int copies = coin(rng, 10) ? 2 : 1;
      for (int c = 0; c < copies; ++c) {
        nlohmann::json line;
        line["name"] = spelled(p);
        line["version"] = text;
        line["upload_time"] = "2020-0" + std::to_string(uniform(rng, 1, 9)) + "-1" +
                              std::to_string(uniform(rng, 0, 9)) + "T00:00:00Z";
        const auto nreq = uniform(rng, 0, shape.max_requirements);
        if (nreq == 0 && coin(rng, 50)) {
          line["requires_dist"] = nullptr;
        } else {
          nlohmann::json reqs = nlohmann::json::array();
          for (std::uint64_t r = 0; r < nreq; ++r) {
            std::string req;
            if (coin(rng, 5)) {
              req = "broken (>=";
            } else {
              const int target = coin(rng, 5) ? npkg + 7 : static_cast<int>(uniform(rng, 0, npkg - 1));
              req = spelled(target);
              const auto spec = random_specifier_set(rng);
              if (!spec.empty()) req += coin(rng, 50) ? " (" + to_string(spec) + ")" : to_string(spec);
              if (coin(rng, 20)) req += "; extra == 'gpu'";
              else if (coin(rng, 10)) req += "; python_version >= '3.6'";
            }
            reqs.push_back(req);
          }
          line["requires_dist"] = reqs;
        }
        lines.push_back(line.dump());
      }
    }
  }
  if (coin(rng, 20)) lines.push_back("{not json");
  if (coin(rng, 20)) lines.push_back(R"({"name": "x", "version": "not a version", "requires_dist": null})");
  return lines;
}

}  // namespace chainforge::testing
