#include "chainforge/requirement.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "generators.hpp"
#include "oracles.hpp"

namespace chainforge {
namespace {

bool m(std::string_view spec, std::string_view version) {
  return matches(parse_specifier_set(spec), parse_version(version));
}

std::vector<std::string> texts(const std::vector<Version>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs) out.push_back(normalize(v));
  return out;
}

TEST(NormalizeName, Examples) {
  EXPECT_EQ(normalize_name("torch"), "torch");
  EXPECT_EQ(normalize_name("Django__Pkg.Name"), "django-pkg-name");
  EXPECT_THROW(normalize_name(""), InvalidName);
  EXPECT_THROW(normalize_name("-leading"), InvalidName);
  EXPECT_THROW(normalize_name("bad name"), InvalidName);
}

TEST(NormalizeName, Idempotent) {
  for (auto name : {"A.b_C", "x---y", "Foo.Bar", "tensorflow_gpu", "z"}) {
    const auto once = normalize_name(name);
    EXPECT_EQ(normalize_name(once), once);
  }
}

TEST(ParseRequirement, ParenthesizedSpecifier) {
  const auto r = parse_requirement("torch (>=1.4.0)");
  EXPECT_EQ(r.name, "torch");
  ASSERT_EQ(r.specifiers.clauses.size(), 1u);
  EXPECT_EQ(r.specifiers.clauses[0].op, SpecOp::GreaterEqual);
  EXPECT_EQ(r.specifiers.clauses[0].operand, "1.4.0");
  EXPECT_FALSE(r.marker);
  EXPECT_FALSE(r.extra_gated());
}

TEST(ParseRequirement, ExtraGatedMarker) {
  const auto r = parse_requirement("tensorflow-gpu (>=2.0,<3.0) ; extra == 'gpu'");
  EXPECT_EQ(r.name, "tensorflow-gpu");
  EXPECT_EQ(r.specifiers.clauses.size(), 2u);
  ASSERT_TRUE(r.marker);
  EXPECT_EQ(r.marker->text, "extra == 'gpu'");
  EXPECT_TRUE(r.extra_gated());
}

TEST(ParseRequirement, EnvironmentMarkerOnly) {
  const auto r = parse_requirement("torch; python_version >= '3.6'");
  EXPECT_EQ(r.name, "torch");
  EXPECT_TRUE(r.specifiers.empty());
  ASSERT_TRUE(r.marker);
  EXPECT_EQ(r.marker->text, "python_version >= '3.6'");
  EXPECT_FALSE(r.extra_gated());
}

TEST(ParseRequirement, ExtrasAndBareSpecifiers) {
  const auto r = parse_requirement("Foo_Bar[Security, socks,security] >=2.8.1, ==2.8.*");
  EXPECT_EQ(r.name, "foo-bar");
  EXPECT_EQ(r.extras, (std::vector<std::string>{"security", "socks"}));
  ASSERT_EQ(r.specifiers.clauses.size(), 2u);
  EXPECT_TRUE(r.specifiers.clauses[1].wildcard);
  EXPECT_EQ(to_string(r.specifiers), ">=2.8.1,==2.8.*");
}

TEST(ParseRequirement, ExtraInsideStringIsNotAVariable) {
  EXPECT_FALSE(parse_requirement("a; sys_platform == 'extra'").extra_gated());
  EXPECT_TRUE(parse_requirement("a; \"x\" == extra or os_name == 'nt'").extra_gated());
}

TEST(ParseRequirement, UrlReference) {
  const auto r = parse_requirement("pip @ https://example.com/pip-1.0.zip ; extra == 'x'");
  EXPECT_EQ(r.name, "pip");
  ASSERT_TRUE(r.url);
  EXPECT_EQ(*r.url, "https://example.com/pip-1.0.zip");
  EXPECT_TRUE(r.extra_gated());
}

TEST(ParseRequirement, Errors) {
  for (auto bad : {"", "(>=1.0)", "foo (>=1.0", "foo >=", "foo >=1.0.*", "foo ~=1",
                   "foo <1.0+local", "foo ==1.0a1.*", "foo; ", "foo; extra == 'x", "foo bar"}) {
    SCOPED_TRACE(bad);
    EXPECT_THROW(parse_requirement(bad), InvalidRequirement);
  }
  try {
    parse_requirement("foo (>=1.0");
  } catch (const InvalidRequirement& e) {
    EXPECT_EQ(e.position(), 10u);
  }
}

TEST(Matches, Examples) {
  EXPECT_TRUE(m("==1.0", "1.0"));
  EXPECT_TRUE(m("~=2.2", "2.10"));
  EXPECT_FALSE(m("~=2.2", "3.0"));
  EXPECT_FALSE(m(">=1.0", "1.1rc1"));
}

TEST(Matches, ReferenceSemantics) {
  // Equality, padding and locals.
  EXPECT_TRUE(m("==2", "2.0"));
  EXPECT_TRUE(m("==2.0.0", "2.0"));
  EXPECT_TRUE(m("==2.*", "2.0"));
  EXPECT_TRUE(m("==2.0.*", "2.0"));
  EXPECT_TRUE(m("==2.0", "2.0+deadbeef"));
  EXPECT_FALSE(m("==2.0+deadbeef", "2.0"));
  EXPECT_TRUE(m("==2.0+deadbeef", "2.0+deadbeef"));
  EXPECT_TRUE(m("==2.0.*", "2.0+deadbeef"));
  EXPECT_FALSE(m("==2.0.*", "2.1"));
  EXPECT_FALSE(m("!=2.0.*", "2.0.5"));
  EXPECT_TRUE(m("!=2.0.*", "2.1"));
  EXPECT_TRUE(m("==1!2.*", "1!2.3"));
  EXPECT_FALSE(m("==1!2.*", "2.3"));
  // Exclusive bounds.
  EXPECT_TRUE(m(">1.0", "2.0"));
  EXPECT_FALSE(m(">2", "2.0.post1"));
  EXPECT_TRUE(m(">2.0.post0", "2.0.post1"));
  EXPECT_FALSE(m(">2", "2.0+local"));
  EXPECT_TRUE(m(">=2", "2.0+local"));
  EXPECT_TRUE(m("<=2", "2.0+local"));
  EXPECT_FALSE(m("<1.0", "1.0"));
  // Compatible release.
  EXPECT_TRUE(m("~=1.4.5", "1.4.6"));
  EXPECT_FALSE(m("~=1.4.5", "1.5"));
  EXPECT_FALSE(m("~=1.4.5", "1.4.4"));
  EXPECT_TRUE(m("~=2.2.post3", "2.3"));
  // Arbitrary equality is textual.
  EXPECT_TRUE(m("===1.0", "1.0"));
  EXPECT_FALSE(m("===1.0", "1.0.0"));
}

TEST(Matches, PrereleaseAdmission) {
  EXPECT_TRUE(m("==1.0rc1", "1.0rc1"));
  EXPECT_TRUE(m(">=1.0rc1", "1.0rc2"));
  EXPECT_TRUE(m(">=1.0a1", "1.1.dev3"));
  EXPECT_FALSE(m("<1.0rc2", "1.0rc1"));  // "<" never admits on its own
  EXPECT_FALSE(m("", "1.0a1"));
  EXPECT_TRUE(m("", "1.0"));
  SpecifierSet s = parse_specifier_set(">=1.0");
  s.prereleases = true;
  EXPECT_TRUE(matches(s, parse_version("1.1rc1")));
}

TEST(SatisfyingVersions, Examples) {
  auto parse_all = [](std::initializer_list<std::string_view> xs) {
    std::vector<Version> out;
    for (auto x : xs) out.push_back(parse_version(x));
    return out;
  };
  const auto c1 = parse_all({"2.0", "0.9", "1.5", "2.0rc1", "1.0"});
  EXPECT_EQ(texts(satisfying_versions(parse_specifier_set(">=1.0,<2.0"), c1)),
            (std::vector<std::string>{"1.0", "1.5"}));
  EXPECT_EQ(texts(satisfying_versions(SpecifierSet{}, parse_all({"2.0", "1.0"}))),
            (std::vector<std::string>{"1.0", "2.0"}));
  EXPECT_TRUE(satisfying_versions(parse_specifier_set("<0.1"), parse_all({"1.0"})).empty());
}

TEST(SpecifierProperty, SatisfyingEqualsFilter) {
  testing::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto s = testing::random_specifier_set(rng);
    std::vector<Version> candidates;
    const auto n = testing::uniform(rng, 0, 12);
    for (std::uint64_t k = 0; k < n; ++k) candidates.push_back(testing::small_version(rng, 25));
    std::vector<Version> expected;
    for (const auto& v : candidates) {
      EXPECT_EQ(matches(s, v), testing::reference_matches(s, v)) << to_string(s) << " vs " << v.raw;
      if (testing::reference_matches(s, v)) expected.push_back(v);
    }
    std::stable_sort(expected.begin(), expected.end());
    EXPECT_EQ(texts(satisfying_versions(s, candidates)), texts(expected)) << to_string(s);
  }
}

TEST(SpecifierProperty, EqualityAndInequality) {
  testing::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Version v = testing::small_version(rng, 0);
    const auto text = normalize(v);
    EXPECT_TRUE(m("==" + text, text)) << text;
    EXPECT_FALSE(m("!=" + text, text)) << text;
  }
}

TEST(SpecifierProperty, CompatibleExpansion) {
  testing::Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const auto x = testing::uniform(rng, 0, 3);
    const auto y = testing::uniform(rng, 0, 3);
    const Version v = testing::small_version(rng, 20);
    const std::string xy = std::to_string(x) + "." + std::to_string(y);
    const bool lhs = m("~=" + xy, v.raw);
    const bool rhs = m(">=" + xy, v.raw) && m("==" + std::to_string(x) + ".*", v.raw);
    EXPECT_EQ(lhs, rhs) << xy << " vs " << v.raw;
  }
}

TEST(SpecifierProperty, RoundTripText) {
  testing::Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const auto s = testing::random_specifier_set(rng);
    const auto text = to_string(s);
    EXPECT_EQ(to_string(parse_specifier_set(text)), text);
  }
}

}  // namespace
}  // namespace chainforge
