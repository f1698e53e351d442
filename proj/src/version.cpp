#include "chainforge/version.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>

namespace chainforge {

InvalidVersion::InvalidVersion(std::string text, std::size_t position)
    : std::invalid_argument("invalid version '" + text + "' at position " +
                            std::to_string(position)),
      text_(std::move(text)),
      position_(position) {}

namespace {

bool is_sep(char c) { return c == '-' || c == '_' || c == '.'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_digit(c) || (c >= 'a' && c <= 'z'); }

// Cursor over the lowercased, trimmed input. Positions reported in errors
// refer to the original (untrimmed) text.
class Scanner {
 public:
  Scanner(std::string text, std::size_t offset) : s_(std::move(text)), offset_(offset) {}

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  std::size_t pos() const { return pos_; }
  void reset(std::size_t p) { pos_ = p; }

  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  bool accept_sep() {
    if (!is_sep(peek())) return false;
    ++pos_;
    return true;
  }
  bool accept_word(std::string_view w) {
    if (s_.compare(pos_, w.size(), w) != 0) return false;
    pos_ += w.size();
    return true;
  }

  std::optional<std::uint64_t> number(const std::string& raw) {
    if (!is_digit(peek())) return std::nullopt;
    std::uint64_t value = 0;
    const std::size_t start = pos_;
    while (is_digit(peek())) {
      const auto digit = static_cast<std::uint64_t>(s_[pos_] - '0');
      if (value > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) {
        throw InvalidVersion(raw, offset_ + start);
      }
      value = value * 10 + digit;
      ++pos_;
    }
    return value;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::string s_;
  std::size_t offset_;
  std::size_t pos_ = 0;
};

struct Label {
  std::string_view word;
  PrePhase phase;
};

// Longer spellings first so that "alpha" wins over "a", "preview" over "pre".
constexpr std::array<Label, 8> kPreLabels{{
    {"alpha", PrePhase::Alpha},
    {"a", PrePhase::Alpha},
    {"beta", PrePhase::Beta},
    {"b", PrePhase::Beta},
    {"preview", PrePhase::ReleaseCandidate},
    {"pre", PrePhase::ReleaseCandidate},
    {"rc", PrePhase::ReleaseCandidate},
    {"c", PrePhase::ReleaseCandidate},
}};

constexpr std::array<std::string_view, 3> kPostLabels{"post", "rev", "r"};

int cmp_u64(std::uint64_t a, std::uint64_t b) { return a < b ? -1 : (a > b ? 1 : 0); }

int compare_release(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t x = i < a.size() ? a[i] : 0;
    const std::uint64_t y = i < b.size() ? b[i] : 0;
    if (int c = cmp_u64(x, y)) return c;
  }
  return 0;
}

// Rank of the pre-release slot: dev-only releases sort before any
// pre-release, finals after all of them.
int compare_pre(const Version& a, const Version& b) {
  auto rank = [](const Version& v) {
    if (!v.pre && !v.post && v.dev) return 0;
    if (!v.pre) return 2;
    return 1;
  };
  const int ra = rank(a);
  const int rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra != 1) return 0;
  if (a.pre->phase != b.pre->phase) return a.pre->phase < b.pre->phase ? -1 : 1;
  return cmp_u64(a.pre->number, b.pre->number);
}

int compare_post(const Version& a, const Version& b) {
  if (a.post.has_value() != b.post.has_value()) return a.post ? 1 : -1;
  return a.post ? cmp_u64(*a.post, *b.post) : 0;
}

int compare_dev(const Version& a, const Version& b) {
  if (a.dev.has_value() != b.dev.has_value()) return a.dev ? -1 : 1;
  return a.dev ? cmp_u64(*a.dev, *b.dev) : 0;
}

// Numeric segments outrank alphanumeric ones; a strict prefix sorts first.
int compare_local(const std::vector<LocalSegment>& a, const std::vector<LocalSegment>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool an = std::holds_alternative<std::uint64_t>(a[i]);
    const bool bn = std::holds_alternative<std::uint64_t>(b[i]);
    if (an != bn) return an ? 1 : -1;
    if (an) {
      if (int c = cmp_u64(std::get<std::uint64_t>(a[i]), std::get<std::uint64_t>(b[i]))) return c;
    } else {
      const int c = std::get<std::string>(a[i]).compare(std::get<std::string>(b[i]));
      if (c != 0) return c < 0 ? -1 : 1;
    }
  }
  return cmp_u64(a.size(), b.size());
}

int compare_impl(const Version& a, const Version& b) {
  if (int c = cmp_u64(a.epoch, b.epoch)) return c;
  if (int c = compare_release(a.release, b.release)) return c;
  if (int c = compare_pre(a, b)) return c;
  if (int c = compare_post(a, b)) return c;
  if (int c = compare_dev(a, b)) return c;
  return compare_local(a.local, b.local);
}

}  // namespace

Version parse_version(std::string_view text) {
  const std::string raw(text);
  std::size_t first = 0;
  std::size_t last = text.size();
  while (first < last && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(text[last - 1]))) --last;
  std::string lowered(text.substr(first, last - first));
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  Scanner sc(std::move(lowered), first);
  auto fail = [&]() -> InvalidVersion { return InvalidVersion(raw, sc.offset() + sc.pos()); };

  Version v;
  v.raw = raw;
  sc.accept('v');

  // Epoch and the first release segment share a leading number.
  auto lead = sc.number(raw);
  if (!lead) throw fail();
  if (sc.accept('!')) {
    v.epoch = *lead;
    lead = sc.number(raw);
    if (!lead) throw fail();
  }
  v.release.push_back(*lead);
  for (;;) {
    const std::size_t mark = sc.pos();
    if (!sc.accept('.')) break;
    auto seg = sc.number(raw);
    if (!seg) {
      sc.reset(mark);
      break;
    }
    v.release.push_back(*seg);
  }

  {
    const std::size_t mark = sc.pos();
    sc.accept_sep();
    bool matched = false;
    for (const auto& label : kPreLabels) {
      if (sc.accept_word(label.word)) {
        matched = true;
        sc.accept_sep();
        v.pre = PreRelease{label.phase, sc.number(raw).value_or(0)};
        break;
      }
    }
    if (!matched) sc.reset(mark);
  }

  {
    const std::size_t mark = sc.pos();
    bool matched = false;
    if (sc.accept('-')) {
      if (auto n = sc.number(raw)) {
        v.post = *n;
        matched = true;
      } else {
        sc.reset(mark);
      }
    }
    if (!matched) {
      sc.accept_sep();
      for (auto word : kPostLabels) {
        if (sc.accept_word(word)) {
          matched = true;
          sc.accept_sep();
          v.post = sc.number(raw).value_or(0);
          break;
        }
      }
      if (!matched) sc.reset(mark);
    }
  }

  {
    const std::size_t mark = sc.pos();
    sc.accept_sep();
    if (sc.accept_word("dev")) {
      sc.accept_sep();
      v.dev = sc.number(raw).value_or(0);
    } else {
      sc.reset(mark);
    }
  }

  if (sc.accept('+')) {
    for (;;) {
      const std::size_t start = sc.pos();
      std::string seg;
      while (is_alnum(sc.peek())) {
        seg.push_back(sc.peek());
        sc.reset(sc.pos() + 1);
      }
      if (seg.empty()) throw fail();
      if (std::all_of(seg.begin(), seg.end(), is_digit)) {
        Scanner digits(seg, sc.offset() + start);
        v.local.emplace_back(*digits.number(raw));
      } else {
        v.local.emplace_back(std::move(seg));
      }
      if (!sc.accept_sep()) break;
    }
  }

  if (!sc.at_end()) throw fail();
  return v;
}

std::optional<Version> try_parse_version(std::string_view text) {
  try {
    return parse_version(text);
  } catch (const InvalidVersion&) {
    return std::nullopt;
  }
}

std::string normalize(const Version& v) {
  std::string out;
  if (v.epoch != 0) out += std::to_string(v.epoch) + "!";
  for (std::size_t i = 0; i < v.release.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(v.release[i]);
  }
  if (v.pre) {
    switch (v.pre->phase) {
      case PrePhase::Alpha: out += 'a'; break;
      case PrePhase::Beta: out += 'b'; break;
      case PrePhase::ReleaseCandidate: out += "rc"; break;
    }
    out += std::to_string(v.pre->number);
  }
  if (v.post) out += ".post" + std::to_string(*v.post);
  if (v.dev) out += ".dev" + std::to_string(*v.dev);
  for (std::size_t i = 0; i < v.local.size(); ++i) {
    out += i ? '.' : '+';
    std::visit(
        [&out](const auto& seg) {
          if constexpr (std::is_same_v<std::decay_t<decltype(seg)>, std::string>) {
            out += seg;
          } else {
            out += std::to_string(seg);
          }
        },
        v.local[i]);
  }
  return out;
}

Version Version::public_version() const {
  Version out = *this;
  out.local.clear();
  out.raw = normalize(out);
  return out;
}

Version Version::base_version() const {
  Version out;
  out.epoch = epoch;
  out.release = release;
  out.raw = normalize(out);
  return out;
}

std::weak_ordering compare(const Version& a, const Version& b) {
  const int c = compare_impl(a, b);
  if (c < 0) return std::weak_ordering::less;
  if (c > 0) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

bool operator==(const Version& a, const Version& b) { return compare_impl(a, b) == 0; }

std::weak_ordering operator<=>(const Version& a, const Version& b) { return compare(a, b); }

}  // namespace chainforge
