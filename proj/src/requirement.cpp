#include "chainforge/requirement.hpp"

#include <algorithm>
#include <cctype>

namespace chainforge {

InvalidRequirement::InvalidRequirement(std::string text, std::size_t position, const std::string& why)
    : std::invalid_argument("invalid requirement '" + text + "' at position " +
                            std::to_string(position) + ": " + why),
      text_(std::move(text)),
      position_(position) {}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_name_char(char c) { return is_alnum(c) || c == '-' || c == '_' || c == '.'; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool valid_name(std::string_view s) {
  if (s.empty() || !is_alnum(s.front()) || !is_alnum(s.back())) return false;
  return std::all_of(s.begin(), s.end(), is_name_char);
}

struct OpSpelling {
  std::string_view text;
  SpecOp op;
};

// Two-character operators before their one-character prefixes.
constexpr OpSpelling kOps[] = {
    {"===", SpecOp::Arbitrary}, {"==", SpecOp::Equal},   {"!=", SpecOp::NotEqual},
    {"<=", SpecOp::LessEqual},  {">=", SpecOp::GreaterEqual}, {"~=", SpecOp::Compatible},
    {"<", SpecOp::Less},        {">", SpecOp::Greater},
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Requirement requirement() {
    Requirement req;
    skip_ws();
    const std::size_t name_start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    const auto name = text_.substr(name_start, pos_ - name_start);
    if (!valid_name(name)) fail(name_start, "expected package name");
    req.name = normalize_name(name);

    skip_ws();
    if (accept('[')) {
      skip_ws();
      if (!accept(']')) {
        for (;;) {
          skip_ws();
          const std::size_t start = pos_;
          while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
          const auto extra = text_.substr(start, pos_ - start);
          if (!valid_name(extra)) fail(start, "expected extra name");
          req.extras.push_back(normalize_name(extra));
          skip_ws();
          if (accept(']')) break;
          if (!accept(',')) fail(pos_, "expected ',' or ']'");
        }
      }
      std::sort(req.extras.begin(), req.extras.end());
      req.extras.erase(std::unique(req.extras.begin(), req.extras.end()), req.extras.end());
      skip_ws();
    }

    if (accept('@')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
      if (pos_ == start) fail(start, "expected URL");
      req.url = std::string(text_.substr(start, pos_ - start));
      skip_ws();
    } else if (accept('(')) {
      req.specifiers = specifier_list(')');
      if (!accept(')')) fail(pos_, "expected ')'");
      skip_ws();
    } else if (pos_ < text_.size() && is_op_start(text_[pos_])) {
      req.specifiers = specifier_list(';');
      skip_ws();
    }

    if (accept(';')) {
      req.marker = marker();
    }
    skip_ws();
    if (pos_ != text_.size()) fail(pos_, "unexpected trailing text");
    return req;
  }

  SpecifierSet specifier_set() {
    SpecifierSet set = specifier_list('\0');
    skip_ws();
    if (pos_ != text_.size()) fail(pos_, "unexpected trailing text");
    return set;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& why) const {
    throw InvalidRequirement(std::string(text_), at, why);
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static bool is_op_start(char c) { return c == '<' || c == '>' || c == '=' || c == '!' || c == '~'; }

  SpecifierSet specifier_list(char terminator) {
    SpecifierSet set;
    skip_ws();
    if (pos_ == text_.size() || text_[pos_] == terminator) return set;
    for (;;) {
      set.clauses.push_back(clause());
      skip_ws();
      if (!accept(',')) break;
    }
    return set;
  }

  Specifier clause() {
    skip_ws();
    const std::size_t start = pos_;
    Specifier spec;
    bool found = false;
    for (const auto& [spelling, op] : kOps) {
      if (text_.substr(pos_, spelling.size()) == spelling) {
        spec.op = op;
        pos_ += spelling.size();
        found = true;
        break;
      }
    }
    if (!found) fail(start, "expected version operator");
    skip_ws();
    const std::size_t operand_start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (is_space(c) || c == ',' || c == ';' || c == ')') break;
      ++pos_;
    }
    std::string operand(text_.substr(operand_start, pos_ - operand_start));
    if (operand.empty()) fail(operand_start, "expected version");

    if (spec.op == SpecOp::Arbitrary) {
      spec.version = try_parse_version(operand);
      spec.operand = std::move(operand);
      return spec;
    }

    if (operand.size() >= 2 && operand.compare(operand.size() - 2, 2, ".*") == 0) {
      if (spec.op != SpecOp::Equal && spec.op != SpecOp::NotEqual) {
        fail(operand_start, "'.*' is only allowed with == and !=");
      }
      spec.wildcard = true;
      operand.resize(operand.size() - 2);
    }

    auto version = try_parse_version(operand);
    if (!version) fail(operand_start, "invalid version '" + operand + "'");
    if (spec.wildcard && (version->pre || version->post || version->dev || version->has_local())) {
      fail(operand_start, "'.*' must follow a release segment");
    }
    const bool ordered = spec.op != SpecOp::Equal && spec.op != SpecOp::NotEqual;
    if (ordered && version->has_local()) {
      fail(operand_start, "local versions are only allowed with == and !=");
    }
    if (spec.op == SpecOp::Compatible && version->release.size() < 2) {
      fail(operand_start, "'~=' needs at least two release segments");
    }
    spec.version = std::move(version);
    spec.operand = std::move(operand);
    return spec;
  }

  Marker marker() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t end = text_.size();
    while (end > start && is_space(text_[end - 1])) --end;
    if (end == start) fail(start, "empty marker");
    Marker m;
    m.text = std::string(text_.substr(start, end - start));

    char quote = '\0';
    for (std::size_t i = start; i < end;) {
      const char c = text_[i];
      if (quote) {
        if (c == quote) quote = '\0';
        ++i;
      } else if (c == '\'' || c == '"') {
        quote = c;
        ++i;
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < end && (is_alnum(text_[j]) || text_[j] == '_' || text_[j] == '.')) ++j;
        if (text_.substr(i, j - i) == "extra") m.extra_gated = true;
        i = j;
      } else {
        ++i;
      }
    }
    if (quote) fail(end, "unterminated string in marker");
    pos_ = text_.size();
    return m;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Release-prefix match used by "==X.*" and the prefix half of "~=".
bool prefix_matches(const Version& prefix, const Version& v) {
  if (prefix.epoch != v.epoch) return false;
  for (std::size_t i = 0; i < prefix.release.size(); ++i) {
    const std::uint64_t got = i < v.release.size() ? v.release[i] : 0;
    if (got != prefix.release[i]) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(SpecOp op) {
  for (const auto& [spelling, o] : kOps) {
    if (o == op) return spelling;
  }
  return "?";
}

bool Specifier::admits_prereleases() const {
  switch (op) {
    case SpecOp::Equal:
    case SpecOp::GreaterEqual:
    case SpecOp::LessEqual:
    case SpecOp::Compatible:
    case SpecOp::Arbitrary:
      return version && version->is_prerelease();
    default:
      return false;
  }
}

bool SpecifierSet::admits_prereleases() const {
  if (prereleases) return *prereleases;
  return std::any_of(clauses.begin(), clauses.end(),
                     [](const Specifier& s) { return s.admits_prereleases(); });
}

std::string normalize_name(std::string_view text) {
  if (!valid_name(text)) throw InvalidName(std::string(text));
  std::string out;
  out.reserve(text.size());
  bool in_run = false;
  for (char c : text) {
    if (c == '-' || c == '_' || c == '.') {
      if (!in_run) out.push_back('-');
      in_run = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      in_run = false;
    }
  }
  return out;
}

Specifier parse_specifier(std::string_view text) {
  SpecifierSet set = parse_specifier_set(text);
  if (set.clauses.size() != 1) throw InvalidRequirement(std::string(text), 0, "expected one clause");
  return std::move(set.clauses.front());
}

SpecifierSet parse_specifier_set(std::string_view text) { return Parser(text).specifier_set(); }

Requirement parse_requirement(std::string_view text) { return Parser(text).requirement(); }

std::string to_string(const Specifier& s) {
  std::string out(to_string(s.op));
  out += s.operand;
  if (s.wildcard) out += ".*";
  return out;
}

std::string to_string(const SpecifierSet& s) {
  std::string out;
  for (const auto& clause : s.clauses) {
    if (!out.empty()) out += ',';
    out += to_string(clause);
  }
  return out;
}

bool clause_matches(const Specifier& s, const Version& v) {
  if (s.op == SpecOp::Arbitrary) return normalize(v) == lower(s.operand);
  const Version& target = *s.version;
  switch (s.op) {
    case SpecOp::Equal:
    case SpecOp::NotEqual: {
      bool equal;
      if (s.wildcard) {
        equal = prefix_matches(target, v);
      } else if (target.has_local()) {
        equal = v == target;
      } else {
        equal = v.public_version() == target;
      }
      return s.op == SpecOp::Equal ? equal : !equal;
    }
    case SpecOp::LessEqual:
      return v.public_version() <= target;
    case SpecOp::GreaterEqual:
      return v.public_version() >= target;
    case SpecOp::Less:
      if (!(v < target)) return false;
      // "<1.0" must not admit 1.0rc1 unless the operand is itself a pre-release.
      if (!target.is_prerelease() && v.is_prerelease() && v.base_version() == target.base_version()) {
        return false;
      }
      return true;
    case SpecOp::Greater:
      if (!(v > target)) return false;
      if (!target.is_postrelease() && v.is_postrelease() && v.base_version() == target.base_version()) {
        return false;
      }
      if (v.has_local() && v.base_version() == target.base_version()) return false;
      return true;
    case SpecOp::Compatible: {
      Version prefix;
      prefix.epoch = target.epoch;
      prefix.release.assign(target.release.begin(), target.release.end() - 1);
      return v.public_version() >= target && prefix_matches(prefix, v);
    }
    case SpecOp::Arbitrary:
      break;
  }
  return false;
}

bool matches(const SpecifierSet& s, const Version& v) {
  if (v.is_prerelease() && !s.admits_prereleases()) return false;
  return std::all_of(s.clauses.begin(), s.clauses.end(),
                     [&v](const Specifier& c) { return clause_matches(c, v); });
}

std::vector<Version> satisfying_versions(const SpecifierSet& s, std::span<const Version> candidates) {
  std::vector<Version> out;
  for (const auto& v : candidates) {
    if (matches(s, v)) out.push_back(v);
  }
  std::stable_sort(out.begin(), out.end());
  return out;
}

}  // namespace chainforge
