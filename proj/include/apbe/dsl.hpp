#pragma once

// String-transformation DSL: a program is a concatenation of atoms, each
// either a constant string or a substring of the input delimited by two
// position expressions. Positions are absolute offsets or boundaries of the
// k-th match of a token class.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "apbe/errors.hpp"

namespace apbe::dsl {

using nlohmann::json;

inline constexpr int kMaxAbsOffset = 20;
inline constexpr int kMaxOccurrence = 5;

// ASCII classification; everything else (including UTF-8 bytes) is "other".
inline bool isDigit(char c) { return c >= '0' && c <= '9'; }
inline bool isLower(char c) { return c >= 'a' && c <= 'z'; }
inline bool isUpper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool isAlpha(char c) { return isLower(c) || isUpper(c); }
inline bool isAlphaNum(char c) { return isAlpha(c) || isDigit(c); }
inline bool isSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

enum class TokenKind : std::uint8_t { Digits, Lower, Upper, Alpha, AlphaNum, Whitespace, Literal };

inline constexpr TokenKind kRunKinds[] = {TokenKind::Digits, TokenKind::Lower,    TokenKind::Upper,
                                          TokenKind::Alpha,  TokenKind::AlphaNum, TokenKind::Whitespace};

// Literal tokens are reserved for punctuation and other separators; they may
// not be alphanumeric or whitespace (those are covered by run classes).
inline bool isLiteralChar(char c) { return !isAlphaNum(c) && !isSpace(c); }

struct TokenClass {
  TokenKind kind = TokenKind::Digits;
  char literal = 0;  // only meaningful for Literal

  static TokenClass run(TokenKind k) { return {k, 0}; }
  static TokenClass lit(char c) {
    if (!isLiteralChar(c)) throw InvalidArgument("literal token must be punctuation");
    return {TokenKind::Literal, c};
  }

  bool matches(char c) const {
    switch (kind) {
      case TokenKind::Digits: return isDigit(c);
      case TokenKind::Lower: return isLower(c);
      case TokenKind::Upper: return isUpper(c);
      case TokenKind::Alpha: return isAlpha(c);
      case TokenKind::AlphaNum: return isAlphaNum(c);
      case TokenKind::Whitespace: return isSpace(c);
      case TokenKind::Literal: return c == literal;
    }
    return false;
  }

  friend bool operator==(const TokenClass&, const TokenClass&) = default;
  friend auto operator<=>(const TokenClass&, const TokenClass&) = default;
};

inline std::string_view kindName(TokenKind k) {
  switch (k) {
    case TokenKind::Digits: return "Digits";
    case TokenKind::Lower: return "Lower";
    case TokenKind::Upper: return "Upper";
    case TokenKind::Alpha: return "Alpha";
    case TokenKind::AlphaNum: return "AlphaNum";
    case TokenKind::Whitespace: return "Whitespace";
    case TokenKind::Literal: return "Literal";
  }
  return "?";
}

inline TokenKind kindFromName(std::string_view name) {
  for (auto k : {TokenKind::Digits, TokenKind::Lower, TokenKind::Upper, TokenKind::Alpha,
                 TokenKind::AlphaNum, TokenKind::Whitespace, TokenKind::Literal})
    if (kindName(k) == name) return k;
  throw InvalidArgument("unknown token class " + std::string(name));
}

// Half-open [begin, end) spans of every match of `token` in s, left to right.
// Run classes match maximal runs; literals match single characters.
inline std::vector<std::pair<int, int>> tokenMatches(const TokenClass& token, std::string_view s) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(s.size());
  for (int i = 0; i < n;) {
    if (!token.matches(s[i])) {
      ++i;
      continue;
    }
    int j = i + 1;
    if (token.kind != TokenKind::Literal)
      while (j < n && token.matches(s[j])) ++j;
    out.emplace_back(i, j);
    i = j;
  }
  return out;
}

enum class Side : std::uint8_t { Start, End };

// Absolute offset; k >= 0 counts from the left, k < 0 from the right with
// -1 denoting the end of the string.
struct AbsPos {
  int k = 0;
  friend bool operator==(const AbsPos&, const AbsPos&) = default;
  friend auto operator<=>(const AbsPos&, const AbsPos&) = default;
};

// Start or end of the occurrence-th match of a token; negative occurrences
// count from the right (-1 is the last match).
struct TokPos {
  TokenClass token;
  int occurrence = 1;
  Side side = Side::Start;
  friend bool operator==(const TokPos&, const TokPos&) = default;
  friend auto operator<=>(const TokPos&, const TokPos&) = default;
};

using Pos = std::variant<AbsPos, TokPos>;

struct ConstStr {
  std::string text;
  friend bool operator==(const ConstStr&, const ConstStr&) = default;
  friend auto operator<=>(const ConstStr&, const ConstStr&) = default;
};

struct SubStr {
  Pos start;
  Pos end;
  friend bool operator==(const SubStr&, const SubStr&) = default;
  friend auto operator<=>(const SubStr&, const SubStr&) = default;
};

using Atom = std::variant<ConstStr, SubStr>;

struct Program {
  std::vector<Atom> pieces;
  friend bool operator==(const Program&, const Program&) = default;
};

// Program output: a string, or null when a position fails to resolve.
struct Output {
  std::optional<std::string> value;

  static Output null() { return {}; }
  static Output of(std::string s) { return {std::move(s)}; }
  bool isNull() const { return !value.has_value(); }
  friend bool operator==(const Output&, const Output&) = default;
};

inline bool validPos(const Pos& p) {
  if (const auto* a = std::get_if<AbsPos>(&p)) return a->k >= -kMaxAbsOffset && a->k <= kMaxAbsOffset;
  const auto& t = std::get<TokPos>(p);
  if (t.token.kind == TokenKind::Literal && !isLiteralChar(t.token.literal)) return false;
  return t.occurrence != 0 && t.occurrence >= -kMaxOccurrence && t.occurrence <= kMaxOccurrence;
}

// Throws InvalidArgument unless p satisfies the grammar bounds.
inline void validate(const Program& p) {
  if (p.pieces.empty()) throw InvalidArgument("program has no pieces");
  for (const auto& atom : p.pieces) {
    if (const auto* c = std::get_if<ConstStr>(&atom)) {
      if (c->text.empty()) throw InvalidArgument("empty constant");
    } else {
      const auto& s = std::get<SubStr>(atom);
      if (!validPos(s.start) || !validPos(s.end)) throw InvalidArgument("position out of bounds");
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::optional<int> resolve(const Pos& pos, std::string_view s) {
  const int len = static_cast<int>(s.size());
  if (const auto* a = std::get_if<AbsPos>(&pos)) {
    const int idx = a->k >= 0 ? a->k : len + 1 + a->k;
    if (idx < 0 || idx > len) return std::nullopt;
    return idx;
  }
  const auto& t = std::get<TokPos>(pos);
  const auto m = tokenMatches(t.token, s);
  const int count = static_cast<int>(m.size());
  const int i = t.occurrence > 0 ? t.occurrence - 1 : count + t.occurrence;
  if (t.occurrence == 0 || i < 0 || i >= count) return std::nullopt;
  return t.side == Side::Start ? m[i].first : m[i].second;
}

// Extracted text, or nullopt when the atom fails on s. A substring must be
// nonempty: its start has to lie strictly before its end.
inline std::optional<std::string> evaluateAtom(const Atom& atom, std::string_view s) {
  if (const auto* c = std::get_if<ConstStr>(&atom)) return c->text;
  const auto& sub = std::get<SubStr>(atom);
  const auto b = resolve(sub.start, s);
  if (!b) return std::nullopt;
  const auto e = resolve(sub.end, s);
  if (!e || *b >= *e) return std::nullopt;
  return std::string(s.substr(*b, *e - *b));
}

inline Output evaluate(const Program& p, std::string_view input) {
  std::string out;
  for (const auto& atom : p.pieces) {
    auto piece = evaluateAtom(atom, input);
    if (!piece) return Output::null();
    out += *piece;
  }
  return Output::of(std::move(out));
}

// ---------------------------------------------------------------------------
// Ranking. Scores are kept in tenths so that ties are exact:
//   +2 per token-based position, -1 per piece, -0.1 per constant character.

inline int posScoreTenths(const Pos& p) { return std::holds_alternative<TokPos>(p) ? 20 : 0; }

inline int atomScoreTenths(const Atom& atom) {
  if (const auto* c = std::get_if<ConstStr>(&atom))
    return -10 - static_cast<int>(c->text.size());
  const auto& s = std::get<SubStr>(atom);
  return -10 + posScoreTenths(s.start) + posScoreTenths(s.end);
}

inline int scoreTenths(const Program& p) {
  int total = 0;
  for (const auto& atom : p.pieces) total += atomScoreTenths(atom);
  return total;
}

inline double rankScore(const Program& p) { return scoreTenths(p) / 10.0; }

// ---------------------------------------------------------------------------
// JSON

inline json toJson(const TokenClass& t) {
  if (t.kind == TokenKind::Literal) return json{{"class", "Literal"}, {"char", std::string(1, t.literal)}};
  return json{{"class", std::string(kindName(t.kind))}};
}

inline json toJson(const Pos& p) {
  if (const auto* a = std::get_if<AbsPos>(&p)) return json{{"type", "abs"}, {"k", a->k}};
  const auto& t = std::get<TokPos>(p);
  return json{{"type", "tok"},
              {"token", toJson(t.token)},
              {"occurrence", t.occurrence},
              {"side", t.side == Side::Start ? "start" : "end"}};
}

inline json toJson(const Atom& atom) {
  if (const auto* c = std::get_if<ConstStr>(&atom)) return json{{"type", "const"}, {"text", c->text}};
  const auto& s = std::get<SubStr>(atom);
  return json{{"type", "substr"}, {"start", toJson(s.start)}, {"end", toJson(s.end)}};
}

inline json toJson(const Program& p) {
  json pieces = json::array();
  for (const auto& atom : p.pieces) pieces.push_back(toJson(atom));
  return json{{"pieces", std::move(pieces)}};
}

inline TokenClass tokenFromJson(const json& j) {
  const auto kind = kindFromName(j.at("class").get<std::string>());
  if (kind != TokenKind::Literal) return TokenClass::run(kind);
  const auto c = j.at("char").get<std::string>();
  if (c.size() != 1) throw InvalidArgument("literal token needs exactly one character");
  return TokenClass::lit(c[0]);
}

inline Pos posFromJson(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "abs") return AbsPos{j.at("k").get<int>()};
  if (type != "tok") throw InvalidArgument("unknown position type " + type);
  const auto side = j.at("side").get<std::string>();
  if (side != "start" && side != "end") throw InvalidArgument("unknown side " + side);
  return TokPos{tokenFromJson(j.at("token")), j.at("occurrence").get<int>(),
                side == "start" ? Side::Start : Side::End};
}

inline Atom atomFromJson(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "const") return ConstStr{j.at("text").get<std::string>()};
  if (type != "substr") throw InvalidArgument("unknown atom type " + type);
  return SubStr{posFromJson(j.at("start")), posFromJson(j.at("end"))};
}

inline Program programFromJson(const json& j) {
  Program p;
  for (const auto& a : j.at("pieces")) p.pieces.push_back(atomFromJson(a));
  validate(p);
  return p;
}

// Canonical serialization: compact JSON with sorted keys.
inline std::string canonical(const Atom& atom) { return toJson(atom).dump(); }
inline std::string canonical(const Program& p) { return toJson(p).dump(); }

// Compact injective key used to break score ties. Each position key ends in
// ';' so substring keys compare start first, then end.
inline std::string sortKey(const Pos& p) {
  if (const auto* a = std::get_if<AbsPos>(&p)) return "a" + std::to_string(a->k) + ";";
  const auto& t = std::get<TokPos>(p);
  std::string key = "t";
  key += static_cast<char>('0' + static_cast<int>(t.token.kind));
  if (t.token.kind == TokenKind::Literal) key += t.token.literal;
  key += std::to_string(t.occurrence);
  key += t.side == Side::Start ? "s;" : "e;";
  return key;
}

inline std::string sortKey(const Atom& atom) {
  if (const auto* c = std::get_if<ConstStr>(&atom)) return "c" + json(c->text).dump();
  const auto& s = std::get<SubStr>(atom);
  return "s" + sortKey(s.start) + sortKey(s.end);
}

inline std::vector<std::string> sortKeys(const Program& p) {
  std::vector<std::string> keys;
  keys.reserve(p.pieces.size());
  for (const auto& atom : p.pieces) keys.push_back(sortKey(atom));
  return keys;
}

// Total order used everywhere programs are ranked: higher score first, then
// the atom keys compared piece by piece (a proper prefix sorts first).
inline bool rankedBefore(const Program& a, const Program& b) {
  const int sa = scoreTenths(a), sb = scoreTenths(b);
  if (sa != sb) return sa > sb;
  return sortKeys(a) < sortKeys(b);
}

// ---------------------------------------------------------------------------
// Human-readable rendering

inline std::string ordinal(int n) {
  const int mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(n) + suffix;
}

inline std::string describe(const TokenClass& t) {
  switch (t.kind) {
    case TokenKind::Digits: return "digit-run";
    case TokenKind::Lower: return "lowercase-run";
    case TokenKind::Upper: return "uppercase-run";
    case TokenKind::Alpha: return "letter-run";
    case TokenKind::AlphaNum: return "alphanumeric-run";
    case TokenKind::Whitespace: return "whitespace-run";
    case TokenKind::Literal: return json(std::string(1, t.literal)).dump();
  }
  return "?";
}

inline std::string describe(const Pos& p) {
  if (const auto* a = std::get_if<AbsPos>(&p))
    return a->k >= 0 ? "position " + std::to_string(a->k)
                     : "position " + std::to_string(-a->k) + " from end";
  const auto& t = std::get<TokPos>(p);
  std::string occ = t.occurrence > 0 ? ordinal(t.occurrence) : t.occurrence == -1 ? "last" : ordinal(-t.occurrence) + "-last";
  return std::string(t.side == Side::Start ? "start" : "end") + " of " + occ + " " + describe(t.token);
}

inline std::string describe(const Atom& atom) {
  if (const auto* c = std::get_if<ConstStr>(&atom)) return "constant " + json(c->text).dump();
  const auto& s = std::get<SubStr>(atom);
  return "string from " + describe(s.start) + " to " + describe(s.end);
}

inline std::string describe(const Program& p) {
  std::string out;
  for (std::size_t i = 0; i < p.pieces.size(); ++i) {
    if (i) out += " + ";
    out += describe(p.pieces[i]);
  }
  return out;
}

}  // namespace apbe::dsl
