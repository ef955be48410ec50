#ifndef ENTYPER_TYPEDEF_DSL_HPP_
#define ENTYPER_TYPEDEF_DSL_HPP_

// Boolean type definitions: each target type of a taxonomy is a formula over
// glob patterns on primitive type paths.
//
//   /ORGANIZATION/COMPANY := (/ORGANIZATION/COMPANY || /NEWS_AGENCY) && !/ORGANIZATION/SPORTS_LEAGUE
//   /OTHER := !ALL_TYPES_EXLUCDING_OTHER* || /OTHER*
//
// Precedence is ! > && > ||, binary operators associate to the left.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entyper/error.hpp"
#include "entyper/text.hpp"

namespace entyper {

/// The catch-all macro, spelled as in the published OntoNotes definitions.
inline constexpr std::string_view kAllNonOtherMacro = "ALL_TYPES_EXLUCDING_OTHER";

/// Glob match where '*' matches any (possibly empty) run of characters,
/// including '/'. Linear time, no backtracking blowup.
inline bool glob_match(std::string_view pattern, std::string_view text) noexcept {
  std::size_t p = 0, t = 0;
  std::size_t star_p = std::string_view::npos, star_t = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star_p = p++;
      star_t = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

/// Case-insensitive pattern match of a primitive type path.
inline bool match_pattern(std::string_view pattern, std::string_view primitive_type) {
  return glob_match(ascii_lower(pattern), ascii_lower(primitive_type));
}

/// Expression tree over type patterns. Atoms hold lowercase patterns.
struct TypeFormula {
  enum class Kind { kAtom, kAllNonOther, kNot, kAnd, kOr };

  Kind kind = Kind::kAtom;
  std::string pattern;
  std::vector<TypeFormula> operands;

  static TypeFormula atom(std::string_view p) {
    return {Kind::kAtom, ascii_lower(p), {}};
  }
  static TypeFormula all_non_other() { return {Kind::kAllNonOther, {}, {}}; }
  static TypeFormula negate(TypeFormula f) { return {Kind::kNot, {}, {std::move(f)}}; }
  static TypeFormula conj(TypeFormula a, TypeFormula b) {
    return {Kind::kAnd, {}, {std::move(a), std::move(b)}};
  }
  static TypeFormula disj(TypeFormula a, TypeFormula b) {
    return {Kind::kOr, {}, {std::move(a), std::move(b)}};
  }

  bool operator==(const TypeFormula&) const = default;
};

namespace detail {

inline int precedence(TypeFormula::Kind k) {
  switch (k) {
    case TypeFormula::Kind::kOr: return 1;
    case TypeFormula::Kind::kAnd: return 2;
    case TypeFormula::Kind::kNot: return 3;
    default: return 4;
  }
}

inline void print_formula(const TypeFormula& f, std::string& out, int min_prec) {
  const int prec = precedence(f.kind);
  const bool parens = prec < min_prec;
  if (parens) out += '(';
  switch (f.kind) {
    case TypeFormula::Kind::kAtom:
      out += f.pattern;
      break;
    case TypeFormula::Kind::kAllNonOther:
      out += kAllNonOtherMacro;
      out += '*';
      break;
    case TypeFormula::Kind::kNot:
      out += '!';
      print_formula(f.operands[0], out, 3);
      break;
    case TypeFormula::Kind::kAnd:
    case TypeFormula::Kind::kOr:
      print_formula(f.operands[0], out, prec);
      out += f.kind == TypeFormula::Kind::kAnd ? " && " : " || ";
      // Right operand of equal precedence needs parens to stay left-associative.
      print_formula(f.operands[1], out, prec + 1);
      break;
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string to_string(const TypeFormula& f) {
  std::string out;
  detail::print_formula(f, out, 0);
  return out;
}

/// Number of non-empty slash-separated segments.
inline std::size_t type_depth(std::string_view target) {
  std::size_t depth = 0;
  for (auto seg : split_view(target, '/')) {
    if (!seg.empty()) ++depth;
  }
  return depth;
}

inline std::string_view first_segment(std::string_view target) {
  auto s = target;
  while (!s.empty() && s.front() == '/') s.remove_prefix(1);
  return s.substr(0, s.find('/'));
}

/// A fine type is compatible with a depth-1 coarse type when its first
/// segment names that coarse type.
inline bool is_compatible(std::string_view fine, std::string_view coarse) {
  return first_segment(fine) == first_segment(coarse);
}

/// Parsed rule set of one target taxonomy.
class TypeDefinition {
 public:
  struct Rule {
    std::string target;
    TypeFormula formula;
    bool operator==(const Rule&) const = default;
  };

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const std::set<std::string>& coarse_set() const noexcept { return coarse_; }
  const std::set<std::string>& fine_set() const noexcept { return fine_; }
  /// Prefix patterns that make up ALL_TYPES_EXLUCDING_OTHER.
  const std::vector<std::string>& all_non_other() const noexcept { return all_non_other_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  const TypeFormula* find(std::string_view target) const {
    auto it = index_.find(std::string(target));
    return it == index_.end() ? nullptr : &rules_[it->second].formula;
  }

  bool has_target(std::string_view target) const { return index_.count(std::string(target)) > 0; }

  /// Inserts or replaces the rule for `target` (lowercased). Replacement keeps
  /// the original position and records a warning.
  void set_rule(std::string target, TypeFormula formula, std::size_t line_no = 0) {
    target = ascii_lower(target);
    if (auto it = index_.find(target); it != index_.end()) {
      warnings_.push_back(where(line_no) + "rule for " + target + " redefined; later rule wins");
      rules_[it->second].formula = std::move(formula);
    } else {
      index_.emplace(target, rules_.size());
      rules_.push_back({std::move(target), std::move(formula)});
    }
    finalize();
  }

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  /// Rules under the /other subtree are excluded from the catch-all macro.
  static bool is_other_target(std::string_view target) { return first_segment(target) == "other"; }

  /// Renders the definition back to source form.
  std::string to_source() const {
    std::string out;
    for (const auto& r : rules_) out += r.target + " := " + to_string(r.formula) + "\n";
    return out;
  }

  /// Fine targets whose coarse prefix is not itself a target.
  std::vector<std::string> orphan_fine_targets() const {
    std::vector<std::string> out;
    for (const auto& f : fine_) {
      std::string coarse = "/" + std::string(first_segment(f));
      if (!coarse_.count(coarse)) out.push_back(f);
    }
    return out;
  }

 private:
  static std::string where(std::size_t line_no) {
    return line_no ? "line " + std::to_string(line_no) + ": " : std::string();
  }

  static void collect_positive(const TypeFormula& f, bool negated, std::set<std::string>& out) {
    switch (f.kind) {
      case TypeFormula::Kind::kAtom:
        if (!negated) out.insert(f.pattern.ends_with('*') ? f.pattern : f.pattern + "*");
        break;
      case TypeFormula::Kind::kAllNonOther:
        break;
      case TypeFormula::Kind::kNot:
        collect_positive(f.operands[0], !negated, out);
        break;
      default:
        for (const auto& op : f.operands) collect_positive(op, negated, out);
    }
  }

  void finalize() {
    coarse_.clear();
    fine_.clear();
    std::set<std::string> macro;
    for (const auto& r : rules_) {
      (type_depth(r.target) <= 1 ? coarse_ : fine_).insert(r.target);
      if (!is_other_target(r.target)) collect_positive(r.formula, false, macro);
    }
    all_non_other_.assign(macro.begin(), macro.end());
  }

  std::vector<Rule> rules_;
  std::map<std::string, std::size_t> index_;
  std::set<std::string> coarse_;
  std::set<std::string> fine_;
  std::vector<std::string> all_non_other_;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class FormulaParser {
 public:
  FormulaParser(std::string_view text, std::size_t line_no, std::size_t column_offset)
      : text_(text), line_(line_no), offset_(column_offset) {}

  TypeFormula parse() {
    skip_ws();
    if (pos_ >= text_.size()) error("empty right-hand side", pos_);
    auto f = parse_or();
    skip_ws();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') error("unbalanced ')'", pos_);
      error("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    }
    return f;
  }

 private:
  [[noreturn]] void error(const std::string& what, std::size_t pos) const {
    throw ParseError(what, line_, offset_ + pos + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(std::string_view op) {
    skip_ws();
    if (text_.substr(pos_, op.size()) == op) {
      pos_ += op.size();
      return true;
    }
    return false;
  }

  TypeFormula parse_or() {
    auto lhs = parse_and();
    while (accept("||")) lhs = TypeFormula::disj(std::move(lhs), parse_and());
    return lhs;
  }

  TypeFormula parse_and() {
    auto lhs = parse_unary();
    while (accept("&&")) lhs = TypeFormula::conj(std::move(lhs), parse_unary());
    return lhs;
  }

  TypeFormula parse_unary() {
    if (accept("!")) return TypeFormula::negate(parse_unary());
    return parse_primary();
  }

  static bool is_atom_char(char c) {
    return !(c == ' ' || c == '\t' || c == '(' || c == ')' || c == '!' || c == '&' || c == '|');
  }

  TypeFormula parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) error("dangling operator: expected operand", pos_);
    const std::size_t start = pos_;
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_or();
      if (!accept(")")) error("unbalanced '(': expected ')'", start);
      return inner;
    }
    if (!is_atom_char(c)) error("expected operand, found '" + std::string(1, c) + "'", pos_);
    while (pos_ < text_.size() && is_atom_char(text_[pos_])) ++pos_;
    std::string_view word = text_.substr(start, pos_ - start);
    if (word.front() == '/') return TypeFormula::atom(word);
    std::string_view ident = word;
    if (ident.ends_with('*')) ident.remove_suffix(1);
    if (ascii_lower(ident) == ascii_lower(kAllNonOtherMacro)) return TypeFormula::all_non_other();
    error("unknown identifier '" + std::string(word) + "'", start);
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t offset_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a single right-hand-side expression.
inline TypeFormula parse_formula(std::string_view expr, std::size_t line_no = 1) {
  return detail::FormulaParser(expr, line_no, 0).parse();
}

/// Parses a definition file: "TARGET := EXPR" per line, '#' comments, blank
/// lines ignored. A line without ":=" whose first word is a path is read as
/// "TARGET EXPR" with a warning.
inline TypeDefinition parse_typedefs(std::string_view source) {
  TypeDefinition defs;
  std::size_t line_no = 0;
  for (auto raw_line : split_view(source, '\n')) {
    ++line_no;
    auto line = raw_line;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim_view(line).empty()) continue;

    std::string_view target;
    std::size_t rhs_offset = 0;
    if (auto def = line.find(":="); def != std::string_view::npos) {
      target = trim_view(line.substr(0, def));
      rhs_offset = def + 2;
    } else {
      auto body = trim_view(line);
      auto ws = body.find_first_of(" \t");
      if (body.front() != '/' || ws == std::string_view::npos) {
        throw ParseError("expected 'TARGET := EXPR'", line_no);
      }
      target = body.substr(0, ws);
      rhs_offset = static_cast<std::size_t>(body.data() - line.data()) + ws;
      defs.add_warning("line " + std::to_string(line_no) + ": missing ':=' after " +
                       std::string(target) + "; read as a rule");
    }
    if (target.empty()) throw ParseError("missing target type", line_no, 1);
    if (target.front() != '/') {
      throw ParseError("target '" + std::string(target) + "' must start with '/'", line_no, 1);
    }
    if (target.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError("target '" + std::string(target) + "' contains whitespace", line_no, 1);
    }
    auto formula = detail::FormulaParser(line.substr(rhs_offset), line_no, rhs_offset).parse();
    defs.set_rule(std::string(target), std::move(formula), line_no);
  }
  for (const auto& orphan : defs.orphan_fine_targets()) {
    defs.add_warning("fine target " + orphan + " has no coarse parent rule");
  }
  return defs;
}

inline TypeDefinition load_typedefs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_typedefs(buf.str());
}

// ---------------------------------------------------------------------------
// Evaluation

template <typename TypeRange>
bool any_matches(std::string_view pattern, const TypeRange& types) {
  for (const auto& t : types) {
    if (glob_match(pattern, t)) return true;
  }
  return false;
}

/// Evaluates `f` on a set of lowercase primitive types.
template <typename TypeRange>
bool eval_formula(const TypeFormula& f, const TypeRange& types, const TypeDefinition& defs) {
  switch (f.kind) {
    case TypeFormula::Kind::kAtom:
      return any_matches(f.pattern, types);
    case TypeFormula::Kind::kAllNonOther:
      for (const auto& p : defs.all_non_other()) {
        if (any_matches(p, types)) return true;
      }
      return false;
    case TypeFormula::Kind::kNot:
      return !eval_formula(f.operands[0], types, defs);
    case TypeFormula::Kind::kAnd:
      return eval_formula(f.operands[0], types, defs) && eval_formula(f.operands[1], types, defs);
    case TypeFormula::Kind::kOr:
      return eval_formula(f.operands[0], types, defs) || eval_formula(f.operands[1], types, defs);
  }
  return false;
}

/// T(S): every target whose rule holds on `types`.
template <typename TypeRange>
std::set<std::string> apply_type_map(const TypeRange& types, const TypeDefinition& defs) {
  std::vector<std::string> lowered;
  for (const auto& t : types) lowered.push_back(ascii_lower(t));
  std::set<std::string> out;
  for (const auto& r : defs.rules()) {
    if (eval_formula(r.formula, lowered, defs)) out.insert(r.target);
  }
  return out;
}

struct CoarseFine {
  std::set<std::string> coarse;
  std::set<std::string> fine;
};

/// Partitions target types by depth: 1 is coarse, 2 and deeper is fine.
inline CoarseFine split_coarse_fine(const std::set<std::string>& targets) {
  CoarseFine out;
  for (const auto& t : targets) (type_depth(t) <= 1 ? out.coarse : out.fine).insert(t);
  return out;
}

}  // namespace entyper

#endif  // ENTYPER_TYPEDEF_DSL_HPP_
