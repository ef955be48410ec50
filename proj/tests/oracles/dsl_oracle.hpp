#pragma once

// Naive reference evaluator for type-definition formulas. It tokenizes and
// parses on its own and turns each glob into a std::regex, so it shares no
// code with the library parser or matcher.

#include <cctype>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::regex glob_regex(const std::string& glob) {
  std::string re;
  for (char c : glob) {
    if (c == '*') {
      re += ".*";
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '/') {
      re += c;
    } else {
      re += '\\';
      re += c;
    }
  }
  return std::regex(re, std::regex::ECMAScript | std::regex::icase);
}

inline bool glob_matches(const std::string& glob, const std::string& text) {
  return std::regex_match(text, glob_regex(glob));
}

struct Node {
  enum Op { Atom, Macro, Not, And, Or } op;
  std::string atom;
  std::shared_ptr<Node> a, b;
};
using NodePtr = std::shared_ptr<Node>;

class Parser {
 public:
  explicit Parser(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (c == ' ' || c == '\t') {
        ++i;
      } else if (c == '(' || c == ')' || c == '!') {
        toks_.emplace_back(1, c);
        ++i;
      } else if (text.compare(i, 2, "&&") == 0 || text.compare(i, 2, "||") == 0) {
        toks_.push_back(text.substr(i, 2));
        i += 2;
      } else {
        std::size_t j = i;
        while (j < text.size() && std::string(" \t()!&|").find(text[j]) == std::string::npos) ++j;
        if (j == i) throw std::runtime_error("oracle: bad character");
        toks_.push_back(text.substr(i, j - i));
        i = j;
      }
    }
  }

  NodePtr parse() {
    auto n = expr();
    if (pos_ != toks_.size()) throw std::runtime_error("oracle: trailing input");
    return n;
  }

 private:
  const std::string* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }

  NodePtr expr() {
    auto left = term();
    while (peek() && *peek() == "||") {
      ++pos_;
      left = std::make_shared<Node>(Node{Node::Or, "", left, term()});
    }
    return left;
  }

  NodePtr term() {
    auto left = factor();
    while (peek() && *peek() == "&&") {
      ++pos_;
      left = std::make_shared<Node>(Node{Node::And, "", left, factor()});
    }
    return left;
  }

  NodePtr factor() {
    if (!peek()) throw std::runtime_error("oracle: unexpected end");
    std::string t = toks_[pos_++];
    if (t == "!") return std::make_shared<Node>(Node{Node::Not, "", factor(), nullptr});
    if (t == "(") {
      auto n = expr();
      if (!peek() || *peek() != ")") throw std::runtime_error("oracle: missing ')'");
      ++pos_;
      return n;
    }
    if (t == ")" || t == "&&" || t == "||") throw std::runtime_error("oracle: operand expected");
    std::string base = t.back() == '*' ? t.substr(0, t.size() - 1) : t;
    if (lower(base) == "all_types_exlucding_other") {
      return std::make_shared<Node>(Node{Node::Macro, "", nullptr, nullptr});
    }
    if (t.front() != '/') throw std::runtime_error("oracle: unknown identifier " + t);
    return std::make_shared<Node>(Node{Node::Atom, t, nullptr, nullptr});
  }

  std::vector<std::string> toks_;
  std::size_t pos_ = 0;
};

inline NodePtr parse(const std::string& text) { return Parser(text).parse(); }

inline void positive_atoms(const NodePtr& n, int nots, std::set<std::string>& out) {
  switch (n->op) {
    case Node::Atom:
      if (nots % 2 == 0) out.insert(n->atom);
      break;
    case Node::Macro:
      break;
    case Node::Not:
      positive_atoms(n->a, nots + 1, out);
      break;
    default:
      positive_atoms(n->a, nots, out);
      positive_atoms(n->b, nots, out);
  }
}

inline bool eval(const NodePtr& n, const std::vector<std::string>& types,
                 const std::set<std::string>& macro_atoms) {
  auto any = [&](const std::string& glob) {
    for (const auto& t : types) {
      if (glob_matches(glob, t)) return true;
    }
    return false;
  };
  switch (n->op) {
    case Node::Atom:
      return any(n->atom);
    case Node::Macro:
      for (const auto& a : macro_atoms) {
        if (any(a + "*")) return true;  // each atom read as a prefix
      }
      return false;
    case Node::Not:
      return !eval(n->a, types, macro_atoms);
    case Node::And:
      return eval(n->a, types, macro_atoms) && eval(n->b, types, macro_atoms);
    case Node::Or:
      return eval(n->a, types, macro_atoms) || eval(n->b, types, macro_atoms);
  }
  return false;
}

/// Rules as (target, expression text), later rules overriding earlier ones.
struct RuleSet {
  std::map<std::string, NodePtr> rules;
  std::set<std::string> macro_atoms;
};

inline RuleSet build(const std::vector<std::pair<std::string, std::string>>& rules) {
  RuleSet rs;
  for (const auto& [target, text] : rules) rs.rules[lower(target)] = parse(text);
  for (const auto& [target, node] : rs.rules) {
    std::string first = target.substr(1, target.find('/', 1) - 1);
    if (first != "other") positive_atoms(node, 0, rs.macro_atoms);
  }
  return rs;
}

/// Reads "TARGET := EXPR" lines (comments after '#'; ":=" may be missing).
inline RuleSet build_from_source(const std::string& source) {
  std::vector<std::pair<std::string, std::string>> rules;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t end = source.find('\n', start);
    if (end == std::string::npos) end = source.size();
    std::string line = source.substr(start, end - start);
    start = end + 1;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b);
    line.erase(line.find_last_not_of(" \t\r") + 1);
    auto def = line.find(":=");
    std::string target, expr;
    if (def != std::string::npos) {
      target = line.substr(0, def);
      target.erase(target.find_last_not_of(" \t") + 1);
      expr = line.substr(def + 2);
    } else {
      auto ws = line.find_first_of(" \t");
      target = line.substr(0, ws);
      expr = line.substr(ws);
    }
    rules.emplace_back(target, expr);
  }
  return build(rules);
}

inline std::set<std::string> apply(const RuleSet& rs, const std::set<std::string>& primitives) {
  std::vector<std::string> types(primitives.begin(), primitives.end());
  std::set<std::string> out;
  for (const auto& [target, node] : rs.rules) {
    if (eval(node, types, rs.macro_atoms)) out.insert(target);
  }
  return out;
}

}  // namespace oracle
