#ifndef ENTYPER_CORPUS_HPP_
#define ENTYPER_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "entyper/error.hpp"
#include "entyper/text.hpp"

namespace entyper {

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool operator==(const Span&) const = default;
};

/// A pre-tokenized sentence with one mention. `concept_id` is set for
/// linked corpus records and usually empty for queries.
struct MentionSentence {
  std::string sentence_id;
  std::vector<std::string> tokens;
  Span mention;
  std::optional<std::string> concept_id;

  std::span<const std::string> mention_tokens() const {
    return std::span<const std::string>(tokens).subspan(mention.start, mention.size());
  }

  bool operator==(const MentionSentence&) const = default;
};

/// A query line; `gold_types` is empty when the file carries no gold labels.
struct QueryMention {
  MentionSentence sentence;
  std::set<std::string> gold_types;
};

inline bool span_valid(const Span& span, std::size_t n_tokens) noexcept {
  return span.start < span.end && span.end <= n_tokens;
}

inline void validate_span(const MentionSentence& s) {
  if (!span_valid(s.mention, s.tokens.size())) {
    throw ValidationError("sentence '" + s.sentence_id + "': mention span (" +
                          std::to_string(s.mention.start) + "," +
                          std::to_string(s.mention.end) + ") out of range for " +
                          std::to_string(s.tokens.size()) + " tokens");
  }
}

/// Document statistics with each sentence treated as one document.
struct CorpusStats {
  std::uint64_t n_sentences = 0;
  std::unordered_map<std::string, std::uint32_t> df;

  std::uint32_t document_frequency(const std::string& word) const {
    auto it = df.find(word);
    return it == df.end() ? 0 : it->second;
  }
};

class Corpus {
 public:
  Corpus() = default;

  /// Validates every record and derives the concept partition and statistics.
  static Corpus from_records(std::vector<MentionSentence> records) {
    Corpus corpus;
    std::unordered_set<std::string> ids;
    ids.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      validate_span(r);
      for (const auto& tok : r.tokens) {
        if (tok.empty()) {
          throw ValidationError("sentence '" + r.sentence_id + "': empty token after normalization");
        }
      }
      if (!ids.insert(r.sentence_id).second) {
        throw ValidationError("duplicate sentence_id '" + r.sentence_id + "'");
      }
      if (r.concept_id) corpus.by_concept_[*r.concept_id].push_back(i);
      std::unordered_set<std::string> seen;
      for (const auto& tok : r.tokens) {
        auto word = casefold(tok);
        if (seen.insert(word).second) ++corpus.stats_.df[word];
      }
    }
    corpus.stats_.n_sentences = records.size();
    corpus.records_ = std::move(records);
    return corpus;
  }

  const std::vector<MentionSentence>& records() const noexcept { return records_; }
  const std::map<std::string, std::vector<std::size_t>>& by_concept() const noexcept {
    return by_concept_;
  }
  const CorpusStats& stats() const noexcept { return stats_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

 private:
  std::vector<MentionSentence> records_;
  std::map<std::string, std::vector<std::size_t>> by_concept_;
  CorpusStats stats_;
};

/// sent(c): the records linked to `concept_id`, in corpus order.
inline std::vector<MentionSentence> sentences_of_concept(const Corpus& corpus,
                                                         const std::string& concept_id) {
  std::vector<MentionSentence> out;
  auto it = corpus.by_concept().find(concept_id);
  if (it == corpus.by_concept().end()) return out;
  out.reserve(it->second.size());
  for (auto idx : it->second) out.push_back(corpus.records()[idx]);
  return out;
}

// ---------------------------------------------------------------------------
// Line format

namespace detail {

inline MentionSentence record_from_json(const nlohmann::json& j) {
  MentionSentence r;
  r.sentence_id = j.at("sentence_id").get<std::string>();
  for (const auto& t : j.at("tokens")) {
    r.tokens.push_back(normalize_token(t.get<std::string>()));
    if (r.tokens.back().empty()) {
      throw ValidationError("sentence '" + r.sentence_id + "': token " +
                            std::to_string(r.tokens.size() - 1) + " is empty after normalization");
    }
  }
  const auto& m = j.at("mention");
  auto start = m.at("start").get<std::int64_t>();
  auto end = m.at("end").get<std::int64_t>();
  if (start < 0 || end < 0) {
    throw ValidationError("sentence '" + r.sentence_id + "': negative mention offset");
  }
  r.mention = {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
  if (auto it = j.find("concept"); it != j.end() && !it->is_null()) {
    auto c = canonical_concept(it->get<std::string>());
    if (c.empty()) throw ValidationError("sentence '" + r.sentence_id + "': empty concept");
    r.concept_id = std::move(c);
  }
  return r;
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(line, line_no);
  }
}

template <typename T, typename F>
T parse_json_line(std::string_view line, std::size_t line_no, F&& convert) {
  try {
    return convert(nlohmann::json::parse(line));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line_no);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace detail

/// Parses one corpus line. Tokens are NFC-normalized; the span is validated.
inline MentionSentence parse_corpus_line(std::string_view line, std::size_t line_no = 1) {
  return detail::parse_json_line<MentionSentence>(line, line_no, [](const nlohmann::json& j) {
    auto r = detail::record_from_json(j);
    validate_span(r);
    return r;
  });
}

inline nlohmann::json to_json(const MentionSentence& r) {
  nlohmann::json j;
  j["sentence_id"] = r.sentence_id;
  j["tokens"] = r.tokens;
  j["mention"] = {{"start", r.mention.start}, {"end", r.mention.end}};
  j["concept"] = r.concept_id ? nlohmann::json(*r.concept_id) : nlohmann::json(nullptr);
  return j;
}

inline std::string to_corpus_line(const MentionSentence& r) { return to_json(r).dump(); }

/// Streams a corpus file. Blank lines are skipped.
inline Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<MentionSentence> records;
  detail::for_each_line(path, [&](const std::string& line, std::size_t line_no) {
    if (trim_view(line).empty()) return;
    records.push_back(parse_corpus_line(line, line_no));
  });
  return Corpus::from_records(std::move(records));
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (const auto& r : corpus.records()) out << to_corpus_line(r) << '\n';
}

/// Query/gold line: the corpus format plus optional "gold_types". Gold types
/// are lowercased so they compare equal to target types.
inline QueryMention parse_query_line(std::string_view line, std::size_t line_no = 1) {
  return detail::parse_json_line<QueryMention>(line, line_no, [](const nlohmann::json& j) {
    QueryMention q;
    q.sentence = detail::record_from_json(j);
    validate_span(q.sentence);
    if (auto it = j.find("gold_types"); it != j.end() && !it->is_null()) {
      for (const auto& t : *it) q.gold_types.insert(ascii_lower(trim_view(t.get<std::string>())));
    }
    return q;
  });
}

inline std::vector<QueryMention> load_queries(const std::filesystem::path& path) {
  std::vector<QueryMention> out;
  detail::for_each_line(path, [&](const std::string& line, std::size_t line_no) {
    if (trim_view(line).empty()) return;
    out.push_back(parse_query_line(line, line_no));
  });
  return out;
}

inline std::vector<QueryMention> read_queries(std::istream& in) {
  std::vector<QueryMention> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    out.push_back(parse_query_line(line, line_no));
  }
  return out;
}

inline std::string to_query_line(const QueryMention& q) {
  auto j = to_json(q.sentence);
  if (!q.gold_types.empty()) j["gold_types"] = q.gold_types;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Concept -> primitive types

/// Primitive types (lowercase slash paths) attached to each concept.
class ConceptTypeTable {
 public:
  using TypeSet = std::set<std::string>;

  /// Returns nullptr for concepts without an entry.
  const TypeSet* find(const std::string& concept_id) const {
    auto it = entries_.find(concept_id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  /// Adds a row; throws on duplicates or malformed type paths.
  void add(const std::string& concept_id, const std::vector<std::string>& types) {
    TypeSet set;
    for (const auto& raw : types) {
      auto t = ascii_lower(trim_view(raw));
      if (t.empty()) continue;
      if (t.front() != '/') {
        throw ValidationError("concept '" + concept_id + "': type '" + t +
                              "' does not start with '/'");
      }
      if (t.find_first_of(" \t\r\n") != std::string::npos) {
        throw ValidationError("concept '" + concept_id + "': type '" + t + "' contains whitespace");
      }
      set.insert(std::move(t));
    }
    if (!entries_.emplace(concept_id, std::move(set)).second) {
      throw ValidationError("duplicate concept row: " + concept_id);
    }
  }

  const std::map<std::string, TypeSet>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::map<std::string, TypeSet> entries_;
};

inline ConceptTypeTable parse_concept_types(std::istream& in) {
  ConceptTypeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim_view(line);
    if (view.empty() || view.front() == '#') continue;
    auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("expected concept<TAB>types", line_no);
    }
    auto concept_id = canonical_concept(view.substr(0, tab));
    if (concept_id.empty()) throw ParseError("empty concept", line_no);
    std::vector<std::string> types;
    for (auto part : split_view(view.substr(tab + 1), ',')) types.emplace_back(part);
    try {
      table.add(concept_id, types);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

inline ConceptTypeTable load_concept_types(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse_concept_types(in);
}

}  // namespace entyper

#endif  // ENTYPER_CORPUS_HPP_
