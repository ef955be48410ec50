#ifndef ENTYPER_ESA_INDEX_HPP_
#define ENTYPER_ESA_INDEX_HPP_

// Word -> concept association map built from a mention-linked corpus, and
// the online aggregation that turns a sentence into ranked candidate
// concepts.
//
// Every sentence is one document. For a word w and concept c,
//
//   score(c|w) = sum over sentences s of c that contain w of tf(w,s) * ln(N / df(w))
//
// with raw term counts and unsmoothed idf. A query sentence scores each
// concept by summing score(c|w) over its tokens (mention tokens included).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entyper/binary_io.hpp"
#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/text.hpp"

namespace entyper {

inline constexpr std::size_t kDefaultEllEsa = 300;

struct Posting {
  std::uint32_t concept_id = 0;
  double score = 0.0;
  bool operator==(const Posting&) const = default;
};

struct ScoredConcept {
  std::string concept_id;
  double score = 0.0;
  bool operator==(const ScoredConcept&) const = default;
};

/// tf(w,s) * ln(N / df(w)); `word` must already be in index form
/// (normalized, casefolded). Unseen words score 0.
inline double tfidf(const std::string& word, std::span<const std::string> tokens,
                    const CorpusStats& stats) {
  auto df = stats.document_frequency(word);
  if (df == 0 || stats.n_sentences == 0) return 0.0;
  std::size_t tf = 0;
  for (const auto& tok : tokens) {
    if (casefold(tok) == word) ++tf;
  }
  if (tf == 0) return 0.0;
  return static_cast<double>(tf) *
         std::log(static_cast<double>(stats.n_sentences) / static_cast<double>(df));
}

inline double tfidf(const std::string& word, const MentionSentence& s, const CorpusStats& stats) {
  return tfidf(word, std::span<const std::string>(s.tokens), stats);
}

class EsaIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint64_t n_sentences() const noexcept { return n_sentences_; }
  std::size_t n_concepts() const noexcept { return concepts_.size(); }
  std::size_t n_words() const noexcept { return postings_.size(); }

  std::uint32_t document_frequency(const std::string& word) const {
    auto it = df_.find(word);
    return it == df_.end() ? 0 : it->second;
  }

  /// Postings sorted by (score desc, concept id asc); empty if unindexed.
  std::span<const Posting> postings(const std::string& word) const {
    auto it = postings_.find(word);
    if (it == postings_.end()) return {};
    return it->second;
  }

  /// Concept ids are assigned in ascending title order, so id order and
  /// title order agree.
  const std::string& concept_title(std::uint32_t id) const { return concepts_.at(id); }

  std::optional<std::uint32_t> concept_id(const std::string& title) const {
    auto it = std::lower_bound(concepts_.begin(), concepts_.end(), title);
    if (it == concepts_.end() || *it != title) return std::nullopt;
    return static_cast<std::uint32_t>(it - concepts_.begin());
  }

  /// score(c|w), 0 when absent.
  double score(const std::string& word, const std::string& title) const {
    auto id = concept_id(title);
    if (!id) return 0.0;
    for (const auto& p : postings(word)) {
      if (p.concept_id == *id) return p.score;
    }
    return 0.0;
  }

  const std::vector<std::string>& concepts() const noexcept { return concepts_; }
  const std::unordered_map<std::string, std::vector<Posting>>& all_postings() const noexcept {
    return postings_;
  }
  const std::unordered_map<std::string, std::uint32_t>& df_table() const noexcept { return df_; }

  bool operator==(const EsaIndex&) const = default;

 private:
  friend EsaIndex build_esa_index(const Corpus& corpus);
  friend EsaIndex read_esa_index(std::istream& in, std::istream& concepts);

  std::uint64_t n_sentences_ = 0;
  std::unordered_map<std::string, std::uint32_t> df_;
  std::vector<std::string> concepts_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

inline bool posting_order(const Posting& a, const Posting& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.concept_id < b.concept_id;
}

inline EsaIndex build_esa_index(const Corpus& corpus) {
  EsaIndex index;
  const auto& stats = corpus.stats();
  index.n_sentences_ = stats.n_sentences;
  index.df_ = stats.df;
  index.concepts_.reserve(corpus.by_concept().size());
  for (const auto& [title, _] : corpus.by_concept()) index.concepts_.push_back(title);

  const double n = static_cast<double>(stats.n_sentences);
  std::uint32_t id = 0;
  for (const auto& [title, record_ids] : corpus.by_concept()) {
    // Summing tf over the concept's sentences first gives
    // score(c|w) = (total tf) * idf, one rounding per posting.
    std::unordered_map<std::string, std::uint64_t> tf;
    for (auto rid : record_ids) {
      for (const auto& tok : corpus.records()[rid].tokens) ++tf[casefold(tok)];
    }
    for (const auto& [word, count] : tf) {
      const double score =
          static_cast<double>(count) * std::log(n / static_cast<double>(stats.df.at(word)));
      if (score > 0.0) index.postings_[word].push_back({id, score});
    }
    ++id;
  }
  for (auto& [_, list] : index.postings_) std::sort(list.begin(), list.end(), posting_order);
  return index;
}

namespace detail {

struct WeightedId {
  std::uint32_t id;
  double weight;
};

// Every posting score is (integer tf) * idf(df). Adding the scores in token
// order lets two concepts with mathematically equal weights differ in the last
// bit, which would defeat the title tie-break. Instead the integer tf is
// recovered and accumulated per df level, and each concept's weight is
// formed as sum(count * idf) in ascending df order.
inline std::vector<WeightedId> aggregate(const EsaIndex& index,
                                         std::span<const std::string> tokens) {
  const double n = static_cast<double>(index.n_sentences());
  std::unordered_map<std::uint32_t, std::map<std::uint32_t, std::uint64_t>> counts;
  for (const auto& tok : tokens) {
    const auto word = index_word(tok);
    auto list = index.postings(word);
    if (list.empty()) continue;
    const auto df = index.document_frequency(word);
    const double idf = std::log(n / static_cast<double>(df));
    for (const auto& p : list) {
      counts[p.concept_id][df] += static_cast<std::uint64_t>(std::llround(p.score / idf));
    }
  }
  std::vector<WeightedId> out;
  out.reserve(counts.size());
  for (const auto& [id, by_df] : counts) {
    double w = 0.0;
    for (const auto& [df, count] : by_df) {
      w += static_cast<double>(count) * std::log(n / static_cast<double>(df));
    }
    out.push_back({id, w});
  }
  return out;
}

}  // namespace detail

/// C_ESA: concepts ranked by summed association with every token of the
/// sentence, top `ell_esa` by (weight desc, title asc). Empty when no token
/// is indexed.
inline std::vector<ScoredConcept> esa_candidates(const EsaIndex& index,
                                                 std::span<const std::string> tokens,
                                                 std::size_t ell_esa = kDefaultEllEsa) {
  if (ell_esa == 0) throw std::invalid_argument("ell_esa must be >= 1");
  auto ranked = detail::aggregate(index, tokens);
  auto cmp = [](const detail::WeightedId& a, const detail::WeightedId& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.id < b.id;
  };
  const auto k = std::min(ell_esa, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    cmp);
  std::vector<ScoredConcept> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({index.concept_title(ranked[i].id), ranked[i].weight});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: "<path>" holds the binary container, "<path>.concepts" the
// id<TAB>title sidecar.

inline constexpr std::string_view kEsaMagic{"ENTYESA\0", 8};

inline std::filesystem::path concepts_sidecar(const std::filesystem::path& path) {
  return path.string() + ".concepts";
}

inline void write_esa_index(const EsaIndex& index, std::ostream& out, std::ostream& concepts) {
  binio::write_magic(out, kEsaMagic);
  binio::write_int(out, EsaIndex::kFormatVersion);
  binio::write_int(out, index.n_sentences());
  binio::write_int(out, static_cast<std::uint64_t>(index.n_concepts()));

  std::vector<std::pair<std::string, std::uint32_t>> df(index.df_table().begin(),
                                                        index.df_table().end());
  std::sort(df.begin(), df.end());
  binio::write_int(out, static_cast<std::uint64_t>(df.size()));
  for (const auto& [word, count] : df) {
    binio::write_str(out, word);
    binio::write_int(out, count);
  }

  std::vector<const std::string*> words;
  words.reserve(index.all_postings().size());
  for (const auto& [word, _] : index.all_postings()) words.push_back(&word);
  std::sort(words.begin(), words.end(), [](auto* a, auto* b) { return *a < *b; });
  binio::write_int(out, static_cast<std::uint64_t>(words.size()));
  for (const auto* word : words) {
    const auto& list = index.all_postings().at(*word);
    binio::write_str(out, *word);
    binio::write_int(out, static_cast<std::uint32_t>(list.size()));
    for (const auto& p : list) {
      binio::write_int(out, p.concept_id);
      binio::write_f64(out, p.score);
    }
  }

  for (std::size_t i = 0; i < index.n_concepts(); ++i) {
    concepts << i << '\t' << index.concept_title(static_cast<std::uint32_t>(i)) << '\n';
  }
}

inline EsaIndex read_esa_index(std::istream& in, std::istream& concepts) {
  binio::expect_magic(in, kEsaMagic, "concept index");
  auto version = binio::read_int<std::uint32_t>(in);
  if (version != EsaIndex::kFormatVersion) {
    throw InputError("unsupported index format version " + std::to_string(version));
  }
  EsaIndex index;
  index.n_sentences_ = binio::read_int<std::uint64_t>(in);
  auto n_concepts = binio::read_int<std::uint64_t>(in);

  auto n_df = binio::read_int<std::uint64_t>(in);
  index.df_.reserve(n_df);
  for (std::uint64_t i = 0; i < n_df; ++i) {
    auto word = binio::read_str(in);
    index.df_[std::move(word)] = binio::read_int<std::uint32_t>(in);
  }
  auto n_words = binio::read_int<std::uint64_t>(in);
  index.postings_.reserve(n_words);
  for (std::uint64_t i = 0; i < n_words; ++i) {
    auto word = binio::read_str(in);
    auto n = binio::read_int<std::uint32_t>(in);
    std::vector<Posting> list(n);
    for (auto& p : list) {
      p.concept_id = binio::read_int<std::uint32_t>(in);
      p.score = binio::read_f64(in);
      if (p.concept_id >= n_concepts) throw InputError("posting refers to unknown concept id");
    }
    index.postings_.emplace(std::move(word), std::move(list));
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(concepts, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected id<TAB>title", line_no);
    if (std::stoull(line.substr(0, tab)) != index.concepts_.size()) {
      throw ParseError("concept ids must be dense and ascending", line_no);
    }
    index.concepts_.push_back(line.substr(tab + 1));
  }
  if (index.concepts_.size() != n_concepts) {
    throw InputError("concept sidecar has " + std::to_string(index.concepts_.size()) +
                     " entries, index expects " + std::to_string(n_concepts));
  }
  return index;
}

inline void save_esa_index(const EsaIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  std::ofstream concepts(concepts_sidecar(path), std::ios::binary);
  if (!out || !concepts) throw InputError("cannot write '" + path.string() + "'");
  write_esa_index(index, out, concepts);
}

inline EsaIndex load_esa_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ifstream concepts(concepts_sidecar(path), std::ios::binary);
  if (!concepts) throw InputError("cannot open '" + concepts_sidecar(path).string() + "'");
  return read_esa_index(in, concepts);
}

}  // namespace entyper

#endif  // ENTYPER_ESA_INDEX_HPP_
