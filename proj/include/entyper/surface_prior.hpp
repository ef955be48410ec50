#ifndef ENTYPER_SURFACE_PRIOR_HPP_
#define ENTYPER_SURFACE_PRIOR_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/text.hpp"

namespace entyper {

struct ConceptProbability {
  std::string concept_id;
  double probability = 0.0;
  bool operator==(const ConceptProbability&) const = default;
};

/// Pr(concept | surface) estimated from link counts. Each surface also
/// contributes to a casefolded distribution used as a fallback.
class PriorTable {
 public:
  using Distribution = std::vector<ConceptProbability>;

  void add(const std::string& surface, const std::string& concept_id, std::uint64_t count = 1) {
    if (count == 0) return;
    counts_[surface][concept_id] += count;
    dirty_ = true;
  }

  /// Derives the probability tables. Lookups are safe to run concurrently
  /// once the table is sealed.
  void seal() const { refresh(); }

  /// Sorted by (probability desc, concept asc); nullptr for unseen surfaces.
  const Distribution* distribution(const std::string& surface) const {
    refresh();
    auto it = exact_.find(surface);
    return it == exact_.end() ? nullptr : &it->second;
  }

  const Distribution* folded_distribution(const std::string& surface) const {
    refresh();
    auto it = folded_.find(casefold(surface));
    return it == folded_.end() ? nullptr : &it->second;
  }

  std::uint64_t total(const std::string& surface) const {
    auto it = counts_.find(surface);
    if (it == counts_.end()) return 0;
    std::uint64_t n = 0;
    for (const auto& [_, c] : it->second) n += c;
    return n;
  }

  std::size_t size() const noexcept { return counts_.size(); }
  bool empty() const noexcept { return counts_.empty(); }
  const std::map<std::string, std::map<std::string, std::uint64_t>>& counts() const noexcept {
    return counts_;
  }

  bool operator==(const PriorTable& other) const { return counts_ == other.counts_; }

 private:
  static Distribution normalize(const std::map<std::string, std::uint64_t>& counts) {
    std::uint64_t total = 0;
    for (const auto& [_, n] : counts) total += n;
    Distribution d;
    d.reserve(counts.size());
    for (const auto& [c, n] : counts) {
      d.push_back({c, static_cast<double>(n) / static_cast<double>(total)});
    }
    std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) {
      return a.probability > b.probability;
    });
    return d;
  }

  void refresh() const {
    if (!dirty_) return;
    exact_.clear();
    folded_.clear();
    std::map<std::string, std::map<std::string, std::uint64_t>> folded_counts;
    for (const auto& [surface, by_concept] : counts_) {
      exact_.emplace(surface, normalize(by_concept));
      auto& f = folded_counts[casefold(surface)];
      for (const auto& [c, n] : by_concept) f[c] += n;
    }
    for (const auto& [surface, by_concept] : folded_counts) {
      folded_.emplace(surface, normalize(by_concept));
    }
    dirty_ = false;
  }

  std::map<std::string, std::map<std::string, std::uint64_t>> counts_;
  mutable std::unordered_map<std::string, Distribution> exact_;
  mutable std::unordered_map<std::string, Distribution> folded_;
  mutable bool dirty_ = false;
};

/// The surface string of a mention: its tokens joined by single spaces.
inline std::string surface_form(std::span<const std::string> mention_tokens) {
  std::string out;
  for (std::size_t i = 0; i < mention_tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += normalize_token(mention_tokens[i]);
  }
  return out;
}

inline PriorTable build_priors(const Corpus& corpus) {
  PriorTable table;
  for (const auto& r : corpus.records()) {
    if (r.concept_id) table.add(surface_form(r.mention_tokens()), *r.concept_id);
  }
  table.seal();
  return table;
}

struct SurfaceMatch {
  std::string concept_id;
  double probability = 0.0;
  bool casefolded = false;
  bool operator==(const SurfaceMatch&) const = default;
};

/// c_surf = argmax_c Pr(c | m). Exact surface first, then the casefolded
/// surface; ties go to the smaller concept id.
inline std::optional<SurfaceMatch> surface_concept(const PriorTable& table,
                                                   std::span<const std::string> mention_tokens) {
  const auto surface = surface_form(mention_tokens);
  if (const auto* d = table.distribution(surface); d && !d->empty()) {
    return SurfaceMatch{d->front().concept_id, d->front().probability, false};
  }
  if (const auto* d = table.folded_distribution(surface); d && !d->empty()) {
    return SurfaceMatch{d->front().concept_id, d->front().probability, true};
  }
  return std::nullopt;
}

/// surface<TAB>concept<TAB>count, sorted by surface then concept.
inline void write_priors(const PriorTable& table, std::ostream& out) {
  for (const auto& [surface, by_concept] : table.counts()) {
    for (const auto& [c, n] : by_concept) out << surface << '\t' << c << '\t' << n << '\n';
  }
}

inline PriorTable read_priors(std::istream& in) {
  PriorTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_view(line).empty() || line.front() == '#') continue;
    auto cols = split_view(line, '\t');
    if (cols.size() != 3) throw ParseError("expected surface<TAB>concept<TAB>count", line_no);
    std::uint64_t count = 0;
    try {
      std::size_t used = 0;
      const std::string num(trim_view(cols[2]));
      count = std::stoull(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (const std::exception&) {
      throw ParseError("bad count '" + std::string(cols[2]) + "'", line_no);
    }
    auto surface = normalize_token(cols[0]);
    auto c = canonical_concept(cols[1]);
    if (surface.empty() || c.empty()) throw ParseError("empty surface or concept", line_no);
    if (count == 0) throw ValidationError("line " + std::to_string(line_no) + ": zero count");
    if (table.counts().count(surface) && table.counts().at(surface).count(c)) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate entry for '" +
                            surface + "' -> " + c);
    }
    table.add(surface, c, count);
  }
  table.seal();
  return table;
}

inline void save_priors(const PriorTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_priors(table, out);
}

inline PriorTable load_priors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_priors(in);
}

}  // namespace entyper

#endif  // ENTYPER_SURFACE_PRIOR_HPP_
