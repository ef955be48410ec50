#ifndef ENTYPER_EVALUATION_HPP_
#define ENTYPER_EVALUATION_HPP_

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "entyper/context_encoder.hpp"
#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/type_inference.hpp"
#include "entyper/typedef_dsl.hpp"

namespace entyper {

using TypeSet = std::set<std::string>;

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const PRF&) const = default;
};

/// Harmonic mean; 0 when both are 0.
inline double harmonic_f1(double p, double r) {
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

inline PRF make_prf(double p, double r) { return {p, r, harmonic_f1(p, r)}; }

namespace detail {

inline void check_aligned(std::span<const TypeSet> golds, std::span<const TypeSet> preds) {
  if (golds.size() != preds.size()) {
    throw ValidationError("gold/prediction count mismatch: " + std::to_string(golds.size()) +
                          " vs " + std::to_string(preds.size()));
  }
  if (golds.empty()) throw ValidationError("no mentions to evaluate");
}

inline std::size_t intersection_size(const TypeSet& a, const TypeSet& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

}  // namespace detail

/// Fraction of mentions whose predicted set equals the gold set.
inline double strict_accuracy(std::span<const TypeSet> golds, std::span<const TypeSet> preds) {
  detail::check_aligned(golds, preds);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) exact += golds[i] == preds[i];
  return static_cast<double>(exact) / static_cast<double>(golds.size());
}

/// Per-mention precision and recall averaged over mentions. An empty
/// prediction has precision 0 (an empty gold set has recall 0).
inline PRF macro_prf(std::span<const TypeSet> golds, std::span<const TypeSet> preds) {
  detail::check_aligned(golds, preds);
  double p_sum = 0.0, r_sum = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const double hit = static_cast<double>(detail::intersection_size(preds[i], golds[i]));
    if (!preds[i].empty()) p_sum += hit / static_cast<double>(preds[i].size());
    if (!golds[i].empty()) r_sum += hit / static_cast<double>(golds[i].size());
  }
  const double n = static_cast<double>(golds.size());
  return make_prf(p_sum / n, r_sum / n);
}

/// Pooled counts: sum |Tp & Tg| over sum |Tp| (resp. sum |Tg|).
inline PRF micro_prf(std::span<const TypeSet> golds, std::span<const TypeSet> preds) {
  detail::check_aligned(golds, preds);
  std::size_t hit = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    hit += detail::intersection_size(preds[i], golds[i]);
    n_pred += preds[i].size();
    n_gold += golds[i].size();
  }
  const double p = n_pred == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n_pred);
  const double r = n_gold == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n_gold);
  return make_prf(p, r);
}

/// G(t), P(t), C(t): mentions with gold type t, predicted t, and correctly
/// predicted t.
struct TypeTally {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

inline std::map<std::string, TypeTally> tally_types(std::span<const TypeSet> golds,
                                                    std::span<const TypeSet> preds) {
  detail::check_aligned(golds, preds);
  std::map<std::string, TypeTally> tally;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    for (const auto& t : golds[i]) ++tally[t].gold;
    for (const auto& t : preds[i]) {
      auto& e = tally[t];
      ++e.predicted;
      e.correct += golds[i].count(t);
    }
  }
  return tally;
}

enum class Averaging { kMacro, kMicro };

/// Per-type scores. Macro: precision sums C(t)/P(t) weighted by
/// G(t)/sum G, recall sums C(t)/G(t) with the same weights; types with a
/// zero denominator add nothing. Micro: sum C over sum P (resp. sum G).
inline PRF per_type_prf(std::span<const TypeSet> golds, std::span<const TypeSet> preds,
                        Averaging mode) {
  const auto tally = tally_types(golds, preds);
  std::size_t sum_g = 0, sum_p = 0, sum_c = 0;
  for (const auto& [_, e] : tally) {
    sum_g += e.gold;
    sum_p += e.predicted;
    sum_c += e.correct;
  }
  if (mode == Averaging::kMicro) {
    const double p = sum_p == 0 ? 0.0 : static_cast<double>(sum_c) / static_cast<double>(sum_p);
    const double r = sum_g == 0 ? 0.0 : static_cast<double>(sum_c) / static_cast<double>(sum_g);
    return make_prf(p, r);
  }
  double p = 0.0, r = 0.0;
  if (sum_g > 0) {
    for (const auto& [_, e] : tally) {
      const double weight = static_cast<double>(e.gold) / static_cast<double>(sum_g);
      if (e.predicted > 0) {
        p += static_cast<double>(e.correct) / static_cast<double>(e.predicted) * weight;
      }
      if (e.gold > 0) r += static_cast<double>(e.correct) / static_cast<double>(e.gold) * weight;
    }
  }
  return make_prf(p, r);
}

struct MetricsReport {
  std::size_t n_mentions = 0;
  double strict_acc = 0.0;
  PRF macro;
  PRF micro;
  PRF per_type_macro;
  PRF per_type_micro;
  std::map<std::string, TypeTally> per_type;
};

inline MetricsReport evaluate(std::span<const TypeSet> golds, std::span<const TypeSet> preds) {
  MetricsReport r;
  r.n_mentions = golds.size();
  r.strict_acc = strict_accuracy(golds, preds);
  r.macro = macro_prf(golds, preds);
  r.micro = micro_prf(golds, preds);
  r.per_type_macro = per_type_prf(golds, preds, Averaging::kMacro);
  r.per_type_micro = per_type_prf(golds, preds, Averaging::kMicro);
  r.per_type = tally_types(golds, preds);
  return r;
}

inline nlohmann::json to_json(const PRF& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"n_mentions", r.n_mentions},
          {"strict_acc", r.strict_acc},
          {"macro", to_json(r.macro)},
          {"micro", to_json(r.micro)},
          {"per_type_macro", to_json(r.per_type_macro)},
          {"per_type_micro", to_json(r.per_type_micro)}};
}

inline std::string to_text(const MetricsReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "mentions        " << r.n_mentions << "\n";
  os << "strict accuracy " << r.strict_acc << "\n\n";
  os << std::left << std::setw(16) << "metric" << std::right << std::setw(10) << "P"
     << std::setw(10) << "R" << std::setw(10) << "F1" << "\n";
  auto row = [&](const char* name, const PRF& m) {
    os << std::left << std::setw(16) << name << std::right << std::setw(10) << m.precision
       << std::setw(10) << m.recall << std::setw(10) << m.f1 << "\n";
  };
  row("macro", r.macro);
  row("micro", r.micro);
  row("type-macro", r.per_type_macro);
  row("type-micro", r.per_type_micro);
  return os.str();
}

/// type<TAB>G<TAB>P<TAB>C<TAB>precision<TAB>recall<TAB>f1
inline std::string per_type_tsv(const MetricsReport& r) {
  std::ostringstream os;
  os << "type\tgold\tpredicted\tcorrect\tprecision\trecall\tf1\n";
  os << std::setprecision(6);
  for (const auto& [t, e] : r.per_type) {
    const double p = e.predicted ? static_cast<double>(e.correct) / e.predicted : 0.0;
    const double rc = e.gold ? static_cast<double>(e.correct) / e.gold : 0.0;
    os << t << '\t' << e.gold << '\t' << e.predicted << '\t' << e.correct << '\t' << p << '\t'
       << rc << '\t' << harmonic_f1(p, rc) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Coverage of gold types by retrieved concepts

/// coverage(ell) for ell = 1..max_ell: the share of mentions whose gold types
/// are all among the target types of their top-ell candidates.
inline std::vector<std::pair<std::size_t, double>> coverage_curve(
    std::span<const TypeSet> golds, std::span<const std::vector<std::string>> candidates,
    const ConceptTyper& typer, std::size_t max_ell) {
  if (golds.size() != candidates.size()) {
    throw ValidationError("gold/candidate count mismatch");
  }
  std::vector<std::size_t> covered_at(max_ell + 2, 0);
  for (std::size_t m = 0; m < golds.size(); ++m) {
    TypeSet seen;
    std::size_t missing = golds[m].size();
    std::size_t first = missing == 0 ? 1 : max_ell + 1;
    for (std::size_t k = 0; k < candidates[m].size() && k < max_ell && first > max_ell; ++k) {
      for (const auto& t : typer.of(candidates[m][k]).all) {
        if (golds[m].count(t) && seen.insert(t).second) --missing;
      }
      if (missing == 0) first = k + 1;
    }
    ++covered_at[first];
  }
  std::vector<std::pair<std::size_t, double>> curve;
  curve.reserve(max_ell);
  std::size_t covered = 0;
  for (std::size_t ell = 1; ell <= max_ell; ++ell) {
    covered += covered_at[ell];
    curve.emplace_back(ell, golds.empty() ? 0.0
                                          : static_cast<double>(covered) /
                                                static_cast<double>(golds.size()));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Nearest-neighbor type baseline

/// Per target type: the mean SentRep of corpus sentences whose concept has
/// that type.
inline std::map<std::string, DenseVector> build_type_reps(const EncoderBackend& backend,
                                                          const Corpus& corpus,
                                                          const ConceptTyper& typer) {
  std::map<std::string, std::vector<DenseVector>> by_type;
  for (const auto& [c, record_ids] : corpus.by_concept()) {
    const auto& targets = typer.of(c).all;
    if (targets.empty()) continue;
    for (auto rid : record_ids) {
      auto v = sent_rep(backend, corpus.records()[rid]);
      for (const auto& t : targets) by_type[t].push_back(v);
    }
  }
  std::map<std::string, DenseVector> reps;
  for (const auto& [t, vs] : by_type) reps.emplace(t, mean_vector(vs, backend.dim()));
  return reps;
}

struct RankedType {
  std::string type;
  double similarity = 0.0;
};

/// Types ranked by cosine to the query vector (ties by name); top k.
inline std::vector<RankedType> elmonn_rank(const DenseVector& query,
                                           const std::map<std::string, DenseVector>& type_reps,
                                           std::size_t k) {
  if (type_reps.empty()) throw ValidationError("no type representations");
  std::vector<RankedType> ranked;
  ranked.reserve(type_reps.size());
  for (const auto& [t, v] : type_reps) ranked.push_back({t, cosine(query, v)});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.similarity > b.similarity;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

inline std::vector<RankedType> elmonn_baseline(const MentionSentence& s,
                                               const EncoderBackend& backend,
                                               const std::map<std::string, DenseVector>& type_reps,
                                               std::size_t k,
                                               std::optional<std::size_t> ordinal = std::nullopt) {
  return elmonn_rank(sent_rep(backend, s, ordinal), type_reps, k);
}

/// Turns a full type ranking into a prediction record: the best-ranked coarse
/// type, plus the compatible fine types among the first k.
inline TypePrediction elmonn_prediction(const DenseVector& query,
                                        const std::map<std::string, DenseVector>& type_reps,
                                        std::size_t k) {
  const auto ranked = elmonn_rank(query, type_reps, type_reps.size());
  TypePrediction p;
  p.branch = Branch::kContext;
  p.trace.push_back("branch=nearest-neighbor");
  for (const auto& r : ranked) {
    if (type_depth(r.type) == 1) {
      p.coarse = r.type;
      break;
    }
  }
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    std::ostringstream os;
    os << std::setprecision(6) << ranked[i].type << "=" << ranked[i].similarity;
    p.trace.push_back(os.str());
    if (p.coarse && type_depth(ranked[i].type) > 1 && is_compatible(ranked[i].type, *p.coarse)) {
      p.fine.insert(ranked[i].type);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------

/// Seeded split that holds out `fraction` of n items (e.g. a 10% development
/// sample). Uses its own Fisher-Yates so the split is identical across
/// standard libraries.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> dev_split(
    std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction in [0,1]");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  const auto n_dev = static_cast<std::size_t>(static_cast<double>(n) * fraction + 0.5);
  std::vector<std::size_t> dev(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(n_dev), idx.end());
  std::sort(dev.begin(), dev.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(dev), std::move(rest)};
}

}  // namespace entyper

#endif  // ENTYPER_EVALUATION_HPP_
