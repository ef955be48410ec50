#ifndef ENTYPER_TYPE_INFERENCE_HPP_
#define ENTYPER_TYPE_INFERENCE_HPP_

// Count-ratio type inference over retrieved concepts.
//
// Given the index candidates C_ESA, the consistency-ranked C_ELMo and the
// surface concept c_surf, the inference:
//
//   1. keeps the coarse types of c_surf whose share among C_ELMo exceeds their
//      share among C_ESA (tau_surf);
//   2. trusts the surface concept when Pr(c_surf|m) >= lambda and tau_surf is
//      non-empty: coarse type by consistency vote over c_surf's coarse types,
//      fine types of c_surf kept when their count ratio to the coarse type
//      within {c_surf} + C_ELMo reaches eta_s;
//   3. otherwise picks the most consistent concept among those of C_ELMo with
//      an enriched coarse type (all of C_ELMo when there is none), votes its
//      coarse type, and keeps fine types of C_ELMo whose count ratio to the
//      coarse type within C_ELMo reaches eta_c.
//
// The ratio r(t, t'; C, C') = (Count(t;C)/|C|) / (Count(t';C')/|C'|) with
// r(t; C, C') = r(t, t; C, C') and r(t, t'; C) = r(t, t'; C, C).

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "entyper/context_encoder.hpp"
#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/esa_index.hpp"
#include "entyper/surface_prior.hpp"
#include "entyper/typedef_dsl.hpp"

namespace entyper {

struct InferenceParams {
  double lambda = 0.5;
  double eta_s = 0.8;
  double eta_c = 0.3;
  std::size_t ell_esa = kDefaultEllEsa;
  std::size_t ell_elmo = kDefaultEllElmo;
  /// Emitted when retrieval comes back empty; empty string means abstain.
  std::string fallback_target;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
    if (!(eta_s > 0.0)) throw ValidationError("eta_s must be positive");
    if (!(eta_c > 0.0)) throw ValidationError("eta_c must be positive");
    if (ell_esa == 0) throw ValidationError("ell_esa must be >= 1");
    if (ell_elmo == 0) throw ValidationError("ell_elmo must be >= 1");
  }
};

/// The taxonomy's catch-all ("/other") when it defines one, else abstain.
inline std::string default_fallback_target(const TypeDefinition& defs) {
  return defs.has_target("/other") ? "/other" : std::string();
}

/// T(c) for every concept of a type table, split by depth. Built once;
/// read-only afterwards.
class ConceptTyper {
 public:
  struct Targets {
    std::set<std::string> all;
    std::set<std::string> coarse;
    std::set<std::string> fine;
  };

  ConceptTyper() = default;

  ConceptTyper(const TypeDefinition& defs, const ConceptTypeTable& table) {
    for (const auto& [c, types] : table.entries()) set(c, apply_type_map(types, defs));
  }

  /// Assigns target types directly (tests and synthetic setups).
  void set(const std::string& c, std::set<std::string> targets) {
    Targets t;
    auto split = split_coarse_fine(targets);
    t.all = std::move(targets);
    t.coarse = std::move(split.coarse);
    t.fine = std::move(split.fine);
    targets_[c] = std::move(t);
  }

  /// Concepts absent from the type table have no targets.
  const Targets& of(const std::string& c) const {
    static const Targets kNone;
    auto it = targets_.find(c);
    return it == targets_.end() ? kNone : it->second;
  }

  std::size_t size() const noexcept { return targets_.size(); }

 private:
  std::unordered_map<std::string, Targets> targets_;
};

/// Count(t; C) = |{c in C : t in T(c)}|.
inline std::size_t count_type(const std::string& t, std::span<const std::string> concepts,
                              const ConceptTyper& typer) {
  std::size_t n = 0;
  for (const auto& c : concepts) n += typer.of(c).all.count(t);
  return n;
}

inline std::size_t count_type(const std::string& t, std::span<const std::string> concepts,
                              const TypeDefinition& defs, const ConceptTypeTable& table) {
  std::size_t n = 0;
  for (const auto& c : concepts) {
    if (const auto* types = table.find(c)) n += apply_type_map(*types, defs).count(t);
  }
  return n;
}

/// r(t, t'; C, C'). A zero denominator gives +inf when the numerator is
/// positive and 0 otherwise.
inline double ratio_r(const std::string& t, const std::string& t_prime,
                      std::span<const std::string> c, std::span<const std::string> c_prime,
                      const ConceptTyper& typer) {
  if (c.empty() || c_prime.empty()) throw std::invalid_argument("ratio over an empty collection");
  const double num = static_cast<double>(count_type(t, c, typer)) / static_cast<double>(c.size());
  const double den =
      static_cast<double>(count_type(t_prime, c_prime, typer)) / static_cast<double>(c_prime.size());
  if (den == 0.0) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return num / den;
}

inline std::vector<std::string> concept_ids(std::span<const ConceptConsistency> ranked) {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.concept_id);
  return out;
}

struct CoarseVote {
  std::string type;
  double vote = 0.0;
  std::size_t count = 0;
};

/// Consistency-weighted vote among the coarse types of `c`: each concept of
/// C_ELMo adds its consistency to every coarse type it carries. Ties go to
/// the higher Count over C_ELMo, then the smaller type name.
inline std::vector<CoarseVote> coarse_votes(const std::string& c,
                                            std::span<const ConceptConsistency> c_elmo,
                                            const ConceptTyper& typer) {
  const auto ids = concept_ids(c_elmo);
  std::vector<CoarseVote> votes;
  for (const auto& t : typer.of(c).coarse) {
    CoarseVote v{t, 0.0, count_type(t, ids, typer)};
    for (const auto& cc : c_elmo) {
      if (typer.of(cc.concept_id).coarse.count(t)) v.vote += cc.consistency;
    }
    votes.push_back(std::move(v));
  }
  std::stable_sort(votes.begin(), votes.end(), [](const CoarseVote& a, const CoarseVote& b) {
    if (a.vote != b.vote) return a.vote > b.vote;
    if (a.count != b.count) return a.count > b.count;
    return a.type < b.type;
  });
  return votes;
}

/// SelectCoarse(c). Requires c to have at least one coarse type.
inline std::string select_coarse(const std::string& c, std::span<const ConceptConsistency> c_elmo,
                                 const ConceptTyper& typer) {
  auto votes = coarse_votes(c, c_elmo, typer);
  if (votes.empty()) throw std::logic_error("select_coarse: concept " + c + " has no coarse type");
  return votes.front().type;
}

// ---------------------------------------------------------------------------
// Predictions

enum class Branch { kSurface, kContext, kFallback };

inline std::string_view branch_name(Branch b) {
  switch (b) {
    case Branch::kSurface: return "surface";
    case Branch::kContext: return "context";
    case Branch::kFallback: return "fallback";
  }
  return "?";
}

struct PredictedConcept {
  std::string title;
  std::optional<double> consistency;
  bool operator==(const PredictedConcept&) const = default;
};

struct TypePrediction {
  /// Empty when the prediction abstains.
  std::optional<std::string> coarse;
  std::set<std::string> fine;
  bool used_surface = false;
  Branch branch = Branch::kContext;
  std::vector<PredictedConcept> concepts;
  std::vector<std::string> trace;

  /// coarse plus fine, the set scored by the metrics.
  std::set<std::string> types() const {
    std::set<std::string> out = fine;
    if (coarse) out.insert(*coarse);
    return out;
  }
};

/// The retrieved candidates a decision is made from.
struct CandidateSets {
  std::vector<std::string> c_esa;
  std::vector<ConceptConsistency> c_elmo;
  std::optional<SurfaceMatch> c_surf;
  /// Consistency of c_surf when it has a representation.
  std::optional<double> c_surf_consistency;
};

namespace detail {

inline std::string fmt_num(double x) {
  if (std::isinf(x)) return "inf";
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

inline std::string fmt_set(const std::set<std::string>& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& x : s) {
    if (!first) out += ",";
    out += x;
    first = false;
  }
  return out + "}";
}

inline void trace_votes(const std::string& c, std::span<const ConceptConsistency> c_elmo,
                        const ConceptTyper& typer, std::vector<std::string>& trace) {
  std::string line = "votes for " + c + ":";
  for (const auto& v : coarse_votes(c, c_elmo, typer)) {
    line += " " + v.type + "=" + fmt_num(v.vote) + "/" + std::to_string(v.count);
  }
  trace.push_back(std::move(line));
}

inline TypePrediction fallback_prediction(const InferenceParams& params, std::string reason) {
  TypePrediction p;
  p.branch = Branch::kFallback;
  p.trace.push_back("branch=fallback");
  p.trace.push_back(std::move(reason));
  if (!params.fallback_target.empty()) {
    p.coarse = params.fallback_target;
    p.trace.push_back("fallback target " + params.fallback_target);
  } else {
    p.trace.push_back("abstain");
  }
  return p;
}

}  // namespace detail

/// Decides the coarse type and fine types from already retrieved candidates.
inline TypePrediction infer_from_candidates(const CandidateSets& cands,
                                            const InferenceParams& params,
                                            const ConceptTyper& typer) {
  if (cands.c_esa.empty()) return detail::fallback_prediction(params, "no index candidates");
  if (cands.c_elmo.empty()) {
    return detail::fallback_prediction(params, "no candidate has a concept representation");
  }

  const std::vector<std::string>& c_esa = cands.c_esa;
  const std::vector<std::string> c_elmo = concept_ids(cands.c_elmo);
  std::vector<std::string> trace;
  trace.push_back("|C_ESA|=" + std::to_string(c_esa.size()) +
                  " |C_ELMo|=" + std::to_string(c_elmo.size()));

  auto enriched = [&](const std::string& t) { return ratio_r(t, t, c_elmo, c_esa, typer) > 1.0; };

  std::set<std::string> tau_surf;
  if (cands.c_surf) {
    const auto& cs = *cands.c_surf;
    for (const auto& t : typer.of(cs.concept_id).coarse) {
      const double r = ratio_r(t, t, c_elmo, c_esa, typer);
      trace.push_back("r(" + t + "; C_ELMo, C_ESA)=" + detail::fmt_num(r));
      if (r > 1.0) tau_surf.insert(t);
    }
    trace.push_back("c_surf=" + cs.concept_id + " Pr=" + detail::fmt_num(cs.probability) +
                    (cs.casefolded ? " (casefolded)" : "") + " tau_surf=" + detail::fmt_set(tau_surf));
  } else {
    trace.push_back("c_surf=none");
  }

  TypePrediction p;
  for (const auto& cc : cands.c_elmo) p.concepts.push_back({cc.concept_id, cc.consistency});

  if (cands.c_surf && cands.c_surf->probability >= params.lambda && !tau_surf.empty()) {
    const auto& c_surf = cands.c_surf->concept_id;
    p.branch = Branch::kSurface;
    p.used_surface = true;
    trace.insert(trace.begin(), "branch=surface");
    detail::trace_votes(c_surf, cands.c_elmo, typer, trace);
    const auto coarse = select_coarse(c_surf, cands.c_elmo, typer);
    trace.push_back("coarse=" + coarse);

    std::vector<std::string> c_tilde{c_surf};
    for (const auto& c : c_elmo) {
      if (c != c_surf) c_tilde.push_back(c);
    }
    for (const auto& tf : typer.of(c_surf).fine) {
      if (!is_compatible(tf, coarse)) continue;
      const double r = ratio_r(tf, coarse, c_tilde, c_tilde, typer);
      trace.push_back("r(" + tf + ", " + coarse + "; C~)=" + detail::fmt_num(r));
      if (r >= params.eta_s) p.fine.insert(tf);
    }
    p.coarse = coarse;
    if (std::find(c_elmo.begin(), c_elmo.end(), c_surf) == c_elmo.end()) {
      p.concepts.push_back({c_surf, cands.c_surf_consistency});
    }
  } else {
    p.branch = Branch::kContext;
    trace.insert(trace.begin(), "branch=context");

    std::vector<const ConceptConsistency*> pool;
    for (const auto& cc : cands.c_elmo) {
      const auto& coarse = typer.of(cc.concept_id).coarse;
      if (std::any_of(coarse.begin(), coarse.end(), enriched)) pool.push_back(&cc);
    }
    trace.push_back("|C~_ELMo|=" + std::to_string(pool.size()));
    if (pool.empty()) {
      for (const auto& cc : cands.c_elmo) pool.push_back(&cc);
    }
    // argmax consistency; the first maximum in C_ELMo order wins.
    const ConceptConsistency* best = nullptr;
    for (const auto* cc : pool) {
      if (best == nullptr || cc->consistency > best->consistency) best = cc;
    }
    if (typer.of(best->concept_id).coarse.empty()) {
      trace.push_back(best->concept_id + " has no coarse type");
      best = nullptr;
      for (const auto* cc : pool) {
        if (typer.of(cc->concept_id).coarse.empty()) continue;
        if (best == nullptr || cc->consistency > best->consistency) best = cc;
      }
      if (best == nullptr) {
        auto fb = detail::fallback_prediction(params, "no retrieved concept maps to a coarse type");
        fb.concepts = std::move(p.concepts);
        trace.front() = fb.trace.front();
        trace.insert(trace.end(), fb.trace.begin() + 1, fb.trace.end());
        fb.trace = std::move(trace);
        return fb;
      }
    }
    trace.push_back("selected concept " + best->concept_id + " consistency=" +
                    detail::fmt_num(best->consistency));
    detail::trace_votes(best->concept_id, cands.c_elmo, typer, trace);
    const auto coarse = select_coarse(best->concept_id, cands.c_elmo, typer);
    trace.push_back("coarse=" + coarse);

    std::set<std::string> fine_candidates;
    for (const auto& c : c_elmo) {
      const auto& f = typer.of(c).fine;
      fine_candidates.insert(f.begin(), f.end());
    }
    for (const auto& tf : fine_candidates) {
      if (!is_compatible(tf, coarse)) continue;
      const double r = ratio_r(tf, coarse, c_elmo, c_elmo, typer);
      trace.push_back("r(" + tf + ", " + coarse + "; C_ELMo)=" + detail::fmt_num(r));
      if (r >= params.eta_c) p.fine.insert(tf);
    }
    p.coarse = coarse;
  }
  trace.push_back("fine=" + detail::fmt_set(p.fine));
  p.trace = std::move(trace);
  return p;
}

/// Read-only resources shared by every query.
struct TypingResources {
  const EsaIndex& index;
  const EncoderBackend& backend;
  const ConceptRepStore& store;
  const PriorTable& priors;
  const ConceptTyper& typer;
};

/// Types one mention end to end: retrieval, re-ranking, surface lookup and
/// inference. `ordinal` is the query's position, used by keyed backends.
inline TypePrediction infer_types(const MentionSentence& s, const InferenceParams& params,
                                  const TypingResources& res,
                                  std::optional<std::size_t> ordinal = std::nullopt) {
  params.validate();
  validate_span(s);
  CandidateSets cands;
  const auto esa = esa_candidates(res.index, s.tokens, params.ell_esa);
  cands.c_esa.reserve(esa.size());
  for (const auto& sc : esa) cands.c_esa.push_back(sc.concept_id);

  std::vector<std::string> notes;
  if (!esa.empty()) {
    const auto rep = sent_rep(res.backend, s, ordinal);
    auto reranked = rerank(esa, rep, res.store, params.ell_elmo);
    cands.c_elmo = std::move(reranked.concepts);
    notes = std::move(reranked.notes);
    cands.c_surf = surface_concept(res.priors, s.mention_tokens());
    if (cands.c_surf && res.store.contains(cands.c_surf->concept_id)) {
      cands.c_surf_consistency = consistency(cands.c_surf->concept_id, rep, res.store);
    }
  }
  auto p = infer_from_candidates(cands, params, res.typer);
  p.trace.insert(p.trace.end(), notes.begin(), notes.end());
  return p;
}

// ---------------------------------------------------------------------------
// Prediction records

inline nlohmann::json to_json(const TypePrediction& p) {
  nlohmann::json j;
  j["coarse"] = p.coarse ? nlohmann::json(*p.coarse) : nlohmann::json(nullptr);
  j["fine"] = p.fine;
  j["used_surface"] = p.used_surface;
  auto concepts = nlohmann::json::array();
  for (const auto& c : p.concepts) {
    concepts.push_back({{"title", c.title},
                        {"consistency", c.consistency ? nlohmann::json(*c.consistency)
                                                      : nlohmann::json(nullptr)}});
  }
  j["concepts"] = std::move(concepts);
  j["trace"] = p.trace;
  return j;
}

inline std::string to_prediction_line(const TypePrediction& p) { return to_json(p).dump(); }

/// Reads back the scored part of a prediction record (coarse and fine).
inline std::set<std::string> parse_prediction_types(std::string_view line, std::size_t line_no = 1) {
  try {
    auto j = nlohmann::json::parse(line);
    std::set<std::string> out;
    if (auto it = j.find("coarse"); it != j.end() && !it->is_null()) {
      out.insert(ascii_lower(it->get<std::string>()));
    }
    if (auto it = j.find("fine"); it != j.end()) {
      for (const auto& t : *it) out.insert(ascii_lower(t.get<std::string>()));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed prediction: ") + e.what(), line_no);
  }
}

}  // namespace entyper

#endif  // ENTYPER_TYPE_INFERENCE_HPP_
