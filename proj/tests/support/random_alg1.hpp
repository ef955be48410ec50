#pragma once

// Random decision instances for the inference step, produced in two views:
// the library's CandidateSets + ConceptTyper and the oracle's plain maps.
// Consistencies and priors come from small discrete sets so that ties and
// threshold boundaries get exercised.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "entyper/type_inference.hpp"
#include "oracles/alg1_oracle.hpp"

namespace testing_support {

struct Alg1Instance {
  entyper::CandidateSets cands;
  entyper::ConceptTyper typer;
  entyper::InferenceParams params;
  oracle::Alg1Input oracle_input;
};

inline Alg1Instance random_alg1_instance(std::mt19937_64& rng) {
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  static const double kCons[] = {0.1, 0.3, 0.5, 0.5, 0.7, 0.9};
  static const double kPrior[] = {0.2, 0.5, 0.6, 1.0};
  static const double kEta[] = {0.2, 0.3, 0.5, 0.8, 1.0, 1.5};

  // Up to 12 target types: some coarse, the rest fine under a random parent.
  const std::size_t n_types = 2 + pick(11);
  const std::size_t n_coarse = 1 + pick(std::min<std::size_t>(4, n_types - 1));
  std::vector<std::string> types;
  for (std::size_t i = 0; i < n_coarse; ++i) types.push_back("/t" + std::to_string(i));
  for (std::size_t i = n_coarse; i < n_types; ++i) {
    types.push_back(types[pick(n_coarse)] + "/f" + std::to_string(i));
  }

  Alg1Instance inst;
  oracle::Alg1Input& in = inst.oracle_input;
  const std::size_t n_concepts = 1 + pick(20);
  std::vector<std::string> concepts;
  for (std::size_t i = 0; i < n_concepts; ++i) {
    concepts.push_back("c" + std::to_string(i));
    if (pick(8) == 0) continue;  // untyped concept
    std::set<std::string> t;
    for (std::size_t k = pick(4); k > 0; --k) {
      const auto& ty = types[pick(types.size())];
      t.insert(ty);
      // Mostly keep fine types together with their parent.
      if (entyper::type_depth(ty) > 1 && pick(4) != 0) t.insert(ty.substr(0, ty.find('/', 1)));
    }
    in.T[concepts.back()] = t;
    inst.typer.set(concepts.back(), t);
  }

  // C_ESA: a shuffled subset; occasionally empty.
  std::vector<std::string> pool = concepts;
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::size_t n_esa = pick(30) == 0 ? 0 : 1 + pick(pool.size());
  in.c_esa.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_esa));

  // C_ELMo: a subset of C_ESA ordered by consistency; occasionally empty.
  if (!in.c_esa.empty() && pick(25) != 0) {
    std::vector<std::pair<std::string, double>> elmo;
    for (const auto& c : in.c_esa) {
      if (pick(3) != 0) elmo.emplace_back(c, kCons[pick(std::size(kCons))]);
    }
    std::stable_sort(elmo.begin(), elmo.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    in.c_elmo = std::move(elmo);
  }

  if (pick(5) != 0) {
    // Favor surface concepts that appear in the re-ranked list.
    if (!in.c_elmo.empty() && pick(2) == 0) {
      in.c_surf = in.c_elmo[pick(in.c_elmo.size())].first;
    } else {
      in.c_surf = concepts[pick(concepts.size())];
    }
    in.pr_surf = kPrior[pick(std::size(kPrior))];
  }
  in.eta_s = kEta[pick(std::size(kEta))];
  in.eta_c = kEta[pick(std::size(kEta))];
  in.fallback = pick(2) == 0 ? "" : "/other";

  inst.params.lambda = in.lambda;
  inst.params.eta_s = in.eta_s;
  inst.params.eta_c = in.eta_c;
  inst.params.fallback_target = in.fallback;
  inst.cands.c_esa = in.c_esa;
  for (const auto& [c, v] : in.c_elmo) inst.cands.c_elmo.push_back({c, v});
  if (in.c_surf) inst.cands.c_surf = entyper::SurfaceMatch{*in.c_surf, in.pr_surf, false};
  return inst;
}

/// Empty string when the two outputs agree, else a description.
inline std::string compare_with_oracle(const entyper::TypePrediction& p,
                                       const oracle::Alg1Output& o) {
  std::string diff;
  if (p.coarse != o.coarse) {
    diff += "coarse " + p.coarse.value_or("<none>") + " vs " + o.coarse.value_or("<none>") + "; ";
  }
  if (p.fine != o.fine) diff += "fine differs; ";
  if (p.used_surface != o.used_surface) diff += "used_surface differs; ";
  if (std::string(entyper::branch_name(p.branch)) != o.branch) {
    diff += "branch " + std::string(entyper::branch_name(p.branch)) + " vs " + o.branch + "; ";
  }
  return diff;
}

}  // namespace testing_support
