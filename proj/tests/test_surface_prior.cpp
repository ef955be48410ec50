#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "entyper/surface_prior.hpp"
#include "support/temp_dir.hpp"

using namespace entyper;

namespace {

MentionSentence linked(std::string id, std::vector<std::string> mention, std::string c) {
  MentionSentence m{std::move(id), std::move(mention), {}, std::move(c)};
  m.mention = {0, m.tokens.size()};
  return m;
}

}  // namespace

TEST(Priors, CountsToProbabilities) {
  auto corpus = Corpus::from_records({linked("0", {"Jordan"}, "A"), linked("1", {"Jordan"}, "A"),
                                      linked("2", {"Jordan"}, "A"), linked("3", {"Jordan"}, "B"),
                                      linked("4", {"Air", "Jordan"}, "C")});
  auto t = build_priors(corpus);
  const auto* d = t.distribution("Jordan");
  ASSERT_NE(d, nullptr);
  ASSERT_EQ(d->size(), 2u);
  EXPECT_EQ((*d)[0], (ConceptProbability{"A", 0.75}));
  EXPECT_EQ((*d)[1], (ConceptProbability{"B", 0.25}));
  EXPECT_EQ(t.distribution("Air Jordan")->front().probability, 1.0);

  auto m = surface_concept(t, std::vector<std::string>{"Jordan"});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->concept_id, "A");
  EXPECT_EQ(m->probability, 0.75);
  EXPECT_FALSE(m->casefolded);
  EXPECT_FALSE(surface_concept(t, std::vector<std::string>{"Nobody"}));
}

TEST(Priors, NoConceptsGivesEmptyTable) {
  auto corpus = Corpus::from_records({{"0", {"x"}, {0, 1}, std::nullopt}});
  EXPECT_TRUE(build_priors(corpus).empty());
}

TEST(Priors, TieGoesToSmallerConcept) {
  PriorTable t;
  t.add("Mercury", "Mercury_(planet)");
  t.add("Mercury", "Mercury_(element)");
  auto m = surface_concept(t, std::vector<std::string>{"Mercury"});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->concept_id, "Mercury_(element)");
  EXPECT_EQ(m->probability, 0.5);
}

TEST(Priors, CasefoldedFallback) {
  PriorTable t;
  t.add("Apple", "Apple_Inc", 3);
  t.add("apple", "Apple_(fruit)", 1);
  auto exact = surface_concept(t, std::vector<std::string>{"apple"});
  ASSERT_TRUE(exact);
  EXPECT_EQ(exact->concept_id, "Apple_(fruit)");
  EXPECT_FALSE(exact->casefolded);

  auto folded = surface_concept(t, std::vector<std::string>{"APPLE"});
  ASSERT_TRUE(folded);
  EXPECT_EQ(folded->concept_id, "Apple_Inc");
  EXPECT_EQ(folded->probability, 0.75);
  EXPECT_TRUE(folded->casefolded);
}

TEST(PriorsProperty, DistributionsAndOrderInvariance) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MentionSentence> recs;
    for (std::size_t i = 0, n = 1 + rng() % 60; i < n; ++i) {
      std::vector<std::string> mention{"S" + std::to_string(rng() % 6)};
      if (rng() % 3 == 0) mention.push_back("x");
      recs.push_back(linked("r" + std::to_string(i), mention, "C" + std::to_string(rng() % 4)));
    }
    auto t = build_priors(Corpus::from_records(recs));
    for (const auto& [surface, _] : t.counts()) {
      const auto* d = t.distribution(surface);
      double sum = 0, mx = 0;
      for (const auto& cp : *d) {
        EXPECT_GT(cp.probability, 0.0);
        sum += cp.probability;
        mx = std::max(mx, cp.probability);
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      std::vector<std::string> toks;
      for (auto part : split_view(surface, ' ')) toks.emplace_back(part);
      EXPECT_EQ(surface_concept(t, toks)->probability, mx);
    }
    std::reverse(recs.begin(), recs.end());
    EXPECT_TRUE(build_priors(Corpus::from_records(recs)) == t);
  }
}

TEST(PriorFiles, RoundTripAndErrors) {
  PriorTable t;
  t.add("Jordan", "A", 3);
  t.add("Jordan", "B", 1);
  t.add("New York", "New_York_City", 7);
  testing_support::TempDir dir;
  save_priors(t, dir / "p.tsv");
  auto loaded = load_priors(dir / "p.tsv");
  EXPECT_TRUE(loaded == t);
  save_priors(loaded, dir / "p2.tsv");
  EXPECT_EQ(testing_support::slurp(dir / "p.tsv"), testing_support::slurp(dir / "p2.tsv"));

  std::istringstream zero("x\tA\t0\n");
  EXPECT_THROW(read_priors(zero), ValidationError);
  std::istringstream dup("x\tA\t1\nx\tA\t2\n");
  EXPECT_THROW(read_priors(dup), ValidationError);
  std::istringstream cols("x\tA\n");
  EXPECT_THROW(read_priors(cols), ParseError);
  std::istringstream num("x\tA\tmany\n");
  EXPECT_THROW(read_priors(num), ParseError);
}
