// tests/combine_eval_test.cpp

// Copyright 2026  The asrfuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "asrfuse/combine/fixtures.hpp"
#include "asrfuse/combine/grid_search.hpp"
#include "asrfuse/combine/joint_decode.hpp"
#include "asrfuse/combine/nbest.hpp"
#include "asrfuse/combine/weights.hpp"
#include "asrfuse/eval/alignment.hpp"
#include "asrfuse/eval/classification.hpp"
#include "asrfuse/eval/significance.hpp"
#include "asrfuse/eval/wer.hpp"
#include "test_util.hpp"

namespace asrfuse {
namespace {

using testing::RandomMatrix;

std::vector<std::string> Inventory(std::size_t v) {
  std::vector<std::string> inv;
  for (std::size_t i = 0; i < v; ++i) inv.push_back("k" + std::to_string(i));
  return inv;
}

FrameScoreStream RandomStream(std::size_t t, std::size_t v, Rng *rng) {
  return {"u", Inventory(v), RandomMatrix(t, v, rng), 10.0};
}

// ---- weights ----------------------------------------------------------------

TEST(Weights, PresetsAndRatios) {
  EXPECT_EQ(FindWeightPreset("uaspeech-3way").weights.RatioString(), "8:5:5");
  EXPECT_EQ(FindWeightPreset("uaspeech-2way-a").weights.RatioString(), "9:8");
  EXPECT_EQ(FindWeightPreset("pitt-3way").weights.RatioString(), "5:2:8");
  const auto &r = FindWeightPreset("uaspeech-rescore");
  EXPECT_EQ(r.mode, CombineMode::kRescore);
  EXPECT_EQ(r.weights.names, (std::vector<std::string>{"ctc", "attention", "tdnn"}));
  EXPECT_EQ(r.weights.values, (std::vector<double>{0.9, 0.001, 0.1}));
  EXPECT_THROW(FindWeightPreset("nope"), ValidationError);
  for (const auto &p : WeightPresets()) EXPECT_NO_THROW(p.weights.Validate()) << p.name;
}

TEST(Weights, ValidationAndNormalization) {
  const CombinationWeights w = CombinationWeights::Positional({9, 8}).Normalized();
  EXPECT_DOUBLE_EQ(w.values[0] + w.values[1], 1.0);
  EXPECT_NEAR(w.values[0], 9.0 / 17.0, 1e-15);
  EXPECT_THROW(CombinationWeights::Positional({0, 0}).Validate(), ValidationError);
  EXPECT_THROW(CombinationWeights::Positional({1, -1}).Validate(), ValidationError);
  EXPECT_THROW((CombinationWeights{{"a", "a"}, {1, 1}}.Validate()), ValidationError);
  EXPECT_THROW(ParseCombineMode("vote"), ValidationError);
}

// ---- joint decoding ---------------------------------------------------------

TEST(JointDecode, UnitWeightReproducesStreamBitExactly) {
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const FrameScoreStream a = RandomStream(7, 5, &rng), b = RandomStream(7, 5, &rng);
    const JointDecodeResult r = JointDecode({a, b}, {1.0, 0.0});
    ASSERT_EQ(r.fused.scores.size(), a.scores.size());
    EXPECT_EQ(std::memcmp(r.fused.scores.data().data(), a.scores.data().data(),
                          a.scores.size() * sizeof(double)),
              0);
    EXPECT_EQ(r.best, FrameArgmax(a.scores));
  }
}

TEST(JointDecode, ArgmaxInvariantToPositiveScaling) {
  Rng rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + rng.Index(2);
    std::vector<FrameScoreStream> streams;
    std::vector<double> w, scaled;
    const double c = rng.Uniform(0.01, 100.0);
    for (std::size_t i = 0; i < k; ++i) {
      streams.push_back(RandomStream(9, 6, &rng));
      w.push_back(rng.Uniform(0.1, 10.0));
      scaled.push_back(c * w.back());
    }
    EXPECT_EQ(JointDecode(streams, w).best, JointDecode(streams, scaled).best) << "rep " << rep;
  }
}

TEST(JointDecode, WorkedExample) {
  FrameScoreStream a{"u", {"x", "y"}, Tensor::FromRows({{-1.0, -2.0}}), 10.0};
  FrameScoreStream b{"u", {"x", "y"}, Tensor::FromRows({{-3.0, -0.5}}), 10.0};
  const JointDecodeResult r = JointDecode({a, b}, {9.0, 8.0});
  EXPECT_DOUBLE_EQ(r.fused.scores(0, 0), -9.0 - 24.0);
  EXPECT_DOUBLE_EQ(r.fused.scores(0, 1), -18.0 - 4.0);
  EXPECT_EQ(r.best, (std::vector<std::size_t>{1}));
}

TEST(JointDecode, TiesGoToLowestToken) {
  EXPECT_EQ(FrameArgmax(Tensor::FromRows({{1.0, 1.0, 0.0}, {0.0, 2.0, 2.0}})),
            (std::vector<std::size_t>{0, 1}));
}

TEST(JointDecode, MismatchesAreReported) {
  Rng rng(3);
  FrameScoreStream a = RandomStream(4, 3, &rng);
  FrameScoreStream shorter = RandomStream(3, 3, &rng);
  FrameScoreStream other_inv = RandomStream(4, 3, &rng);
  other_inv.inventory[2] = "zz";
  FrameScoreStream other_id = RandomStream(4, 3, &rng);
  other_id.utt_id = "v";
  EXPECT_THROW(JointDecode({a, shorter}, {1, 1}), ValidationError);
  EXPECT_THROW(JointDecode({a, other_inv}, {1, 1}), ValidationError);
  EXPECT_THROW(JointDecode({a, other_id}, {1, 1}), ValidationError);
  EXPECT_THROW(JointDecode({a, a}, {1}), ValidationError);
  EXPECT_THROW(JointDecode({}, {}), ValidationError);
  FrameScoreStream bad = a;
  bad.scores(0, 0) = std::nan("");
  EXPECT_THROW(JointDecode({a, bad}, {1, 1}), ValidationError);
}

TEST(JointDecode, CollapseReadout) {
  const std::vector<std::string> inv{"<blk>", "a", "b"};
  EXPECT_EQ(CollapseReadout({1, 1, 0, 1, 2, 2, 0}, inv), (std::vector<std::string>{"a", "a", "b"}));
  EXPECT_EQ(CollapseReadout({0, 0}, inv), std::vector<std::string>{});
}

// ---- N-best rescoring -------------------------------------------------------

NBestList RandomNBest(std::size_t n, Rng *rng) {
  NBestList l{"u", {}};
  for (std::size_t i = 0; i < n; ++i) {
    Hypothesis h;
    h.text = "h" + std::to_string(i);
    h.tokens = {h.text};
    // Coarse integer costs so ties occur.
    h.scores = {{"ctc", static_cast<double>(rng->Index(5))},
                {"attention", static_cast<double>(rng->Index(5))},
                {"tdnn", static_cast<double>(rng->Index(5))}};
    l.hyps.push_back(h);
  }
  return l;
}

TEST(Rescore, UnitWeightVectorReproducesSingleSystemRanking) {
  Rng rng(4);
  const std::vector<std::string> names{"ctc", "attention", "tdnn"};
  for (int rep = 0; rep < 50; ++rep) {
    const NBestList l = RandomNBest(12, &rng);
    for (std::size_t k = 0; k < 3; ++k) {
      CombinationWeights w{names, {0, 0, 0}};
      w.values[k] = 1.0;
      std::vector<std::size_t> expect(l.hyps.size());
      std::iota(expect.begin(), expect.end(), 0);
      std::stable_sort(expect.begin(), expect.end(), [&](std::size_t a, std::size_t b) {
        return l.hyps[a].scores.at(names[k]) < l.hyps[b].scores.at(names[k]);
      });
      const RescoreResult r = RescoreNBest(l, w);
      EXPECT_EQ(r.order, expect);
      EXPECT_EQ(r.best, expect[0]);
    }
  }
}

TEST(Rescore, WeightedSumAndTieBreak) {
  NBestList l{"u",
              {{"a", {"a"}, {{"ctc", 2.0}, {"tdnn", 1.0}}},
               {"b", {"b"}, {{"ctc", 1.0}, {"tdnn", 3.0}}},
               {"c", {"c"}, {{"ctc", 1.0}, {"tdnn", 2.0}}}}};
  const RescoreResult r = RescoreNBest(l, {{"ctc", "tdnn"}, {1.0, 1.0}});
  EXPECT_EQ(r.combined, (std::vector<double>{3.0, 4.0, 3.0}));
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(r.reranked.hyps[1].text, "c");
  EXPECT_THROW(RescoreNBest(l, {{"lm"}, {1.0}}), ValidationError);
}

TEST(Rescore, TruncateKeepsTopByOriginalRank) {
  Rng rng(5);
  const NBestList l = RandomNBest(40, &rng);
  const NBestList t = TruncateNBest(l);
  ASSERT_EQ(t.hyps.size(), kDefaultNBest);
  EXPECT_EQ(t.hyps.back().text, "h29");
  EXPECT_EQ(TruncateNBest(l, 100).hyps.size(), 40u);
  EXPECT_THROW(TruncateNBest(l, 0), ValidationError);
}

// ---- grid search ------------------------------------------------------------

TEST(Grid, SimplexEnumeration) {
  const auto g = SimplexGrid(2, 0.5);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[0], (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(g[2], (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(SimplexGrid(3, 0.1).size(), 66u);  // C(12, 2)
  for (const auto &w : SimplexGrid(3, 0.25)) {
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  }
  EXPECT_THROW(SimplexGrid(2, 0.3), ValidationError);
  EXPECT_THROW(SimplexGrid(0, 0.1), ValidationError);
}

TEST(Grid, ParallelMatchesSerialAndPropagatesErrors) {
  auto scorer = [](const std::vector<double> &w) { return std::abs(w[0] - 0.3) + w[2]; };
  const GridSearchResult a = GridSearchWeights(3, 0.1, scorer, 1);
  const GridSearchResult b = GridSearchWeights(3, 0.1, scorer, 4);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.evaluated, 66u);
  EXPECT_NEAR(a.weights[0], 0.3, 1e-12);
  EXPECT_THROW(GridSearchWeights(2, 0.5, [](const std::vector<double> &) { return std::nan(""); }),
               NumericalError);
  EXPECT_THROW(GridSearchWeights(
                   2, 0.5,
                   [](const std::vector<double> &w) -> double {
                     if (w[0] > 0.7) FailValidation("boom");
                     return 0.0;
                   },
                   3),
               ValidationError);
}

double FixtureWer(const ComplementaryFixture &f, const std::vector<double> &w) {
  const JointDecodeResult r = JointDecode({f.system1, f.system2}, w);
  return AlignAndCount(f.reference, CollapseReadout(r.best, f.system1.inventory, "")).counts.Rate();
}

TEST(Grid, ComplementaryFixtureSolvedExactly) {
  const ComplementaryFixture f = MakeComplementaryFixture();
  EXPECT_GT(FixtureWer(f, {1.0, 0.0}), 0.0);
  EXPECT_GT(FixtureWer(f, {0.0, 1.0}), 0.0);
  const GridSearchResult r =
      GridSearchWeights(2, 0.1, [&](const std::vector<double> &w) { return FixtureWer(f, w); });
  EXPECT_NEAR(r.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-12);
  EXPECT_EQ(r.score, 0.0);
  // (0.5, 0.5) is the only zero-error grid point.
  std::size_t zeros = 0;
  for (const auto &w : SimplexGrid(2, 0.1)) zeros += FixtureWer(f, w) == 0.0;
  EXPECT_EQ(zeros, 1u);
}

// ---- alignment and WER ------------------------------------------------------

TEST(Alignment, WorkedExample) {
  const AlignmentResult r = AlignAndCount({"the", "cat", "sat", "down"}, {"a", "cat", "sat", "up", "now"});
  EXPECT_EQ(r.counts.substitutions + r.counts.deletions + r.counts.insertions, 3u);
  EXPECT_EQ(r.counts.insertions, 1u);
  EXPECT_DOUBLE_EQ(r.counts.Rate(), 75.0);
  EXPECT_EQ(r.pairs.front().op, EditOp::kSubstitution);
  EXPECT_THROW(AlignAndCount({}, {"a"}), ValidationError);
}

TEST(Alignment, MatchesRecursiveOracleExhaustivelyUpToLength4) {
  // Length 6 is covered by the acceptance runner.
  const std::vector<std::string> symbols{"a", "b", "c"};
  std::vector<std::vector<std::string>> strings{{}};
  for (std::size_t len = 1; len <= 4; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto &s : strings)
      if (s.size() == len - 1)
        for (const auto &c : symbols) {
          next.push_back(s);
          next.back().push_back(c);
        }
    strings.insert(strings.end(), next.begin(), next.end());
  }
  for (const auto &ref : strings) {
    if (ref.empty()) continue;
    for (const auto &hyp : strings) {
      const ErrorCounts c = AlignAndCount(ref, hyp).counts;
      ASSERT_EQ(c.errors(), testing::RecursiveEditDistance(ref, hyp));
      ASSERT_EQ(ref.size() - c.deletions + c.insertions, hyp.size());
    }
  }
}

TEST(Alignment, Tokenizers) {
  EXPECT_EQ(TokenizeWords("  Hello   World\t"), (std::vector<std::string>{"hello", "world"}));
  EXPECT_EQ(TokenizeWords("Hello", false), (std::vector<std::string>{"Hello"}));
  EXPECT_EQ(TokenizeChars("Ab c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(TokenizeChars("你好"), (std::vector<std::string>{"你", "好"}));
  EXPECT_THROW(TokenizeChars(std::string("\xe4\xbd", 2)), ValidationError);
  EXPECT_THROW(ParseScoreMode("ser"), ValidationError);
}

ScoredTranscriptSet SetFrom(const std::vector<std::vector<std::string>> &rows) {
  // rows: utt_id, ref, hyp, severity, gender
  ScoredTranscriptSet s;
  for (const auto &r : rows)
    s.records.push_back({r[0], TokenizeWords(r[1]), TokenizeWords(r[2]),
                         {{"severity", r[3]}, {"gender", r[4]}}});
  return s;
}

TEST(ErrorRate, PooledAndNestedGroups) {
  const ScoredTranscriptSet s = SetFrom({{"u1", "a b c d", "a b c d", "low", "f"},
                                         {"u2", "a b", "a x", "high", "f"},
                                         {"u3", "a b c d", "b c", "high", "m"}});
  const ErrorRateReport r = ErrorRate(s, {"severity", "gender"});
  EXPECT_EQ(r.overall.ref_length, 10u);
  EXPECT_EQ(r.overall.errors(), 3u);
  EXPECT_DOUBLE_EQ(r.overall.Rate(), 30.0);
  std::map<std::vector<std::string>, double> rates;
  for (const auto &g : r.groups) rates[g.path] = g.counts.Rate();
  EXPECT_DOUBLE_EQ(rates.at({"high"}), 50.0);
  EXPECT_DOUBLE_EQ(rates.at({"low"}), 0.0);
  EXPECT_DOUBLE_EQ(rates.at({"high", "m"}), 50.0);
  EXPECT_DOUBLE_EQ(rates.at({"high", "f"}), 50.0);
  EXPECT_EQ(r.groups.size(), 5u);
  EXPECT_THROW(ErrorRate(s, {"age"}), ValidationError);
}

TEST(ErrorRate, DuplicateIdsRejected) {
  const ScoredTranscriptSet s = SetFrom({{"u1", "a", "a", "x", "f"}, {"u1", "b", "b", "x", "f"}});
  EXPECT_THROW(ErrorRate(s), ValidationError);
}

// ---- significance -----------------------------------------------------------

TEST(Significance, ReferenceFixture) {
  const SignificanceReport r = MatchedPairsTest({2, 0, 2, 0});
  ASSERT_TRUE(r.z.has_value());
  EXPECT_NEAR(*r.z, 1.732, 1e-3);
  EXPECT_NEAR(*r.p_value, 0.0833, 1e-3);
  EXPECT_FALSE(r.significant);
  EXPECT_FALSE(r.degenerate);
}

TEST(Significance, DegenerateCases) {
  const SignificanceReport one = MatchedPairsTest({3});
  EXPECT_TRUE(one.degenerate);
  EXPECT_FALSE(one.p_value.has_value());
  const SignificanceReport zeros = MatchedPairsTest({0, 0, 0});
  EXPECT_TRUE(zeros.degenerate);
  EXPECT_EQ(*zeros.p_value, 1.0);
  const SignificanceReport constant = MatchedPairsTest({1, 1, 1});
  EXPECT_TRUE(constant.degenerate);
  EXPECT_FALSE(constant.z.has_value());
  EXPECT_FALSE(constant.p_value.has_value());
  EXPECT_THROW(MatchedPairsTest({1, 2}, 1.5), ValidationError);
}

TEST(Significance, MapssweOverUtterances) {
  const ScoredTranscriptSet a = SetFrom({{"u1", "a b", "x y", "s", "f"},
                                         {"u2", "a b", "a b", "s", "f"},
                                         {"u3", "a b", "x y", "s", "f"},
                                         {"u4", "a b", "a b", "s", "f"}});
  ScoredTranscriptSet b = a;
  for (auto &r : b.records) r.hyp = r.ref;
  std::reverse(b.records.begin(), b.records.end());  // matched by id, not position
  const SignificanceReport r = Mapsswe(a, b);
  EXPECT_EQ(r.differences, (std::vector<double>{2, 0, 2, 0}));
  EXPECT_NEAR(*r.p_value, 0.0833, 1e-3);
  b.records[0].ref = {"other"};
  EXPECT_THROW(Mapsswe(a, b), ValidationError);
  b.records.pop_back();
  EXPECT_THROW(Mapsswe(a, b), ValidationError);
}

TEST(Significance, LargeConsistentDifferenceIsSignificant) {
  std::vector<double> d;
  for (int i = 0; i < 30; ++i) d.push_back(1.0 + (i % 3));
  const SignificanceReport r = MatchedPairsTest(d);
  EXPECT_TRUE(r.significant);
  EXPECT_LT(*r.p_value, 1e-6);
}

// ---- classification ---------------------------------------------------------

TEST(Classification, AccuracyIdentityOnRandomMatrices) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    ConfusionCounts c{rng.Index(50), rng.Index(50), rng.Index(50), rng.Index(50)};
    c.tp += 1;
    c.tn += 1;
    const ClassificationMetrics m = MetricsFromCounts(c);
    const double p = static_cast<double>(c.tp + c.fn), n = static_cast<double>(c.tn + c.fp);
    EXPECT_NEAR(*m.accuracy, (*m.sensitivity * p + *m.specificity * n) / (p + n), 1e-9);
  }
}

TEST(Classification, FromLabels) {
  const ClassificationMetrics m = ComputeClassificationMetrics(
      {"ad", "ad", "hc", "hc", "ad"}, {"ad", "hc", "hc", "ad", "ad"}, "ad");
  EXPECT_EQ(m.counts.tp, 2u);
  EXPECT_EQ(m.counts.fp, 1u);
  EXPECT_EQ(m.counts.tn, 1u);
  EXPECT_EQ(m.counts.fn, 1u);
  EXPECT_DOUBLE_EQ(*m.accuracy, 60.0);
  const ClassificationMetrics none = ComputeClassificationMetrics({"hc"}, {"hc"}, "ad");
  EXPECT_FALSE(none.sensitivity.has_value());
  EXPECT_THROW(ComputeClassificationMetrics({"a", "b", "c"}, {"a", "b", "c"}, "a"), ValidationError);
  EXPECT_THROW(ComputeClassificationMetrics({"a"}, {"a", "b"}, "a"), ValidationError);
}

TEST(Classification, MajorityVote) {
  const std::vector<std::vector<std::string>> votes{
      {"ad", "hc", "hc", "x"}, {"ad", "ad", "hc", "y"}, {"hc", "hc", "ad", "z"}, {"hc", "ad", "ad", "y"}};
  // Subject 0: 2-2 split involving the positive class goes positive.
  EXPECT_EQ(MajorityVote(votes, "ad"), (std::vector<std::string>{"ad", "ad", "ad", "y"}));
  const std::vector<std::vector<std::string>> three{{"b", "a"}, {"c", "a"}, {"a", "c"}};
  EXPECT_EQ(MajorityVote(three, "z"), (std::vector<std::string>{"a", "a"}));
  const std::vector<std::map<std::string, std::string>> keyed{{{"s1", "ad"}, {"s2", "hc"}},
                                                              {{"s1", "ad"}, {"s2", "ad"}},
                                                              {{"s1", "hc"}, {"s2", "hc"}}};
  const auto fused = MajorityVote(keyed, "ad");
  EXPECT_EQ(fused.at("s1"), "ad");
  EXPECT_EQ(fused.at("s2"), "hc");
  EXPECT_THROW(MajorityVote(std::vector<std::vector<std::string>>{{"a"}, {"a", "b"}}, "a"),
               ValidationError);
}

}  // namespace
}  // namespace asrfuse
