#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "kgd/detector.hpp"
#include "kgd/error.hpp"
#include "kgd/reconstructor.hpp"

namespace kgd {
namespace {

// a -r-> b, b -r-> c, augmented: triples 0,1 forward and 2,3 reverse.
KnowledgeGraph chain() {
  KnowledgeGraph kg;
  const TypeId t = kg.add_type("T");
  const EntityId a = kg.add_entity("a", t), b = kg.add_entity("b", t), c = kg.add_entity("c", t);
  const RelationId r = kg.add_relation("r");
  kg.add_triple({a, r, b});
  kg.add_triple({b, r, c});
  return augment_reverse(kg);
}

TEST(Convention, ThresholdDirection) {
  EXPECT_TRUE(is_noise_score(0.2, 0.5, NoiseConvention::low_score_is_noise));
  EXPECT_FALSE(is_noise_score(0.5, 0.5, NoiseConvention::low_score_is_noise));
  EXPECT_TRUE(is_noise_score(0.5, 0.5, NoiseConvention::paper_formula));
  EXPECT_FALSE(is_noise_score(0.2, 0.5, NoiseConvention::paper_formula));
  EXPECT_EQ(parse_convention("paper-formula"), NoiseConvention::paper_formula);
  EXPECT_EQ(to_string(NoiseConvention::low_score_is_noise), "low-score-is-noise");
  EXPECT_THROW(parse_convention("high"), Error);
}

TEST(Classify, MergesReverseDirectionWithOr) {
  const KnowledgeGraph kg = chain();
  const std::vector<double> scores = {0.9, 0.8, 0.1, 0.7}, mask = {1, 0.5, 0.25, 0};
  const NoiseReport r = classify(kg, scores, mask, 0.5, NoiseConvention::low_score_is_noise);
  ASSERT_EQ(r.triples.size(), 2u);
  EXPECT_TRUE(r.triples[0].is_noise);  // reverse score 0.1
  EXPECT_FALSE(r.triples[1].is_noise);
  EXPECT_EQ(r.triples[0].reverse_score, 0.1);
  EXPECT_EQ(r.triples[0].reverse_mask, 0.25);
  EXPECT_EQ(r.num_noisy(), 1u);
  EXPECT_EQ(r.noisy().front(), kg.triple(0));

  const NoiseReport p = classify(kg, scores, mask, 0.5, NoiseConvention::paper_formula);
  EXPECT_EQ(p.num_noisy(), 2u);
  EXPECT_THROW(classify(kg, std::vector<double>{0.1}, mask, 0.5, NoiseConvention::paper_formula), Error);
}

TEST(Report, JsonRoundTripAndTsv) {
  const KnowledgeGraph kg = chain();
  const NoiseReport r = classify(kg, std::vector<double>{0.9, 0.3, 0.6, 0.7}, std::vector<double>{1, 1, 1, 1}, 0.5,
                                 NoiseConvention::low_score_is_noise);
  const std::string json = report_json(kg, r);
  EXPECT_EQ(json.back(), '\n');
  const NoiseReport back = parse_report_json(kg, json);
  EXPECT_EQ(report_json(kg, back), json);
  EXPECT_EQ(back.num_noisy(), 1u);
  const std::string tsv = report_tsv(kg, r);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "head\trelation\ttail\tscore\treverse_score\tmask");
  EXPECT_NE(tsv.find("b\tr\tc"), std::string::npos);
  EXPECT_THROW(parse_report_json(kg, "{\"schema\": 2}"), Error);
}

TEST(Evaluate, ConfusionCountsAndZeroDenominators) {
  const KnowledgeGraph kg = chain();
  NoiseLabelSet labels;
  labels.set(kg.triple(0), true);
  labels.set(kg.triple(1), false);
  const auto r = classify(kg, std::vector<double>{0.1, 0.2, 0.9, 0.9}, std::vector<double>{1, 1, 1, 1}, 0.5,
                          NoiseConvention::low_score_is_noise);
  const DetectionRates d = evaluate(r, labels);
  EXPECT_EQ(d.true_positive, 1u);
  EXPECT_EQ(d.false_positive, 1u);
  EXPECT_DOUBLE_EQ(d.precision, 0.5);
  EXPECT_DOUBLE_EQ(d.recall, 1.0);
  EXPECT_DOUBLE_EQ(d.true_negative_rate, 0.0);

  const auto none = classify(kg, std::vector<double>{0.9, 0.9, 0.9, 0.9}, std::vector<double>{1, 1, 1, 1}, 0.5,
                             NoiseConvention::low_score_is_noise);
  const DetectionRates z = evaluate(none, labels);
  EXPECT_DOUBLE_EQ(z.precision, 1.0);
  EXPECT_DOUBLE_EQ(z.recall, 0.0);

  NoiseLabelSet partial;
  partial.set(kg.triple(0), true);
  EXPECT_THROW(evaluate(r, partial), Error);
}

TEST(Compress, KeepsMaskAboveThreshold) {
  const KnowledgeGraph kg = chain();
  const auto kept = compress(kg, std::vector<double>{0.5, 0.49, 1.0, 0.0}, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], kg.triple(0));
  EXPECT_EQ(kept[1], kg.triple(2));
}

TEST(Complete, SkipsKnownAndDuplicateCandidates) {
  const KnowledgeGraph kg = chain();
  ad::Tensor z = ad::Tensor::matrix(3, 2, 1.0), rel = ad::Tensor::matrix(2, 2, 1.0);
  z.at(2, 0) = z.at(2, 1) = -1.0;
  const Triple known = kg.triple(0);
  const Triple good{EntityId(0), RelationId(0), EntityId(0)};
  const Triple bad{EntityId(0), RelationId(0), EntityId(2)};
  const std::vector<Triple> cands = {known, good, bad, good};
  const auto out = complete(kg, z, rel, cands, 0.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].triple, good);
  EXPECT_NEAR(out[0].score, recon_score(good, z, rel), 1e-15);
}

TEST(FitFrequency, GroupsForwardTriplesByPattern) {
  auto [base, labels] = testing::small_benchmark();
  const KnowledgeGraph kg = augment_reverse(base);
  ad::Tensor z = ad::Tensor::matrix(kg.num_entities(), 3), rel = ad::Tensor::matrix(kg.num_relations(), 3, 0.5);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::cos(static_cast<double>(i));
  const auto fit = fit_frequency(kg, z, rel, 1, 4);
  std::size_t total = 0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    total += fit[i].frequency;
    EXPECT_FALSE(kg.is_reverse(fit[i].pattern.relation));
    if (i > 0) EXPECT_GE(fit[i - 1].frequency, fit[i].frequency);
  }
  EXPECT_EQ(total, base.num_triples());
  EXPECT_EQ(fit_frequency(kg, z, rel, 1, 4).front().fit_score, fit.front().fit_score);
  EXPECT_EQ(fit_csv(kg, fit).substr(0, 46), "head_type,relation,tail_type,frequency,fit_sco");
}

}  // namespace
}  // namespace kgd
