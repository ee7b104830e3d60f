#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "kgd/error.hpp"
#include "kgd/grad_check.hpp"
#include "kgd/masker.hpp"
#include "kgd/ops.hpp"

namespace kgd {
namespace {

// Ratio form of the default variant, without the stable rewrite.
double ratio_relaxation(double q, double p, double pp, double tau, double eps = 1e-10) {
  const double sq = 1.0 / (1.0 + std::exp(-q));
  const double s1q = 1.0 / (1.0 + std::exp(-(1.0 - q)));
  const double a = std::exp(std::log(std::max(sq + p, eps)) / tau);
  const double b = std::exp(std::log(std::max(s1q + pp, eps)) / tau);
  return a / (a + b);
}

double binary_entropy(double b) {
  if (b <= 0.0 || b >= 1.0) return 0.0;
  return -b * std::log(b) - (1 - b) * std::log(1 - b);
}

TEST(Gumbel, HandValueAtZero) {
  EXPECT_NEAR(gumbel_discretize(0.0, 0.0, 0.0, GumbelConfig{}), 0.40616, 1e-5);
  GumbelConfig standard;
  standard.variant = GumbelVariant::standard;
  EXPECT_DOUBLE_EQ(gumbel_discretize(0.0, 0.0, 0.0, standard), 0.5);
}

TEST(Gumbel, StableFormAgreesWithDirectFormula) {
  Rng rng(1);
  std::uniform_real_distribution<double> q(-6, 6), n(-2, 3);
  for (double tau : {5.0, 1.0, 0.5, 0.1}) {
    GumbelConfig c;
    c.temperature = tau;
    for (int i = 0; i < 2000; ++i) {
      const double a = q(rng), p = n(rng), pp = n(rng);
      const double direct = ratio_relaxation(a, p, pp, tau);
      if (std::isfinite(direct)) EXPECT_NEAR(gumbel_discretize(a, p, pp, c), direct, 1e-12);
    }
  }
}

TEST(Gumbel, OutputStaysInsideUnitIntervalAtSmallTemperature) {
  Rng rng(2);
  std::normal_distribution<double> q(0, 5);
  for (GumbelVariant v : {GumbelVariant::paper, GumbelVariant::standard}) {
    GumbelConfig c;
    c.variant = v;
    c.temperature = 0.01;
    const ad::Tensor p = sample_gumbel(5000, rng), pp = sample_gumbel(5000, rng);
    for (std::size_t i = 0; i < 5000; ++i) {
      const double b = gumbel_discretize(q(rng), p[i], pp[i], c);
      EXPECT_TRUE(std::isfinite(b));
      EXPECT_GE(b, 0.0);
      EXPECT_LE(b, 1.0);
    }
  }
}

TEST(Gumbel, SamplesHaveEulerMascheroniMean) {
  const ad::Tensor g = sample_gumbel(200000, 3);
  double mean = 0.0;
  for (double v : g.values()) mean += v;
  mean /= 200000.0;
  EXPECT_NEAR(mean, 0.5772, 0.01);
  EXPECT_EQ(sample_gumbel(10, 3), sample_gumbel(10, 3));
}

TEST(Gumbel, EntropyFallsWithTemperature) {
  Rng rng(4);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> logits(2000);
  for (double& q : logits) q = n(rng);
  const ad::Tensor p = sample_gumbel(2000, rng), pp = sample_gumbel(2000, rng);
  double previous = INFINITY;
  for (double tau : {5.0, 1.0, 0.5, 0.1}) {
    GumbelConfig c;
    c.temperature = tau;
    double h = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) h += binary_entropy(gumbel_discretize(logits[i], p[i], pp[i], c));
    EXPECT_LT(h, previous) << "tau " << tau;
    previous = h;
  }
}

TEST(Gumbel, DifferentiableVersionMatchesScalarAndGradients) {
  for (GumbelVariant v : {GumbelVariant::paper, GumbelVariant::standard}) {
    GumbelConfig c;
    c.variant = v;
    c.temperature = 0.7;
    ad::Parameter q("q", ad::Tensor::column({-2.0, -0.3, 0.0, 0.8, 3.0}));
    const ad::Tensor p = sample_gumbel(5, 5), pp = sample_gumbel(5, 6);
    ad::Tape tape;
    const ad::Var b = gumbel_discretize(tape.parameter(q), p, pp, c);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(b.value()[i], gumbel_discretize(q.value[i], p[i], pp[i], c), 1e-15);
    const auto r = ad::grad_check(
        [&](ad::Tape& t) { return ad::reduce_sum(gumbel_discretize(t.parameter(q), p, pp, c)); }, {&q});
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(Gumbel, DeterministicModeIgnoresNoise) {
  GumbelConfig c;
  c.deterministic = true;
  EXPECT_EQ(gumbel_discretize(0.4, 3.0, -1.0, c), gumbel_discretize(0.4, 0.0, 0.0, c));
}

TEST(Gumbel, ConfigValidation) {
  GumbelConfig c;
  c.temperature = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = GumbelConfig{};
  c.epsilon = 1e-3;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_gumbel_variant(to_string(GumbelVariant::standard)), GumbelVariant::standard);
  EXPECT_THROW(parse_gumbel_variant("hard"), Error);
}

TEST(Masker, MlpMatchesConcatenatedRowProduct) {
  rgcn::RGCNConfig config;
  config.hidden_dim = 4;
  config.num_blocks = 2;
  Rng rng(7);
  MaskerParams m = init_masker(config, 3, 2, rng);
  for (double& v : m.mlp_b1.value.values()) v = 0.1;
  m.mlp_b2.value[0] = -0.2;
  const ad::Tensor h = [] {
    ad::Tensor t = ad::Tensor::matrix(3, 4);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::sin(static_cast<double>(i));
    return t;
  }();
  const std::vector<Triple> ts = {{EntityId(0), RelationId(1), EntityId(2)}, {EntityId(2), RelationId(0), EntityId(2)}};
  ad::Tape tape;
  const ad::Var q = mlp_logits(tape, tape.constant(h), m, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::vector<double> x;
    for (double v : h.row(ts[i].head.index())) x.push_back(v);
    for (double v : m.relation_embeddings.value.row(ts[i].relation.index())) x.push_back(v);
    for (double v : h.row(ts[i].tail.index())) x.push_back(v);
    double out = m.mlp_b2.value[0];
    for (std::size_t k = 0; k < 4; ++k) {
      double z = m.mlp_b1.value[k];
      for (std::size_t j = 0; j < 12; ++j) z += x[j] * m.mlp_w1.value.at(j, k);
      out += std::max(z, 0.0) * m.mlp_w2.value[k];
    }
    EXPECT_NEAR(q.value()[i], out, 1e-14);
  }
}

TEST(Masker, ScoreMaskIsConsistent) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  rgcn::RGCNConfig config;
  config.hidden_dim = 8;
  config.num_blocks = 2;
  Rng rng(8);
  MaskerParams m = init_masker(config, kg.num_types(), kg.num_relations(), rng);
  const MaskScores s = score_mask(kg, AdjacencyIndex(kg), config, m, GumbelConfig{});
  ASSERT_EQ(s.size(), kg.num_triples());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s.sigmoid[i], 1.0 / (1.0 + std::exp(-s.logit[i])), 1e-15);
    EXPECT_NEAR(s.discretized[i], ratio_relaxation(s.logit[i], 0, 0, 1.0), 1e-12);
  }
}

}  // namespace
}  // namespace kgd
