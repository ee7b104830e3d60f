#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "kgd/error.hpp"
#include "kgd/grad_check.hpp"
#include "kgd/model.hpp"
#include "kgd/ops.hpp"
#include "kgd/trainer.hpp"

namespace kgd {
namespace {

TrainConfig small_train_config() {
  TrainConfig c;
  c.model.hidden_dim = 8;
  c.model.num_blocks = 2;
  c.epochs = 3;
  c.batch_size = 64;
  c.negatives = 3;
  c.seed = 5;
  return c;
}

TEST(Mcp, HandValuesAndPlateau) {
  EXPECT_NEAR(mcp_penalty(0.5, 10, 1), 0.4875, 1e-15);
  EXPECT_NEAR(mcp_penalty(-0.5, 10, 1), 0.4875, 1e-15);
  EXPECT_DOUBLE_EQ(mcp_penalty(10.0, 10, 1), 5.0);
  EXPECT_DOUBLE_EQ(mcp_penalty(250.0, 10, 1), 5.0);
  EXPECT_DOUBLE_EQ(mcp_penalty(0.0, 10, 1), 0.0);
  EXPECT_NEAR(mcp_penalty(10.0 - 1e-9, 10, 1), mcp_penalty(10.0 + 1e-9, 10, 1), 1e-12);
}

TEST(Mcp, DerivativeMatchesFiniteDifferences) {
  for (double x : {-12.0, -3.0, -0.2, 0.3, 4.0, 9.5, 11.0}) {
    const double h = 1e-6;
    const double fd = (mcp_penalty(x + h, 10, 1) - mcp_penalty(x - h, 10, 1)) / (2 * h);
    EXPECT_NEAR(mcp_derivative(x, 10, 1), fd, 1e-6) << x;
  }
}

TEST(Mcp, NonDecreasingOnHalfLine) {
  double prev = mcp_penalty(0.0, 10, 1);
  for (int i = 1; i <= 10000; ++i) {
    const double v = mcp_penalty(20.0 * i / 10000.0, 10, 1);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Sparsity, MeanPenaltyPlainAndDifferentiable) {
  const std::vector<double> half(7, 0.5);
  EXPECT_NEAR(sparsity_term(half, 10, 1), 0.4875, 1e-15);
  ad::Parameter m("m", ad::Tensor::column({0.1, 0.5, 0.9, 0.3}));
  ad::Tape tape;
  const ad::Var s = sparsity_term(tape.parameter(m), 10, 1);
  EXPECT_NEAR(s.value().item(), sparsity_term(m.value.values(), 10, 1), 1e-15);
  const auto r = ad::grad_check([&](ad::Tape& t) { return sparsity_term(t.parameter(m), 10, 1); }, {&m});
  EXPECT_TRUE(r.passed);
}

TEST(Sparsity, ZeroMaskAndMonotoneInValues) {
  EXPECT_EQ(sparsity_term(std::vector<double>(5, 0.0), 10, 1), 0.0);
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> m(8), lower(8);
    for (std::size_t i = 0; i < 8; ++i) {
      m[i] = u(rng);
      lower[i] = m[i] * 0.9;
    }
    EXPECT_LT(sparsity_term(lower, 10, 1), sparsity_term(m, 10, 1));
  }
}

TEST(ReconstructionLoss, HalfScoresGiveTwoLogTwo) {
  ad::Tape tape;
  const ad::Var pos = tape.constant(ad::Tensor::column({0.5, 0.5}));
  const ad::Var neg = tape.constant(ad::Tensor::column({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}));
  EXPECT_NEAR(reconstruction_loss(pos, neg, 3).value().item(), 2 * std::log(2.0), 1e-15);
}

TEST(ReconstructionLoss, NearZeroForConfidentScores) {
  ad::Tape tape;
  const ad::Var pos = tape.constant(ad::Tensor::column({1 - 1e-7, 1.0}));
  const ad::Var neg = tape.constant(ad::Tensor::column({1e-7, 0.0}));
  EXPECT_NEAR(reconstruction_loss(pos, neg, 1).value().item(), 0.0, 1e-6);
}

TEST(ReconstructionLoss, MatchesLoopAndClampsExtremes) {
  const std::vector<double> p = {0.9, 1.0, 0.3, 0.6}, n = {0.2, 0.0, 0.7, 1.0, 0.4, 0.1, 0.5, 0.95};
  ad::Tape tape;
  const double got =
      reconstruction_loss(tape.constant(ad::Tensor::column(p)), tape.constant(ad::Tensor::column(n)), 2).value().item();
  auto c = [](double s) { return std::clamp(s, kScoreClamp, 1 - kScoreClamp); };
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double term = std::log(c(p[i]));
    for (std::size_t j = 0; j < 2; ++j) term += std::log(1 - c(n[2 * i + j])) / 2.0;
    expected -= term;
  }
  EXPECT_NEAR(got, expected / 4.0, 1e-9);
  EXPECT_TRUE(std::isfinite(got));
}

TEST(NegativeSampling, CorruptsTailsOutsideGraph) {
  const KnowledgeGraph kg = testing::random_graph(30, 3, 2, 60, 1);
  const Triple pos = kg.triple(0);
  const auto neg = negative_sample(kg, pos, 20, 4);
  ASSERT_EQ(neg.size(), 20u);
  for (const Triple& t : neg) {
    EXPECT_EQ(t.head, pos.head);
    EXPECT_EQ(t.relation, pos.relation);
    EXPECT_FALSE(kg.contains(t));
  }
  EXPECT_EQ(negative_sample(kg, pos, 20, 4), neg);
}

TEST(NegativeSampling, ZeroNegativesIsEmpty) {
  const KnowledgeGraph kg = testing::random_graph(10, 2, 2, 20, 1);
  EXPECT_TRUE(negative_sample(kg, kg.triple(0), 0, 1).empty());
}

TEST(NegativeSampling, ThrowsWhenEveryTailIsTaken) {
  KnowledgeGraph kg;
  const TypeId c = kg.add_type("t");
  const EntityId a = kg.add_entity("a", c), b = kg.add_entity("b", c);
  const RelationId r = kg.add_relation("r");
  kg.add_triple({a, r, a});
  kg.add_triple({a, r, b});
  EXPECT_THROW(negative_sample(kg, {a, r, b}, 1, 0), Error);
}

TEST(AdamW, MatchesReferenceUpdates) {
  ad::Parameter w("w", ad::Tensor::column({1.0, -2.0}));
  AdamW::Options o;
  o.learning_rate = 0.1;
  o.weight_decay = 0.01;
  AdamW opt({&w}, o);
  double ref[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  const double grads[3][2] = {{0.5, -1.0}, {0.2, 0.3}, {-0.4, 0.0}};
  for (int step = 0; step < 3; ++step) {
    w.grad = ad::Tensor::column({grads[step][0], grads[step][1]});
    opt.step();
    const double t = step + 1;
    for (int j = 0; j < 2; ++j) {
      const double g = grads[step][j];
      m[j] = 0.9 * m[j] + 0.1 * g;
      v[j] = 0.999 * v[j] + 0.001 * g * g;
      ref[j] *= 1 - 0.1 * 0.01;
      ref[j] -= 0.1 * (m[j] / (1 - std::pow(0.9, t))) / (std::sqrt(v[j] / (1 - std::pow(0.999, t))) + 1e-8);
    }
    EXPECT_NEAR(w.value[0], ref[0], 1e-14);
    EXPECT_NEAR(w.value[1], ref[1], 1e-14);
  }
  EXPECT_EQ(opt.steps(), 3u);
  opt.zero_grad();
  EXPECT_EQ(w.grad[0], 0.0);
}

TEST(Objective, FullGradientMatchesFiniteDifferences) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  const AdjacencyIndex adj(kg);
  TrainConfig config = small_train_config();
  config.model.dropout = 0.2;
  RAEModel model = init_model(kg, config.model, config.gumbel(), 3);
  Rng rng(9);
  const std::vector<Triple> batch(kg.triples().begin(), kg.triples().begin() + 16);
  const StepNoise noise = sample_step_noise(kg, config, batch, rng);
  const auto report = ad::grad_check(
      [&](ad::Tape& tape) { return build_objective(tape, kg, adj, model, config, batch, noise).total; },
      model.parameters());
  EXPECT_TRUE(report.passed) << report.max_rel_error;
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(Objective, TotalCombinesReconstructionAndSparsity) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  TrainConfig config = small_train_config();
  RAEModel model = init_model(kg, config.model, config.gumbel(), 3);
  Rng rng(1);
  const std::vector<Triple> batch(kg.triples().begin(), kg.triples().end());
  const StepNoise noise = frozen_step_noise(kg, config, batch, rng);
  ad::Tape tape;
  const Objective o = build_objective(tape, kg, AdjacencyIndex(kg), model, config, batch, noise);
  EXPECT_NEAR(o.total.value().item(), o.recon.value().item() + config.gamma * o.sparsity.value().item(), 1e-14);
  EXPECT_EQ(o.mask.rows(), kg.num_triples());
}

TEST(Train, DeterministicAndLogsEveryEpoch) {
  auto [base, labels] = testing::small_benchmark();
  const KnowledgeGraph kg = augment_reverse(base);
  const TrainConfig config = small_train_config();
  std::size_t checkpoints = 0;
  TrainConfig with_cb = config;
  with_cb.checkpoint_every = 1;
  const TrainResult a = train(kg, with_cb, [&](const RAEModel&, const std::vector<EpochStats>&) { ++checkpoints; });
  const TrainResult b = train(kg, config);
  EXPECT_EQ(checkpoints, 3u);
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.history[i].total, b.history[i].total);
    EXPECT_NEAR(a.history[i].total, a.history[i].recon_loss + config.gamma * a.history[i].sparsity_loss, 1e-12);
  }
  const auto pa = a.model.parameters(), pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  EXPECT_EQ(history_csv(a.history).substr(0, 45), "epoch,recon_loss,sparsity_loss,total,mean_mas");
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  TrainConfig config = small_train_config();
  config.epochs = 0;
  const TrainResult r = train(kg, config);
  EXPECT_TRUE(r.history.empty());
  RAEModel init = init_model(kg, config.model, config.gumbel(), config.seed);
  const auto a = r.model.parameters();
  const auto b = init.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
}

TEST(Train, OneSmallStepDecreasesFrozenObjective) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  const AdjacencyIndex adj(kg);
  TrainConfig config = small_train_config();
  RAEModel model = init_model(kg, config.model, config.gumbel(), 2);
  Rng rng(6);
  const std::vector<Triple> batch(kg.triples().begin(), kg.triples().end());
  const StepNoise noise = frozen_step_noise(kg, config, batch, rng);
  AdamW opt(model.parameters(), {1e-4, 0.9, 0.999, 1e-8, config.weight_decay});
  double before = 0.0;
  {
    ad::Tape tape;
    const Objective o = build_objective(tape, kg, adj, model, config, batch, noise);
    before = o.total.value().item();
    tape.backward(o.total);
    opt.step();
  }
  ad::Tape tape;
  const double after = build_objective(tape, kg, adj, model, config, batch, noise).total.value().item();
  EXPECT_LT(after, before);
}

TEST(Train, RequiresAugmentedGraphAndValidConfig) {
  const KnowledgeGraph kg = testing::tiny_graph();
  EXPECT_THROW(train(kg, small_train_config()), Error);
  TrainConfig bad = small_train_config();
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = small_train_config();
  bad.gamma = -1;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Model, SaveLoadRoundTripKeepsInference) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  TrainConfig config = small_train_config();
  RAEModel model = init_model(kg, config.model, config.gumbel(), 11);
  const auto path = std::filesystem::temp_directory_path() / "kgd_model_test.kgdp";
  save_model(path, model, R"({"note": "x"})");
  LoadedModel loaded = load_model(path);
  EXPECT_NE(loaded.extra_metadata.find("note"), std::string::npos);
  const Inference a = infer(kg, model), b = infer(kg, loaded.model);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.mask.discretized, b.mask.discretized);

  const KnowledgeGraph other = augment_reverse(testing::random_graph(13, 4, 3, 30, 3));
  EXPECT_THROW(infer(other, loaded.model), Error);
}

TEST(Model, InitIsSeeded) {
  const KnowledgeGraph kg = augment_reverse(testing::tiny_graph());
  const TrainConfig c = small_train_config();
  RAEModel a = init_model(kg, c.model, c.gumbel(), 1), b = init_model(kg, c.model, c.gumbel(), 1),
           d = init_model(kg, c.model, c.gumbel(), 2);
  EXPECT_EQ(a.parameters()[0]->value, b.parameters()[0]->value);
  EXPECT_NE(a.parameters()[0]->value, d.parameters()[0]->value);
  std::set<std::string> names;
  for (auto* p : a.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
}

}  // namespace
}  // namespace kgd
