#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/model.hpp"
#include "kgd/tape.hpp"

namespace kgd {

struct TrainConfig {
  rgcn::RGCNConfig model;
  double gamma = 0.5;
  double temperature = 1.0;
  GumbelVariant gumbel_variant = GumbelVariant::paper;
  double mcp_alpha = 10.0;
  double mcp_lambda = 1.0;
  double learning_rate = 1e-3;
  double weight_decay = 5e-5;
  std::size_t epochs = 30;
  std::size_t batch_size = 4096;
  std::size_t negatives = 10;
  std::uint64_t seed = 41504;
  std::size_t checkpoint_every = 0;  // epochs; 0 disables the callback

  void validate() const;
  GumbelConfig gumbel() const;
};

// lambda |x| - x^2 / (2 alpha) for |x| <= alpha lambda, alpha lambda^2 / 2 beyond.
double mcp_penalty(double x, double alpha, double lambda);
double mcp_derivative(double x, double alpha, double lambda);

// Mean MCP over plain mask values.
double sparsity_term(std::span<const double> mask, double alpha, double lambda);
ad::Var sparsity_term(ad::Var mask, double alpha, double lambda);

// k tail-corrupted copies of `positive` whose triple is not in kg. Throws
// after 100 k rejected draws.
std::vector<Triple> negative_sample(const KnowledgeGraph& kg, const Triple& positive,
                                    std::size_t k, Rng& rng);
std::vector<Triple> negative_sample(const KnowledgeGraph& kg, const Triple& positive,
                                    std::size_t k, std::uint64_t seed);

// -mean_i [ log s(pos_i) + sum_j log(1 - s(neg_ij)) / k ], scores clamped to
// [1e-7, 1 - 1e-7]. Negatives are stored row-major: k per positive.
ad::Var reconstruction_loss(ad::Var positive_scores, ad::Var negative_scores, std::size_t k);

inline constexpr double kScoreClamp = 1e-7;

// Decoupled-weight-decay Adam.
class AdamW {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-5;
  };

  AdamW(std::vector<ad::Parameter*> params, Options options);

  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }

 private:
  std::vector<ad::Parameter*> params_;
  Options opt_;
  std::vector<ad::Tensor> m_, v_;
  std::size_t t_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double recon_loss = 0.0;
  double sparsity_loss = 0.0;
  double total = 0.0;  // recon_loss + gamma * sparsity_loss
  double mean_mask = 0.0;
};

// Everything random in one training step, drawn up front so that a step can
// be replayed with the same noise.
struct StepNoise {
  rgcn::DropoutMasks masker_dropout;
  rgcn::DropoutMasks decoder_dropout;
  ad::Tensor gumbel_p;
  ad::Tensor gumbel_p_prime;
  std::vector<Triple> negatives;
};

StepNoise sample_step_noise(const KnowledgeGraph& kg, const TrainConfig& config,
                            std::span<const Triple> batch, Rng& rng);

// Zero-noise, dropout-free StepNoise (still with sampled negatives).
StepNoise frozen_step_noise(const KnowledgeGraph& kg, const TrainConfig& config,
                            std::span<const Triple> batch, Rng& rng);

struct Objective {
  ad::Var total;
  ad::Var recon;
  ad::Var sparsity;
  ad::Var mask;
};

// Records the full objective for one batch on `tape`.
Objective build_objective(ad::Tape& tape, const KnowledgeGraph& kg,
                          const AdjacencyIndex& adjacency, RAEModel& model,
                          const TrainConfig& config, std::span<const Triple> batch,
                          const StepNoise& noise);

struct TrainResult {
  RAEModel model;
  std::vector<EpochStats> history;
};

using CheckpointCallback = std::function<void(const RAEModel&, const std::vector<EpochStats>&)>;

// kg must be reverse-augmented. Throws NonFiniteError naming the first
// non-finite tensor if the loss blows up.
TrainResult train(const KnowledgeGraph& kg, const TrainConfig& config,
                  const CheckpointCallback& on_checkpoint = {});

// `epoch,recon_loss,sparsity_loss,total,mean_mask`
std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace kgd
