#include "kgd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kgd/error.hpp"
#include "kgd/ops.hpp"

namespace kgd {

void TrainConfig::validate() const {
  model.validate();
  if (!(gamma >= 0.0)) throw Error("train: gamma must be non-negative");
  if (!(temperature > 0.0)) throw Error("train: temperature must be positive");
  if (!(mcp_alpha > 0.0) || !(mcp_lambda > 0.0)) throw Error("train: mcp alpha and lambda must be positive");
  if (!(learning_rate > 0.0)) throw Error("train: learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw Error("train: weight decay must be non-negative");
  if (negatives < 1) throw Error("train: need at least one negative per positive");
  if (batch_size < 1) throw Error("train: batch size must be positive");
}

GumbelConfig TrainConfig::gumbel() const {
  GumbelConfig g;
  g.temperature = temperature;
  g.variant = gumbel_variant;
  return g;
}

double mcp_penalty(double x, double alpha, double lambda) {
  const double a = std::abs(x);
  if (a <= alpha * lambda) return lambda * a - x * x / (2.0 * alpha);
  return alpha * lambda * lambda / 2.0;
}

double mcp_derivative(double x, double alpha, double lambda) {
  const double a = std::abs(x);
  if (a > alpha * lambda) return 0.0;
  const double sign = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
  return sign * lambda - x / alpha;
}

double sparsity_term(std::span<const double> mask, double alpha, double lambda) {
  if (mask.empty()) return 0.0;
  double s = 0.0;
  for (double x : mask) s += mcp_penalty(x, alpha, lambda);
  return s / static_cast<double>(mask.size());
}

ad::Var sparsity_term(ad::Var mask, double alpha, double lambda) {
  ad::Var p = ad::elementwise(
      mask, "mcp", [=](double x) { return mcp_penalty(x, alpha, lambda); },
      [=](double x) { return mcp_derivative(x, alpha, lambda); });
  return ad::reduce_mean(p);
}

std::vector<Triple> negative_sample(const KnowledgeGraph& kg, const Triple& positive,
                                    std::size_t k, Rng& rng) {
  std::vector<Triple> out;
  if (k == 0) return out;
  if (kg.num_entities() < 2) throw Error("negative sampling needs at least two entities");
  out.reserve(k);
  const std::size_t budget = 100 * k;
  std::size_t attempts = 0;
  while (out.size() < k) {
    if (attempts++ >= budget) {
      throw Error("negative sampling: no unobserved tail for " + kg.describe(positive) +
                  " after " + std::to_string(budget) + " attempts");
    }
    Triple t = positive;
    t.tail = EntityId(uniform_index(rng, kg.num_entities()));
    if (!kg.contains(t)) out.push_back(t);
  }
  return out;
}

std::vector<Triple> negative_sample(const KnowledgeGraph& kg, const Triple& positive,
                                    std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  return negative_sample(kg, positive, k, rng);
}

ad::Var reconstruction_loss(ad::Var positive_scores, ad::Var negative_scores, std::size_t k) {
  const std::size_t n = positive_scores.rows();
  if (n == 0) throw Error("reconstruction loss: empty batch");
  if (negative_scores.rows() != n * k) {
    throw ShapeError("reconstruction loss: " + std::to_string(negative_scores.rows()) +
                     " negative scores for " + std::to_string(n) + " positives and k=" +
                     std::to_string(k));
  }
  ad::Var pos = ad::log(ad::clamp(positive_scores, kScoreClamp, 1.0 - kScoreClamp));
  ad::Var neg_complement = ad::add_scalar(ad::scale(negative_scores, -1.0), 1.0);
  ad::Var neg = ad::log(ad::clamp(neg_complement, kScoreClamp, 1.0 - kScoreClamp));
  ad::Var sum = ad::add(ad::reduce_sum(pos), ad::scale(ad::reduce_sum(neg), 1.0 / static_cast<double>(k)));
  return ad::scale(sum, -1.0 / static_cast<double>(n));
}

AdamW::AdamW(std::vector<ad::Parameter*> params, Options options)
    : params_(std::move(params)), opt_(options) {
  for (const ad::Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i]->value.values();
    auto g = params_[i]->grad.values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * g[j];
      v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * g[j] * g[j];
      w[j] -= opt_.learning_rate * opt_.weight_decay * w[j];
      w[j] -= opt_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + opt_.epsilon);
    }
  }
}

void AdamW::zero_grad() {
  for (ad::Parameter* p : params_) p->zero_grad();
}

StepNoise sample_step_noise(const KnowledgeGraph& kg, const TrainConfig& config,
                            std::span<const Triple> batch, Rng& rng) {
  StepNoise noise;
  noise.masker_dropout = rgcn::sample_dropout_masks(config.model, kg.num_entities(), rng);
  noise.decoder_dropout = rgcn::sample_dropout_masks(config.model, kg.num_entities(), rng);
  noise.gumbel_p = sample_gumbel(kg.num_triples(), rng);
  noise.gumbel_p_prime = sample_gumbel(kg.num_triples(), rng);
  noise.negatives.reserve(batch.size() * config.negatives);
  for (const Triple& t : batch) {
    for (const Triple& n : negative_sample(kg, t, config.negatives, rng)) noise.negatives.push_back(n);
  }
  return noise;
}

StepNoise frozen_step_noise(const KnowledgeGraph& kg, const TrainConfig& config,
                            std::span<const Triple> batch, Rng& rng) {
  TrainConfig no_dropout = config;
  no_dropout.model.dropout = 0.0;
  StepNoise noise;
  noise.masker_dropout = rgcn::sample_dropout_masks(no_dropout.model, kg.num_entities(), rng);
  noise.decoder_dropout = noise.masker_dropout;
  noise.gumbel_p = ad::Tensor::matrix(kg.num_triples(), 1);
  noise.gumbel_p_prime = noise.gumbel_p;
  for (const Triple& t : batch) {
    for (const Triple& n : negative_sample(kg, t, config.negatives, rng)) noise.negatives.push_back(n);
  }
  return noise;
}

Objective build_objective(ad::Tape& tape, const KnowledgeGraph& kg,
                          const AdjacencyIndex& adjacency, RAEModel& model,
                          const TrainConfig& config, std::span<const Triple> batch,
                          const StepNoise& noise) {
  Objective obj;
  ad::Var logits = masker_logits(tape, kg, adjacency, model.config, model.masker, &noise.masker_dropout);
  obj.mask = gumbel_discretize(logits, noise.gumbel_p, noise.gumbel_p_prime, model.gumbel);
  ad::Var z = decode_embeddings(tape, kg, adjacency, model.config, model.recon, obj.mask,
                                &noise.decoder_dropout);
  ad::Var pos = score_triples(tape, z, model.recon, batch);
  ad::Var neg = score_triples(tape, z, model.recon, noise.negatives);
  obj.recon = reconstruction_loss(pos, neg, config.negatives);
  obj.sparsity = sparsity_term(obj.mask, config.mcp_alpha, config.mcp_lambda);
  obj.total = ad::add(obj.recon, ad::scale(obj.sparsity, config.gamma));
  return obj;
}

TrainResult train(const KnowledgeGraph& kg, const TrainConfig& config,
                  const CheckpointCallback& on_checkpoint) {
  config.validate();
  if (!kg.augmented()) throw Error("train: graph must be reverse-augmented first");
  TrainResult result;
  result.model = init_model(kg, config.model, config.gumbel(), config.seed);
  RAEModel& model = result.model;
  const AdjacencyIndex adjacency(kg);

  AdamW::Options opt;
  opt.learning_rate = config.learning_rate;
  opt.weight_decay = config.weight_decay;
  AdamW optimizer(model.parameters(), opt);

  Rng rng(derive_seed(config.seed, 2));
  std::vector<std::size_t> order(kg.num_triples());
  std::vector<Triple> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      batch.clear();
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(kg.triple(order[i]));

      const StepNoise noise = sample_step_noise(kg, config, batch, rng);
      ad::Tape tape;
      optimizer.zero_grad();
      const Objective obj = build_objective(tape, kg, adjacency, model, config, batch, noise);
      const double total = obj.total.value().item();
      if (!std::isfinite(total)) {
        const auto where = tape.first_non_finite();
        throw NonFiniteError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             "; first non-finite tensor: " + where.value_or("unknown"));
      }
      tape.backward(obj.total);
      optimizer.step();

      const auto& mask = obj.mask.value().values();
      stats.recon_loss += obj.recon.value().item();
      stats.sparsity_loss += obj.sparsity.value().item();
      stats.mean_mask += std::accumulate(mask.begin(), mask.end(), 0.0) / static_cast<double>(mask.size());
      ++steps;
    }
    if (steps > 0) {
      stats.recon_loss /= static_cast<double>(steps);
      stats.sparsity_loss /= static_cast<double>(steps);
      stats.mean_mask /= static_cast<double>(steps);
    }
    stats.total = stats.recon_loss + config.gamma * stats.sparsity_loss;
    result.history.push_back(stats);
    if (on_checkpoint && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      on_checkpoint(model, result.history);
    }
  }
  return result;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,recon_loss,sparsity_loss,total,mean_mask\n";
  for (const EpochStats& s : history) {
    out << s.epoch << ',' << s.recon_loss << ',' << s.sparsity_loss << ',' << s.total << ','
        << s.mean_mask << '\n';
  }
  return out.str();
}

}  // namespace kgd
