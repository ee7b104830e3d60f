#include "kgd/masker.hpp"

#include <algorithm>
#include <cmath>

#include "kgd/error.hpp"
#include "kgd/ops.hpp"

namespace kgd {
namespace {

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ad::Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  ad::Tensor t = ad::Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

std::string to_string(GumbelVariant v) { return v == GumbelVariant::paper ? "paper" : "standard"; }

GumbelVariant parse_gumbel_variant(const std::string& s) {
  if (s == "paper") return GumbelVariant::paper;
  if (s == "standard") return GumbelVariant::standard;
  throw Error("unknown gumbel variant '" + s + "' (expected paper or standard)");
}

void GumbelConfig::validate() const {
  if (!(temperature > 0.0)) throw Error("gumbel: temperature must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1e-6)) throw Error("gumbel: epsilon must lie in (0, 1e-6]");
}

ad::Tensor sample_gumbel(std::size_t n, Rng& rng, double epsilon) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ad::Tensor g = ad::Tensor::matrix(n, 1);
  for (double& v : g.values()) {
    const double x = std::clamp(u(rng), epsilon, 1.0 - epsilon);
    v = -std::log(-std::log(x));
  }
  return g;
}

ad::Tensor sample_gumbel(std::size_t n, std::uint64_t seed, double epsilon) {
  Rng rng(seed);
  return sample_gumbel(n, rng, epsilon);
}

// Both variants are evaluated as sigmoid(log-numerator - log-second-term),
// which equals numerator / (numerator + second term) without overflow or 0/0
// at small temperatures.
double gumbel_discretize(double logit, double p, double p_prime, const GumbelConfig& config) {
  const double tau = config.temperature;
  if (config.deterministic) p = p_prime = 0.0;
  if (config.variant == GumbelVariant::standard) {
    return stable_sigmoid((logit + p - p_prime) / tau);
  }
  const double a = std::log(std::max(stable_sigmoid(logit) + p, config.epsilon)) / tau;
  const double b = std::log(std::max(stable_sigmoid(1.0 - logit) + p_prime, config.epsilon)) / tau;
  return stable_sigmoid(a - b);
}

ad::Var gumbel_discretize(ad::Var logits, const ad::Tensor& p, const ad::Tensor& p_prime,
                          const GumbelConfig& config) {
  config.validate();
  ad::Tape& tape = *logits.tape();
  const ad::Tensor zeros(logits.shape());
  ad::Var noise = tape.constant(config.deterministic ? zeros : p, "gumbel_p");
  ad::Var noise_prime = tape.constant(config.deterministic ? zeros : p_prime, "gumbel_p_prime");
  const double inv_tau = 1.0 / config.temperature;
  if (config.variant == GumbelVariant::standard) {
    // log sig(q) - log(1 - sig(q)) = q
    return ad::sigmoid(ad::scale(ad::sub(ad::add(logits, noise), noise_prime), inv_tau));
  }
  ad::Var a = ad::log(ad::clamp_min(ad::add(ad::sigmoid(logits), noise), config.epsilon));
  ad::Var one_minus = ad::add_scalar(ad::scale(logits, -1.0), 1.0);
  ad::Var b = ad::log(ad::clamp_min(ad::add(ad::sigmoid(one_minus), noise_prime), config.epsilon));
  return ad::sigmoid(ad::scale(ad::sub(a, b), inv_tau));
}

std::vector<ad::Parameter*> MaskerParams::parameters() {
  auto out = encoder.parameters();
  for (ad::Parameter* p : {&relation_embeddings, &mlp_w1, &mlp_b1, &mlp_w2, &mlp_b2}) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> MaskerParams::parameters() const {
  auto out = encoder.parameters();
  for (const ad::Parameter* p : {&relation_embeddings, &mlp_w1, &mlp_b1, &mlp_w2, &mlp_b2}) {
    out.push_back(p);
  }
  return out;
}

MaskerParams init_masker(const rgcn::RGCNConfig& config, std::size_t num_types,
                         std::size_t num_relations, Rng& rng) {
  const std::size_t d = config.hidden_dim;
  MaskerParams m;
  m.encoder = rgcn::init_params(config, num_types, num_relations, "masker.rgcn", rng);
  ad::Tensor rel = ad::Tensor::matrix(num_relations, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : rel.values()) v = 0.1 * normal(rng);
  m.relation_embeddings = ad::Parameter("masker.relation_embeddings", std::move(rel));
  m.mlp_w1 = ad::Parameter("masker.mlp.w1", glorot(3 * d, d, rng));
  m.mlp_b1 = ad::Parameter("masker.mlp.b1", ad::Tensor::matrix(1, d));
  m.mlp_w2 = ad::Parameter("masker.mlp.w2", glorot(d, 1, rng));
  m.mlp_b2 = ad::Parameter("masker.mlp.b2", ad::Tensor::matrix(1, 1));
  return m;
}

ad::Var mlp_logits(ad::Tape& tape, ad::Var entity_embeddings, MaskerParams& params,
                   std::span<const Triple> triples) {
  const std::size_t d = entity_embeddings.cols();
  if (params.mlp_w1.value.rows() != 3 * d) {
    throw ShapeError("masker mlp: w1 " + ad::shape_string(params.mlp_w1.value.shape()) +
                     " for embedding width " + std::to_string(d));
  }
  std::vector<std::size_t> heads, rels, tails;
  heads.reserve(triples.size());
  rels.reserve(triples.size());
  tails.reserve(triples.size());
  for (const Triple& t : triples) {
    heads.push_back(t.head.index());
    rels.push_back(t.relation.index());
    tails.push_back(t.tail.index());
  }
  ad::Var w1 = tape.parameter(params.mlp_w1);
  ad::Var rel = tape.parameter(params.relation_embeddings);
  ad::Var from_head = ad::matmul(entity_embeddings, ad::slice_rows(w1, 0, d));
  // The bias rides on the relation block so it is added once per triple.
  ad::Var from_rel =
      ad::add_bias(ad::matmul(rel, ad::slice_rows(w1, d, 2 * d)), tape.parameter(params.mlp_b1));
  ad::Var from_tail = ad::matmul(entity_embeddings, ad::slice_rows(w1, 2 * d, 3 * d));
  ad::Var hidden = ad::relu(ad::gather_add({from_head, from_rel, from_tail}, {heads, rels, tails}));
  return ad::add_bias(ad::matmul(hidden, tape.parameter(params.mlp_w2)),
                      tape.parameter(params.mlp_b2));
}

ad::Var masker_logits(ad::Tape& tape, const KnowledgeGraph& kg, const AdjacencyIndex& adjacency,
                      const rgcn::RGCNConfig& config, MaskerParams& params,
                      const rgcn::DropoutMasks* dropout) {
  rgcn::EncodeOptions opts;
  opts.dropout = dropout;
  ad::Var h = rgcn::encode(tape, kg, adjacency, config, params.encoder, opts);
  return mlp_logits(tape, h, params, kg.triples());
}

MaskScores score_mask(const KnowledgeGraph& kg, const AdjacencyIndex& adjacency,
                      const rgcn::RGCNConfig& config, MaskerParams& params,
                      const GumbelConfig& gumbel) {
  ad::Tape tape;
  ad::Var q = masker_logits(tape, kg, adjacency, config, params);
  MaskScores s;
  const auto& v = q.value();
  s.logit.assign(v.values().begin(), v.values().end());
  GumbelConfig frozen = gumbel;
  frozen.deterministic = true;
  for (double x : s.logit) {
    s.sigmoid.push_back(stable_sigmoid(x));
    s.discretized.push_back(gumbel_discretize(x, 0.0, 0.0, frozen));
  }
  return s;
}

}  // namespace kgd
