#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/rgcn.hpp"
#include "kgd/tape.hpp"

namespace kgd {

enum class GumbelVariant {
  // b = e^{log(max(sig(q)+p, eps))/tau} /
  //     (e^{log(max(sig(q)+p, eps))/tau} + e^{log(max(sig(1-q)+p', eps))/tau})
  paper,
  // b = softmax((log sig(q) + p)/tau, (log(1 - sig(q)) + p')/tau)[0]
  standard,
};

std::string to_string(GumbelVariant v);
GumbelVariant parse_gumbel_variant(const std::string& s);

struct GumbelConfig {
  double temperature = 1.0;
  double epsilon = 1e-10;
  GumbelVariant variant = GumbelVariant::paper;
  // Freeze noise at zero (inference and gradient checks).
  bool deterministic = false;

  void validate() const;
};

// Gumbel(0, 1) draws -log(-log(u)) with u uniform on (eps, 1 - eps), as an n x 1 column.
ad::Tensor sample_gumbel(std::size_t n, Rng& rng, double epsilon = 1e-10);
ad::Tensor sample_gumbel(std::size_t n, std::uint64_t seed, double epsilon = 1e-10);

// Scalar relaxation of one logit with noise (p, p').
double gumbel_discretize(double logit, double p, double p_prime, const GumbelConfig& config);

// Differentiable version over an n x 1 column of logits.
ad::Var gumbel_discretize(ad::Var logits, const ad::Tensor& p, const ad::Tensor& p_prime,
                          const GumbelConfig& config);

struct MaskerParams {
  rgcn::RGCNParams encoder;
  ad::Parameter relation_embeddings;  // |R| x d
  ad::Parameter mlp_w1;               // 3d x hidden, rows ordered [head | relation | tail]
  ad::Parameter mlp_b1;               // 1 x hidden
  ad::Parameter mlp_w2;               // hidden x 1
  ad::Parameter mlp_b2;               // 1 x 1

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
};

MaskerParams init_masker(const rgcn::RGCNConfig& config, std::size_t num_types,
                         std::size_t num_relations, Rng& rng);

// Scorer logits q for the given triples from entity embeddings H:
//   q = w2 . relu(W1 [H[h]; H_rel[r]; H[t]] + b1) + b2.
// The first layer is evaluated per concatenation block and then gathered,
// which is the same affine map as multiplying the concatenated row.
ad::Var mlp_logits(ad::Tape& tape, ad::Var entity_embeddings, MaskerParams& params,
                   std::span<const Triple> triples);

// Logits for every observed triple of kg, embeddings from the full unweighted graph.
ad::Var masker_logits(ad::Tape& tape, const KnowledgeGraph& kg, const AdjacencyIndex& adjacency,
                      const rgcn::RGCNConfig& config, MaskerParams& params,
                      const rgcn::DropoutMasks* dropout = nullptr);

// Per observed triple: raw logit, sigmoid, and the noise-free discretized value.
struct MaskScores {
  std::vector<double> logit;
  std::vector<double> sigmoid;
  std::vector<double> discretized;

  std::size_t size() const { return logit.size(); }
};

MaskScores score_mask(const KnowledgeGraph& kg, const AdjacencyIndex& adjacency,
                      const rgcn::RGCNConfig& config, MaskerParams& params,
                      const GumbelConfig& gumbel);

}  // namespace kgd
