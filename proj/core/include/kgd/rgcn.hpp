#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/ops.hpp"
#include "kgd/random.hpp"
#include "kgd/tape.hpp"

namespace kgd::rgcn {

enum class Activation { relu, identity };

struct RGCNConfig {
  std::size_t layers = 2;
  std::size_t hidden_dim = 32;
  std::size_t num_blocks = 4;
  double dropout = 0.1;
  Activation activation = Activation::relu;  // hidden layers; the last layer is linear

  void validate() const;
};

// Weights of one layer. The first layer maps one-hot types densely per
// relation ([|C| x d]); deeper layers store W_r as num_blocks diagonal blocks
// ([B x d/B x d/B]), so the block structure survives any update.
struct LayerParams {
  std::vector<ad::Parameter> relation_weights;
  ad::Parameter self_weight;  // [in x d]
  bool block_diagonal = false;
};

struct RGCNParams {
  std::vector<LayerParams> layers;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
};

// Glorot-uniform initialization; names are "<prefix>.l<k>.rel<r>" and "<prefix>.l<k>.self".
RGCNParams init_params(const RGCNConfig& config, std::size_t num_types, std::size_t num_relations,
                       const std::string& prefix, Rng& rng);

// Layer-0 features: |V| x |C| one-hot rows of each entity's type.
ad::Tensor init_type_features(const KnowledgeGraph& kg);

// Pre-sampled inverted-dropout masks, one [|V| x d] tensor per layer.
struct DropoutMasks {
  std::vector<ad::Tensor> layers;
};

DropoutMasks sample_dropout_masks(const RGCNConfig& config, std::size_t num_entities, Rng& rng);

struct LayerOptions {
  // Per-triple weights, [|K| x 1], indexed like kg.triples().
  std::optional<ad::Var> edge_weights;
  const ad::Tensor* dropout_mask = nullptr;
  bool apply_activation = true;
  Activation activation = Activation::relu;
};

// One relational convolution:
//   out[h] = act( sum_r sum_{j in N_h^r} w_hrj / c_hr * W_r z_j + W_0 z_h )
// with c_hr the number of neighbors of h under r carrying a positive weight
// (all of them when no weights are given). Dropout hits the pre-activation sum.
ad::Var layer_forward(ad::Tape& tape, ad::Var features, const AdjacencyIndex& adjacency,
                      LayerParams& params, const LayerOptions& options);

struct EncodeOptions {
  std::optional<ad::Var> edge_weights;
  const DropoutMasks* dropout = nullptr;  // nullptr: inference
};

// Stacks config.layers layers on top of init_type_features(kg); hidden layers
// use config.activation, the last one emits pre-activation embeddings.
ad::Var encode(ad::Tape& tape, const KnowledgeGraph& kg, const AdjacencyIndex& adjacency,
               const RGCNConfig& config, RGCNParams& params, const EncodeOptions& options = {});

}  // namespace kgd::rgcn
