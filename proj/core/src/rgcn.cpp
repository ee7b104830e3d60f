#include "kgd/rgcn.hpp"

#include <cmath>

#include "kgd/error.hpp"

namespace kgd::rgcn {
namespace {

ad::Tensor glorot(const ad::Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  ad::Tensor t(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

void RGCNConfig::validate() const {
  if (layers < 1) throw Error("rgcn: need at least one layer");
  if (hidden_dim == 0) throw Error("rgcn: hidden_dim must be positive");
  if (num_blocks == 0 || hidden_dim % num_blocks != 0) {
    throw Error("rgcn: hidden_dim " + std::to_string(hidden_dim) +
                " is not divisible by num_blocks " + std::to_string(num_blocks));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("rgcn: dropout must lie in [0, 1)");
}

std::vector<ad::Parameter*> RGCNParams::parameters() {
  std::vector<ad::Parameter*> out;
  for (LayerParams& l : layers) {
    for (ad::Parameter& w : l.relation_weights) out.push_back(&w);
    out.push_back(&l.self_weight);
  }
  return out;
}

std::vector<const ad::Parameter*> RGCNParams::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const LayerParams& l : layers) {
    for (const ad::Parameter& w : l.relation_weights) out.push_back(&w);
    out.push_back(&l.self_weight);
  }
  return out;
}

RGCNParams init_params(const RGCNConfig& config, std::size_t num_types, std::size_t num_relations,
                       const std::string& prefix, Rng& rng) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  const std::size_t k = d / config.num_blocks;
  RGCNParams params;
  for (std::size_t l = 0; l < config.layers; ++l) {
    LayerParams layer;
    const std::size_t in = l == 0 ? num_types : d;
    layer.block_diagonal = l > 0;
    const std::string base = prefix + ".l" + std::to_string(l);
    for (std::size_t r = 0; r < num_relations; ++r) {
      ad::Tensor w = layer.block_diagonal ? glorot({config.num_blocks, k, k}, k, k, rng)
                                          : glorot({in, d}, in, d, rng);
      layer.relation_weights.emplace_back(base + ".rel" + std::to_string(r), std::move(w));
    }
    layer.self_weight = ad::Parameter(base + ".self", glorot({in, d}, in, d, rng));
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ad::Tensor init_type_features(const KnowledgeGraph& kg) {
  ad::Tensor x = ad::Tensor::matrix(kg.num_entities(), kg.num_types());
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    x.at(e, kg.type_of(EntityId(e)).index()) = 1.0;
  }
  return x;
}

DropoutMasks sample_dropout_masks(const RGCNConfig& config, std::size_t num_entities, Rng& rng) {
  DropoutMasks m;
  for (std::size_t l = 0; l < config.layers; ++l) {
    m.layers.push_back(ad::dropout_mask({num_entities, config.hidden_dim}, config.dropout, rng));
  }
  return m;
}

ad::Var layer_forward(ad::Tape& tape, ad::Var features, const AdjacencyIndex& adjacency,
                      LayerParams& params, const LayerOptions& options) {
  const std::size_t n = adjacency.num_entities();
  if (features.rows() != n) {
    throw ShapeError("rgcn layer: features have " + std::to_string(features.rows()) +
                     " rows for " + std::to_string(n) + " entities");
  }
  if (params.relation_weights.size() != adjacency.num_relations()) {
    throw ShapeError("rgcn layer: " + std::to_string(params.relation_weights.size()) +
                     " relation weights for " + std::to_string(adjacency.num_relations()) +
                     " relations");
  }
  if (features.cols() != params.self_weight.value.rows()) {
    throw ShapeError("rgcn layer: input width " + std::to_string(features.cols()) +
                     " does not match weight " + ad::shape_string(params.self_weight.value.shape()));
  }
  // Tape storage moves as nodes are recorded, so keep only what is needed.
  std::vector<char> carries;
  if (options.edge_weights) {
    const ad::Tensor& w = options.edge_weights->value();
    if (w.rows() != adjacency.num_edges() || w.cols() != 1) {
      throw ShapeError("rgcn layer: edge weights " + ad::shape_string(w.shape()) + " for " +
                       std::to_string(adjacency.num_edges()) + " triples");
    }
    carries.reserve(w.size());
    for (double v : w.values()) carries.push_back(v > 0.0);
  }

  ad::Var sum = ad::matmul(features, tape.parameter(params.self_weight));
  for (std::size_t r = 0; r < adjacency.num_relations(); ++r) {
    const auto& edges = adjacency.edges(RelationId(r));
    const std::size_t m = edges.heads.size();
    if (m == 0) continue;

    // 1/c_hr per edge; heads are contiguous runs within a relation.
    std::vector<double> inv(m, 0.0);
    for (std::size_t lo = 0; lo < m;) {
      std::size_t hi = lo;
      std::size_t support = 0;
      while (hi < m && edges.heads[hi] == edges.heads[lo]) {
        if (carries.empty() || carries[edges.triples[hi]]) ++support;
        ++hi;
      }
      const double c = support > 0 ? 1.0 / static_cast<double>(support) : 0.0;
      for (std::size_t i = lo; i < hi; ++i) inv[i] = c;
      lo = hi;
    }

    ad::Var w = tape.parameter(params.relation_weights[r]);
    ad::Var transformed = params.block_diagonal ? ad::block_diag_matmul(features, w)
                                                : ad::matmul(features, w);
    ad::Var coef = tape.constant(ad::Tensor::column(std::move(inv)), "rgcn_norm");
    if (options.edge_weights) {
      coef = ad::mul(ad::gather_rows(*options.edge_weights, edges.triples), coef);
    }
    sum = ad::add(sum, ad::edge_aggregate(transformed, edges.tails, edges.heads, coef, n));
  }
  if (options.dropout_mask) sum = ad::dropout(sum, *options.dropout_mask);
  if (!options.apply_activation) return sum;
  switch (options.activation) {
    case Activation::relu:
      return ad::relu(sum);
    case Activation::identity:
      return sum;
  }
  return sum;
}

ad::Var encode(ad::Tape& tape, const KnowledgeGraph& kg, const AdjacencyIndex& adjacency,
               const RGCNConfig& config, RGCNParams& params, const EncodeOptions& options) {
  if (params.layers.size() != config.layers) {
    throw ShapeError("rgcn encode: " + std::to_string(params.layers.size()) +
                     " parameter layers for a " + std::to_string(config.layers) + "-layer config");
  }
  ad::Var x = tape.constant(init_type_features(kg), "type_features");
  for (std::size_t l = 0; l < config.layers; ++l) {
    LayerOptions lo;
    lo.edge_weights = options.edge_weights;
    lo.dropout_mask = options.dropout ? &options.dropout->layers.at(l) : nullptr;
    lo.apply_activation = l + 1 < config.layers;
    lo.activation = config.activation;
    x = layer_forward(tape, x, adjacency, params.layers[l], lo);
  }
  return x;
}

}  // namespace kgd::rgcn
