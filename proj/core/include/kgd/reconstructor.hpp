#pragma once

#include <span>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/masker.hpp"
#include "kgd/rgcn.hpp"
#include "kgd/tape.hpp"

namespace kgd {

struct ReconParams {
  rgcn::RGCNParams encoder;
  ad::Parameter relation_embeddings;  // |R| x d

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
};

ReconParams init_reconstructor(const rgcn::RGCNConfig& config, std::size_t num_types,
                               std::size_t num_relations, Rng& rng);

// Entity embeddings from message passing where each triple's message is
// scaled by its mask value. `mask` is [|K| x 1] in kg.triples() order.
ad::Var decode_embeddings(ad::Tape& tape, const KnowledgeGraph& kg,
                          const AdjacencyIndex& adjacency, const rgcn::RGCNConfig& config,
                          ReconParams& params, ad::Var mask,
                          const rgcn::DropoutMasks* dropout = nullptr);

// Convenience overload taking plain mask values (inference).
ad::Var decode_embeddings(ad::Tape& tape, const KnowledgeGraph& kg,
                          const AdjacencyIndex& adjacency, const rgcn::RGCNConfig& config,
                          ReconParams& params, const std::vector<double>& mask);

// sigmoid(sum_k Z[h]_k R[r]_k Z[t]_k) for every triple, as a [n x 1] column.
ad::Var score_triples(ad::Tape& tape, ad::Var entity_embeddings, ReconParams& params,
                      std::span<const Triple> triples);

// Raw DistMult product before the sigmoid.
ad::Var distmult_logits(ad::Tape& tape, ad::Var entity_embeddings, ReconParams& params,
                        std::span<const Triple> triples);

// Single-triple score on plain tensors.
double recon_score(const Triple& t, const ad::Tensor& entity_embeddings,
                   const ad::Tensor& relation_embeddings);

std::vector<double> score_candidates(const ad::Tensor& entity_embeddings,
                                     const ad::Tensor& relation_embeddings,
                                     std::span<const Triple> candidates);

// `head,relation,tail,score` with a header row.
std::string score_csv(const KnowledgeGraph& kg, std::span<const Triple> triples,
                      std::span<const double> scores);

// `head,relation,tail,logit,sigmoid,discretized` with a header row.
std::string mask_csv(const KnowledgeGraph& kg, const MaskScores& mask);

}  // namespace kgd
