#include "kgd/reconstructor.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "kgd/error.hpp"
#include "kgd/ops.hpp"

namespace kgd {
namespace {

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_triple(const Triple& t, const ad::Tensor& z, const ad::Tensor& rel) {
  if (t.head.index() >= z.rows() || t.tail.index() >= z.rows() ||
      t.relation.index() >= rel.rows()) {
    throw Error("score: triple ids out of range for the embeddings");
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_triple(std::ostream& out, const KnowledgeGraph& kg, const Triple& t) {
  out << csv_field(kg.entities().name(t.head.index())) << ','
      << csv_field(kg.relations().name(t.relation.index())) << ','
      << csv_field(kg.entities().name(t.tail.index()));
}

}  // namespace

std::vector<ad::Parameter*> ReconParams::parameters() {
  auto out = encoder.parameters();
  out.push_back(&relation_embeddings);
  return out;
}

std::vector<const ad::Parameter*> ReconParams::parameters() const {
  auto out = encoder.parameters();
  out.push_back(&relation_embeddings);
  return out;
}

ReconParams init_reconstructor(const rgcn::RGCNConfig& config, std::size_t num_types,
                               std::size_t num_relations, Rng& rng) {
  ReconParams p;
  p.encoder = rgcn::init_params(config, num_types, num_relations, "recon.rgcn", rng);
  ad::Tensor rel = ad::Tensor::matrix(num_relations, config.hidden_dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : rel.values()) v = 0.1 * normal(rng);
  p.relation_embeddings = ad::Parameter("recon.relation_embeddings", std::move(rel));
  return p;
}

ad::Var decode_embeddings(ad::Tape& tape, const KnowledgeGraph& kg,
                          const AdjacencyIndex& adjacency, const rgcn::RGCNConfig& config,
                          ReconParams& params, ad::Var mask, const rgcn::DropoutMasks* dropout) {
  if (mask.rows() != kg.num_triples() || mask.cols() != 1) {
    throw Error("decode: mask " + ad::shape_string(mask.shape()) + " does not cover the " +
                std::to_string(kg.num_triples()) + " observed triples");
  }
  rgcn::EncodeOptions opts;
  opts.edge_weights = mask;
  opts.dropout = dropout;
  return rgcn::encode(tape, kg, adjacency, config, params.encoder, opts);
}

ad::Var decode_embeddings(ad::Tape& tape, const KnowledgeGraph& kg,
                          const AdjacencyIndex& adjacency, const rgcn::RGCNConfig& config,
                          ReconParams& params, const std::vector<double>& mask) {
  if (mask.size() != kg.num_triples()) {
    throw Error("decode: " + std::to_string(mask.size()) + " mask values for " +
                std::to_string(kg.num_triples()) + " observed triples");
  }
  ad::Var m = tape.constant(ad::Tensor::column(mask), "mask");
  return decode_embeddings(tape, kg, adjacency, config, params, m);
}

ad::Var distmult_logits(ad::Tape& tape, ad::Var entity_embeddings, ReconParams& params,
                        std::span<const Triple> triples) {
  std::vector<std::size_t> heads, rels, tails;
  heads.reserve(triples.size());
  rels.reserve(triples.size());
  tails.reserve(triples.size());
  for (const Triple& t : triples) {
    check_triple(t, entity_embeddings.value(), params.relation_embeddings.value);
    heads.push_back(t.head.index());
    rels.push_back(t.relation.index());
    tails.push_back(t.tail.index());
  }
  ad::Var rel = tape.parameter(params.relation_embeddings);
  return ad::gathered_triple_product(entity_embeddings, heads, rel, rels, entity_embeddings, tails);
}

ad::Var score_triples(ad::Tape& tape, ad::Var entity_embeddings, ReconParams& params,
                      std::span<const Triple> triples) {
  return ad::sigmoid(distmult_logits(tape, entity_embeddings, params, triples));
}

double recon_score(const Triple& t, const ad::Tensor& entity_embeddings,
                   const ad::Tensor& relation_embeddings) {
  check_triple(t, entity_embeddings, relation_embeddings);
  const std::size_t d = entity_embeddings.cols();
  if (relation_embeddings.cols() != d) throw ShapeError("score: embedding widths differ");
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    s += entity_embeddings.at(t.head.index(), k) * relation_embeddings.at(t.relation.index(), k) *
         entity_embeddings.at(t.tail.index(), k);
  }
  return stable_sigmoid(s);
}

std::vector<double> score_candidates(const ad::Tensor& entity_embeddings,
                                     const ad::Tensor& relation_embeddings,
                                     std::span<const Triple> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const Triple& t : candidates) out.push_back(recon_score(t, entity_embeddings, relation_embeddings));
  return out;
}

std::string score_csv(const KnowledgeGraph& kg, std::span<const Triple> triples,
                      std::span<const double> scores) {
  if (triples.size() != scores.size()) throw Error("score csv: length mismatch");
  std::ostringstream out;
  out << std::setprecision(17);
  out << "head,relation,tail,score\n";
  for (std::size_t i = 0; i < triples.size(); ++i) {
    write_triple(out, kg, triples[i]);
    out << ',' << scores[i] << '\n';
  }
  return out.str();
}

std::string mask_csv(const KnowledgeGraph& kg, const MaskScores& mask) {
  if (mask.size() != kg.num_triples()) throw Error("mask csv: length mismatch");
  std::ostringstream out;
  out << std::setprecision(17);
  out << "head,relation,tail,logit,sigmoid,discretized\n";
  for (std::size_t i = 0; i < mask.size(); ++i) {
    write_triple(out, kg, kg.triple(i));
    out << ',' << mask.logit[i] << ',' << mask.sigmoid[i] << ',' << mask.discretized[i] << '\n';
  }
  return out.str();
}

}  // namespace kgd
