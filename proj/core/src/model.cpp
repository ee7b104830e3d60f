#include "kgd/model.hpp"

#include <nlohmann/json.hpp>

#include "kgd/checkpoint.hpp"
#include "kgd/error.hpp"
#include "kgd/graph_io.hpp"

namespace kgd {

using nlohmann::json;

std::vector<ad::Parameter*> RAEModel::parameters() {
  auto out = masker.parameters();
  for (ad::Parameter* p : recon.parameters()) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> RAEModel::parameters() const {
  auto out = masker.parameters();
  for (const ad::Parameter* p : recon.parameters()) out.push_back(p);
  return out;
}

void RAEModel::check_compatible(const KnowledgeGraph& kg) const {
  if (kg.num_entities() != num_entities || kg.num_types() != num_types ||
      kg.num_relations() != num_relations || kg.augmented() != augmented) {
    throw Error("model/graph mismatch: model expects " + std::to_string(num_entities) +
                " entities, " + std::to_string(num_types) + " types, " +
                std::to_string(num_relations) + " relations" +
                (augmented ? " (augmented)" : "") + "; graph has " +
                std::to_string(kg.num_entities()) + ", " + std::to_string(kg.num_types()) + ", " +
                std::to_string(kg.num_relations()));
  }
  if (!fingerprint.empty() && vocabulary_fingerprint(kg) != fingerprint) {
    throw Error("model/graph mismatch: vocabulary fingerprint differs");
  }
}

RAEModel init_model(const KnowledgeGraph& kg, const rgcn::RGCNConfig& config,
                    const GumbelConfig& gumbel, std::uint64_t seed) {
  config.validate();
  gumbel.validate();
  RAEModel m;
  m.config = config;
  m.gumbel = gumbel;
  m.num_entities = kg.num_entities();
  m.num_types = kg.num_types();
  m.num_relations = kg.num_relations();
  m.augmented = kg.augmented();
  m.fingerprint = vocabulary_fingerprint(kg);
  Rng rng(derive_seed(seed, 1));
  m.masker = init_masker(config, kg.num_types(), kg.num_relations(), rng);
  m.recon = init_reconstructor(config, kg.num_types(), kg.num_relations(), rng);
  return m;
}

Inference infer(const KnowledgeGraph& kg, RAEModel& model) {
  model.check_compatible(kg);
  const AdjacencyIndex adjacency(kg);
  Inference out;
  out.mask = score_mask(kg, adjacency, model.config, model.masker, model.gumbel);
  ad::Tape tape;
  ad::Var z = decode_embeddings(tape, kg, adjacency, model.config, model.recon, out.mask.discretized);
  ad::Var s = score_triples(tape, z, model.recon, kg.triples());
  out.entity_embeddings = z.value();
  out.scores.assign(s.value().values().begin(), s.value().values().end());
  return out;
}

namespace {

json model_metadata(const RAEModel& m) {
  return {
      {"layers", m.config.layers},
      {"hidden_dim", m.config.hidden_dim},
      {"num_blocks", m.config.num_blocks},
      {"dropout", m.config.dropout},
      {"activation", m.config.activation == rgcn::Activation::relu ? "relu" : "identity"},
      {"temperature", m.gumbel.temperature},
      {"epsilon", m.gumbel.epsilon},
      {"gumbel_variant", to_string(m.gumbel.variant)},
      {"num_entities", m.num_entities},
      {"num_types", m.num_types},
      {"num_relations", m.num_relations},
      {"augmented", m.augmented},
      {"fingerprint", m.fingerprint},
  };
}

}  // namespace

void save_model(const std::filesystem::path& path, const RAEModel& model,
                const std::string& extra_metadata) {
  json meta = {{"model", model_metadata(model)}, {"extra", json::parse(extra_metadata)}};
  ad::write_checkpoint(path, meta.dump(), model.parameters());
}

LoadedModel load_model(const std::filesystem::path& path) {
  const ad::Checkpoint ckpt = ad::read_checkpoint(path);
  const json meta = json::parse(ckpt.metadata_json);
  if (!meta.contains("model")) throw Error(path.string() + ": checkpoint has no model metadata");
  const json& m = meta.at("model");

  rgcn::RGCNConfig config;
  config.layers = m.at("layers").get<std::size_t>();
  config.hidden_dim = m.at("hidden_dim").get<std::size_t>();
  config.num_blocks = m.at("num_blocks").get<std::size_t>();
  config.dropout = m.at("dropout").get<double>();
  config.activation = m.at("activation").get<std::string>() == "relu" ? rgcn::Activation::relu
                                                                     : rgcn::Activation::identity;
  GumbelConfig gumbel;
  gumbel.temperature = m.at("temperature").get<double>();
  gumbel.epsilon = m.at("epsilon").get<double>();
  gumbel.variant = parse_gumbel_variant(m.at("gumbel_variant").get<std::string>());

  LoadedModel out;
  RAEModel& model = out.model;
  model.config = config;
  model.gumbel = gumbel;
  model.num_entities = m.at("num_entities").get<std::size_t>();
  model.num_types = m.at("num_types").get<std::size_t>();
  model.num_relations = m.at("num_relations").get<std::size_t>();
  model.augmented = m.at("augmented").get<bool>();
  model.fingerprint = m.at("fingerprint").get<std::string>();
  // Shapes come from a throwaway initialization; values from the file.
  Rng rng(0);
  model.masker = init_masker(config, model.num_types, model.num_relations, rng);
  model.recon = init_reconstructor(config, model.num_types, model.num_relations, rng);
  ad::load_parameters(ckpt, model.parameters());
  out.extra_metadata = meta.value("extra", json::object()).dump();
  return out;
}

}  // namespace kgd
