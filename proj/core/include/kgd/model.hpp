#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/masker.hpp"
#include "kgd/reconstructor.hpp"
#include "kgd/rgcn.hpp"

namespace kgd {

// Masker and reconstructor parameters plus what is needed to check that a
// graph matches them.
struct RAEModel {
  rgcn::RGCNConfig config;
  GumbelConfig gumbel;
  std::size_t num_entities = 0;
  std::size_t num_types = 0;
  std::size_t num_relations = 0;
  bool augmented = false;
  std::string fingerprint;
  MaskerParams masker;
  ReconParams recon;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  // Throws unless kg has the vocabularies this model was built for.
  void check_compatible(const KnowledgeGraph& kg) const;
};

RAEModel init_model(const KnowledgeGraph& kg, const rgcn::RGCNConfig& config,
                    const GumbelConfig& gumbel, std::uint64_t seed);

// Noise-free forward pass over every observed triple.
struct Inference {
  MaskScores mask;
  ad::Tensor entity_embeddings;    // decoder output, |V| x d
  std::vector<double> scores;      // reconstruction score per triple
};

Inference infer(const KnowledgeGraph& kg, RAEModel& model);

// `extra_metadata` (a JSON object) is stored under "extra".
void save_model(const std::filesystem::path& path, const RAEModel& model,
                const std::string& extra_metadata = "{}");

struct LoadedModel {
  RAEModel model;
  std::string extra_metadata;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace kgd
