#pragma once

#include <cstdint>
#include <string>

#include "kgd/graph.hpp"
#include "kgd/graph_ops.hpp"
#include "kgd/random.hpp"

namespace kgd::testing {

// Random typed graph: entities typed uniformly, triples drawn uniformly.
inline KnowledgeGraph random_graph(std::size_t entities, std::size_t types, std::size_t relations,
                                   std::size_t triples, std::uint64_t seed) {
  Rng rng(seed);
  KnowledgeGraph kg;
  for (std::size_t c = 0; c < types; ++c) kg.add_type("type" + std::to_string(c));
  for (std::size_t r = 0; r < relations; ++r) kg.add_relation("rel" + std::to_string(r));
  for (std::size_t e = 0; e < entities; ++e) {
    kg.add_entity("ent" + std::to_string(e), TypeId(uniform_index(rng, types)));
  }
  for (std::size_t i = 0, tries = 0; i < triples && tries < 100 * triples; ++tries) {
    const Triple t{EntityId(uniform_index(rng, entities)), RelationId(uniform_index(rng, relations)),
                   EntityId(uniform_index(rng, entities))};
    if (kg.add_triple(t)) ++i;
  }
  return kg;
}

// Small instance used for gradient checks: 12 entities, 3 relations, 4 types.
inline KnowledgeGraph tiny_graph(std::uint64_t seed = 3) { return random_graph(12, 4, 3, 30, seed); }

// The planted-noise benchmark at reduced size.
inline std::pair<KnowledgeGraph, NoiseLabelSet> small_benchmark(std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.num_types = 4;
  spec.num_relations = 3;
  spec.num_entities = 60;
  spec.num_triples = 600;
  spec.seed = derive_seed(seed, 1);
  spec.legal_patterns = random_legal_patterns(4, 3, 2, derive_seed(seed, 2));
  return inject_type_noise(generate_synthetic_kg(spec), 0.05, derive_seed(seed, 3));
}

}  // namespace kgd::testing
