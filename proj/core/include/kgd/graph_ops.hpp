#pragma once

#include <cstdint>
#include <set>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kgd/graph.hpp"

namespace kgd {

// Adds (t, r_reverse, h) for every (h, r, t). Reverse relations get fresh ids
// appended after the originals. Throws if kg is already augmented.
KnowledgeGraph augment_reverse(const KnowledgeGraph& kg);

// Drops the reverse relations and triples again.
KnowledgeGraph strip_reverse(const KnowledgeGraph& kg);

std::unordered_set<TypePattern, TypePatternHash> legitimate_patterns(const KnowledgeGraph& kg);

// Fraction of (head type, relation, tail type) signatures that occur, over
// |C| * |R| * |C|.
double compute_ltt(const KnowledgeGraph& kg);

// |C| x |C| counts of (head type, tail type) for one relation.
struct TypeCountMatrix {
  std::size_t num_types = 0;
  std::vector<std::size_t> cells;

  std::size_t at(TypeId head, TypeId tail) const {
    return cells[head.index() * num_types + tail.index()];
  }
  std::size_t total() const;
};

TypeCountMatrix relation_type_distribution(const KnowledgeGraph& kg, RelationId r);

// Reassigns exactly round(fraction * |V|) distinct entities to a different,
// uniformly drawn type.
KnowledgeGraph corrupt_type_labels(const KnowledgeGraph& kg, double fraction, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t num_types = 0;
  std::size_t num_relations = 0;
  std::size_t num_entities = 0;
  std::vector<TypePattern> legal_patterns;
  std::size_t num_triples = 0;
  std::uint64_t seed = 0;
};

// Entities typed round-robin (entity i has type i mod |C|); triples drawn
// uniformly from the (h, r, t) combinations allowed by legal_patterns.
KnowledgeGraph generate_synthetic_kg(const SyntheticSpec& spec);

// `per_relation` distinct (head type, tail type) pairs for each relation, with
// head != tail and never both (a, b) and (b, a) for one relation.
std::vector<TypePattern> random_legal_patterns(std::size_t num_types, std::size_t num_relations,
                                               std::size_t per_relation, std::uint64_t seed);

// Adds round(rate * |K|) triples whose signature is not among kg's
// legitimate patterns, by replacing the head or tail of random triples.
// Labels cover every triple of the result; exactly the injected ones are noise.
std::pair<KnowledgeGraph, NoiseLabelSet> inject_type_noise(const KnowledgeGraph& kg, double rate,
                                                           std::uint64_t seed);

}  // namespace kgd
