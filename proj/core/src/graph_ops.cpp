#include "kgd/graph_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kgd/error.hpp"
#include "kgd/random.hpp"

namespace kgd {
namespace {

// Copies vocabularies and the type map but no triples.
KnowledgeGraph copy_vocabularies(const KnowledgeGraph& kg, std::size_t relation_count) {
  KnowledgeGraph out;
  for (const auto& name : kg.types().names()) out.add_type(name);
  for (std::size_t r = 0; r < relation_count; ++r) out.add_relation(kg.relations().name(r));
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    out.add_entity(kg.entities().name(e), kg.type_of(EntityId(e)));
  }
  return out;
}

std::string pattern_name(const KnowledgeGraph& kg, const TypePattern& p) {
  return "(" + kg.types().name(p.head.index()) + ", " + kg.relations().name(p.relation.index()) +
         ", " + kg.types().name(p.tail.index()) + ")";
}

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

KnowledgeGraph augment_reverse(const KnowledgeGraph& kg) {
  if (kg.augmented()) throw Error("augment_reverse: graph is already augmented");
  const std::size_t base = kg.num_relations();
  KnowledgeGraph out = copy_vocabularies(kg, base);
  for (std::size_t r = 0; r < base; ++r) {
    const std::string name = kg.relations().name(r) + std::string(kReverseSuffix);
    if (kg.relations().find(name)) {
      throw Error("augment_reverse: relation '" + name + "' already exists");
    }
    out.add_relation(name);
  }
  for (const Triple& t : kg.triples()) out.add_triple(t);
  for (const Triple& t : kg.triples()) {
    out.add_triple({t.tail, RelationId(t.relation.index() + base), t.head});
  }
  out.mark_augmented(base);
  return out;
}

KnowledgeGraph strip_reverse(const KnowledgeGraph& kg) {
  if (!kg.augmented()) return kg;
  KnowledgeGraph out = copy_vocabularies(kg, kg.base_relation_count());
  for (const Triple& t : kg.triples()) {
    if (!kg.is_reverse(t.relation)) out.add_triple(t);
  }
  return out;
}

std::unordered_set<TypePattern, TypePatternHash> legitimate_patterns(const KnowledgeGraph& kg) {
  std::unordered_set<TypePattern, TypePatternHash> out;
  for (const Triple& t : kg.triples()) out.insert(kg.pattern_of(t));
  return out;
}

double compute_ltt(const KnowledgeGraph& kg) {
  if (kg.num_triples() == 0) throw Error("compute_ltt: graph has no triples");
  const double c = static_cast<double>(kg.num_types());
  const double r = static_cast<double>(kg.num_relations());
  return static_cast<double>(legitimate_patterns(kg).size()) / (c * r * c);
}

std::size_t TypeCountMatrix::total() const {
  return std::accumulate(cells.begin(), cells.end(), std::size_t{0});
}

TypeCountMatrix relation_type_distribution(const KnowledgeGraph& kg, RelationId r) {
  if (r.index() >= kg.num_relations()) {
    throw Error("relation_type_distribution: relation id " + std::to_string(r.value) +
                " out of range");
  }
  TypeCountMatrix m;
  m.num_types = kg.num_types();
  m.cells.assign(m.num_types * m.num_types, 0);
  for (const Triple& t : kg.triples()) {
    if (t.relation != r) continue;
    ++m.cells[kg.type_of(t.head).index() * m.num_types + kg.type_of(t.tail).index()];
  }
  return m;
}

KnowledgeGraph corrupt_type_labels(const KnowledgeGraph& kg, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("corrupt_type_labels: fraction must lie in [0, 1]");
  }
  const std::size_t count = rounded_count(fraction, kg.num_entities());
  if (count > 0 && kg.num_types() < 2) {
    throw Error("corrupt_type_labels: need at least two types to corrupt labels");
  }
  KnowledgeGraph out = kg;
  Rng rng(seed);
  std::vector<std::size_t> ids(kg.num_entities());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(rng, ids.size() - i);
    std::swap(ids[i], ids[j]);
    const EntityId e(ids[i]);
    const std::size_t old = kg.type_of(e).index();
    std::size_t fresh = uniform_index(rng, kg.num_types() - 1);
    if (fresh >= old) ++fresh;
    out.set_type(e, TypeId(fresh));
  }
  return out;
}

KnowledgeGraph generate_synthetic_kg(const SyntheticSpec& spec) {
  if (spec.num_types == 0 || spec.num_relations == 0) {
    throw Error("generate_synthetic_kg: need at least one type and one relation");
  }
  KnowledgeGraph kg;
  for (std::size_t c = 0; c < spec.num_types; ++c) kg.add_type("type" + std::to_string(c));
  for (std::size_t r = 0; r < spec.num_relations; ++r) kg.add_relation("r" + std::to_string(r));
  std::vector<std::vector<std::size_t>> members(spec.num_types);
  for (std::size_t e = 0; e < spec.num_entities; ++e) {
    kg.add_entity("e" + std::to_string(e), TypeId(e % spec.num_types));
    members[e % spec.num_types].push_back(e);
  }

  std::vector<TypePattern> patterns = spec.legal_patterns;
  std::sort(patterns.begin(), patterns.end());
  patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
  std::vector<std::size_t> capacity;
  std::size_t total = 0;
  for (const TypePattern& p : patterns) {
    if (p.head.index() >= spec.num_types || p.tail.index() >= spec.num_types ||
        p.relation.index() >= spec.num_relations) {
      throw Error("generate_synthetic_kg: pattern references an invalid id");
    }
    capacity.push_back(members[p.head.index()].size() * members[p.tail.index()].size());
    total += capacity.back();
  }
  if (spec.num_triples == 0) return kg;
  if (total < spec.num_triples) {
    std::string limiting = "none";
    if (!patterns.empty()) {
      const auto k = static_cast<std::size_t>(
          std::min_element(capacity.begin(), capacity.end()) - capacity.begin());
      limiting = pattern_name(kg, patterns[k]) + " with " + std::to_string(capacity[k]) + " pairs";
    }
    throw Error("generate_synthetic_kg: capacity exhausted, " + std::to_string(spec.num_triples) +
                " triples requested but legal patterns admit only " + std::to_string(total) +
                "; limiting pattern " + limiting);
  }

  Rng rng(spec.seed);
  auto decode = [&](std::size_t flat) {
    std::size_t k = 0;
    while (flat >= capacity[k]) flat -= capacity[k++];
    const auto& heads = members[patterns[k].head.index()];
    const auto& tails = members[patterns[k].tail.index()];
    return Triple{EntityId(heads[flat / tails.size()]), patterns[k].relation,
                  EntityId(tails[flat % tails.size()])};
  };
  if (2 * spec.num_triples > total) {
    // Dense request: partial shuffle of the full candidate list.
    std::vector<std::size_t> flat(total);
    std::iota(flat.begin(), flat.end(), std::size_t{0});
    for (std::size_t i = 0; i < spec.num_triples; ++i) {
      std::swap(flat[i], flat[i + uniform_index(rng, total - i)]);
      kg.add_triple(decode(flat[i]));
    }
  } else {
    while (kg.num_triples() < spec.num_triples) kg.add_triple(decode(uniform_index(rng, total)));
  }
  return kg;
}

std::vector<TypePattern> random_legal_patterns(std::size_t num_types, std::size_t num_relations,
                                               std::size_t per_relation, std::uint64_t seed) {
  if (num_types < 2) throw Error("random_legal_patterns: need at least two types");
  const std::size_t available = num_types * (num_types - 1) / 2;
  if (per_relation > available) {
    throw Error("random_legal_patterns: at most " + std::to_string(available) +
                " patterns per relation for " + std::to_string(num_types) + " types");
  }
  Rng rng(seed);
  std::vector<TypePattern> out;
  for (std::size_t r = 0; r < num_relations; ++r) {
    std::set<std::pair<std::size_t, std::size_t>> unordered;
    while (unordered.size() < per_relation) {
      const std::size_t a = uniform_index(rng, num_types);
      const std::size_t b = uniform_index(rng, num_types);
      if (a == b) continue;
      if (!unordered.insert({std::min(a, b), std::max(a, b)}).second) continue;
      out.push_back({TypeId(a), RelationId(r), TypeId(b)});
    }
  }
  return out;
}

std::pair<KnowledgeGraph, NoiseLabelSet> inject_type_noise(const KnowledgeGraph& kg, double rate,
                                                           std::uint64_t seed) {
  if (!(rate >= 0.0)) throw Error("inject_type_noise: rate must be non-negative");
  if (kg.augmented()) throw Error("inject_type_noise: inject before reverse augmentation");
  const std::size_t count = rounded_count(rate, kg.num_triples());
  NoiseLabelSet labels;
  for (const Triple& t : kg.triples()) labels.set(t, false);
  if (count == 0) return {kg, labels};

  const auto legit = legitimate_patterns(kg);
  std::vector<std::vector<std::size_t>> members(kg.num_types());
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    members[kg.type_of(EntityId(e)).index()].push_back(e);
  }
  bool constructible = false;
  for (const TypePattern& p : legit) {
    for (std::size_t x = 0; x < kg.num_types() && !constructible; ++x) {
      if (members[x].empty()) continue;
      constructible = !legit.contains({TypeId(x), p.relation, p.tail}) ||
                      !legit.contains({p.head, p.relation, TypeId(x)});
    }
    if (constructible) break;
  }
  if (!constructible) {
    throw Error("inject_type_noise: every reachable type signature is already legitimate");
  }

  KnowledgeGraph out = kg;
  Rng rng(seed);
  const std::size_t max_attempts = 1000 * count + 1000000;
  std::size_t injected = 0;
  for (std::size_t attempt = 0; injected < count; ++attempt) {
    if (attempt >= max_attempts) {
      throw Error("inject_type_noise: gave up after " + std::to_string(max_attempts) +
                  " attempts with " + std::to_string(injected) + " of " + std::to_string(count) +
                  " triples injected");
    }
    Triple t = kg.triple(uniform_index(rng, kg.num_triples()));
    const bool replace_head = uniform_index(rng, 2) == 0;
    const EntityId e(uniform_index(rng, kg.num_entities()));
    (replace_head ? t.head : t.tail) = e;
    if (legit.contains(kg.pattern_of(t))) continue;
    if (!out.add_triple(t)) continue;
    labels.set(t, true);
    ++injected;
  }
  return {std::move(out), std::move(labels)};
}

}  // namespace kgd
