#include "kgd/graph.hpp"

#include <algorithm>
#include <numeric>

#include "kgd/error.hpp"

namespace kgd {
namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  return mix(mix(std::hash<std::uint32_t>{}(t.head.value), t.relation.value), t.tail.value);
}

std::size_t TypePatternHash::operator()(const TypePattern& p) const noexcept {
  return mix(mix(std::hash<std::uint32_t>{}(p.head.value), p.relation.value), p.tail.value);
}

std::uint32_t Vocabulary::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EntityId KnowledgeGraph::add_entity(std::string_view name, TypeId type) {
  if (type.index() >= types_.size()) {
    throw Error("add_entity: type id " + std::to_string(type.value) + " out of range");
  }
  const std::size_t before = entities_.size();
  const EntityId id(entities_.intern(name));
  if (entities_.size() > before) type_of_.push_back(type);
  return id;
}

bool KnowledgeGraph::add_triple(const Triple& t) {
  if (t.head.index() >= num_entities() || t.tail.index() >= num_entities() ||
      t.relation.index() >= num_relations()) {
    throw Error("add_triple: invalid ids (" + std::to_string(t.head.value) + ", " +
                std::to_string(t.relation.value) + ", " + std::to_string(t.tail.value) + ")");
  }
  auto [it, inserted] = index_.emplace(t, triples_.size());
  if (inserted) triples_.push_back(t);
  return inserted;
}

void KnowledgeGraph::set_type(EntityId e, TypeId type) {
  if (type.index() >= types_.size()) throw Error("set_type: type id out of range");
  type_of_.at(e.index()) = type;
}

void KnowledgeGraph::mark_augmented(std::size_t base_relations) {
  augmented_ = true;
  base_relations_ = base_relations;
}

std::optional<std::size_t> KnowledgeGraph::index_of(const Triple& t) const {
  auto it = index_.find(t);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Triple KnowledgeGraph::forward_of(const Triple& t) const {
  if (!is_reverse(t.relation)) return t;
  return {t.tail, RelationId(t.relation.index() - base_relations_), t.head};
}

std::size_t KnowledgeGraph::forward_index(std::size_t triple_index) const {
  const std::size_t n = num_forward_triples();
  return augmented_ && triple_index >= n ? triple_index - n : triple_index;
}

std::string KnowledgeGraph::describe(const Triple& t) const {
  return "(" + entities_.name(t.head.index()) + ", " + relations_.name(t.relation.index()) +
         ", " + entities_.name(t.tail.index()) + ")";
}

bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  return a.entities_ == b.entities_ && a.relations_ == b.relations_ && a.types_ == b.types_ &&
         a.triples_ == b.triples_ && a.type_of_ == b.type_of_ && a.augmented_ == b.augmented_ &&
         a.base_relation_count() == b.base_relation_count();
}

AdjacencyIndex::AdjacencyIndex(const KnowledgeGraph& kg)
    : num_entities_(kg.num_entities()),
      num_edges_(kg.num_triples()),
      by_relation_(kg.num_relations()) {
  std::vector<std::vector<std::size_t>> order(kg.num_relations());
  for (std::size_t i = 0; i < kg.num_triples(); ++i) {
    order[kg.triple(i).relation.index()].push_back(i);
  }
  for (std::size_t r = 0; r < order.size(); ++r) {
    auto& idx = order[r];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return kg.triple(a).head < kg.triple(b).head;
    });
    RelationEdges& e = by_relation_[r];
    for (std::size_t i : idx) {
      e.heads.push_back(kg.triple(i).head.index());
      e.tails.push_back(kg.triple(i).tail.index());
      e.triples.push_back(i);
    }
  }
}

std::pair<std::size_t, std::size_t> AdjacencyIndex::range(EntityId h, RelationId r) const {
  const auto& heads = edges(r).heads;
  auto [lo, hi] = std::equal_range(heads.begin(), heads.end(), h.index());
  return {static_cast<std::size_t>(lo - heads.begin()), static_cast<std::size_t>(hi - heads.begin())};
}

std::vector<EntityId> AdjacencyIndex::neighbors(EntityId h, RelationId r) const {
  auto [lo, hi] = range(h, r);
  std::vector<EntityId> out;
  for (std::size_t i = lo; i < hi; ++i) out.emplace_back(edges(r).tails[i]);
  return out;
}

std::vector<std::size_t> AdjacencyIndex::neighbor_triples(EntityId h, RelationId r) const {
  auto [lo, hi] = range(h, r);
  return {edges(r).triples.begin() + static_cast<std::ptrdiff_t>(lo),
          edges(r).triples.begin() + static_cast<std::ptrdiff_t>(hi)};
}

std::size_t AdjacencyIndex::degree(EntityId h, RelationId r) const {
  auto [lo, hi] = range(h, r);
  return hi - lo;
}

std::optional<bool> NoiseLabelSet::label(const Triple& t) const {
  auto it = labels_.find(t);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::size_t NoiseLabelSet::noise_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels_.begin(), labels_.end(), [](const auto& kv) { return kv.second; }));
}

std::vector<Triple> NoiseLabelSet::noisy() const {
  std::vector<Triple> out;
  for (const auto& [t, noise] : labels_) {
    if (noise) out.push_back(t);
  }
  return out;
}

bool NoiseLabelSet::subset_of(const KnowledgeGraph& kg) const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [&](const auto& kv) { return kg.contains(kv.first); });
}

}  // namespace kgd
