#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgd {

// Dense 0-based index into one of the graph's vocabularies.
template <class Tag>
struct Id {
  std::uint32_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}
  constexpr explicit Id(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit Id(int v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const { return value; }
  friend constexpr auto operator<=>(Id, Id) = default;
};

using EntityId = Id<struct EntityTag>;
using RelationId = Id<struct RelationTag>;
using TypeId = Id<struct TypeTag>;

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  friend constexpr auto operator<=>(const Triple&, const Triple&) = default;
};

// (head type, relation, tail type) signature of a triple.
struct TypePattern {
  TypeId head;
  RelationId relation;
  TypeId tail;

  friend constexpr auto operator<=>(const TypePattern&, const TypePattern&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

struct TypePatternHash {
  std::size_t operator()(const TypePattern& p) const noexcept;
};

inline constexpr std::string_view kUntypedType = "__untyped__";
inline constexpr std::string_view kReverseSuffix = "_reverse";

// Bidirectional string <-> dense index map, indices in insertion order.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Typed triple store: entity/relation/type vocabularies, a duplicate-free
// triple list in insertion order and a total entity -> type map. Relations
// are their own type. After reverse augmentation relation ids
// [base_relation_count, 2*base_relation_count) are the reverses, and triple
// i + n/2 is the reverse of triple i.
class KnowledgeGraph {
 public:
  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_types() const { return types_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  const Vocabulary& types() const { return types_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<TypeId>& type_map() const { return type_of_; }

  TypeId type_of(EntityId e) const { return type_of_.at(e.index()); }
  TypePattern pattern_of(const Triple& t) const {
    return {type_of(t.head), t.relation, type_of(t.tail)};
  }
  bool contains(const Triple& t) const { return index_.contains(t); }
  std::optional<std::size_t> index_of(const Triple& t) const;

  bool augmented() const { return augmented_; }
  std::size_t base_relation_count() const {
    return augmented_ ? base_relations_ : relations_.size();
  }
  bool is_reverse(RelationId r) const { return augmented_ && r.index() >= base_relations_; }
  // Forward triple a (possibly reverse) triple was derived from.
  Triple forward_of(const Triple& t) const;
  // Index of the forward triple for a triple index (identity when not augmented).
  std::size_t forward_index(std::size_t triple_index) const;
  std::size_t num_forward_triples() const {
    return augmented_ ? triples_.size() / 2 : triples_.size();
  }

  // Construction. Graphs are treated as immutable once built.
  TypeId add_type(std::string_view name) { return TypeId(types_.intern(name)); }
  RelationId add_relation(std::string_view name) { return RelationId(relations_.intern(name)); }
  // Returns the existing id if the entity is already known (type unchanged).
  EntityId add_entity(std::string_view name, TypeId type);
  // false if the triple is already present; throws on invalid ids.
  bool add_triple(const Triple& t);
  void set_type(EntityId e, TypeId type);
  void mark_augmented(std::size_t base_relations);

  const Triple& triple(std::size_t i) const { return triples_.at(i); }
  std::string describe(const Triple& t) const;

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b);

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  Vocabulary types_;
  std::vector<Triple> triples_;
  std::vector<TypeId> type_of_;
  std::unordered_map<Triple, std::size_t, TripleHash> index_;
  bool augmented_ = false;
  std::size_t base_relations_ = 0;
};

// Per-relation edge lists grouped by head entity; realizes the neighborhoods
// N_h^r = { t : (h, r, t) in K }.
class AdjacencyIndex {
 public:
  struct RelationEdges {
    std::vector<std::size_t> heads;
    std::vector<std::size_t> tails;
    std::vector<std::size_t> triples;  // back-references into the triple list
  };

  explicit AdjacencyIndex(const KnowledgeGraph& kg);

  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return by_relation_.size(); }
  std::size_t num_edges() const { return num_edges_; }

  // Edges of relation r sorted by head, ties in triple order.
  const RelationEdges& edges(RelationId r) const { return by_relation_.at(r.index()); }
  std::vector<EntityId> neighbors(EntityId h, RelationId r) const;
  std::vector<std::size_t> neighbor_triples(EntityId h, RelationId r) const;
  std::size_t degree(EntityId h, RelationId r) const;

 private:
  std::pair<std::size_t, std::size_t> range(EntityId h, RelationId r) const;

  std::size_t num_entities_ = 0;
  std::size_t num_edges_ = 0;
  std::vector<RelationEdges> by_relation_;
};

// Planted-noise ground truth keyed by triple.
class NoiseLabelSet {
 public:
  void set(const Triple& t, bool is_noise) { labels_[t] = is_noise; }
  std::optional<bool> label(const Triple& t) const;
  std::size_t size() const { return labels_.size(); }
  std::size_t noise_count() const;
  std::vector<Triple> noisy() const;
  const std::map<Triple, bool>& entries() const { return labels_; }
  // Every labeled triple is in kg.
  bool subset_of(const KnowledgeGraph& kg) const;

  friend bool operator==(const NoiseLabelSet&, const NoiseLabelSet&) = default;

 private:
  std::map<Triple, bool> labels_;
};

}  // namespace kgd
