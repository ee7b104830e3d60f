#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "kgd/error.hpp"
#include "kgd/graph_io.hpp"
#include "kgd/graph_ops.hpp"

namespace kgd {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kgd_graph_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Brute force over every (head type, relation, tail type) cell.
double ltt_by_enumeration(const KnowledgeGraph& kg) {
  std::size_t hits = 0;
  for (std::size_t a = 0; a < kg.num_types(); ++a) {
    for (std::size_t r = 0; r < kg.num_relations(); ++r) {
      for (std::size_t b = 0; b < kg.num_types(); ++b) {
        for (const Triple& t : kg.triples()) {
          if (kg.type_of(t.head).index() == a && t.relation.index() == r &&
              kg.type_of(t.tail).index() == b) {
            ++hits;
            break;
          }
        }
      }
    }
  }
  const double c = static_cast<double>(kg.num_types()), r = static_cast<double>(kg.num_relations());
  return static_cast<double>(hits) / (c * r * c);
}

TEST(Vocabulary, InternsInInsertionOrder) {
  KnowledgeGraph kg;
  EXPECT_EQ(kg.add_relation("b").index(), 0u);
  EXPECT_EQ(kg.add_relation("a").index(), 1u);
  EXPECT_EQ(kg.add_relation("b").index(), 0u);
  EXPECT_EQ(kg.relations().name(1), "a");
}

TEST(KnowledgeGraph, RejectsDuplicateTriples) {
  KnowledgeGraph kg;
  const TypeId c = kg.add_type("t");
  const EntityId x = kg.add_entity("x", c), y = kg.add_entity("y", c);
  const RelationId r = kg.add_relation("r");
  EXPECT_TRUE(kg.add_triple({x, r, y}));
  EXPECT_FALSE(kg.add_triple({x, r, y}));
  EXPECT_EQ(kg.num_triples(), 1u);
  EXPECT_EQ(kg.index_of({x, r, y}), 0u);
  EXPECT_THROW(kg.add_triple({x, RelationId(5), y}), Error);
}

TEST(AdjacencyIndex, NeighborhoodsMatchTriples) {
  const KnowledgeGraph kg = testing::random_graph(20, 3, 4, 80, 11);
  const AdjacencyIndex adj(kg);
  EXPECT_EQ(adj.num_edges(), kg.num_triples());
  for (std::size_t h = 0; h < kg.num_entities(); ++h) {
    for (std::size_t r = 0; r < kg.num_relations(); ++r) {
      std::multiset<std::size_t> expected, got;
      for (const Triple& t : kg.triples()) {
        if (t.head.index() == h && t.relation.index() == r) expected.insert(t.tail.index());
      }
      for (EntityId e : adj.neighbors(EntityId(h), RelationId(r))) got.insert(e.index());
      EXPECT_EQ(got, expected);
      EXPECT_EQ(adj.degree(EntityId(h), RelationId(r)), expected.size());
    }
  }
}

TEST(Ltt, MatchesEnumerationOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const KnowledgeGraph kg = testing::random_graph(30, 2 + seed % 5, 1 + seed % 4, 40 + seed * 7, seed);
    EXPECT_DOUBLE_EQ(compute_ltt(kg), ltt_by_enumeration(kg)) << "seed " << seed;
  }
}

TEST(Ltt, HandValue) {
  KnowledgeGraph kg;
  const TypeId a = kg.add_type("A"), b = kg.add_type("B");
  const EntityId x = kg.add_entity("x", a), y = kg.add_entity("y", b), z = kg.add_entity("z", b);
  const RelationId r = kg.add_relation("r");
  kg.add_triple({x, r, y});
  kg.add_triple({x, r, z});
  kg.add_triple({y, r, z});
  // (A,r,B) and (B,r,B) out of 2*1*2 cells.
  EXPECT_DOUBLE_EQ(compute_ltt(kg), 0.5);
  EXPECT_THROW(compute_ltt(KnowledgeGraph{}), Error);
}

TEST(AugmentReverse, DoublesTriplesAndStripsBack) {
  const KnowledgeGraph kg = testing::random_graph(15, 3, 2, 40, 5);
  const KnowledgeGraph aug = augment_reverse(kg);
  ASSERT_TRUE(aug.augmented());
  EXPECT_EQ(aug.num_triples(), 2 * kg.num_triples());
  EXPECT_EQ(aug.num_relations(), 2 * kg.num_relations());
  EXPECT_EQ(aug.relations().name(kg.num_relations()), "rel0" + std::string(kReverseSuffix));
  for (std::size_t i = 0; i < kg.num_triples(); ++i) {
    const Triple& f = aug.triple(i);
    const Triple& b = aug.triple(i + kg.num_triples());
    EXPECT_EQ(b.head, f.tail);
    EXPECT_EQ(b.tail, f.head);
    EXPECT_TRUE(aug.is_reverse(b.relation));
    EXPECT_EQ(aug.forward_of(b), f);
    EXPECT_EQ(aug.forward_index(i + kg.num_triples()), i);
  }
  EXPECT_EQ(strip_reverse(aug), kg);
  EXPECT_THROW(augment_reverse(aug), Error);
}

TEST(RelationTypeDistribution, CountsEveryTripleOnce) {
  const KnowledgeGraph kg = testing::random_graph(25, 4, 3, 90, 2);
  std::size_t total = 0;
  for (std::size_t r = 0; r < kg.num_relations(); ++r) {
    total += relation_type_distribution(kg, RelationId(r)).total();
  }
  EXPECT_EQ(total, kg.num_triples());
}

TEST(CorruptTypeLabels, RelabelsExactlyTheRoundedCount) {
  const KnowledgeGraph kg = testing::random_graph(200, 5, 2, 300, 9);
  const KnowledgeGraph out = corrupt_type_labels(kg, 0.1, 4);
  std::size_t changed = 0;
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    changed += kg.type_of(EntityId(e)) != out.type_of(EntityId(e));
  }
  EXPECT_EQ(changed, 20u);
  EXPECT_EQ(out.triples(), kg.triples());
  EXPECT_EQ(corrupt_type_labels(kg, 0.1, 4), out);
  EXPECT_EQ(corrupt_type_labels(kg, 0.0, 4), kg);
}

TEST(Synthetic, TriplesFollowLegalPatterns) {
  SyntheticSpec spec{5, 3, 100, random_legal_patterns(5, 3, 2, 1), 800, 2};
  const KnowledgeGraph kg = generate_synthetic_kg(spec);
  EXPECT_EQ(kg.num_triples(), 800u);
  const std::set<TypePattern> legal(spec.legal_patterns.begin(), spec.legal_patterns.end());
  for (const Triple& t : kg.triples()) EXPECT_TRUE(legal.contains(kg.pattern_of(t)));
  for (std::size_t e = 0; e < kg.num_entities(); ++e) EXPECT_EQ(kg.type_of(EntityId(e)).index(), e % 5);
  EXPECT_EQ(generate_synthetic_kg(spec), kg);
}

TEST(Synthetic, LegalPatternsHaveNoMirrors) {
  const auto patterns = random_legal_patterns(6, 4, 3, 8);
  EXPECT_EQ(patterns.size(), 12u);
  const std::set<TypePattern> all(patterns.begin(), patterns.end());
  EXPECT_EQ(all.size(), patterns.size());
  for (const TypePattern& p : patterns) {
    EXPECT_NE(p.head, p.tail);
    EXPECT_FALSE(all.contains({p.tail, p.relation, p.head}));
  }
}

TEST(InjectTypeNoise, PlantsIllegitimateSignatures) {
  SyntheticSpec spec{6, 4, 120, random_legal_patterns(6, 4, 2, 3), 1000, 5};
  const KnowledgeGraph clean = generate_synthetic_kg(spec);
  const auto legit = legitimate_patterns(clean);
  auto [noisy, labels] = inject_type_noise(clean, 0.05, 6);
  EXPECT_EQ(noisy.num_triples(), 1050u);
  EXPECT_EQ(labels.size(), noisy.num_triples());
  EXPECT_EQ(labels.noise_count(), 50u);
  EXPECT_TRUE(labels.subset_of(noisy));
  for (const Triple& t : labels.noisy()) EXPECT_FALSE(legit.contains(noisy.pattern_of(t)));
  for (const Triple& t : clean.triples()) EXPECT_EQ(labels.label(t), false);
}

TEST(GraphIo, RoundTripsThroughTsv) {
  const fs::path dir = scratch_dir("roundtrip");
  auto [kg, labels] = testing::small_benchmark();
  save_triples(kg, dir / "t.tsv");
  save_types(kg, dir / "c.tsv");
  save_noise_labels(kg, labels, dir / "n.tsv");
  LoadResult loaded = load_graph(dir / "t.tsv", dir / "c.tsv");
  EXPECT_EQ(loaded.graph.num_triples(), kg.num_triples());
  EXPECT_EQ(loaded.report.duplicates, 0u);
  for (const Triple& t : kg.triples()) {
    const Triple u{EntityId(loaded.graph.entities().find(kg.entities().name(t.head.index())).value()),
                   RelationId(loaded.graph.relations().find(kg.relations().name(t.relation.index())).value()),
                   EntityId(loaded.graph.entities().find(kg.entities().name(t.tail.index())).value())};
    EXPECT_TRUE(loaded.graph.contains(u));
    EXPECT_EQ(loaded.graph.types().name(loaded.graph.type_of(u.head).index()),
              kg.types().name(kg.type_of(t.head).index()));
  }
  const NoiseLabelSet back = load_noise_labels(loaded.graph, dir / "n.tsv");
  EXPECT_EQ(back.noise_count(), labels.noise_count());
  EXPECT_EQ(back.size(), loaded.graph.num_triples());
}

TEST(GraphIo, ReportsDuplicatesUntypedAndMalformed) {
  const fs::path dir = scratch_dir("report");
  write(dir / "t.tsv", "# comment\na\tr\tb\na\tr\tb\n\nb\tr\tc\n");
  write(dir / "c.tsv", "a\tX\nb\tY\nzzz\tY\n");
  LoadResult r = load_graph(dir / "t.tsv", dir / "c.tsv");
  EXPECT_EQ(r.graph.num_triples(), 2u);
  EXPECT_EQ(r.report.duplicates, 1u);
  EXPECT_EQ(r.report.untyped_entities, 1u);
  EXPECT_EQ(r.report.unused_type_entries, 1u);
  EXPECT_EQ(r.graph.types().name(r.graph.type_of(EntityId(2)).index()), kUntypedType);

  write(dir / "bad.tsv", "a\tr\n");
  EXPECT_THROW(load_graph(dir / "bad.tsv", dir / "c.tsv"), Error);
  EXPECT_THROW(load_graph(dir / "missing.tsv", dir / "c.tsv"), Error);
}

TEST(GraphIo, SnapshotRoundTrip) {
  auto [kg, labels] = testing::small_benchmark(3);
  const KnowledgeGraph aug = augment_reverse(kg);
  const Snapshot s = parse_snapshot(snapshot_json(aug, &labels));
  EXPECT_EQ(s.graph, aug);
  ASSERT_TRUE(s.labels.has_value());
  EXPECT_EQ(*s.labels, labels);
  EXPECT_THROW(parse_snapshot("{\"format\": 99}"), Error);
}

TEST(Fingerprint, TracksVocabularies) {
  const KnowledgeGraph a = testing::random_graph(10, 2, 2, 20, 1);
  KnowledgeGraph b = a;
  EXPECT_EQ(vocabulary_fingerprint(a), vocabulary_fingerprint(b));
  b.add_relation("extra");
  EXPECT_NE(vocabulary_fingerprint(a), vocabulary_fingerprint(b));
}

}  // namespace
}  // namespace kgd
