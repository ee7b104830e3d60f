#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/graph_ops.hpp"

namespace kgd {

struct LoadReport {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
  std::size_t untyped_entities = 0;
  std::size_t unused_type_entries = 0;  // type-file rows for entities not in any triple
  std::vector<std::string> warnings;
};

struct LoadResult {
  KnowledgeGraph graph;
  LoadReport report;
};

// Triples: `head<TAB>relation<TAB>tail` per line; types: `entity<TAB>type`.
// Blank lines and lines starting with '#' are skipped. Entities and relations
// are numbered by first appearance in the triple file, types by the first
// entity carrying them. Entities absent from the type file get `__untyped__`.
LoadResult load_graph(const std::filesystem::path& triples_path,
                      const std::filesystem::path& types_path);

void save_triples(const KnowledgeGraph& kg, const std::filesystem::path& path);
void save_types(const KnowledgeGraph& kg, const std::filesystem::path& path);

// Noisy triples as a triple TSV. Loading marks every other triple of kg clean.
void save_noise_labels(const KnowledgeGraph& kg, const NoiseLabelSet& labels,
                       const std::filesystem::path& path);
NoiseLabelSet load_noise_labels(const KnowledgeGraph& kg, const std::filesystem::path& path);

// Triple list (e.g. completion candidates) resolved against kg's vocabularies.
std::vector<Triple> load_triple_list(const KnowledgeGraph& kg, const std::filesystem::path& path);

// JSON snapshot, schema version "format": 1:
//   {"format": 1, "entities": [...], "relations": [...], "types": [...],
//    "entity_types": [type index per entity], "augmented": bool,
//    "base_relations": n,
//    "triples": {"head": [...], "relation": [...], "tail": [...]},
//    "noise": [triple indices]   (present only with labels)}
struct Snapshot {
  KnowledgeGraph graph;
  std::optional<NoiseLabelSet> labels;
};

std::string snapshot_json(const KnowledgeGraph& kg, const NoiseLabelSet* labels = nullptr);
Snapshot parse_snapshot(const std::string& json);
void write_snapshot(const std::filesystem::path& path, const KnowledgeGraph& kg,
                    const NoiseLabelSet* labels = nullptr);
Snapshot read_snapshot(const std::filesystem::path& path);

// CSV with a header row and first column of type names; rows are head types.
std::string type_distribution_csv(const KnowledgeGraph& kg, const TypeCountMatrix& m);

// 64-bit FNV-1a hash (hex) over the vocabularies; ties a checkpoint to the
// graph it was trained on.
std::string vocabulary_fingerprint(const KnowledgeGraph& kg);

}  // namespace kgd
