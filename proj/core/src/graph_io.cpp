#include "kgd/graph_io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "kgd/error.hpp"

namespace kgd {
namespace {

using nlohmann::json;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Calls fn(line_number, fields) for every data line.
template <class Fn>
void for_each_record(const std::filesystem::path& path, std::size_t arity, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != arity) {
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(arity) + " tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError(path.string(), lineno, "empty field");
    }
    fn(lineno, fields);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

Triple resolve(const KnowledgeGraph& kg, const std::vector<std::string>& f,
               const std::string& file, std::size_t lineno) {
  auto h = kg.entities().find(f[0]);
  auto r = kg.relations().find(f[1]);
  auto t = kg.entities().find(f[2]);
  if (!h || !r || !t) {
    throw ParseError(file, lineno, "triple references an unknown entity or relation");
  }
  return {EntityId(*h), RelationId(*r), EntityId(*t)};
}

}  // namespace

LoadResult load_graph(const std::filesystem::path& triples_path,
                      const std::filesystem::path& types_path) {
  LoadResult result;
  LoadReport& report = result.report;

  struct Raw {
    std::uint32_t h, r, t;
  };
  Vocabulary entities, relations;
  std::vector<Raw> raw;
  for_each_record(triples_path, 3, [&](std::size_t, const std::vector<std::string>& f) {
    ++report.lines;
    const auto h = entities.intern(f[0]);
    const auto r = relations.intern(f[1]);
    const auto t = entities.intern(f[2]);
    raw.push_back({h, r, t});
  });
  if (raw.empty()) throw Error(triples_path.string() + ": no triples");

  std::unordered_map<std::string, std::string> type_name;
  for_each_record(types_path, 2, [&](std::size_t lineno, const std::vector<std::string>& f) {
    auto [it, inserted] = type_name.emplace(f[0], f[1]);
    if (!inserted && it->second != f[1]) {
      throw ParseError(types_path.string(), lineno,
                       "entity '" + f[0] + "' already has type '" + it->second + "'");
    }
  });

  KnowledgeGraph& kg = result.graph;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    auto it = type_name.find(entities.name(e));
    if (it == type_name.end()) {
      ++report.untyped_entities;
      kg.add_entity(entities.name(e), kg.add_type(kUntypedType));
    } else {
      kg.add_entity(entities.name(e), kg.add_type(it->second));
    }
  }
  for (const auto& name : relations.names()) kg.add_relation(name);
  for (const Raw& t : raw) {
    if (!kg.add_triple({EntityId(t.h), RelationId(t.r), EntityId(t.t)})) ++report.duplicates;
  }
  for (const auto& [entity, type] : type_name) {
    if (!entities.find(entity)) ++report.unused_type_entries;
  }

  if (report.untyped_entities > 0) {
    report.warnings.push_back(std::to_string(report.untyped_entities) +
                              " entities missing from the type file were assigned '" +
                              std::string(kUntypedType) + "'");
  }
  if (report.duplicates > 0) {
    report.warnings.push_back("dropped " + std::to_string(report.duplicates) + " duplicate triples");
  }
  if (kg.num_types() >= kg.num_entities()) {
    report.warnings.push_back("type count " + std::to_string(kg.num_types()) +
                              " is not smaller than entity count " +
                              std::to_string(kg.num_entities()));
  }
  return result;
}

void save_triples(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const Triple& t : kg.triples()) {
    out << kg.entities().name(t.head.index()) << '\t' << kg.relations().name(t.relation.index())
        << '\t' << kg.entities().name(t.tail.index()) << '\n';
  }
}

void save_types(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    out << kg.entities().name(e) << '\t' << kg.types().name(kg.type_of(EntityId(e)).index())
        << '\n';
  }
}

void save_noise_labels(const KnowledgeGraph& kg, const NoiseLabelSet& labels,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  // Graph order, not label-map order, so files diff cleanly against the triples.
  for (const Triple& t : kg.triples()) {
    if (labels.label(t).value_or(false)) {
      out << kg.entities().name(t.head.index()) << '\t'
          << kg.relations().name(t.relation.index()) << '\t'
          << kg.entities().name(t.tail.index()) << '\n';
    }
  }
}

NoiseLabelSet load_noise_labels(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  NoiseLabelSet labels;
  for (std::size_t i = 0; i < kg.num_forward_triples(); ++i) labels.set(kg.triple(i), false);
  for_each_record(path, 3, [&](std::size_t lineno, const std::vector<std::string>& f) {
    const Triple t = resolve(kg, f, path.string(), lineno);
    if (!kg.contains(t)) throw ParseError(path.string(), lineno, "labeled triple not in graph");
    labels.set(t, true);
  });
  return labels;
}

std::vector<Triple> load_triple_list(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::vector<Triple> out;
  for_each_record(path, 3, [&](std::size_t lineno, const std::vector<std::string>& f) {
    out.push_back(resolve(kg, f, path.string(), lineno));
  });
  return out;
}

std::string snapshot_json(const KnowledgeGraph& kg, const NoiseLabelSet* labels) {
  json j;
  j["format"] = 1;
  j["entities"] = kg.entities().names();
  j["relations"] = kg.relations().names();
  j["types"] = kg.types().names();
  std::vector<std::uint32_t> types, heads, rels, tails;
  for (TypeId c : kg.type_map()) types.push_back(c.value);
  for (const Triple& t : kg.triples()) {
    heads.push_back(t.head.value);
    rels.push_back(t.relation.value);
    tails.push_back(t.tail.value);
  }
  j["entity_types"] = types;
  j["augmented"] = kg.augmented();
  j["base_relations"] = kg.base_relation_count();
  j["triples"] = {{"head", heads}, {"relation", rels}, {"tail", tails}};
  if (labels) {
    std::vector<std::size_t> noise;
    for (std::size_t i = 0; i < kg.num_triples(); ++i) {
      if (labels->label(kg.triple(i)).value_or(false)) noise.push_back(i);
    }
    j["noise"] = noise;
  }
  return j.dump(1);
}

Snapshot parse_snapshot(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("format").get<int>() != 1) throw Error("snapshot: unsupported format version");
  Snapshot snap;
  KnowledgeGraph& kg = snap.graph;
  for (const auto& name : j.at("types")) kg.add_type(name.get<std::string>());
  for (const auto& name : j.at("relations")) kg.add_relation(name.get<std::string>());
  const auto& names = j.at("entities");
  const auto& types = j.at("entity_types");
  if (names.size() != types.size()) throw Error("snapshot: entity_types length mismatch");
  for (std::size_t e = 0; e < names.size(); ++e) {
    const auto c = types[e].get<std::uint32_t>();
    if (c >= kg.num_types()) throw Error("snapshot: entity type index out of range");
    kg.add_entity(names[e].get<std::string>(), TypeId(c));
  }
  const auto& tr = j.at("triples");
  const auto& h = tr.at("head");
  const auto& r = tr.at("relation");
  const auto& t = tr.at("tail");
  if (h.size() != r.size() || h.size() != t.size()) throw Error("snapshot: triple arrays differ");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!kg.add_triple({EntityId(h[i].get<std::uint32_t>()), RelationId(r[i].get<std::uint32_t>()),
                        EntityId(t[i].get<std::uint32_t>())})) {
      throw Error("snapshot: duplicate triple at index " + std::to_string(i));
    }
  }
  if (j.at("augmented").get<bool>()) kg.mark_augmented(j.at("base_relations").get<std::size_t>());
  if (j.contains("noise")) {
    NoiseLabelSet labels;
    for (std::size_t i = 0; i < kg.num_forward_triples(); ++i) labels.set(kg.triple(i), false);
    for (const auto& idx : j.at("noise")) labels.set(kg.triple(idx.get<std::size_t>()), true);
    snap.labels = std::move(labels);
  }
  return snap;
}

void write_snapshot(const std::filesystem::path& path, const KnowledgeGraph& kg,
                    const NoiseLabelSet* labels) {
  auto out = open_out(path);
  out << snapshot_json(kg, labels) << '\n';
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

std::string type_distribution_csv(const KnowledgeGraph& kg, const TypeCountMatrix& m) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  std::ostringstream out;
  out << "head_type";
  for (std::size_t c = 0; c < m.num_types; ++c) out << ',' << quote(kg.types().name(c));
  out << '\n';
  for (std::size_t a = 0; a < m.num_types; ++a) {
    out << quote(kg.types().name(a));
    for (std::size_t b = 0; b < m.num_types; ++b) out << ',' << m.cells[a * m.num_types + b];
    out << '\n';
  }
  return out.str();
}

std::string vocabulary_fingerprint(const KnowledgeGraph& kg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;
    h *= 0x100000001b3ULL;
  };
  for (const auto& n : kg.entities().names()) feed(n);
  feed("|relations|");
  for (const auto& n : kg.relations().names()) feed(n);
  feed("|types|");
  for (const auto& n : kg.types().names()) feed(n);
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace kgd
