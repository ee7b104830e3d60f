#include "kgd/detector.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kgd/error.hpp"
#include "kgd/reconstructor.hpp"

namespace kgd {

std::string to_string(NoiseConvention c) {
  return c == NoiseConvention::low_score_is_noise ? "low-score-is-noise" : "paper-formula";
}

NoiseConvention parse_convention(const std::string& s) {
  if (s == "low-score-is-noise") return NoiseConvention::low_score_is_noise;
  if (s == "paper-formula") return NoiseConvention::paper_formula;
  throw Error("unknown convention '" + s + "' (expected low-score-is-noise or paper-formula)");
}

bool is_noise_score(double score, double threshold, NoiseConvention convention) {
  return convention == NoiseConvention::low_score_is_noise ? score < threshold : score >= threshold;
}

std::size_t NoiseReport::num_noisy() const {
  return static_cast<std::size_t>(
      std::count_if(triples.begin(), triples.end(), [](const TripleVerdict& v) { return v.is_noise; }));
}

std::vector<Triple> NoiseReport::noisy() const {
  std::vector<Triple> out;
  for (const TripleVerdict& v : triples) {
    if (v.is_noise) out.push_back(v.triple);
  }
  return out;
}

NoiseReport classify(const KnowledgeGraph& kg, std::span<const double> scores,
                     std::span<const double> mask, double threshold, NoiseConvention convention) {
  if (scores.size() != kg.num_triples() || mask.size() != kg.num_triples()) {
    throw Error("classify: scores or mask do not cover the graph");
  }
  NoiseReport report;
  report.threshold = threshold;
  report.convention = convention;
  const std::size_t n = kg.num_forward_triples();
  report.triples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    TripleVerdict& v = report.triples[i];
    v.triple = kg.triple(i);
    v.score = scores[i];
    v.mask = mask[i];
    v.is_noise = is_noise_score(v.score, threshold, convention);
  }
  for (std::size_t i = n; i < kg.num_triples(); ++i) {
    TripleVerdict& v = report.triples[kg.forward_index(i)];
    v.reverse_score = scores[i];
    v.reverse_mask = mask[i];
    v.is_noise = v.is_noise || is_noise_score(scores[i], threshold, convention);
  }
  return report;
}

NoiseReport detect_noise(const KnowledgeGraph& kg, RAEModel& model, double threshold,
                         NoiseConvention convention) {
  const Inference inf = infer(kg, model);
  return classify(kg, inf.scores, inf.mask.discretized, threshold, convention);
}

std::string report_json(const KnowledgeGraph& kg, const NoiseReport& report) {
  using nlohmann::json;
  json j;
  j["schema"] = 1;
  j["threshold"] = report.threshold;
  j["convention"] = to_string(report.convention);
  j["num_triples"] = report.triples.size();
  j["num_noisy"] = report.num_noisy();
  json rows = json::array();
  for (const TripleVerdict& v : report.triples) {
    json row = {{"head", kg.entities().name(v.triple.head.index())},
                {"relation", kg.relations().name(v.triple.relation.index())},
                {"tail", kg.entities().name(v.triple.tail.index())},
                {"score", v.score},
                {"mask", v.mask},
                {"is_noise", v.is_noise}};
    if (v.reverse_score) row["reverse_score"] = *v.reverse_score;
    if (v.reverse_mask) row["reverse_mask"] = *v.reverse_mask;
    rows.push_back(std::move(row));
  }
  j["triples"] = std::move(rows);
  return j.dump(1) + "\n";
}

NoiseReport parse_report_json(const KnowledgeGraph& kg, const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("schema").get<int>() != 1) throw Error("noise report: unsupported schema");
  NoiseReport report;
  report.threshold = j.at("threshold").get<double>();
  report.convention = parse_convention(j.at("convention").get<std::string>());
  for (const auto& row : j.at("triples")) {
    auto h = kg.entities().find(row.at("head").get<std::string>());
    auto r = kg.relations().find(row.at("relation").get<std::string>());
    auto t = kg.entities().find(row.at("tail").get<std::string>());
    if (!h || !r || !t) throw Error("noise report: triple not in the graph's vocabularies");
    TripleVerdict v;
    v.triple = {EntityId(*h), RelationId(*r), EntityId(*t)};
    v.score = row.at("score").get<double>();
    v.mask = row.at("mask").get<double>();
    if (row.contains("reverse_score")) v.reverse_score = row.at("reverse_score").get<double>();
    if (row.contains("reverse_mask")) v.reverse_mask = row.at("reverse_mask").get<double>();
    v.is_noise = row.at("is_noise").get<bool>();
    report.triples.push_back(v);
  }
  return report;
}

std::string report_tsv(const KnowledgeGraph& kg, const NoiseReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << "head\trelation\ttail\tscore\treverse_score\tmask\n";
  for (const TripleVerdict& v : report.triples) {
    if (!v.is_noise) continue;
    out << kg.entities().name(v.triple.head.index()) << '\t'
        << kg.relations().name(v.triple.relation.index()) << '\t'
        << kg.entities().name(v.triple.tail.index()) << '\t' << v.score << '\t';
    if (v.reverse_score) out << *v.reverse_score;
    out << '\t' << v.mask << '\n';
  }
  return out.str();
}

std::vector<FitEntry> fit_frequency(const KnowledgeGraph& kg, const ad::Tensor& entity_embeddings,
                                    const ad::Tensor& relation_embeddings, std::uint64_t seed,
                                    std::size_t negatives) {
  struct Acc {
    std::size_t count = 0;
    double sum = 0.0;
  };
  std::map<TypePattern, Acc> acc;
  for (std::size_t i = 0; i < kg.num_forward_triples(); ++i) {
    const Triple& t = kg.triple(i);
    double margin = recon_score(t, entity_embeddings, relation_embeddings);
    if (negatives > 0) {
      Rng rng(derive_seed(seed, i));
      double neg = 0.0;
      for (std::size_t k = 0; k < negatives; ++k) {
        Triple c = t;
        c.tail = EntityId(uniform_index(rng, kg.num_entities()));
        neg += recon_score(c, entity_embeddings, relation_embeddings);
      }
      margin -= neg / static_cast<double>(negatives);
    }
    Acc& a = acc[kg.pattern_of(t)];
    ++a.count;
    a.sum += margin;
  }
  std::vector<FitEntry> out;
  for (const auto& [pattern, a] : acc) {
    out.push_back({pattern, a.count, a.sum / static_cast<double>(a.count)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FitEntry& x, const FitEntry& y) { return x.frequency > y.frequency; });
  return out;
}

std::vector<FitEntry> fit_frequency(const KnowledgeGraph& kg, RAEModel& model, std::uint64_t seed,
                                    std::size_t negatives) {
  const Inference inf = infer(kg, model);
  return fit_frequency(kg, inf.entity_embeddings, model.recon.relation_embeddings.value, seed,
                       negatives);
}

std::string fit_csv(const KnowledgeGraph& kg, const std::vector<FitEntry>& fit) {
  std::ostringstream out;
  out.precision(17);
  out << "head_type,relation,tail_type,frequency,fit_score\n";
  for (const FitEntry& e : fit) {
    out << kg.types().name(e.pattern.head.index()) << ','
        << kg.relations().name(e.pattern.relation.index()) << ','
        << kg.types().name(e.pattern.tail.index()) << ',' << e.frequency << ',' << e.fit_score
        << '\n';
  }
  return out.str();
}

std::vector<Triple> compress(const KnowledgeGraph& kg, std::span<const double> mask,
                             double threshold) {
  if (mask.size() != kg.num_triples()) throw Error("compress: mask does not cover the graph");
  std::vector<Triple> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] >= threshold) out.push_back(kg.triple(i));
  }
  return out;
}

std::vector<Triple> compress(const KnowledgeGraph& kg, RAEModel& model, double threshold) {
  return compress(kg, infer(kg, model).mask.discretized, threshold);
}

std::vector<CompletionEntry> complete(const KnowledgeGraph& kg, const ad::Tensor& entity_embeddings,
                                      const ad::Tensor& relation_embeddings,
                                      std::span<const Triple> candidates, double threshold) {
  std::vector<CompletionEntry> out;
  std::unordered_set<Triple, TripleHash> seen;
  for (const Triple& t : candidates) {
    if (kg.contains(t) || !seen.insert(t).second) continue;
    const double s = recon_score(t, entity_embeddings, relation_embeddings);
    if (s >= threshold) out.push_back({t, s});
  }
  return out;
}

std::vector<CompletionEntry> complete(const KnowledgeGraph& kg, RAEModel& model,
                                      std::span<const Triple> candidates, double threshold) {
  const Inference inf = infer(kg, model);
  return complete(kg, inf.entity_embeddings, model.recon.relation_embeddings.value, candidates,
                  threshold);
}

DetectionRates evaluate(const NoiseReport& report, const NoiseLabelSet& labels) {
  DetectionRates r;
  for (const TripleVerdict& v : report.triples) {
    const auto label = labels.label(v.triple);
    if (!label) throw Error("evaluate: labels do not cover every reported triple");
    if (*label) {
      (v.is_noise ? r.true_positive : r.false_negative)++;
    } else {
      (v.is_noise ? r.false_positive : r.true_negative)++;
    }
  }
  auto rate = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = rate(r.true_positive, r.true_positive + r.false_positive);
  r.recall = rate(r.true_positive, r.true_positive + r.false_negative);
  r.true_negative_rate = rate(r.true_negative, r.true_negative + r.false_positive);
  return r;
}

}  // namespace kgd
