#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgd/graph.hpp"
#include "kgd/model.hpp"

namespace kgd {

enum class NoiseConvention {
  low_score_is_noise,  // noisy iff score < threshold
  paper_formula,       // noisy iff score >= threshold
};

std::string to_string(NoiseConvention c);
NoiseConvention parse_convention(const std::string& s);

bool is_noise_score(double score, double threshold, NoiseConvention convention);

// One forward triple; the reverse fields are set when the graph is augmented.
struct TripleVerdict {
  Triple triple;
  double score = 0.0;
  double mask = 0.0;
  std::optional<double> reverse_score;
  std::optional<double> reverse_mask;
  bool is_noise = false;
};

struct NoiseReport {
  double threshold = 0.5;
  NoiseConvention convention = NoiseConvention::low_score_is_noise;
  std::vector<TripleVerdict> triples;

  std::size_t num_noisy() const;  // #E
  std::vector<Triple> noisy() const;
};

// Verdicts from precomputed per-triple scores and mask values (kg.triples()
// order). A forward triple is noisy if either direction is flagged.
NoiseReport classify(const KnowledgeGraph& kg, std::span<const double> scores,
                     std::span<const double> mask, double threshold, NoiseConvention convention);

NoiseReport detect_noise(const KnowledgeGraph& kg, RAEModel& model, double threshold = 0.5,
                         NoiseConvention convention = NoiseConvention::low_score_is_noise);

// Versioned JSON ("schema": 1) covering every forward triple.
std::string report_json(const KnowledgeGraph& kg, const NoiseReport& report);
// Inverse of report_json; triple names are resolved against kg.
NoiseReport parse_report_json(const KnowledgeGraph& kg, const std::string& text);
// Flagged triples only: head, relation, tail, score, reverse_score, mask.
std::string report_tsv(const KnowledgeGraph& kg, const NoiseReport& report);

struct FitEntry {
  TypePattern pattern;
  std::size_t frequency = 0;
  double fit_score = 0.0;
};

// Per (head type, relation, tail type) over the forward triples: mean of
// score(triple) minus the mean score of `negatives` tail-corrupted copies.
// Sorted by descending frequency, then pattern.
std::vector<FitEntry> fit_frequency(const KnowledgeGraph& kg, const ad::Tensor& entity_embeddings,
                                    const ad::Tensor& relation_embeddings, std::uint64_t seed,
                                    std::size_t negatives = 10);
std::vector<FitEntry> fit_frequency(const KnowledgeGraph& kg, RAEModel& model, std::uint64_t seed,
                                    std::size_t negatives = 10);

// `head_type,relation,tail_type,frequency,fit_score`
std::string fit_csv(const KnowledgeGraph& kg, const std::vector<FitEntry>& fit);

// Observed triples whose mask value is at least `threshold`.
std::vector<Triple> compress(const KnowledgeGraph& kg, std::span<const double> mask,
                             double threshold = 0.5);
std::vector<Triple> compress(const KnowledgeGraph& kg, RAEModel& model, double threshold = 0.5);

struct CompletionEntry {
  Triple triple;
  double score = 0.0;
};

// Candidates absent from kg scoring at least `threshold`, in input order,
// duplicates dropped.
std::vector<CompletionEntry> complete(const KnowledgeGraph& kg, const ad::Tensor& entity_embeddings,
                                      const ad::Tensor& relation_embeddings,
                                      std::span<const Triple> candidates, double threshold = 0.5);
std::vector<CompletionEntry> complete(const KnowledgeGraph& kg, RAEModel& model,
                                      std::span<const Triple> candidates, double threshold = 0.5);

// Confusion counts with noise as the positive class. A rate whose
// denominator is zero is reported as 1.0.
struct DetectionRates {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  double precision = 1.0;
  double recall = 1.0;
  double true_negative_rate = 1.0;
};

DetectionRates evaluate(const NoiseReport& report, const NoiseLabelSet& labels);

}  // namespace kgd
