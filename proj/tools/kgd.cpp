// kgd: command-line front end for knowledge-graph denoising experiments.

#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "experiment.hpp"
#include "kgd/detector.hpp"
#include "kgd/error.hpp"
#include "kgd/graph_io.hpp"
#include "kgd/graph_ops.hpp"
#include "kgd/model.hpp"
#include "kgd/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kgd::cli {
namespace {

KnowledgeGraph load_typed_graph(const fs::path& triples, const fs::path& types) {
  if (triples.empty() || types.empty()) throw Error("--triples and --types are required");
  LoadResult loaded = load_graph(triples, types);
  for (const auto& w : loaded.report.warnings) std::cerr << "warning: " << w << '\n';
  return std::move(loaded.graph);
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  return out;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

// Flag overrides; a set field wins over the config file.
struct Overrides {
  std::string config;
  std::optional<std::string> triples, types, output_dir, labels, gumbel_variant, convention;
  std::optional<std::size_t> layers, hidden_dim, num_blocks, epochs, batch_size, negatives,
      checkpoint_every;
  std::optional<double> dropout, gamma, temperature, mcp_alpha, mcp_lambda, learning_rate,
      weight_decay, threshold, corruption_fraction, injection_rate;
  std::vector<std::uint64_t> seeds;

  void attach(CLI::App* app, bool with_detection) {
    app->add_option("-c,--config", config, "JSON config file (or a run manifest)");
    app->add_option("--triples", triples, "Triples TSV");
    app->add_option("--types", types, "Entity types TSV");
    app->add_option("-o,--out-dir", output_dir, "Output directory");
    app->add_option("--labels", labels, "Planted-noise triples TSV, for evaluation");
    app->add_option("--seeds", seeds, "Training seeds");
    app->add_option("--layers", layers);
    app->add_option("--hidden-dim", hidden_dim);
    app->add_option("--num-blocks", num_blocks);
    app->add_option("--dropout", dropout);
    app->add_option("--gamma", gamma, "Sparsity weight");
    app->add_option("--temperature", temperature);
    app->add_option("--gumbel-variant", gumbel_variant, "paper | standard");
    app->add_option("--mcp-alpha", mcp_alpha);
    app->add_option("--mcp-lambda", mcp_lambda);
    app->add_option("--lr", learning_rate);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--negatives", negatives);
    app->add_option("--checkpoint-every", checkpoint_every, "Epochs between checkpoints (0: off)");
    app->add_option("--corruption-fraction", corruption_fraction,
                    "Fraction of entities whose type label is corrupted before training");
    if (with_detection) {
      app->add_option("--threshold", threshold);
      app->add_option("--convention", convention, "low-score-is-noise | paper-formula");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    if (triples) c.triples = *triples;
    if (types) c.types = *types;
    if (output_dir) c.output_dir = *output_dir;
    if (labels) c.labels = fs::path(*labels);
    if (!seeds.empty()) c.seeds = seeds;
    TrainConfig& t = c.train;
    if (layers) t.model.layers = *layers;
    if (hidden_dim) t.model.hidden_dim = *hidden_dim;
    if (num_blocks) t.model.num_blocks = *num_blocks;
    if (dropout) t.model.dropout = *dropout;
    if (gamma) t.gamma = *gamma;
    if (temperature) t.temperature = *temperature;
    if (gumbel_variant) t.gumbel_variant = parse_gumbel_variant(*gumbel_variant);
    if (mcp_alpha) t.mcp_alpha = *mcp_alpha;
    if (mcp_lambda) t.mcp_lambda = *mcp_lambda;
    if (learning_rate) t.learning_rate = *learning_rate;
    if (weight_decay) t.weight_decay = *weight_decay;
    if (epochs) t.epochs = *epochs;
    if (batch_size) t.batch_size = *batch_size;
    if (negatives) t.negatives = *negatives;
    if (checkpoint_every) t.checkpoint_every = *checkpoint_every;
    if (threshold) c.threshold = *threshold;
    if (convention) c.convention = parse_convention(*convention);
    if (corruption_fraction) c.corruption_fraction = *corruption_fraction;
    if (injection_rate) c.injection_rate = *injection_rate;
    c.validate();
    return c;
  }
};

// Graph as trained: optional type corruption, then reverse augmentation.
KnowledgeGraph training_graph(const KnowledgeGraph& base, double corruption, std::uint64_t seed) {
  if (corruption <= 0.0) return augment_reverse(base);
  return augment_reverse(corrupt_type_labels(base, corruption, derive_seed(seed, 3)));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

struct RunOutput {
  SeedResult result;
  TrainResult trained;
};

// Trains one seed and scores it; writes artifacts when out_dir is set.
RunOutput run_seed(const KnowledgeGraph& base, const ExperimentConfig& cfg, std::uint64_t seed,
                   const NoiseLabelSet* labels, const std::optional<fs::path>& out_dir) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const KnowledgeGraph kg = training_graph(base, cfg.corruption_fraction, seed);
  const std::string tag = std::to_string(seed);

  CheckpointCallback on_checkpoint;
  if (out_dir) {
    on_checkpoint = [&](const RAEModel& model, const std::vector<EpochStats>& history) {
      save_model(*out_dir / ("model_" + tag + "_epoch" + std::to_string(history.size()) + ".kgdp"),
                 model, json{{"seed", seed}, {"epoch", history.size()}}.dump());
    };
  }
  RunOutput out;
  out.trained = train(kg, tc, on_checkpoint);
  SeedResult& r = out.result;
  r.seed = seed;
  if (!out.trained.history.empty()) r.final_loss = out.trained.history.back().total;

  const Inference inf = infer(kg, out.trained.model);
  r.mean_mask = mean_of(inf.mask.discretized);
  const NoiseReport report = classify(kg, inf.scores, inf.mask.discretized, cfg.threshold, cfg.convention);
  r.num_noisy = report.num_noisy();
  if (labels) r.rates = evaluate(report, *labels);

  if (out_dir) {
    r.checkpoint = "model_" + tag + ".kgdp";
    r.loss_csv = "loss_" + tag + ".csv";
    json extra = {{"seed", seed}, {"train", to_json(tc)}};
    save_model(*out_dir / r.checkpoint, out.trained.model, extra.dump());
    write_file(*out_dir / r.loss_csv, history_csv(out.trained.history));
    if (cfg.corruption_fraction > 0.0) save_types(strip_reverse(kg), *out_dir / ("types_" + tag + ".tsv"));
  }
  return out;
}

void print_rates(const std::string& label, std::size_t num_noisy, const std::optional<DetectionRates>& r) {
  std::cout << label << "  #E=" << num_noisy;
  if (r) {
    std::cout << "  precision=" << fmt(r->precision) << "  recall=" << fmt(r->recall)
              << "  tnr=" << fmt(r->true_negative_rate);
  }
  std::cout << '\n';
}

json input_hashes(const ExperimentConfig& cfg) {
  json j = {{"triples", {{"path", cfg.triples.string()}, {"sha1", git_blob_sha1(cfg.triples)}}},
            {"types", {{"path", cfg.types.string()}, {"sha1", git_blob_sha1(cfg.types)}}}};
  if (cfg.labels) j["labels"] = {{"path", cfg.labels->string()}, {"sha1", git_blob_sha1(*cfg.labels)}};
  return j;
}

// ---------------------------------------------------------------- commands

int cmd_stats(const fs::path& triples, const fs::path& types, const std::optional<fs::path>& out) {
  LoadResult loaded = load_graph(triples, types);
  for (const auto& w : loaded.report.warnings) std::cerr << "warning: " << w << '\n';
  const KnowledgeGraph& kg = loaded.graph;
  const double ltt = compute_ltt(kg);
  std::cout << "entities   " << kg.num_entities() << '\n'
            << "relations  " << kg.num_relations() << '\n'
            << "types      " << kg.num_types() << '\n'
            << "triples    " << kg.num_triples() << '\n'
            << "duplicates " << loaded.report.duplicates << '\n'
            << "untyped    " << loaded.report.untyped_entities << '\n'
            << "%LTT       " << fmt(100.0 * ltt, 2) << "%\n";
  if (out) {
    fs::create_directories(*out);
    json j = {{"entities", kg.num_entities()}, {"relations", kg.num_relations()},
              {"types", kg.num_types()},       {"triples", kg.num_triples()},
              {"duplicates", loaded.report.duplicates},
              {"untyped_entities", loaded.report.untyped_entities},
              {"ltt", ltt},                    {"ltt_percent", 100.0 * ltt}};
    write_file(*out / "stats.json", j.dump(1) + "\n");
    for (std::size_t r = 0; r < kg.num_relations(); ++r) {
      const RelationId rel(r);
      const std::string name = std::to_string(r) + "_" + safe_name(kg.relations().name(r));
      write_file(*out / "type_distribution" / (name + ".csv"),
                 type_distribution_csv(kg, relation_type_distribution(kg, rel)));
    }
  }
  return 0;
}

struct SynthOptions {
  fs::path out_dir = "synthetic";
  std::size_t entities = 500, types = 8, relations = 6, triples = 10000, patterns_per_relation = 3;
  double noise_rate = 0.05;
  std::uint64_t seed = 7;
};

int cmd_synth(const SynthOptions& o) {
  SyntheticSpec spec;
  spec.num_types = o.types;
  spec.num_relations = o.relations;
  spec.num_entities = o.entities;
  spec.num_triples = o.triples;
  spec.seed = derive_seed(o.seed, 1);
  spec.legal_patterns = random_legal_patterns(o.types, o.relations, o.patterns_per_relation,
                                              derive_seed(o.seed, 2));
  const KnowledgeGraph clean = generate_synthetic_kg(spec);
  auto [noisy, labels] = inject_type_noise(clean, o.noise_rate, derive_seed(o.seed, 3));
  fs::create_directories(o.out_dir);
  save_triples(clean, o.out_dir / "clean_triples.tsv");
  save_triples(noisy, o.out_dir / "triples.tsv");
  save_types(noisy, o.out_dir / "types.tsv");
  save_noise_labels(noisy, labels, o.out_dir / "noise_labels.tsv");
  std::ostringstream patterns;
  for (const TypePattern& p : spec.legal_patterns) {
    patterns << clean.types().name(p.head.index()) << '\t' << clean.relations().name(p.relation.index())
             << '\t' << clean.types().name(p.tail.index()) << '\n';
  }
  write_file(o.out_dir / "patterns.tsv", patterns.str());
  std::cout << "wrote " << noisy.num_triples() << " triples (" << labels.noise_count()
            << " planted noise) to " << o.out_dir.string() << '\n';
  return 0;
}

int cmd_inject(const fs::path& triples, const fs::path& types, double rate, std::uint64_t seed,
               const fs::path& out_dir) {
  const KnowledgeGraph kg = load_typed_graph(triples, types);
  auto [noisy, labels] = inject_type_noise(kg, rate, seed);
  fs::create_directories(out_dir);
  save_triples(noisy, out_dir / "triples.tsv");
  save_types(noisy, out_dir / "types.tsv");
  save_noise_labels(noisy, labels, out_dir / "noise_labels.tsv");
  std::cout << "injected " << labels.noise_count() << " noisy triples\n";
  return 0;
}

int cmd_corrupt_types(const fs::path& triples, const fs::path& types, double fraction,
                      std::uint64_t seed, const fs::path& out) {
  const KnowledgeGraph kg = load_typed_graph(triples, types);
  const KnowledgeGraph corrupted = corrupt_type_labels(kg, fraction, seed);
  save_types(corrupted, out);
  std::size_t changed = 0;
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    changed += kg.type_of(EntityId(e)) != corrupted.type_of(EntityId(e));
  }
  std::cout << "relabeled " << changed << " of " << kg.num_entities() << " entities\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const KnowledgeGraph base = load_typed_graph(cfg.triples, cfg.types);
  std::optional<NoiseLabelSet> labels;
  if (cfg.labels) labels = load_noise_labels(base, *cfg.labels);
  fs::create_directories(cfg.output_dir);

  std::vector<SeedResult> results(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), thread_count(), [&](std::size_t i) {
    results[i] = run_seed(base, cfg, cfg.seeds[i], labels ? &*labels : nullptr, cfg.output_dir).result;
  });

  json manifest;
  manifest["format"] = 1;
  manifest["command"] = "train";
  manifest["config"] = to_json(cfg);
  manifest["inputs"] = input_hashes(cfg);
  manifest["runs"] = json::array();
  std::vector<double> counts;
  for (const SeedResult& r : results) {
    manifest["runs"].push_back(to_json(r));
    counts.push_back(static_cast<double>(r.num_noisy));
    print_rates("seed " + std::to_string(r.seed), r.num_noisy, r.rates);
  }
  const Summary s = summarize(counts);
  manifest["num_noisy"] = {{"mean", s.mean}, {"std", s.stddev}};
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(cfg.output_dir / "manifest.json", manifest.dump(1) + "\n");
  std::cout << "#E " << fmt(s.mean, 2) << " +- " << fmt(s.stddev, 2) << " over " << results.size()
            << " seeds\n";
  return 0;
}

struct ModelArgs {
  fs::path triples, types;
  std::vector<fs::path> models;
};

KnowledgeGraph graph_for_model(const ModelArgs& a) {
  return augment_reverse(load_typed_graph(a.triples, a.types));
}

int cmd_detect(const ModelArgs& a, double threshold, NoiseConvention convention,
               const fs::path& out_dir) {
  if (a.models.empty()) throw Error("detect: at least one --model is required");
  const KnowledgeGraph kg = graph_for_model(a);
  fs::create_directories(out_dir);
  std::vector<double> counts;
  json summary = {{"threshold", threshold}, {"convention", to_string(convention)},
                  {"reports", json::array()}};
  for (const fs::path& path : a.models) {
    LoadedModel loaded = load_model(path);
    const NoiseReport report = detect_noise(kg, loaded.model, threshold, convention);
    const std::string stem = path.stem().string();
    write_file(out_dir / (stem + ".noise.json"), report_json(kg, report));
    write_file(out_dir / (stem + ".noise.tsv"), report_tsv(kg, report));
    counts.push_back(static_cast<double>(report.num_noisy()));
    summary["reports"].push_back({{"model", path.string()}, {"num_noisy", report.num_noisy()}});
    std::cout << stem << "  #E=" << report.num_noisy() << '\n';
  }
  const Summary s = summarize(counts);
  summary["num_noisy"] = {{"mean", s.mean}, {"std", s.stddev}};
  write_file(out_dir / "detect_summary.json", summary.dump(1) + "\n");
  std::cout << "#E " << fmt(s.mean, 2) << " +- " << fmt(s.stddev, 2) << '\n';
  return 0;
}

LoadedModel single_model(const ModelArgs& a) {
  if (a.models.size() != 1) throw Error("exactly one --model is required");
  return load_model(a.models.front());
}

int cmd_complete(const ModelArgs& a, const fs::path& candidates, double threshold, const fs::path& out) {
  const KnowledgeGraph kg = graph_for_model(a);
  LoadedModel m = single_model(a);
  const auto cands = load_triple_list(kg, candidates);
  const auto accepted = complete(kg, m.model, cands, threshold);
  std::vector<Triple> triples;
  std::vector<double> scores;
  for (const auto& c : accepted) {
    triples.push_back(c.triple);
    scores.push_back(c.score);
  }
  write_file(out, score_csv(kg, triples, scores));
  std::cout << accepted.size() << " of " << cands.size() << " candidates accepted\n";
  return 0;
}

int cmd_compress(const ModelArgs& a, double threshold, const fs::path& out) {
  const KnowledgeGraph kg = graph_for_model(a);
  LoadedModel m = single_model(a);
  const Inference inf = infer(kg, m.model);
  const auto kept = compress(kg, inf.mask.discretized, threshold);
  KnowledgeGraph core;
  for (const auto& name : kg.types().names()) core.add_type(name);
  for (std::size_t e = 0; e < kg.num_entities(); ++e) {
    core.add_entity(kg.entities().name(e), kg.type_of(EntityId(e)));
  }
  for (std::size_t r = 0; r < kg.base_relation_count(); ++r) core.add_relation(kg.relations().name(r));
  for (const Triple& t : kept) {
    if (!kg.is_reverse(t.relation)) core.add_triple(t);
  }
  save_triples(core, out);
  write_file(fs::path(out).replace_extension(".mask.csv"), mask_csv(kg, inf.mask));
  std::cout << "kept " << core.num_triples() << " of " << kg.num_forward_triples() << " triples\n";
  return 0;
}

int cmd_fit_report(const ModelArgs& a, std::uint64_t seed, const fs::path& out) {
  const KnowledgeGraph kg = graph_for_model(a);
  LoadedModel m = single_model(a);
  const auto fit = fit_frequency(kg, m.model, seed);
  write_file(out, fit_csv(kg, fit));
  std::cout << "wrote " << fit.size() << " triple types to " << out.string() << '\n';
  return 0;
}

int cmd_evaluate(const fs::path& triples, const fs::path& types, const fs::path& labels_path,
                 const std::vector<fs::path>& reports) {
  if (reports.empty()) throw Error("evaluate: at least one --report is required");
  const KnowledgeGraph kg = load_typed_graph(triples, types);
  const NoiseLabelSet labels = load_noise_labels(kg, labels_path);
  std::vector<double> p, r, tnr;
  for (const fs::path& path : reports) {
    const NoiseReport report = parse_report_json(kg, read_file(path));
    const DetectionRates rates = evaluate(report, labels);
    print_rates(path.filename().string(), report.num_noisy(), rates);
    p.push_back(rates.precision);
    r.push_back(rates.recall);
    tnr.push_back(rates.true_negative_rate);
  }
  std::cout << "median  precision=" << fmt(summarize(p).median) << "  recall="
            << fmt(summarize(r).median) << "  tnr=" << fmt(summarize(tnr).median) << '\n';
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& kind, const std::vector<double>& values,
              const std::vector<fs::path>& models, const fs::path& out) {
  if (values.empty()) throw Error("sweep: --values must not be empty");
  const KnowledgeGraph base = load_typed_graph(cfg.triples, cfg.types);
  std::optional<NoiseLabelSet> labels;
  if (cfg.labels) labels = load_noise_labels(base, *cfg.labels);
  const NoiseLabelSet* lab = labels ? &*labels : nullptr;

  // rows[v][s]
  std::vector<std::vector<SeedResult>> rows(values.size());
  if (kind == "threshold") {
    if (models.empty()) throw Error("sweep --kind threshold needs --model");
    const KnowledgeGraph kg = augment_reverse(base);
    for (const fs::path& path : models) {
      LoadedModel m = load_model(path);
      const Inference inf = infer(kg, m.model);
      for (std::size_t v = 0; v < values.size(); ++v) {
        const NoiseReport rep = classify(kg, inf.scores, inf.mask.discretized, values[v], cfg.convention);
        SeedResult r;
        r.num_noisy = rep.num_noisy();
        r.mean_mask = mean_of(inf.mask.discretized);
        if (lab) r.rates = evaluate(rep, *lab);
        rows[v].push_back(r);
      }
    }
  } else {
    std::vector<ExperimentConfig> grid(values.size(), cfg);
    for (std::size_t v = 0; v < values.size(); ++v) {
      if (kind == "gamma") {
        grid[v].train.gamma = values[v];
      } else if (kind == "depth") {
        grid[v].train.model.layers = static_cast<std::size_t>(values[v]);
      } else if (kind == "corruption") {
        grid[v].corruption_fraction = values[v];
      } else {
        throw Error("sweep: unknown kind '" + kind + "' (threshold, gamma, depth, corruption)");
      }
      grid[v].validate();
      rows[v].resize(cfg.seeds.size());
    }
    const std::size_t jobs = values.size() * cfg.seeds.size();
    parallel_for(jobs, thread_count(), [&](std::size_t j) {
      const std::size_t v = j / cfg.seeds.size(), s = j % cfg.seeds.size();
      rows[v][s] = run_seed(base, grid[v], cfg.seeds[s], lab, std::nullopt).result;
    });
  }

  std::ostringstream csv;
  csv << "parameter,value,runs,num_noisy_mean,num_noisy_std,precision_median,recall_median,"
         "tnr_median,mean_mask_median\n";
  for (std::size_t v = 0; v < values.size(); ++v) {
    std::vector<double> e, p, r, t, m;
    for (const SeedResult& res : rows[v]) {
      e.push_back(static_cast<double>(res.num_noisy));
      m.push_back(res.mean_mask);
      if (res.rates) {
        p.push_back(res.rates->precision);
        r.push_back(res.rates->recall);
        t.push_back(res.rates->true_negative_rate);
      }
    }
    const Summary se = summarize(e);
    csv << kind << ',' << values[v] << ',' << rows[v].size() << ',' << fmt(se.mean, 4) << ','
        << fmt(se.stddev, 4) << ',';
    if (lab) {
      csv << fmt(summarize(p).median) << ',' << fmt(summarize(r).median) << ','
          << fmt(summarize(t).median);
    } else {
      csv << ",,";
    }
    csv << ',' << fmt(summarize(m).median, 6) << '\n';
  }
  write_file(out, csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace
}  // namespace kgd::cli

int main(int argc, char** argv) {
  using namespace kgd::cli;
  CLI::App app{"Knowledge-graph denoising with a masked relational auto-encoder"};
  app.require_subcommand(1);

  // stats
  auto* stats = app.add_subcommand("stats", "Counts, %LTT and per-relation type distributions");
  fs::path st_triples, st_types;
  std::optional<std::string> st_out;
  stats->add_option("--triples", st_triples)->required();
  stats->add_option("--types", st_types)->required();
  stats->add_option("-o,--out-dir", st_out, "Write stats.json and type-distribution CSVs here");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a typed synthetic graph with planted noise");
  SynthOptions so;
  synth->add_option("-o,--out-dir", so.out_dir);
  synth->add_option("--entities", so.entities);
  synth->add_option("--types", so.types);
  synth->add_option("--relations", so.relations);
  synth->add_option("--triples", so.triples);
  synth->add_option("--patterns-per-relation", so.patterns_per_relation);
  synth->add_option("--noise-rate", so.noise_rate);
  synth->add_option("--seed", so.seed);

  // inject
  auto* inject = app.add_subcommand("inject", "Plant type-inconsistent triples into a graph");
  fs::path in_triples, in_types, in_out = "injected";
  double in_rate = 0.05;
  std::uint64_t in_seed = 0;
  inject->add_option("--triples", in_triples)->required();
  inject->add_option("--types", in_types)->required();
  inject->add_option("--rate", in_rate);
  inject->add_option("--seed", in_seed);
  inject->add_option("-o,--out-dir", in_out);

  // corrupt-types
  auto* corrupt = app.add_subcommand("corrupt-types", "Reassign a fraction of entity type labels");
  fs::path ct_triples, ct_types, ct_out;
  double ct_fraction = 0.001;
  std::uint64_t ct_seed = 0;
  corrupt->add_option("--triples", ct_triples)->required();
  corrupt->add_option("--types", ct_types)->required();
  corrupt->add_option("--fraction", ct_fraction);
  corrupt->add_option("--seed", ct_seed);
  corrupt->add_option("-o,--out", ct_out, "Output types TSV")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed");
  Overrides train_ov;
  train_ov.attach(train_cmd, true);

  // detect / complete / compress / fit-report
  ModelArgs ma;
  auto add_model_args = [&](CLI::App* sub) {
    sub->add_option("--triples", ma.triples)->required();
    sub->add_option("--types", ma.types)->required();
    sub->add_option("-m,--model", ma.models, "Checkpoint(s)")->required();
  };
  auto* detect = app.add_subcommand("detect", "Flag noisy triples");
  add_model_args(detect);
  double threshold = 0.5;
  std::string convention = "low-score-is-noise";
  fs::path det_out = "detect";
  detect->add_option("--threshold", threshold);
  detect->add_option("--convention", convention, "low-score-is-noise | paper-formula");
  detect->add_option("-o,--out-dir", det_out);

  auto* complete_cmd = app.add_subcommand("complete", "Score candidate triples for completion");
  add_model_args(complete_cmd);
  fs::path candidates, cmp_out = "completion.csv";
  complete_cmd->add_option("--candidates", candidates)->required();
  complete_cmd->add_option("--threshold", threshold);
  complete_cmd->add_option("-o,--out", cmp_out);

  auto* compress_cmd = app.add_subcommand("compress", "Emit the triples kept by the mask");
  add_model_args(compress_cmd);
  fs::path cps_out = "core_triples.tsv";
  compress_cmd->add_option("--threshold", threshold);
  compress_cmd->add_option("-o,--out", cps_out);

  auto* fit = app.add_subcommand("fit-report", "Per-triple-type fit scores");
  add_model_args(fit);
  std::uint64_t fit_seed = 0;
  fs::path fit_out = "fit.csv";
  fit->add_option("--seed", fit_seed);
  fit->add_option("-o,--out", fit_out);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Precision, recall and TNR of noise reports");
  fs::path ev_triples, ev_types, ev_labels;
  std::vector<fs::path> ev_reports;
  eval->add_option("--triples", ev_triples)->required();
  eval->add_option("--types", ev_types)->required();
  eval->add_option("--labels", ev_labels)->required();
  eval->add_option("-r,--report", ev_reports)->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Threshold, gamma, depth or corruption sweep");
  Overrides sweep_ov;
  sweep_ov.attach(sweep, true);
  std::string kind = "gamma";
  std::vector<double> values;
  std::vector<fs::path> sweep_models;
  fs::path sweep_out = "sweep.csv";
  sweep->add_option("--kind", kind, "threshold | gamma | depth | corruption");
  sweep->add_option("--values", values)->required()->delimiter(',');
  sweep->add_option("-m,--model", sweep_models, "Checkpoints (threshold sweep)");
  sweep->add_option("--csv", sweep_out, "Output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats) {
      return cmd_stats(st_triples, st_types, st_out ? std::optional<fs::path>(*st_out) : std::nullopt);
    }
    if (*synth) return cmd_synth(so);
    if (*inject) return cmd_inject(in_triples, in_types, in_rate, in_seed, in_out);
    if (*corrupt) return cmd_corrupt_types(ct_triples, ct_types, ct_fraction, ct_seed, ct_out);
    if (*train_cmd) return cmd_train(train_ov.resolve());
    if (*detect) return cmd_detect(ma, threshold, kgd::parse_convention(convention), det_out);
    if (*complete_cmd) return cmd_complete(ma, candidates, threshold, cmp_out);
    if (*compress_cmd) return cmd_compress(ma, threshold, cps_out);
    if (*fit) return cmd_fit_report(ma, fit_seed, fit_out);
    if (*eval) return cmd_evaluate(ev_triples, ev_types, ev_labels, ev_reports);
    if (*sweep) return cmd_sweep(sweep_ov.resolve(), kind, values, sweep_models, sweep_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
