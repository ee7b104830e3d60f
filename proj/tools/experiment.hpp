#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgd/detector.hpp"
#include "kgd/trainer.hpp"

namespace kgd::cli {

struct ExperimentConfig {
  std::filesystem::path triples;
  std::filesystem::path types;
  std::filesystem::path output_dir = "kgd-out";
  std::optional<std::filesystem::path> labels;
  TrainConfig train;
  double threshold = 0.5;
  NoiseConvention convention = NoiseConvention::low_score_is_noise;
  double corruption_fraction = 0.0;
  double injection_rate = 0.05;
  std::vector<std::uint64_t> seeds = {41504, 42, 0, 1, 2};

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
nlohmann::json to_json(const TrainConfig& c);

// Accepts a bare config object or a run manifest (its "config" member).
// Keys missing from the JSON keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
void apply_train_json(const nlohmann::json& j, TrainConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

// Git blob hash: SHA-1 over "blob <size>\0" followed by the file bytes.
std::string git_blob_sha1(const std::filesystem::path& path);

// Worker count from KGD_THREADS (default 1).
std::size_t thread_count();

// Runs job(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

struct SeedResult {
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::string loss_csv;
  double final_loss = 0.0;
  double mean_mask = 0.0;
  std::size_t num_noisy = 0;
  std::optional<DetectionRates> rates;
};

nlohmann::json to_json(const SeedResult& r);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double median = 0.0;
};

Summary summarize(std::vector<double> values);

}  // namespace kgd::cli
