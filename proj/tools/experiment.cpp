#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "kgd/error.hpp"

namespace kgd::cli {

using nlohmann::json;

void ExperimentConfig::validate() const {
  train.validate();
  if (seeds.empty()) throw Error("config: seeds must not be empty");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("config: threshold must lie in [0, 1]");
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0)) {
    throw Error("config: corruption_fraction must lie in [0, 1]");
  }
  if (!(injection_rate >= 0.0 && injection_rate <= 1.0)) {
    throw Error("config: injection_rate must lie in [0, 1]");
  }
}

json to_json(const TrainConfig& c) {
  return {
      {"layers", c.model.layers},
      {"hidden_dim", c.model.hidden_dim},
      {"num_blocks", c.model.num_blocks},
      {"dropout", c.model.dropout},
      {"gamma", c.gamma},
      {"temperature", c.temperature},
      {"gumbel_variant", to_string(c.gumbel_variant)},
      {"mcp_alpha", c.mcp_alpha},
      {"mcp_lambda", c.mcp_lambda},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"negatives", c.negatives},
      {"checkpoint_every", c.checkpoint_every},
  };
}

json to_json(const ExperimentConfig& c) {
  json j = {
      {"triples", c.triples.string()},
      {"types", c.types.string()},
      {"output_dir", c.output_dir.string()},
      {"train", to_json(c.train)},
      {"threshold", c.threshold},
      {"convention", to_string(c.convention)},
      {"corruption_fraction", c.corruption_fraction},
      {"injection_rate", c.injection_rate},
      {"seeds", c.seeds},
  };
  if (c.labels) j["labels"] = c.labels->string();
  return j;
}

void apply_train_json(const json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("layers", c.model.layers);
  get("hidden_dim", c.model.hidden_dim);
  get("num_blocks", c.model.num_blocks);
  get("dropout", c.model.dropout);
  get("gamma", c.gamma);
  get("temperature", c.temperature);
  if (j.contains("gumbel_variant")) {
    c.gumbel_variant = parse_gumbel_variant(j.at("gumbel_variant").get<std::string>());
  }
  get("mcp_alpha", c.mcp_alpha);
  get("mcp_lambda", c.mcp_lambda);
  get("learning_rate", c.learning_rate);
  get("weight_decay", c.weight_decay);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("negatives", c.negatives);
  get("checkpoint_every", c.checkpoint_every);
}

ExperimentConfig config_from_json(const json& root) {
  const json& j = root.contains("config") ? root.at("config") : root;
  ExperimentConfig c;
  if (j.contains("triples")) c.triples = j.at("triples").get<std::string>();
  if (j.contains("types")) c.types = j.at("types").get<std::string>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("labels")) c.labels = j.at("labels").get<std::string>();
  if (j.contains("train")) apply_train_json(j.at("train"), c.train);
  if (j.contains("threshold")) c.threshold = j.at("threshold").get<double>();
  if (j.contains("convention")) c.convention = parse_convention(j.at("convention").get<std::string>());
  if (j.contains("corruption_fraction")) c.corruption_fraction = j.at("corruption_fraction").get<double>();
  if (j.contains("injection_rate")) c.injection_rate = j.at("injection_rate").get<double>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string git_blob_sha1(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  const std::string header = "blob " + std::to_string(body.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha1: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, body.data(), body.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("sha1: digest failed for " + path.string());
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::size_t thread_count() {
  const char* env = std::getenv("KGD_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw Error("KGD_THREADS must be a positive integer");
  return static_cast<std::size_t>(v);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            job(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

json to_json(const SeedResult& r) {
  json j = {{"seed", r.seed},           {"checkpoint", r.checkpoint}, {"loss_csv", r.loss_csv},
            {"final_loss", r.final_loss}, {"mean_mask", r.mean_mask},  {"num_noisy", r.num_noisy}};
  if (r.rates) {
    j["precision"] = r.rates->precision;
    j["recall"] = r.rates->recall;
    j["true_negative_rate"] = r.rates->true_negative_rate;
  }
  return j;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / n);
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  s.median = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  return s;
}

}  // namespace kgd::cli
