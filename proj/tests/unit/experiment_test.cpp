#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <stdexcept>

#include "experiment.hpp"
#include "kgd/error.hpp"

namespace kgd::cli {
namespace {

TEST(Summary, MeanPopulationStdAndMedian) {
  const Summary s = summarize({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(summarize({5, 1, 3}).median, 3.0);
}

TEST(Sha1, MatchesGitBlobHash) {
  const auto path = std::filesystem::temp_directory_path() / "kgd_sha1_test.txt";
  write_file(path, "hello\n");
  EXPECT_EQ(git_blob_sha1(path), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Config, JsonRoundTripAndManifestForm) {
  ExperimentConfig c;
  c.triples = "t.tsv";
  c.types = "c.tsv";
  c.labels = std::filesystem::path("n.tsv");
  c.train.gamma = 0.1;
  c.train.gumbel_variant = GumbelVariant::standard;
  c.train.model.layers = 3;
  c.seeds = {9, 8};
  c.convention = NoiseConvention::paper_formula;
  const nlohmann::json j = to_json(c);
  const ExperimentConfig back = config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(to_json(config_from_json(nlohmann::json{{"config", j}, {"runs", nlohmann::json::array()}})), j);
  const ExperimentConfig partial = config_from_json(nlohmann::json{{"train", {{"epochs", 2}}}});
  EXPECT_EQ(partial.train.epochs, 2u);
  EXPECT_EQ(partial.train.gamma, 0.5);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.threshold = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = ExperimentConfig{};
  c.seeds.clear();
  EXPECT_THROW(c.validate(), Error);
}

TEST(ParallelFor, RunsEveryIndexAndRethrows) {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

}  // namespace
}  // namespace kgd::cli
