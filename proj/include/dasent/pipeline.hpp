#pragma once

// Configuration, dataset loading, predictor bundles and the subcommands of
// the `dasent` command-line tool.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dasent/mlp.hpp"
#include "dasent/recall_features.hpp"
#include "dasent/stats.hpp"
#include "dasent/text_parser.hpp"
#include "json.hpp"

namespace dasent {

// Keys accepted under "paths" in the config file.
inline constexpr std::array<std::string_view, 11> kPathKeys = {
    "edge_list", "network_cache", "ert",    "embeddings", "stopwords", "negations",
    "antonyms",  "pos_lexicon",   "lemma_map", "vad",     "model"};

inline constexpr const char* kResourceDirEnv = "DASENT_RESOURCE_DIR";

struct PipelineConfig {
  std::map<std::string, std::filesystem::path> paths;
  long long min_count = 2;
  bool largest_component = false;
  double threshold = 0.5;
  FeatureMask mask = FeatureMask::AllExceptFear;
  EntropyMode entropy = EntropyMode::ConsecutivePairs;
  TrainConfig train;
  std::size_t folds = 4;
  std::size_t repeats = 10;
  std::size_t threads = 1;
  TippingPoints tipping;
  double histogram_bin_width = 1.0;
  std::uint64_t seed = 42;
  std::map<std::string, std::string> checksums;  // pinned sha256 per path key

  bool has(std::string_view key) const { return paths.contains(std::string(key)); }
  // Throws ConfigError naming `paths.<key>` and the command that needs it.
  const std::filesystem::path& require(std::string_view key, std::string_view command) const;

  nlohmann::json to_json() const;
  // SHA-256 of the canonical effective config.
  std::string checksum() const;
};

// Parses JSON text; relative paths resolve against `base_dir`, or against
// $DASENT_RESOURCE_DIR when set. Validates existence and pinned checksums.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Re-checks existence/checksums after flag overrides.
void validate_paths(const PipelineConfig& cfg);

// Everything feature extraction needs for one corpus.
struct Corpus {
  SemanticNetwork network;
  std::vector<RecallRecord> records;  // lemma-normalized
  Lexicon lexicon;
  PositionWeights weights;
};

SemanticNetwork load_network_from_config(const PipelineConfig& cfg, std::string_view command);
Corpus load_corpus(const PipelineConfig& cfg, std::string_view command);

Matrix feature_matrix(const FeatureExtractor& extractor, const std::vector<RecallRecord>& records, FeatureMask mask);

// Trained per-construct regressors plus the feature-space description they
// were trained in.
struct PredictorBundle {
  std::vector<std::string> lemmas;
  PositionWeights weights;
  FeatureMask mask = FeatureMask::AllExceptFear;
  EntropyMode entropy = EntropyMode::ConsecutivePairs;
  std::size_t network_nodes = 0;
  std::size_t network_edges = 0;
  std::string config_checksum;
  std::map<Construct, MlpModel> models;
};

void save_bundle(const PredictorBundle& bundle, const std::filesystem::path& path);
PredictorBundle load_bundle(const std::filesystem::path& path);

// Full CLI entry point. Exit codes: 0 success, 1 input/config error,
// 2 internal error.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dasent
