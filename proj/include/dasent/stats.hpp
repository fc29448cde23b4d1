#pragma once

// Correlation and rank tests plus the affect-lexicon validation of scored
// corpora.

#include <array>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dasent/recall_features.hpp"
#include "json.hpp"

namespace dasent {

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<std::size_t> n;
};

// Sample correlation with a two-sided t-test (n - 2 df).
StatResult pearson(std::span<const double> x, std::span<const double> y);

enum class PValueMethod { ChiSquare, Exact };

// Two-group Kruskal-Wallis H with tie correction. ChiSquare uses 1 df;
// Exact counts rank-sum splits at least as extreme as the observed one.
StatResult kruskal_wallis(std::span<const double> group_a, std::span<const double> group_b,
                          PValueMethod method = PValueMethod::ChiSquare);

struct VadEntry {
  double valence = 0.0;
  double arousal = 0.0;
};

using VadTable = std::unordered_map<std::string, VadEntry>;

// TSV `token<TAB>valence<TAB>arousal`, both in [0, 1].
VadTable read_vad(std::istream& in);
VadTable read_vad(const std::filesystem::path& path);

struct VadProfile {
  std::optional<double> median_valence;
  std::optional<double> median_arousal;
  double coverage = 0.0;
  std::size_t matched = 0;
};

VadProfile vad_profile(std::span<const std::string> tokens, const VadTable& vad);

struct TippingPoints {
  double depression = 6.0;
  double anxiety = 2.0;
  double stress = 4.0;

  double at(Construct c) const;
};

struct DocumentScore {
  std::string id;
  double depression = 0.0;
  double anxiety = 0.0;
  double stress = 0.0;

  double score(Construct c) const;
};

struct Partition {
  std::vector<DocumentScore> high;  // score > tipping point
  std::vector<DocumentScore> low;
};

Partition partition_by_tipping(std::span<const DocumentScore> scores, const TippingPoints& tp, Construct construct);

// Scored document plus the (lemmatized) words used for affect profiling.
struct ScoredDocument {
  DocumentScore score;
  std::vector<std::string> words;
};

struct Histogram {
  double bin_width = 1.0;
  std::vector<std::size_t> counts;  // bin i covers [i*w, (i+1)*w)
};

struct ValidationReport {
  // depression-anxiety, depression-stress, anxiety-stress
  std::array<std::optional<StatResult>, 3> correlations;
  std::array<std::string, 3> correlation_notes;

  struct PartitionTest {
    Construct construct;
    std::string dimension;  // "valence" or "arousal"
    std::size_t high_docs = 0;
    std::size_t low_docs = 0;
    std::optional<double> high_median;
    std::optional<double> low_median;
    std::optional<StatResult> test;
    std::string note;
  };
  std::vector<PartitionTest> tests;
  std::array<Histogram, 3> histograms;

  nlohmann::json to_json() const;
};

ValidationReport validate_corpus(std::span<const ScoredDocument> docs, const VadTable& vad, const TippingPoints& tp,
                                 double histogram_bin_width = 1.0, std::size_t min_docs_per_partition = 2);

}  // namespace dasent
