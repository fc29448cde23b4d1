#pragma once

// Turns ordered emotional-recall sequences into regressor inputs: lemma
// normalization, lexicon, position weights from median network degree,
// bag-of-words variants and walk/target distance features.

#include <array>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dasent/semnet.hpp"

namespace dasent {

enum class Construct { Depression, Anxiety, Stress };

inline constexpr std::array<Construct, 3> kConstructs = {Construct::Depression, Construct::Anxiety,
                                                         Construct::Stress};

std::string_view construct_name(Construct c);
Construct parse_construct(std::string_view name);

inline constexpr std::size_t kRecallLength = 10;
inline constexpr double kMaxScore = 21.0;

struct RecallRecord {
  std::string id;
  std::vector<std::string> words;
  double depression = 0.0;
  double anxiety = 0.0;
  double stress = 0.0;

  double score(Construct c) const;
};

// Header `id,w1,...,w10,depression,anxiety,stress`.
std::vector<RecallRecord> read_ert_csv(std::istream& in);
std::vector<RecallRecord> read_ert_csv(const std::filesystem::path& path);

using LemmaMap = std::unordered_map<std::string, std::string>;

// Two-column TSV `form<TAB>lemma`.
LemmaMap read_lemma_map(std::istream& in);
LemmaMap read_lemma_map(const std::filesystem::path& path);

class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::vector<std::string> lemmas, LemmaMap lemma_map);

  std::size_t size() const { return lemmas_.size(); }
  const std::vector<std::string>& lemmas() const { return lemmas_; }
  const LemmaMap& lemma_map() const { return lemma_map_; }
  std::optional<std::size_t> find(std::string_view lemma) const;
  bool contains(std::string_view lemma) const { return find(lemma).has_value(); }

 private:
  std::vector<std::string> lemmas_;
  std::unordered_map<std::string, std::size_t> index_;
  LemmaMap lemma_map_;
};

// Case fold, then map through the lemma table; identity when no entry.
std::string normalize_lemma(std::string_view word, const LemmaMap& lemma_map);
std::string normalize_lemma(std::string_view word, const Lexicon& lexicon);

// Sorted distinct lemmas over all recall words. Throws InputError when empty.
Lexicon build_lexicon(const std::vector<RecallRecord>& records, LemmaMap lemma_map);

// Copy of the records with every word lemma-normalized.
std::vector<RecallRecord> lemmatize(std::vector<RecallRecord> records, const LemmaMap& lemma_map);

struct PositionWeights {
  std::vector<double> w;

  // Positions past the end reuse the last weight.
  double at(std::size_t position) const;
  std::size_t size() const { return w.size(); }
};

// Mean of the two middle values for even-sized samples.
double median(std::vector<double> values);

// w_j = median degree of the words at recall position j, normalized to sum 1.
// Records must already be lemma-normalized. Missing lemmas -> LookupError
// listing them all.
PositionWeights compute_position_weights(const std::vector<RecallRecord>& records, const SemanticNetwork& net);

struct BowResult {
  std::vector<double> counts;
  std::vector<std::string> skipped;  // out-of-lexicon tokens in input order
};

BowResult bow(std::span<const std::string> recall, const Lexicon& lexicon);
std::vector<double> weighted_bow(std::span<const std::string> recall, const Lexicon& lexicon,
                                 const PositionWeights& weights);

// Consecutive-pair shortest-path lengths along a recall walk. Tokens absent
// from the network are dropped before pairing; unreachable pairs are counted
// and left out of `steps`.
struct WalkDistances {
  std::vector<std::uint32_t> steps;
  std::size_t unresolved_tokens = 0;
  std::size_t unreachable_pairs = 0;
};

WalkDistances walk_distances(const SemanticNetwork& net, std::span<const std::string> recall);

enum class EntropyMode { ConsecutivePairs, AllPairs };

double coverage(const SemanticNetwork& net, std::span<const std::string> recall);
double distance_entropy(const SemanticNetwork& net, std::span<const std::string> recall,
                        EntropyMode mode = EntropyMode::ConsecutivePairs);

// Shannon entropy (natural log) of the empirical distribution of lengths.
double shannon_entropy(std::span<const std::uint32_t> lengths);

inline constexpr std::array<std::string_view, 6> kTargets = {"depression", "anxiety", "stress",
                                                             "happy",      "sad",     "fear"};
enum class Target : std::size_t { Depression, Anxiety, Stress, Happy, Sad, Fear };

enum class FeatureMask {
  BinaryBow,
  WeightedBow,
  AllDistances,
  DasDistancesOnly,
  HappySadOnly,
  CoverEntropyOnly,
  AllExceptFear,
  FearOnly,
};

std::string_view mask_name(FeatureMask mask);
// Throws ConfigError for unknown names.
FeatureMask parse_mask(std::string_view name);
std::span<const FeatureMask> all_masks();

struct MaskSpec {
  bool weighted = true;
  bool coverage = false;
  bool entropy = false;
  std::array<bool, 6> targets{};
};

MaskSpec mask_spec(FeatureMask mask);

struct FeatureVector {
  std::vector<double> bow;
  double coverage = 0.0;
  double entropy = 0.0;
  std::array<double, 6> dist{};
  FeatureMask mask = FeatureMask::AllExceptFear;

  // Assembled regressor input (masked, L2-normalized).
  std::vector<double> values;
  bool zero_vector = false;
  bool low_confidence = false;
  std::vector<std::string> skip_list;
  std::size_t unresolved_tokens = 0;
  std::size_t unreachable_pairs = 0;

  double target_distance(Target t) const { return dist[static_cast<std::size_t>(t)]; }
};

// Immutable per-corpus state: network, lexicon, weights and the BFS rows of
// the six target concepts.
class FeatureExtractor {
 public:
  FeatureExtractor(const SemanticNetwork& net, const Lexicon& lexicon, PositionWeights weights,
                   EntropyMode entropy = EntropyMode::ConsecutivePairs);

  FeatureVector extract(std::span<const std::string> recall, FeatureMask mask) const;
  std::size_t dimension(FeatureMask mask) const;
  std::vector<std::string> feature_names(FeatureMask mask) const;

  const SemanticNetwork& network() const { return *net_; }
  const Lexicon& lexicon() const { return *lexicon_; }
  const PositionWeights& weights() const { return weights_; }
  EntropyMode entropy_mode() const { return entropy_; }

 private:
  const SemanticNetwork* net_;
  const Lexicon* lexicon_;
  PositionWeights weights_;
  EntropyMode entropy_;
  std::array<std::vector<std::uint32_t>, 6> target_rows_;
};

FeatureVector feature_vector(std::span<const std::string> recall, const FeatureExtractor& extractor,
                             FeatureMask mask);

// In-place L2 normalization; returns false (vector untouched) when all-zero.
bool l2_normalize(std::vector<double>& v);

}  // namespace dasent
