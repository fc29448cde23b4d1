#pragma once

// Maps raw text onto the emotional lexicon: lexicon-based POS filter,
// stopword removal, negation-to-antonym substitution and word-embedding
// cosine similarity against every lexicon lemma.

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dasent/recall_features.hpp"

namespace dasent {

double cosine_similarity(std::span<const double> u, std::span<const double> v);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // `token v1 ... vd` per line, optional `count dim` header. Zero vectors
  // are dropped and reported through warnings().
  static EmbeddingTable load(std::istream& in);
  static EmbeddingTable load(const std::filesystem::path& path);

  // Returns false (and records a warning) for zero vectors or duplicates.
  bool add(std::string token, std::vector<double> vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  bool contains(std::string_view token) const { return index_.contains(std::string(token)); }
  std::optional<std::span<const double>> find(std::string_view token) const;

  // Cosine similarity of two stored tokens; nullopt if either is missing.
  std::optional<double> similarity(std::string_view a, std::string_view b) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> vectors_;
  std::vector<double> norms_;
  std::vector<std::string> warnings_;
};

enum class Pos { Noun, Adj, Adv, Verb, Other };

std::string_view pos_name(Pos p);
Pos parse_pos(std::string_view tag);
bool is_content_pos(Pos p);

struct ResourceBundle {
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> negation_cues;
  std::unordered_map<std::string, std::string> antonyms;
  std::unordered_map<std::string, Pos> pos_lexicon;
  LemmaMap lemma_map;

  // Unknown tokens are OTHER.
  Pos pos_of(std::string_view token) const;
};

// Two-column TSVs.
std::unordered_map<std::string, std::string> read_antonyms(const std::filesystem::path& path);
std::unordered_map<std::string, Pos> read_pos_lexicon(const std::filesystem::path& path);
std::unordered_map<std::string, std::string> read_antonyms(std::istream& in);
std::unordered_map<std::string, Pos> read_pos_lexicon(std::istream& in);

// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
// Tokens are case-folded runs of letters/digits/apostrophes; "don't" yields
// "do", "n't".
std::vector<std::vector<std::string>> segment_and_tokenize(std::string_view text);

struct Assignment {
  std::string word;
  std::string lemma;
  double similarity = 0.0;
  bool negated = false;
  std::size_t position = 0;  // token index within the document
};

enum class SkipReason { BelowThreshold, NoAntonym, NoEmbedding, Filtered };

std::string_view skip_reason_name(SkipReason r);

struct SkippedToken {
  std::string token;
  SkipReason reason = SkipReason::Filtered;
  std::size_t position = 0;
};

struct ParsedDocument {
  std::string id;
  std::vector<std::string> mapped_sequence;
  std::vector<Assignment> assignments;
  std::vector<SkippedToken> skipped;
};

struct ParserOptions {
  double threshold = 0.5;
  // When set, candidates are restricted to lexicon lemmas within
  // `neighborhood_hops` of the query in this network (exhaustive fallback
  // when the query is not a node).
  const SemanticNetwork* neighborhood = nullptr;
  std::uint32_t neighborhood_hops = 2;
};

class TextMapper {
 public:
  TextMapper(const Lexicon& lexicon, const EmbeddingTable& embeddings, const ResourceBundle& resources);

  ParsedDocument map(std::string_view id, std::string_view text, const ParserOptions& opts = {}) const;

  // Lexicon lemmas without an embedding; they can only match by identity.
  const std::vector<std::string>& missing_lemmas() const { return missing_; }

 private:
  struct Match {
    std::string lemma;
    double similarity;
  };
  // Best lexicon lemma for `query`, or nullopt if the query has no embedding.
  std::optional<Match> best_match(const std::string& query, const ParserOptions& opts) const;

  const Lexicon* lexicon_;
  const EmbeddingTable* embeddings_;
  const ResourceBundle* resources_;
  std::vector<std::size_t> candidates_;  // lexicon indices with embeddings
  std::vector<std::string> missing_;
};

ParsedDocument map_document(std::string_view text, const Lexicon& lexicon, const EmbeddingTable& embeddings,
                            const ResourceBundle& resources, double threshold = 0.5);

// Treats the mapped sequence as a recall. Empty sequence -> zero vector with
// low_confidence set.
FeatureVector document_to_features(const ParsedDocument& parsed, const FeatureExtractor& extractor,
                                   FeatureMask mask);

}  // namespace dasent
