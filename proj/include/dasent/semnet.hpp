#pragma once

// Free-association semantic network: an undirected, unweighted graph over
// case-folded concept tokens, plus the BFS-based metrics that the feature
// extractors are built on.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dasent {

using NodeId = std::uint32_t;

// Sentinel used in BFS distance rows for nodes in another component.
inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

struct AssociationTriple {
  std::string cue;
  std::string response;
  long long count = 0;
};

// Hop count between two nodes, or unreachable.
class DistanceResult {
 public:
  static DistanceResult unreachable() { return DistanceResult(); }
  static DistanceResult of(std::uint32_t hops) { return DistanceResult(hops); }

  bool reachable() const { return hops_ != kUnreachable; }
  // Throws UndefinedValueError when unreachable.
  std::uint32_t hops() const;

  friend bool operator==(const DistanceResult&, const DistanceResult&) = default;

 private:
  DistanceResult() = default;
  explicit DistanceResult(std::uint32_t hops) : hops_(hops) {}
  std::uint32_t hops_ = kUnreachable;
};

class SemanticNetwork {
 public:
  SemanticNetwork() = default;

  // Builds from explicit node names and undirected edges between them.
  // Names are sorted; duplicate edges and self-loops are discarded.
  static SemanticNetwork from_edges(std::vector<std::string> nodes,
                                    const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  bool empty() const { return names_.empty(); }

  // Lexicographically sorted; NodeId is the position in this list.
  const std::vector<std::string>& nodes() const { return names_; }
  const std::string& name(NodeId id) const { return names_.at(id); }

  bool contains(std::string_view token) const { return find(token).has_value(); }
  std::optional<NodeId> find(std::string_view token) const;
  // Throws LookupError carrying the token.
  NodeId index_of(std::string_view token) const;

  std::span<const NodeId> neighbors(NodeId id) const { return adjacency_.at(id); }
  bool has_edge(NodeId a, NodeId b) const;

  // Each undirected edge once, as (low id, high id), sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  // Full BFS row from `source`; kUnreachable for other components.
  std::vector<std::uint32_t> distances_from(NodeId source) const;
  // BFS with early exit once `target` is settled.
  DistanceResult distance(NodeId source, NodeId target) const;

  // Connected-component label per node plus the component count.
  std::pair<std::vector<std::uint32_t>, std::size_t> components() const;

  SemanticNetwork induced_subgraph(const std::vector<NodeId>& keep) const;

  friend bool operator==(const SemanticNetwork& a, const SemanticNetwork& b) {
    return a.names_ == b.names_ && a.adjacency_ == b.adjacency_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

// Edge {a,b} is kept iff count(a->b) >= min_count or count(b->a) >= min_count.
SemanticNetwork build_network(const std::vector<AssociationTriple>& triples, long long min_count = 2);

std::size_t degree(const SemanticNetwork& net, std::string_view word);

// (n_c - 1) / sum of distances within the word's component.
double closeness(const SemanticNetwork& net, std::string_view word);

DistanceResult shortest_path_length(const SemanticNetwork& net, std::string_view a, std::string_view b);

struct TargetDistance {
  long long total = 0;
  std::size_t skipped = 0;  // words absent from the network or unreachable
};

TargetDistance sum_distance_to_target(const SemanticNetwork& net, std::span<const std::string> words,
                                      std::string_view target);

// Induced subgraph on the largest component; ties go to the component whose
// smallest member sorts first.
SemanticNetwork largest_component(const SemanticNetwork& net);

// Tab-separated `cue<TAB>response<TAB>count`, '#' comments.
std::vector<AssociationTriple> read_edge_list(std::istream& in);
std::vector<AssociationTriple> read_edge_list(const std::filesystem::path& path);

// Versioned JSON cache of node and edge lists.
void save_network(const SemanticNetwork& net, const std::filesystem::path& path,
                  const std::string& config_checksum = {});
SemanticNetwork load_network(const std::filesystem::path& path);

}  // namespace dasent
