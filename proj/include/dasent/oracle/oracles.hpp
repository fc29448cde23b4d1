#pragma once

// Slow, independent reference implementations used by the test suites and
// `dasent selftest`. None of these share code with the library routines they
// check.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dasent/mlp.hpp"
#include "dasent/recall_features.hpp"
#include "dasent/semnet.hpp"

namespace dasent::oracle {

using DistanceMatrix = std::vector<std::vector<std::uint32_t>>;

// All-pairs hop counts; kUnreachable for disconnected pairs.
DistanceMatrix floyd_warshall(const SemanticNetwork& net);

// Recomputes coverage/entropy from a precomputed all-pairs matrix.
double coverage_from_matrix(const DistanceMatrix& d, const SemanticNetwork& net, std::span<const std::string> walk);
double entropy_from_matrix(const DistanceMatrix& d, const SemanticNetwork& net, std::span<const std::string> walk,
                           bool all_pairs = false);

// Two-group Kruskal-Wallis H with O(n^2) rank counting and tie correction.
double kw_statistic(std::span<const double> a, std::span<const double> b);
// Exact permutation p-value by enumerating every split of the pooled sample.
double kw_permutation_p(std::span<const double> a, std::span<const double> b);

// Random undirected graph as association triples (count 2, so every edge
// survives min_count=2). Node names are "n<i>".
std::vector<AssociationTriple> random_graph(std::size_t nodes, double edge_prob, std::uint64_t seed);

// Smallest |pre-activation| over every unit of an eval-mode forward pass,
// and the output pre-activation.
struct PreactivationMargin {
  double min_abs = 0.0;
  double output = 0.0;
};
PreactivationMargin preactivation_margin(const MlpModel& model, std::span<const double> x);

struct SyntheticCorpus {
  std::vector<AssociationTriple> edges;
  std::vector<RecallRecord> records;
};

// Connected random network whose nodes include the six target concepts, and
// recalls whose scores are an affine function of the summed network distance
// to the matching target plus Gaussian noise (sd = 10% of the score range),
// clipped to [0, 21].
SyntheticCorpus synthetic_corpus(std::uint64_t seed, std::size_t nodes = 200, std::size_t recalls = 400);

}  // namespace dasent::oracle
