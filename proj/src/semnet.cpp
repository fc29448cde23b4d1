#include "dasent/semnet.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include "json.hpp"
#include <queue>

#include "dasent/errors.hpp"
#include "dasent/text_util.hpp"

namespace dasent {

namespace {

constexpr int kNetworkCacheVersion = 1;

std::string describe(const AssociationTriple& t, std::size_t index) {
  return "triple #" + std::to_string(index + 1) + " ('" + t.cue + "' -> '" + t.response + "', " +
         std::to_string(t.count) + ")";
}

}  // namespace

std::uint32_t DistanceResult::hops() const {
  if (!reachable()) throw UndefinedValueError("distance is unreachable");
  return hops_;
}

SemanticNetwork SemanticNetwork::from_edges(std::vector<std::string> nodes,
                                            const std::vector<std::pair<std::string, std::string>>& edges) {
  SemanticNetwork net;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  net.names_ = std::move(nodes);
  net.index_.reserve(net.names_.size());
  for (NodeId i = 0; i < net.names_.size(); ++i) net.index_.emplace(net.names_[i], i);
  net.adjacency_.resize(net.names_.size());
  for (const auto& [a, b] : edges) {
    NodeId ia = net.index_of(a);
    NodeId ib = net.index_of(b);
    if (ia == ib) continue;
    net.adjacency_[ia].push_back(ib);
    net.adjacency_[ib].push_back(ia);
  }
  std::size_t directed = 0;
  for (auto& row : net.adjacency_) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    directed += row.size();
  }
  net.edge_count_ = directed / 2;
  return net;
}

std::optional<NodeId> SemanticNetwork::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId SemanticNetwork::index_of(std::string_view token) const {
  auto id = find(token);
  if (!id) throw LookupError(std::string(token), "token not in network: '" + std::string(token) + "'");
  return *id;
}

bool SemanticNetwork::has_edge(NodeId a, NodeId b) const {
  const auto& row = adjacency_.at(a);
  return std::binary_search(row.begin(), row.end(), b);
}

std::vector<std::pair<NodeId, NodeId>> SemanticNetwork::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edge_count_);
  for (NodeId a = 0; a < adjacency_.size(); ++a)
    for (NodeId b : adjacency_[a])
      if (a < b) out.emplace_back(a, b);
  return out;
}

std::vector<std::uint32_t> SemanticNetwork::distances_from(NodeId source) const {
  std::vector<std::uint32_t> dist(names_.size(), kUnreachable);
  std::vector<NodeId> frontier{source};
  dist.at(source) = 0;
  std::vector<NodeId> next;
  for (std::uint32_t level = 1; !frontier.empty(); ++level) {
    next.clear();
    for (NodeId u : frontier)
      for (NodeId v : adjacency_[u])
        if (dist[v] == kUnreachable) {
          dist[v] = level;
          next.push_back(v);
        }
    frontier.swap(next);
  }
  return dist;
}

DistanceResult SemanticNetwork::distance(NodeId source, NodeId target) const {
  if (source >= names_.size() || target >= names_.size())
    throw std::out_of_range("node id out of range");
  if (source == target) return DistanceResult::of(0);
  std::vector<std::uint32_t> dist(names_.size(), kUnreachable);
  std::queue<NodeId> queue;
  dist[source] = 0;
  queue.push(source);
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop();
    for (NodeId v : adjacency_[u]) {
      if (dist[v] != kUnreachable) continue;
      dist[v] = dist[u] + 1;
      if (v == target) return DistanceResult::of(dist[v]);
      queue.push(v);
    }
  }
  return DistanceResult::unreachable();
}

std::pair<std::vector<std::uint32_t>, std::size_t> SemanticNetwork::components() const {
  std::vector<std::uint32_t> label(names_.size(), kUnreachable);
  std::uint32_t count = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < names_.size(); ++s) {
    if (label[s] != kUnreachable) continue;
    label[s] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : adjacency_[u])
        if (label[v] == kUnreachable) {
          label[v] = count;
          stack.push_back(v);
        }
    }
    ++count;
  }
  return {std::move(label), count};
}

SemanticNetwork SemanticNetwork::induced_subgraph(const std::vector<NodeId>& keep) const {
  std::vector<bool> kept(names_.size(), false);
  std::vector<std::string> nodes;
  for (NodeId id : keep) {
    kept.at(id) = true;
    nodes.push_back(names_[id]);
  }
  std::vector<std::pair<std::string, std::string>> sub_edges;
  for (auto [a, b] : edges())
    if (kept[a] && kept[b]) sub_edges.emplace_back(names_[a], names_[b]);
  return from_edges(std::move(nodes), sub_edges);
}

SemanticNetwork build_network(const std::vector<AssociationTriple>& triples, long long min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1, got " + std::to_string(min_count));
  std::map<std::pair<std::string, std::string>, long long> directed;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    std::string cue = normalize_token(t.cue);
    std::string response = normalize_token(t.response);
    if (cue.empty() || response.empty()) throw InputError("empty token in " + describe(t, i));
    if (t.count < 0) throw InputError("negative count in " + describe(t, i));
    if (cue == response) continue;
    directed[{std::move(cue), std::move(response)}] += t.count;
  }
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [pair, count] : directed) {
    if (count < min_count) continue;
    nodes.push_back(pair.first);
    nodes.push_back(pair.second);
    edges.push_back(pair);
  }
  return SemanticNetwork::from_edges(std::move(nodes), edges);
}

std::size_t degree(const SemanticNetwork& net, std::string_view word) {
  return net.neighbors(net.index_of(word)).size();
}

double closeness(const SemanticNetwork& net, std::string_view word) {
  auto dist = net.distances_from(net.index_of(word));
  std::size_t reached = 0;
  double total = 0.0;
  for (auto d : dist)
    if (d != kUnreachable) {
      ++reached;
      total += d;
    }
  if (reached < 2)
    throw UndefinedValueError("closeness undefined for isolated node '" + std::string(word) + "'");
  return static_cast<double>(reached - 1) / total;
}

DistanceResult shortest_path_length(const SemanticNetwork& net, std::string_view a, std::string_view b) {
  return net.distance(net.index_of(a), net.index_of(b));
}

TargetDistance sum_distance_to_target(const SemanticNetwork& net, std::span<const std::string> words,
                                      std::string_view target) {
  auto dist = net.distances_from(net.index_of(target));
  TargetDistance out;
  for (const auto& w : words) {
    auto id = net.find(w);
    if (!id || dist[*id] == kUnreachable) {
      ++out.skipped;
      continue;
    }
    out.total += dist[*id];
  }
  return out;
}

SemanticNetwork largest_component(const SemanticNetwork& net) {
  if (net.empty()) return net;
  auto [label, count] = net.components();
  std::vector<std::size_t> size(count, 0);
  for (auto l : label) ++size[l];
  // Labels are assigned in increasing node-id order, so the first component
  // with maximal size also has the lexicographically smallest member.
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < count; ++c)
    if (size[c] > size[best]) best = c;
  std::vector<NodeId> keep;
  for (NodeId i = 0; i < label.size(); ++i)
    if (label[i] == best) keep.push_back(i);
  return net.induced_subgraph(keep);
}

std::vector<AssociationTriple> read_edge_list(std::istream& in) {
  std::vector<AssociationTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(t, '\t');
    if (fields.size() != 3)
      throw InputError("edge list line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    AssociationTriple triple{fields[0], fields[1], 0};
    try {
      std::size_t used = 0;
      triple.count = std::stoll(fields[2], &used);
      if (used != trim(fields[2]).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("edge list line " + std::to_string(line_no) + ": bad count '" + fields[2] + "'");
    }
    if (trim(triple.cue).empty() || trim(triple.response).empty())
      throw InputError("edge list line " + std::to_string(line_no) + ": empty token");
    if (triple.count < 0)
      throw InputError("edge list line " + std::to_string(line_no) + ": negative count");
    out.push_back(std::move(triple));
  }
  return out;
}

std::vector<AssociationTriple> read_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_edge_list(in);
}

void save_network(const SemanticNetwork& net, const std::filesystem::path& path,
                  const std::string& config_checksum) {
  nlohmann::json j;
  j["format"] = "dasent-network";
  j["version"] = kNetworkCacheVersion;
  if (!config_checksum.empty()) j["config_checksum"] = config_checksum;
  j["nodes"] = net.nodes();
  auto edges = nlohmann::json::array();
  for (auto [a, b] : net.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump() << '\n';
}

SemanticNetwork load_network(const std::filesystem::path& path) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("network cache '" + path.string() + "': " + e.what());
  }
  if (j.value("format", "") != "dasent-network" || j.value("version", 0) != kNetworkCacheVersion)
    throw InputError("network cache '" + path.string() + "': unsupported format or version");
  auto nodes = j.at("nodes").get<std::vector<std::string>>();
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("edges")) {
    auto a = e.at(0).get<std::size_t>();
    auto b = e.at(1).get<std::size_t>();
    if (a >= nodes.size() || b >= nodes.size())
      throw InputError("network cache '" + path.string() + "': edge index out of range");
    edges.emplace_back(nodes[a], nodes[b]);
  }
  if (!std::is_sorted(nodes.begin(), nodes.end()))
    throw InputError("network cache '" + path.string() + "': node list not sorted");
  return SemanticNetwork::from_edges(std::move(nodes), edges);
}

}  // namespace dasent
