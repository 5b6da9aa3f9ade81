#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "seedeval/errors.hpp"

namespace seedeval {

using NodeId = std::uint32_t;

struct Edge {
  NodeId src;
  NodeId dst;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable directed graph with compressed in/out adjacency. Node ids are
/// dense in [0, n); every node carries a string label.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Throws InputError on self-loops, duplicate edges or out-of-range ids.
  DirectedGraph(std::size_t n, std::vector<Edge> edges, std::vector<std::string> labels = {})
      : n_(n), edges_(std::move(edges)), labels_(std::move(labels)) {
    if (labels_.empty()) {
      labels_.reserve(n_);
      for (std::size_t v = 0; v < n_; ++v) labels_.push_back(std::to_string(v));
    }
    if (labels_.size() != n_) throw InputError("label count does not match node count");
    std::sort(edges_.begin(), edges_.end());
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      if (e.src >= n_ || e.dst >= n_) throw InputError("edge endpoint out of range");
      if (e.src == e.dst) throw InputError("self-loop in graph");
      if (i > 0 && edges_[i - 1] == e) throw InputError("duplicate directed edge");
    }
    build_adjacency();
    for (std::size_t v = 0; v < n_; ++v) label_index_.emplace(labels_[v], static_cast<NodeId>(v));
    if (label_index_.size() != n_) throw InputError("node labels are not unique");
  }

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const NodeId> out_neighbors(NodeId v) const {
    return {out_adj_.data() + out_off_[v], out_adj_.data() + out_off_[v + 1]};
  }
  std::span<const NodeId> in_neighbors(NodeId v) const {
    return {in_adj_.data() + in_off_[v], in_adj_.data() + in_off_[v + 1]};
  }
  std::size_t out_degree(NodeId v) const { return out_off_[v + 1] - out_off_[v]; }
  std::size_t in_degree(NodeId v) const { return in_off_[v + 1] - in_off_[v]; }

  const std::string& label(NodeId v) const { return labels_[v]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<NodeId> find_label(std::string_view label) const {
    auto it = label_index_.find(std::string(label));
    if (it == label_index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.labels_ == b.labels_;
  }

 private:
  void build_adjacency() {
    out_off_.assign(n_ + 1, 0);
    in_off_.assign(n_ + 1, 0);
    for (const Edge& e : edges_) {
      ++out_off_[e.src + 1];
      ++in_off_[e.dst + 1];
    }
    for (std::size_t v = 0; v < n_; ++v) {
      out_off_[v + 1] += out_off_[v];
      in_off_[v + 1] += in_off_[v];
    }
    out_adj_.resize(edges_.size());
    in_adj_.resize(edges_.size());
    std::vector<std::size_t> out_pos(out_off_.begin(), out_off_.end() - 1);
    std::vector<std::size_t> in_pos(in_off_.begin(), in_off_.end() - 1);
    for (const Edge& e : edges_) {
      out_adj_[out_pos[e.src]++] = e.dst;
      in_adj_[in_pos[e.dst]++] = e.src;
    }
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> label_index_;
  std::vector<std::size_t> out_off_{0}, in_off_{0};
  std::vector<NodeId> out_adj_, in_adj_;
};

struct Village {
  std::string id;
  DirectedGraph graph;
  friend bool operator==(const Village&, const Village&) = default;
};

struct VillageCollection {
  std::vector<Village> villages;

  std::size_t size() const { return villages.size(); }
  bool empty() const { return villages.empty(); }

  const Village* find(std::string_view id) const {
    for (const auto& v : villages)
      if (v.id == id) return &v;
    return nullptr;
  }

  friend bool operator==(const VillageCollection&, const VillageCollection&) = default;
};

/// One edge-list row. An empty `dst` declares `src` as a node without adding
/// an edge. `dst_village`, when present and different from `village_id`,
/// marks an edge that crosses villages.
struct EdgeRecord {
  std::string village_id;
  std::string src;
  std::string dst;
  std::optional<std::string> dst_village;
  std::size_t line = 0;
};

struct LoadOptions {
  bool symmetrize = false;
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_collapsed = 0;
  std::size_t cross_village_dropped = 0;
};

/// Builds villages from edge records; villages appear in first-seen order and
/// node ids follow first-seen label order within each village.
inline VillageCollection load_edge_list(std::span<const EdgeRecord> records, const LoadOptions& options = {},
                                        LoadReport* report = nullptr) {
  if (records.empty()) throw InputError("edge list is empty");
  struct Builder {
    std::vector<std::string> labels;
    std::unordered_map<std::string, NodeId> index;
    std::vector<Edge> edges;
    std::unordered_set<std::uint64_t> seen;

    NodeId node(const std::string& label) {
      auto [it, inserted] = index.emplace(label, static_cast<NodeId>(labels.size()));
      if (inserted) labels.push_back(label);
      return it->second;
    }
    bool add(NodeId s, NodeId d) {
      const std::uint64_t key = (static_cast<std::uint64_t>(s) << 32) | d;
      if (!seen.insert(key).second) return false;
      edges.push_back({s, d});
      return true;
    }
  };

  LoadReport local;
  std::vector<std::string> order;
  std::map<std::string, Builder> builders;
  for (const EdgeRecord& r : records) {
    ++local.rows;
    if (r.village_id.empty() || r.src.empty())
      throw InputError("line " + std::to_string(r.line) + ": village_id and src are required");
    if (r.dst_village && !r.dst_village->empty() && *r.dst_village != r.village_id) {
      ++local.cross_village_dropped;
      continue;
    }
    auto [it, inserted] = builders.try_emplace(r.village_id);
    if (inserted) order.push_back(r.village_id);
    Builder& b = it->second;
    const NodeId s = b.node(r.src);
    if (r.dst.empty()) continue;
    const NodeId d = b.node(r.dst);
    if (s == d) {
      ++local.self_loops_dropped;
      continue;
    }
    if (!b.add(s, d)) ++local.duplicates_collapsed;
    if (options.symmetrize) b.add(d, s);
  }
  if (order.empty()) throw InputError("edge list contains no usable rows");

  VillageCollection out;
  out.villages.reserve(order.size());
  for (const auto& id : order) {
    Builder& b = builders.at(id);
    const std::size_t n = b.labels.size();
    out.villages.push_back({id, DirectedGraph(n, std::move(b.edges), std::move(b.labels))});
  }
  if (report) *report = local;
  return out;
}

/// Drops villages with fewer than `min_edges` edges.
inline VillageCollection preprocess(const VillageCollection& collection, std::size_t min_edges,
                                    std::vector<std::string>* dropped = nullptr) {
  VillageCollection out;
  for (const auto& v : collection.villages) {
    if (v.graph.edge_count() < min_edges) {
      if (dropped) dropped->push_back(v.id);
    } else {
      out.villages.push_back(v);
    }
  }
  return out;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;  // N-1 denominator; 0 for a single value
  double min = 0.0;
  double max = 0.0;
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  double sum = 0.0;
  m.min = xs[0];
  m.max = xs[0];
  for (double x : xs) {
    sum += x;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

struct CollectionSummary {
  std::size_t villages = 0;
  Moments edges;
  Moments nodes;
  Moments mean_in_degree;
  Moments sd_in_degree;
};

inline CollectionSummary summary_stats(const VillageCollection& collection) {
  if (collection.empty()) throw InputError("summary of an empty collection");
  std::vector<double> edges, nodes, mean_in, sd_in;
  for (const auto& v : collection.villages) {
    const auto& g = v.graph;
    edges.push_back(static_cast<double>(g.edge_count()));
    nodes.push_back(static_cast<double>(g.node_count()));
    std::vector<double> indeg(g.node_count());
    for (NodeId u = 0; u < g.node_count(); ++u) indeg[u] = static_cast<double>(g.in_degree(u));
    const Moments m = moments(indeg);
    mean_in.push_back(m.mean);
    sd_in.push_back(m.sd);
  }
  return {collection.size(), moments(edges), moments(nodes), moments(mean_in), moments(sd_in)};
}

}  // namespace seedeval
