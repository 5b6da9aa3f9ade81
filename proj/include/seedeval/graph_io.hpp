#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "seedeval/csv.hpp"
#include "seedeval/graph.hpp"

namespace seedeval {

/// Parses `village_id,src,dst[,dst_village]` edge-list CSV.
inline VillageCollection read_edge_list_csv(std::istream& in, const LoadOptions& options = {},
                                            LoadReport* report = nullptr) {
  std::vector<std::string> header;
  const auto rows = csv::read(in, header);
  const int c_village = csv::column(header, "village_id");
  const int c_src = csv::column(header, "src");
  const int c_dst = csv::column(header, "dst");
  const int c_dst_village = csv::column(header, "dst_village");
  if (c_village < 0 || c_src < 0 || c_dst < 0)
    throw InputError("edge list header must contain village_id,src,dst");
  std::vector<EdgeRecord> records;
  records.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.fields.size() != header.size())
      throw InputError("line " + std::to_string(row.line) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(row.fields.size()));
    EdgeRecord r{row.fields[c_village], row.fields[c_src], row.fields[c_dst], std::nullopt, row.line};
    if (c_dst_village >= 0) r.dst_village = row.fields[c_dst_village];
    records.push_back(std::move(r));
  }
  return load_edge_list(records, options, report);
}

inline VillageCollection read_edge_list_file(const std::string& path, const LoadOptions& options = {},
                                             LoadReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list: " + path);
  return read_edge_list_csv(in, options, report);
}

/// Writes node declarations (in id order) followed by edges, so that reading
/// the output back reproduces node ids exactly.
inline void write_edge_list_csv(const VillageCollection& collection, std::ostream& out) {
  out << "village_id,src,dst\n";
  for (const auto& v : collection.villages) {
    const std::string vid = csv::quote(v.id);
    for (NodeId u = 0; u < v.graph.node_count(); ++u) out << vid << ',' << csv::quote(v.graph.label(u)) << ",\n";
    for (const Edge& e : v.graph.edges())
      out << vid << ',' << csv::quote(v.graph.label(e.src)) << ',' << csv::quote(v.graph.label(e.dst)) << '\n';
  }
}

inline nlohmann::json to_json(const VillageCollection& collection) {
  nlohmann::json villages = nlohmann::json::array();
  for (const auto& v : collection.villages) {
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : v.graph.edges()) edges.push_back({e.src, e.dst});
    villages.push_back({{"id", v.id}, {"labels", v.graph.labels()}, {"edges", std::move(edges)}});
  }
  return {{"format", "seedeval.collection"}, {"version", 1}, {"villages", std::move(villages)}};
}

inline VillageCollection collection_from_json(const nlohmann::json& j) {
  try {
    VillageCollection out;
    for (const auto& v : j.at("villages")) {
      auto labels = v.at("labels").get<std::vector<std::string>>();
      std::vector<Edge> edges;
      for (const auto& e : v.at("edges")) edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
      const std::size_t n = labels.size();
      out.villages.push_back({v.at("id").get<std::string>(), DirectedGraph(n, std::move(edges), std::move(labels))});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed collection JSON: ") + e.what());
  }
}

/// Loads a collection from `.json` (serialized form) or edge-list CSV.
inline VillageCollection read_collection_file(const std::string& path, const LoadOptions& options = {},
                                              LoadReport* report = nullptr) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open collection: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InputError("cannot parse " + path + ": " + e.what());
    }
    return collection_from_json(j);
  }
  return read_edge_list_file(path, options, report);
}

}  // namespace seedeval
