#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/graph_io.hpp"

using namespace seedeval;

TEST(DirectedGraph, AdjacencyAndDegrees) {
  DirectedGraph g(4, {{0, 1}, {0, 2}, {2, 1}, {3, 1}});
  EXPECT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 4u);
  EXPECT_EQ(g.out_degree(0), 2u);
  EXPECT_EQ(g.in_degree(1), 3u);
  EXPECT_EQ(g.in_degree(0), 0u);
  const auto in1 = g.in_neighbors(1);
  EXPECT_EQ(std::vector<NodeId>(in1.begin(), in1.end()), (std::vector<NodeId>{0, 2, 3}));
  EXPECT_EQ(g.label(3), "3");
  EXPECT_EQ(g.find_label("2"), NodeId{2});
  EXPECT_FALSE(g.find_label("9").has_value());
}

TEST(DirectedGraph, RejectsInvalidEdges) {
  EXPECT_THROW(DirectedGraph(3, {{0, 0}}), InputError);
  EXPECT_THROW(DirectedGraph(3, {{0, 1}, {0, 1}}), InputError);
  EXPECT_THROW(DirectedGraph(3, {{0, 3}}), InputError);
  EXPECT_THROW(DirectedGraph(2, {}, {"a", "a"}), InputError);
  EXPECT_THROW(DirectedGraph(2, {}, {"a"}), InputError);
}

TEST(DirectedGraph, DegreeSumsMatchEdgeCount) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = oracle::random_graph(2 + rep % 9, 0.3, rng);
    std::size_t in = 0, out = 0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      in += g.in_degree(v);
      out += g.out_degree(v);
      for (NodeId u : g.out_neighbors(v)) {
        const auto back = g.in_neighbors(u);
        EXPECT_NE(std::find(back.begin(), back.end(), v), back.end());
      }
    }
    EXPECT_EQ(in, g.edge_count());
    EXPECT_EQ(out, g.edge_count());
  }
}

TEST(EdgeList, CleansRowsAndReports) {
  std::istringstream in(
      "village_id,src,dst,dst_village\n"
      "# comment\n"
      "1,a,b,1\n"
      "1,a,b,1\n"
      "1,b,b,1\n"
      "1,b,c,2\n"
      "\n"
      "2,x,y,\n");
  LoadReport report;
  const auto c = read_edge_list_csv(in, {}, &report);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(report.rows, 5u);
  EXPECT_EQ(report.duplicates_collapsed, 1u);
  EXPECT_EQ(report.self_loops_dropped, 1u);
  EXPECT_EQ(report.cross_village_dropped, 1u);
  const auto& v1 = c.villages[0].graph;
  EXPECT_EQ(c.villages[0].id, "1");
  EXPECT_EQ(v1.node_count(), 2u);  // c only appears in the dropped cross-village row
  EXPECT_EQ(v1.edge_count(), 1u);
  EXPECT_EQ(c.find("2")->graph.edge_count(), 1u);
}

TEST(EdgeList, SymmetrizeAddsReverseEdges) {
  std::istringstream in("village_id,src,dst\nv,a,b\nv,b,c\n");
  LoadOptions opts;
  opts.symmetrize = true;
  const auto c = read_edge_list_csv(in, opts);
  EXPECT_EQ(c.villages[0].graph.edge_count(), 4u);
}

TEST(EdgeList, ReportsBadRows) {
  std::istringstream bad_fields("village_id,src,dst\nv,a,b\nv,a\n");
  try {
    read_edge_list_csv(bad_fields);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream bad_header("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_edge_list_csv(bad_header), InputError);
  std::istringstream empty("");
  EXPECT_THROW(read_edge_list_csv(empty), InputError);
  std::istringstream only_header("village_id,src,dst\n");
  EXPECT_THROW(read_edge_list_csv(only_header), InputError);
  std::istringstream unterminated("village_id,src,dst\nv,\"a,b\n");
  EXPECT_THROW(read_edge_list_csv(unterminated), InputError);
}

TEST(EdgeList, QuotedLabelsAndBom) {
  std::istringstream in("\xEF\xBB\xBFvillage_id,src,dst\nv,\"Smith, J\",\"O\"\"Neil\"\n");
  const auto c = read_edge_list_csv(in);
  const auto& g = c.villages[0].graph;
  EXPECT_TRUE(g.find_label("Smith, J").has_value());
  EXPECT_TRUE(g.find_label("O\"Neil").has_value());
}

TEST(EdgeList, CsvAndJsonRoundTrip) {
  std::istringstream in(
      "village_id,src,dst\n"
      "v1,a,b\nv1,b,a\nv1,c,\nv1,\"d,e\",a\n"
      "v2,p,q\n");
  const auto c = read_edge_list_csv(in);
  EXPECT_EQ(c.villages[0].graph.node_count(), 4u);  // c declared without edges

  std::ostringstream out;
  write_edge_list_csv(c, out);
  std::istringstream back(out.str());
  EXPECT_EQ(read_edge_list_csv(back), c);

  const auto j = to_json(c);
  EXPECT_EQ(j.at("format"), "seedeval.collection");
  EXPECT_EQ(collection_from_json(nlohmann::json::parse(j.dump())), c);
  EXPECT_THROW(collection_from_json(nlohmann::json{{"villages", 3}}), InputError);
}

TEST(Preprocess, DropsSmallVillages) {
  VillageCollection c;
  c.villages.push_back({"small", DirectedGraph(3, {{0, 1}})});
  c.villages.push_back({"big", DirectedGraph(3, {{0, 1}, {1, 2}, {2, 0}})});
  std::vector<std::string> dropped;
  const auto kept = preprocess(c, 2, &dropped);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept.villages[0].id, "big");
  EXPECT_EQ(dropped, std::vector<std::string>{"small"});
}

TEST(Summary, MomentsMatchHandComputation) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto m = moments(xs);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(m.min, 1);
  EXPECT_EQ(m.max, 4);

  VillageCollection c;
  c.villages.push_back({"a", DirectedGraph(2, {{0, 1}})});
  c.villages.push_back({"b", DirectedGraph(4, {{0, 1}, {1, 2}, {2, 3}})});
  const auto s = summary_stats(c);
  EXPECT_EQ(s.villages, 2u);
  EXPECT_DOUBLE_EQ(s.edges.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.nodes.max, 4.0);
  EXPECT_DOUBLE_EQ(s.mean_in_degree.mean, 0.625);
  EXPECT_THROW(summary_stats(VillageCollection{}), InputError);
}
