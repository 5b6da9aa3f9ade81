#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

using namespace seedeval;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("seedeval_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + std::to_string(reinterpret_cast<std::uintptr_t>(&dir_) % 100000));
    fs::create_directories(dir_);
    const auto col = generate_collection(12, 3);
    std::ofstream e(edges());
    write_edge_list_csv(col, e);
    e.close();
    // draw arms and seed sets with the CLI itself, then attach outcomes
    const CliResult r = run({"design", "--edges", edges(), "--k", "2", "--seed", "5", "--assign-out", seeds(), "--out",
                       (dir_ / "design.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(seeds());
    std::string line, text = "village_id,y,z\n";
    std::set<std::string> seen;
    double y = 0.1;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("village_id", 0) == 0) continue;
      const auto f = cli::split(line, ',');
      if (!seen.insert(f[0]).second) continue;
      text += f[0] + "," + std::to_string(y) + "," + f[2] + "\n";
      y = std::fmod(y + 0.37, 1.0);
    }
    write(outcomes(), text);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string edges() { return (dir_ / "edges.csv").string(); }
  static std::string seeds() { return (dir_ / "seeds.csv").string(); }
  static std::string outcomes() { return (dir_ / "outcomes.csv").string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"summary", "--edges", (dir_ / "missing.csv").string()}).code, 1);
  const CliResult help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("estimate"), std::string::npos);
  const CliResult bad_design = run({"estimate", "--edges", edges(), "--seeds", seeds(), "--outcomes", outcomes(), "--design",
                              "mixture:1.5"});
  EXPECT_EQ(bad_design.code, 1);
  EXPECT_NE(bad_design.err.find("rho"), std::string::npos);
}

TEST_F(Cli, SummaryCarriesProvenance) {
  const CliResult r = run({"summary", "--edges", edges(), "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::ordered_json::parse(r.out);
  EXPECT_EQ(j["schema_version"], cli::kSchemaVersion);
  EXPECT_EQ(j["tool"], "seedeval");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["villages"], 12);
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["config_hash"], cli::hex64(cli::fnv1a(j["config"].dump())));
}

TEST_F(Cli, ProbsWritesOneLinePerVillage) {
  const CliResult r = run({"probs", "--edges", edges(), "--seeds", seeds()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 13u);
  EXPECT_EQ(lines[0]["type"], "header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_EQ(lines[i]["k"], 2);
    EXPECT_TRUE(lines[i]["positivity"]["ok"].get<bool>());
    EXPECT_FALSE(lines[i]["log_p_design"].is_null());
    const double la = lines[i]["log_p_a"].is_null() ? kNegInf : lines[i]["log_p_a"].get<double>();
    const double lb = lines[i]["log_p_b"].get<double>();
    EXPECT_NEAR(std::exp(lines[i]["log_p_design"].get<double>()), 0.5 * std::exp(la) + 0.5 * std::exp(lb), 1e-12);
  }
}

TEST_F(Cli, EstimateUnderMixture) {
  const CliResult r = run({"estimate", "--edges", edges(), "--seeds", seeds(), "--outcomes", outcomes(), "--bootstrap", "300"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["estimates"].size(), 3u);
  EXPECT_FALSE(j.contains("refused"));
  EXPECT_EQ(j["estimates"][0]["estimator"], "hajek");
  EXPECT_TRUE(j["estimates"][0].contains("n_eff"));
  EXPECT_TRUE(j["estimates"][0].contains("bootstrap"));
  EXPECT_EQ(j["estimates"][2]["estimator"], "dm");
}

TEST_F(Cli, SingleDesignRefusesDifferenceInMeans) {
  const CliResult r = run({"estimate", "--edges", edges(), "--seeds", seeds(), "--outcomes", outcomes(), "--design",
                     "single:random", "--estimators", "ht,dm"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("difference-in-means"), std::string::npos);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["estimates"].size(), 1u);
  EXPECT_EQ(j["refused"][0]["estimator"], "dm");
  EXPECT_EQ(run({"estimate", "--edges", edges(), "--seeds", seeds(), "--outcomes", outcomes(), "--design",
                 "single:random", "--estimators", "dm"})
                .code,
            1);
}

TEST_F(Cli, BadSeedFilesExitOne) {
  write(dir_ / "bad_village.csv", "village_id,node_label\nnowhere,1\n");
  const CliResult r = run({"probs", "--edges", edges(), "--seeds", (dir_ / "bad_village.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos);
  write(dir_ / "missing_village.csv", "village_id,node_label\nv001,0\nv001,1\n");
  EXPECT_EQ(run({"probs", "--edges", edges(), "--seeds", (dir_ / "missing_village.csv").string()}).code, 1);
}

TEST_F(Cli, InfeasibleStrategyExitsTwo) {
  // only node 0 is ever named, so one-hop targeting cannot find two seeds
  write(dir_ / "star.csv", "village_id,src,dst\ns,1,0\ns,2,0\ns,3,0\n");
  const CliResult r = run({"design", "--edges", (dir_ / "star.csv").string(), "--k", "2"});
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, RandTestAndEss) {
  const CliResult rt = run({"rand-test", "--edges", edges(), "--seeds", seeds(), "--outcomes", outcomes(), "--replicates",
                      "199", "--bins", "5"});
  ASSERT_EQ(rt.code, 0) << rt.err;
  const auto j = nlohmann::json::parse(rt.out);
  EXPECT_GE(j["p_value"].get<double>(), 1.0 / 200);
  std::size_t total = j["null_histogram"]["infinite"];
  for (const auto& c : j["null_histogram"]["counts"]) total += c.get<std::size_t>();
  EXPECT_EQ(total, 199u);

  const CliResult pop = run({"ess", "--edges", edges(), "--k", "2", "--draws", "200"});
  ASSERT_EQ(pop.code, 0) << pop.err;
  EXPECT_EQ(nlohmann::json::parse(pop.out)["kind"], "ate_population");
  const CliResult sample = run({"ess", "--edges", edges(), "--seeds", seeds()});
  ASSERT_EQ(sample.code, 0) << sample.err;
  EXPECT_EQ(nlohmann::json::parse(sample.out)["kind"], "ate_sample");
  const CliResult sweep = run({"ess", "--edges", edges(), "--k-range", "1:3", "--draws", "200"});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  EXPECT_EQ(sweep.out.rfind("# seedeval", 0), 0u);
  EXPECT_EQ(std::count(sweep.out.begin(), sweep.out.end(), '\n'), 5);
}

TEST_F(Cli, SimulateIsReproducible) {
  write(dir_ / "sweep.json",
        R"({"synthetic": {"villages": 20, "seed": 2}, "alpha": [-1], "beta": [0, 4], "N": [10],
            "replicates": 20, "oracle_reps": 100, "seed": 11})");
  const auto a = dir_ / "sim_a.csv", b = dir_ / "sim_b.csv";
  ASSERT_EQ(run({"simulate", "--config", (dir_ / "sweep.json").string(), "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", (dir_ / "sweep.json").string(), "--out", b.string(), "--threads", "2"}).code,
            0);
  const std::string text = slurp(a);
  EXPECT_EQ(text, slurp(b));
  EXPECT_NE(text.find("hajek,rmse,"), std::string::npos);
  EXPECT_NE(text.find("truth,true_tau,"), std::string::npos);

  write(dir_ / "bad_sweep.json", R"({"alpha": [-1], "betta": [0]})");
  const CliResult bad = run({"simulate", "--config", (dir_ / "bad_sweep.json").string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("betta"), std::string::npos);
}
