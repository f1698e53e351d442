// Drives the chainforge executable end to end over small fixtures.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "registry_fixtures.hpp"

#ifndef CHAINFORGE_BIN
#error "CHAINFORGE_BIN must point at the chainforge executable"
#endif

namespace chainforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::line;

struct CmdResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("chainforge_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path write(const std::string& name, const std::vector<std::string>& lines) const {
    std::ofstream out(path(name));
    for (const auto& l : lines) out << l << "\n";
    return path(name);
  }

  CmdResult run(const std::string& args) const {
    const auto out = path("stdout.txt");
    const auto err = path("stderr.txt");
    const std::string cmd = std::string(CHAINFORGE_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  CmdResult ok(const std::string& args) const {
    auto r = run(args);
    EXPECT_EQ(r.code, 0) << args << "\n" << r.err;
    return r;
  }

  fs::path dir_;
};

std::vector<std::string> versioned_pair_lines() {
  return {line("pu", "1.0", "[]"),
          line("pu", "2.0", "[]"),
          line("pu", "3.0", "[]"),
          line("pd", "1.0", R"j(["pu==3.0"])j"),
          line("pd", "2.0", R"j(["pu (>=2.0)"])j"),
          line("pd", "3.0", R"j(["pu>=2.0"])j")};
}

// Four clusters hanging off one framework: an Arrow, a Star, a Tree and a
// Forest.
std::vector<std::string> shapes_lines() {
  std::vector<std::string> l{line("fw", "1.0", "[]")};
  auto dep = [&](const std::string& name, std::vector<std::string> reqs) {
    reqs.push_back("fw");
    json arr = reqs;
    l.push_back(line(name, "1.0", arr.dump()));
  };
  dep("deeplabcut-live", {});
  dep("deeplabcut-live-gui", {"deeplabcut-live"});
  dep("txtai", {});
  for (std::string s : {"s1", "s2", "s3"}) dep(s, {"txtai"});
  dep("pgmpy", {});
  dep("t-a", {"pgmpy"});
  dep("t-b", {"pgmpy"});
  dep("t-c", {"t-a"});
  dep("t-d", {"t-a"});
  dep("t-e", {"t-b"});
  for (std::string r : {"malaya", "underthesea", "g2p-en"}) dep(r, {});
  for (int i = 0; i < 13; ++i) dep("f" + std::to_string(i), {"malaya", "underthesea", "g2p-en"});
  dep("alone", {});
  return l;
}

TEST_F(Cli, IngestManifestMatchesOracle) {
  const std::vector<std::string> lines{line("u", "1.0", "[]"), line("u", "2.0", "[]"),
                                       line("d", "1.0", R"j(["u>=1.5", "ghost"])j"),
                                       line("e", "1.0", R"j(["u; extra == 'x'", "d"])j"), "{broken"};
  const auto input = write("meta.jsonl", lines);
  const auto r = ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string() + " --stable");
  const auto manifest = json::parse(r.out);
  const auto reg = testing::registry_from(lines);
  EXPECT_EQ(manifest["records"].get<std::size_t>(), testing::naive_dependency_records(*reg, true).size());
  EXPECT_EQ(manifest["registry_hash"], reg->content_hash());
  EXPECT_EQ(manifest["ingest"]["malformed_lines"], 1);
  EXPECT_EQ(manifest["options"]["include_extra_gated"], true);
  EXPECT_EQ(manifest["skipped_versions"], 0);
  EXPECT_FALSE(manifest.contains("created_at"));
  EXPECT_TRUE(fs::exists(path("deps.cfdb")));

  const auto strict = json::parse(ok("ingest-db --input " + input.string() + " --db " +
                                     path("strict.cfdb").string() + " --exclude-extra-gated --stable")
                                      .out);
  EXPECT_EQ(strict["records"].get<std::size_t>(), testing::naive_dependency_records(*reg, false).size());
}

TEST_F(Cli, IngestEmptyAndMissing) {
  const auto empty = write("empty.jsonl", {});
  const auto r = ok("ingest-db --input " + empty.string() + " --db " + path("e.cfdb").string());
  EXPECT_EQ(json::parse(r.out)["records"], 0);
  EXPECT_TRUE(json::parse(r.out).contains("created_at"));

  const auto missing = run("ingest-db --input " + path("nope.jsonl").string() + " --db " + path("m.cfdb").string());
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("nope.jsonl"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m.cfdb")));
}

TEST_F(Cli, BuildSupplyChainStats) {
  const auto input = write("pair.jsonl", versioned_pair_lines());
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  const auto r = ok("build-sc --db " + path("deps.cfdb").string() + " --seeds pu --out " + path("sc").string() +
                    " --format edge-csv,dot,graphml --stable");
  const auto stats = json::parse(r.out);
  EXPECT_EQ(stats["packages"], 2);
  EXPECT_EQ(stats["versions"], 6);
  EXPECT_EQ(stats["edges"], 1);
  EXPECT_EQ(slurp(path("sc") / "graph.csv"),
            "up,down,up_version,down_version\npu,pd,2.0,2.0\npu,pd,2.0,3.0\npu,pd,3.0,1.0\npu,pd,3.0,2.0\n"
            "pu,pd,3.0,3.0\n");
  EXPECT_TRUE(fs::exists(path("sc") / "graph.dot"));
  EXPECT_TRUE(fs::exists(path("sc") / "graph.graphml"));

  const auto seeds_only = json::parse(
      ok("build-sc --db " + path("deps.cfdb").string() + " --seeds pd --out " + path("sc2").string()).out);
  EXPECT_EQ(seeds_only["packages"], 1);
  EXPECT_EQ(seeds_only["versions"], 3);
  EXPECT_EQ(seeds_only["edges"], 0);
}

TEST_F(Cli, UnknownSeedFailsWithoutPartialOutput) {
  const auto input = write("pair.jsonl", versioned_pair_lines());
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  const auto r = run("build-sc --db " + path("deps.cfdb").string() + " --seeds pu,ghost --out " + path("sc").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ghost"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("sc") / "graph.json"));
  ok("build-sc --db " + path("deps.cfdb").string() + " --seeds pu,ghost --skip-unknown-seeds --out " +
     path("sc").string());
  EXPECT_TRUE(fs::exists(path("sc") / "graph.json"));
}

TEST_F(Cli, ClustersClassifyShapes) {
  const auto input = write("shapes.jsonl", shapes_lines());
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  ok("build-sc --db " + path("deps.cfdb").string() + " --seeds fw --out " + path("sc").string());
  ok("clusters --input " + (path("sc") / "graph.json").string() + " --out " + path("sc").string() +
     " --format dot");
  const auto report = json::parse(slurp(path("sc") / "clusters.json"));
  std::map<std::string, std::string> shape_of_core;
  for (const auto& c : report["clusters"]) shape_of_core[c["core"]] = c["shape"];
  EXPECT_EQ(shape_of_core["deeplabcut-live"], "Arrow");
  EXPECT_EQ(shape_of_core["txtai"], "Star");
  EXPECT_EQ(shape_of_core["pgmpy"], "Tree");
  EXPECT_EQ(report["clusters"].size(), 4u);
  EXPECT_EQ(report["summary"]["shapes"]["Forest"]["clusters"], 1);
  EXPECT_EQ(report["isolated"]["count"], 1);
  EXPECT_EQ(report["summary"]["large_clusters"].size(), 1u);
  EXPECT_TRUE(fs::exists(path("sc") / "clusters" / "cluster_0.dot"));
}

TEST_F(Cli, ClustersOnEdgelessGraphAndBadGraph) {
  const auto input = write("star.jsonl", {line("fw", "1.0", "[]"), line("a", "1.0", R"j(["fw"])j"),
                                          line("b", "1.0", R"j(["fw"])j")});
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  ok("build-sc --db " + path("deps.cfdb").string() + " --seeds fw --out " + path("sc").string());
  ok("clusters --input " + (path("sc") / "graph.json").string() + " --out " + path("sc").string());
  const auto report = json::parse(slurp(path("sc") / "clusters.json"));
  EXPECT_TRUE(report["clusters"].empty());
  EXPECT_EQ(report["isolated"]["count"], 2);
  EXPECT_EQ(report["isolated"]["ratio"], 1.0);

  write("bad.json", {"{\"format\": \"something else\"}"});
  EXPECT_EQ(run("clusters --input " + path("bad.json").string() + " --out " + path("x").string()).code, 1);
  EXPECT_FALSE(fs::exists(path("x") / "clusters.json"));
}

TEST_F(Cli, DisengagementAndRegistryMismatch) {
  const auto input = write("d.jsonl", {line("fw", "1.0", "[]"), line("q", "1.0", R"j(["fw"])j"),
                                       line("q", "2.0", "[]", "2021-07-15T00:00:00Z")});
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  ok("build-sc --db " + path("deps.cfdb").string() + " --seeds fw --out " + path("sc").string());
  ok("disengagement --db " + path("deps.cfdb").string() + " --input " + (path("sc") / "graph.json").string() +
     " --out " + path("sc").string());
  const auto report = json::parse(slurp(path("sc") / "disengagement.json"));
  ASSERT_EQ(report["records"].size(), 1u);
  EXPECT_EQ(report["records"][0]["package"], "q");
  EXPECT_EQ(report["trend"]["2021Q3"], 1);

  const auto other = write("other.jsonl", {line("fw", "1.0", "[]")});
  ok("ingest-db --input " + other.string() + " --db " + path("other.cfdb").string());
  const auto r = run("disengagement --db " + path("other.cfdb").string() + " --input " +
                     (path("sc") / "graph.json").string() + " --out " + path("mismatch").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("registry"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("mismatch") / "disengagement.json"));
}

TEST_F(Cli, ReportSections) {
  const auto input = write("shapes.jsonl", shapes_lines());
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  ok("build-sc --db " + path("deps.cfdb").string() + " --seeds fw --out " + path("sc").string());
  write("dl.csv", {"package,downloads", "txtai,90000", "pgmpy,50000", "s1,3"});
  const auto graph = (path("sc") / "graph.json").string();
  const auto r = ok("report --db " + path("deps.cfdb").string() + " --input " + graph + " --downloads " +
                    path("dl.csv").string());
  const auto doc = json::parse(r.out);
  for (const char* s : {"graph", "shapes", "popularity", "disengagement"}) {
    EXPECT_TRUE(doc["sections"].contains(s)) << s;
  }
  EXPECT_EQ(doc["sections"]["popularity"]["popular"], json({"pgmpy", "txtai"}));
  EXPECT_EQ(doc["sections"]["disengagement"]["total"], 0);

  const auto md = ok("report --db " + path("deps.cfdb").string() + " --input " + graph + " --downloads " +
                     path("dl.csv").string() + " --format md --out " + path("report.md").string());
  EXPECT_NE(slurp(path("report.md")).find("## Cluster shapes"), std::string::npos);

  EXPECT_EQ(run("report --input " + graph + " --sections graph,nonsense").code, 2);
  const auto missing = run("report --input " + graph + " --sections popularity");
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--downloads"), std::string::npos);
  EXPECT_EQ(json::parse(ok("report --input " + graph + " --sections graph").out)["sections"].size(), 1u);
}

TEST_F(Cli, StableOutputsAreByteIdentical) {
  const auto input = write("shapes.jsonl", shapes_lines());
  std::vector<std::string> runs;
  for (int i = 0; i < 2; ++i) {
    const auto d = path("run" + std::to_string(i));
    const auto db = (d / "deps.cfdb").string();
    const std::string threads = i == 0 ? "1" : "3";
    const auto manifest = ok("ingest-db --input " + input.string() + " --db " + db + " --stable --threads " + threads).out;
    ok("build-sc --db " + db + " --seeds fw --out " + d.string() + " --format edge-csv,graphml --stable --threads " +
       threads);
    ok("clusters --input " + (d / "graph.json").string() + " --out " + d.string() + " --rng-seed 7");
    ok("disengagement --db " + db + " --input " + (d / "graph.json").string() + " --out " + d.string());
    runs.push_back(manifest + slurp(db) + slurp(d / "graph.json") + slurp(d / "graph.csv") + slurp(d / "graph.graphml") +
                   slurp(d / "clusters.json") + slurp(d / "disengagement.json"));
  }
  EXPECT_EQ(runs[0], runs[1]);
}

TEST_F(Cli, ExportAndUsageErrors) {
  const auto input = write("pair.jsonl", versioned_pair_lines());
  ok("ingest-db --input " + input.string() + " --db " + path("deps.cfdb").string());
  ok("build-sc --db " + path("deps.cfdb").string() + " --seeds pu --out " + path("sc").string());
  const auto graph = (path("sc") / "graph.json").string();
  const auto csv = ok("export --input " + graph + " --format edge-csv").out;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  ok("export --input " + graph + " --format json --stable --out " + path("copy.json").string());
  EXPECT_EQ(slurp(path("copy.json")).find("built_at"), std::string::npos);
  EXPECT_EQ(run("export --input " + graph + " --format png").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("build-sc --db " + path("deps.cfdb").string()).code, 2);
}

}  // namespace
}  // namespace chainforge
