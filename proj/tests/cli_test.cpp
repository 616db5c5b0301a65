#include <gtest/gtest.h>

#include <sys/stat.h>

#include <sstream>

#include "lwe/cli.hpp"
#include "test_support.hpp"

namespace lwe {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lwe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = (dir_ / "data.jsonl").string();
    ASSERT_EQ(cli({"synth", "--n", "40", "--seed", "3", "--out", data_}).code, 0);
  }
  std::string run_dir(const std::string& name) const { return (dir_ / name).string(); }
  Outcome run(const std::string& name, const std::string& strategy, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {"run", "--strategy", strategy, "--dataset", data_, "--out", run_dir(name),
                                  "--seed", "7", "--no-fsync"};
    a.insert(a.end(), extra.begin(), extra.end());
    return cli(a);
  }

  TempDir dir_;
  std::string data_;
};

TEST_F(Cli, SynthWritesParsableDataset) {
  const auto d = read_dataset_file(data_);
  EXPECT_EQ(d.size(), 40u);
  for (const auto& c : d) EXPECT_TRUE(c.gold.has_value());
}

TEST_F(Cli, RunWritesArtifacts) {
  const auto r = run("sel", "selective-lwe", {"--paired", "--batch-size", "2", "--progress-every", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = run_dir("sel");
  for (const char* f : {"manifest.json", "events.log", "report.json", "final_meta.txt"})
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(d) / f)) << f;
  EXPECT_NE(r.out.find("[gate] 10/40 cases"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Cons."), std::string::npos);
  const auto report = nlohmann::json::parse(read_file(std::filesystem::path(d) / "report.json"));
  EXPECT_EQ(report["strategy"], "selective-lwe");
  EXPECT_EQ(report["metrics"]["n"], 40);
}

TEST_F(Cli, ResumeOfFinishedRunSaysAlreadyComplete) {
  ASSERT_EQ(run("v", "vanilla").code, 0);
  const auto before = read_file(std::filesystem::path(run_dir("v")) / "report.json");
  const auto r = run("v", "vanilla", {"--resume"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("already complete: " + run_dir("v")), std::string::npos);
  EXPECT_EQ(read_file(std::filesystem::path(run_dir("v")) / "report.json"), before);
}

TEST_F(Cli, ResumeWithDifferentFlagsIsStorageError) {
  ASSERT_EQ(run("v", "vanilla").code, 0);
  const auto r = run("v", "vanilla", {"--resume", "--paired"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("manifest mismatch"), std::string::npos) << r.err;
}

TEST_F(Cli, RerunIntoInitializedDirWithoutResumeIsStorageError) {
  ASSERT_EQ(run("v", "vanilla").code, 0);
  EXPECT_EQ(run("v", "vanilla").code, 3);
}

TEST_F(Cli, UsageErrors) {
  auto r = cli({"run", "--strategy", "vanilla", "--out", run_dir("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--dataset"), std::string::npos);
  EXPECT_EQ(cli({"run", "--strategy", "nope", "--dataset", data_, "--out", run_dir("x")}).code, 1);
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"metrics", run_dir("missing")}).code, 3);
  EXPECT_EQ(run("lim", "vanilla", {"--limit", "41"}).code, 1);
  write_file(dir_ / "bad.jsonl", "{oops\n");
  r = cli({"run", "--strategy", "vanilla", "--dataset", (dir_ / "bad.jsonl").string(), "--out", run_dir("b")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST_F(Cli, UnwritableOutputIsStorageError) {
  if (::geteuid() == 0) GTEST_SKIP() << "root bypasses directory permissions";
  std::filesystem::create_directories(dir_ / "ro");
  ::chmod((dir_ / "ro").c_str(), 0555);
  EXPECT_EQ(run("ro/run", "vanilla").code, 3);
  ::chmod((dir_ / "ro").c_str(), 0755);
}

TEST_F(Cli, OutputUnderAFileIsStorageError) {
  write_file(dir_ / "plain", "x");
  EXPECT_EQ(run("plain/run", "vanilla").code, 3);
}

TEST_F(Cli, MetricsTableUsesDashForUnpairedAndAddsMacroRow) {
  ASSERT_EQ(run("a", "vanilla").code, 0);
  ASSERT_EQ(run("b", "cot", {"--paired"}).code, 0);
  auto r = cli({"metrics", run_dir("a")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("—"), std::string::npos);
  EXPECT_EQ(r.out.find("macro"), std::string::npos);
  r = cli({"metrics", run_dir("a"), run_dir("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("macro"), std::string::npos);

  r = cli({"--format", "machine", "metrics", run_dir("a"), run_dir("b")});
  std::istringstream lines(r.out);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows[0]["consistency"].is_null());
  EXPECT_FALSE(rows[1]["consistency"].is_null());
  EXPECT_EQ(rows[2]["run"], "macro");
  EXPECT_TRUE(rows[2]["consistency"].is_null());
  EXPECT_DOUBLE_EQ(rows[2]["accuracy"].get<double>(),
                   (rows[0]["accuracy"].get<double>() + rows[1]["accuracy"].get<double>()) / 2);
}

TEST_F(Cli, CompareAgainstItselfIsOne) {
  ASSERT_EQ(run("v", "vanilla").code, 0);
  ASSERT_EQ(run("s", "selective-lwe").code, 0);
  auto r = cli({"compare", run_dir("v"), "--baseline", run_dir("v")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("relative cost: 1.0×"), std::string::npos) << r.out;
  r = cli({"compare", run_dir("s"), "--baseline", run_dir("v")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("consistency_check"), std::string::npos);
  EXPECT_NE(r.out.find("total"), std::string::npos);
}

TEST_F(Cli, CurveCsv) {
  ASSERT_EQ(run("s", "selective-lwe", {"--paired"}).code, 0);
  auto r = cli({"curve", run_dir("s"), "--out", "-"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "t,case_id,correct,cumulative_accuracy,ci_low,ci_high");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 40u);

  const auto csv = (dir_ / "curve.csv").string();
  r = cli({"curve", run_dir("s"), "--out", csv, "--method", "wilson", "--subset", "inconsistent"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(read_file(std::filesystem::path(run_dir("s")) / "report.json"));
  const auto text = read_file(csv);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')),
            report["inconsistent_cases"].get<std::size_t>() + 1);
  EXPECT_EQ(cli({"curve", run_dir("s"), "--method", "exact"}).code, 1);
}

TEST_F(Cli, OrderingsTable) {
  for (int i = 0; i < 3; ++i)
    ASSERT_EQ(run("p" + std::to_string(i), "vanilla", {"--paired", "--permutation-run", std::to_string(i)}).code, 0);
  const auto r = cli({"orderings", run_dir("p0"), run_dir("p1"), run_dir("p2")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Mean ± Std"), std::string::npos);
  EXPECT_NE(r.out.find("distinct orders: 3 of 3"), std::string::npos) << r.out;
}

TEST_F(Cli, ConfigFileSuppliesOptions) {
  write_file(dir_ / "run.ini",
             "[run]\nstrategy=lwe\ndataset=" + data_ + "\nout=" + run_dir("cfg") + "\nbatch-size=8\nno-fsync=true\n");
  const auto r = cli({"--config", (dir_ / "run.ini").string(), "run"});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  const auto m = nlohmann::json::parse(read_file(std::filesystem::path(run_dir("cfg")) / "manifest.json"));
  EXPECT_EQ(m["strategy"], "lwe");
  EXPECT_EQ(m["config"]["batch_size"], 8);
}

TEST_F(Cli, HttpProviderKeyComesFromEnvironmentOnly) {
  const auto r = cli({"run", "--strategy", "vanilla", "--dataset", data_, "--out", run_dir("h"), "--api-key", "x"});
  EXPECT_EQ(r.code, 1);
}

}  // namespace
}  // namespace lwe
