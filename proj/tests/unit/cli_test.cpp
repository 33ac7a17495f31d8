#include <cmath>
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("specgrasp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" SPECGRASP_CLI "' " + args + " 2>'" + err.string() + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, read(err)};
  }

  std::string read(const fs::path& p) const {
    std::ifstream in(p.is_absolute() ? p : dir_ / p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    fs::create_directories((dir_ / name).parent_path());
    std::ofstream(dir_ / name) << text;
  }

  void spectrum(const std::string& name, std::initializer_list<double> values) const {
    std::string text = "wavelength_nm,value\n";
    double nm = 400;
    for (double v : values) {
      text += std::to_string(nm) + "," + std::to_string(v) + "\n";
      nm += 10;
    }
    write(name, text);
  }

  std::vector<double> values(const std::string& csv) const {
    std::istringstream in(read(csv));
    std::string line;
    std::getline(in, line);
    std::vector<double> v;
    while (std::getline(in, line)) v.push_back(std::stod(line.substr(line.find(',') + 1)));
    return v;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, Version) {
  const auto r = run("--version");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["format"], "specgrasp/1");
  EXPECT_EQ(j["version"], "1.0.0");
}

TEST_F(Cli, CalibrateIdentities) {
  spectrum("dark.csv", {100, 100, 120});
  spectrum("white.csv", {1100, 2100, 3120});
  ASSERT_EQ(run("calibrate --raw white.csv --white white.csv --dark dark.csv -o one.csv").code, 0);
  for (double v : values("one.csv")) EXPECT_EQ(v, 1.0);
  ASSERT_EQ(run("calibrate --raw dark.csv --white white.csv --dark dark.csv -o zero.csv").code, 0);
  for (double v : values("zero.csv")) EXPECT_EQ(v, 0.0);
  EXPECT_NE(read("one.json").find("\"calibrated\""), std::string::npos);
  // a sidecar that contradicts the flag's role is rejected
  write("dark.json", R"({"kind": "raw"})");
  EXPECT_EQ(run("calibrate --raw white.csv --white white.csv --dark dark.csv -o x.csv").code, 2);
}

TEST_F(Cli, CalibrateBatchKeepsOrder) {
  spectrum("dark.csv", {0, 0, 0});
  spectrum("white.csv", {100, 100, 100});
  spectrum("in/c.csv", {30, 30, 30});
  spectrum("in/a.csv", {10, 10, 10});
  spectrum("in/b.csv", {20, 20, 20});
  const auto r = run("calibrate --raw in/c.csv --raw in/a.csv --raw in/b.csv --white white.csv --dark dark.csv -o out");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> printed;
  while (std::getline(lines, line)) printed.push_back(fs::path(line).filename().string());
  EXPECT_EQ(printed, (std::vector<std::string>{"c.csv", "a.csv", "b.csv"}));
  EXPECT_DOUBLE_EQ(values("out/c.csv")[0], 0.3);
  EXPECT_DOUBLE_EQ(values("out/a.csv")[0], 0.1);
  EXPECT_DOUBLE_EQ(values("out/b.csv")[0], 0.2);
}

TEST_F(Cli, SamReport) {
  spectrum("r.csv", {1, 0, 1});
  spectrum("c.csv", {1, 1, 1});
  const auto r = run("sam --reference r.csv --current c.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["sam_deg"].get<double>(), 35.2643897, 1e-6);
  EXPECT_TRUE(j["separable"].get<bool>());
  EXPECT_FALSE(json::parse(run("sam --reference r.csv --current c.csv --threshold 40").out)["separable"].get<bool>());
}

TEST_F(Cli, ExitCodes) {
  spectrum("z.csv", {0, 0, 0});
  spectrum("c.csv", {1, 1, 1});
  write("bad.csv", "wavelength_nm,value\n400,1\n410,x\n");
  EXPECT_EQ(run("sam --reference z.csv --current c.csv").code, 4);
  EXPECT_EQ(run("sam --reference missing.csv --current c.csv").code, 3);
  const auto bad = run("sam --reference bad.csv --current c.csv");
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.err.find("bad.csv:3"), std::string::npos) << bad.err;
  EXPECT_EQ(run("simulate --preset single").code, 2);
  EXPECT_EQ(run("simulate --preset nope --seed 1 -o x").code, 2);
  EXPECT_EQ(run("optics --n-core 1.4 --n-clad 1.5").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("--config missing.json optics").code, 3);
}

TEST_F(Cli, SamMatrixOfIdenticalInputs) {
  spectrum("t1/final.csv", {0.2, 0.4, 0.6});
  spectrum("t2/final.csv", {0.2, 0.4, 0.6});
  for (const char* t : {"t1", "t2"})
    write(std::string(t) + "/trial.json",
          std::string(R"({"object_id": ")") + t + R"(", "class": "Wood", "stages": {}, "final": "final.csv"})");
  write("dataset.json", R"({"trials": ["t1/trial.json", "t2/trial.json"]})");
  const auto r = run("sam-matrix --dataset dataset.json -o m.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(read("m.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
    ++rows;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    while (std::getline(cells, cell, ',')) EXPECT_EQ(std::stod(cell), 0.0) << line;
  }
  EXPECT_EQ(rows, 2);
}

TEST_F(Cli, SimulatePipelineIsDeterministic) {
  ASSERT_EQ(run("simulate --preset fruit --seed 5 --workers 1 -o a").code, 0);
  ASSERT_EQ(run("simulate --preset fruit --seed 5 --workers 4 -o b").code, 0);
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "a"))
    if (e.is_regular_file()) EXPECT_EQ(read(e.path()), read(dir_ / "b" / fs::relative(e.path(), dir_ / "a")));
  ASSERT_EQ(run("lda --dataset a/dataset.json -o a.json").code, 0);
  ASSERT_EQ(run("lda --dataset b/dataset.json -o b.json").code, 0);
  EXPECT_EQ(read("a.json"), read("b.json"));
  const auto top = json::parse(read("a.json"))["top_k"];
  EXPECT_EQ(top.size(), 10u);
}

TEST_F(Cli, SimulateUsesEnvironmentDefault) {
  const auto r = run("simulate --preset single --seed 2 > /dev/null; SPECGRASP_OUT=envout '" SPECGRASP_CLI
                     "' simulate --preset single --seed 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "envout" / "dataset.json"));
  EXPECT_TRUE(fs::exists(dir_ / "specgrasp-out" / "dataset.json"));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  ASSERT_EQ(run("simulate --preset fruit --seed 3 -o ds").code, 0);
  write("cfg.json", R"({"lda": {"dataset": "ds/dataset.json", "top": 3}})");
  const auto from_config = run("--config cfg.json lda");
  ASSERT_EQ(from_config.code, 0) << from_config.err;
  EXPECT_EQ(json::parse(from_config.out)["top_k"].size(), 3u);
  const auto flag_wins = run("--config cfg.json lda -k 5");
  ASSERT_EQ(flag_wins.code, 0) << flag_wins.err;
  EXPECT_EQ(json::parse(flag_wins.out)["top_k"].size(), 5u);
}

TEST_F(Cli, CurvatureFitAndPredict) {
  std::string markers = "t,tip_x,tip_y,mid_x,mid_y,base_x,base_y\n";
  std::string intensity = "t,intensity\n";
  for (int i = 0; i <= 10; ++i) {
    const double r = 20.0 + 10.0 * i;  // radius in mm
    const double k = 1.0 / r;
    const double a = 0.5;  // half-angle of the arc
    char row[256];
    std::snprintf(row, sizeof row, "%d,%.12f,%.12f,0,%.12f,%.12f,%.12f\n", i, r * std::sin(a), r * std::cos(a), r,
                  -r * std::sin(a), r * std::cos(a));
    markers += row;
    std::snprintf(row, sizeof row, "%d,%.12f\n", i, 1000.0 * (0.06 - k) / 0.05);
    intensity += row;
  }
  write("markers.csv", markers);
  write("intensity.csv", intensity);
  const auto fit = run("curvature fit --markers markers.csv --intensity intensity.csv --i0 1000 -o model.json");
  ASSERT_EQ(fit.code, 0) << fit.err;
  const auto model = json::parse(read("model.json"));
  EXPECT_NEAR(model["r_squared"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(model["slope"].get<double>(), -0.05, 1e-7);
  const auto pred = run("curvature predict --model model.json --intensity intensity.csv");
  ASSERT_EQ(pred.code, 0) << pred.err;
  EXPECT_NE(pred.out.find("\nt,ratio,kappa,extrapolated\n"), std::string::npos) << pred.out;
}

TEST_F(Cli, CollinearMarkersGiveZeroCurvature) {
  write("markers.csv", "t,tip_x,tip_y,mid_x,mid_y,base_x,base_y\n0,0,0,5,0,10,0\n1,0,10,5,5,10,0\n2,0,0,3,4,8,0\n");
  write("intensity.csv", "t,intensity\n0,1000\n1,900\n2,850\n");
  const auto r = run("curvature fit --markers markers.csv --intensity intensity.csv -o model.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto model = json::parse(read("model.json"));
  EXPECT_EQ(model["domain"][1].get<double>(), 1.0);
  EXPECT_LT(model["slope"].get<double>(), 0.0);
}

TEST_F(Cli, OpticsFatigueAndLoss) {
  const auto optics = json::parse(run("optics").out);
  EXPECT_NEAR(optics["numerical_aperture"].get<double>(), 0.5385, 5e-4);
  EXPECT_NEAR(optics["critical_angle_deg"].get<double>(), 68.96, 0.05);

  spectrum("before.csv", {100, 100, 100});
  spectrum("after.csv", {90, 90, 90});
  const auto fat = run("fatigue --before before.csv --after after.csv --band-lo 400 --band-hi 420");
  ASSERT_EQ(fat.code, 0) << fat.err;
  EXPECT_NEAR(json::parse(fat.out)["min_retention"].get<double>(), 0.9, 1e-12);

  spectrum("l4.csv", {1000, 1000, 1000});
  spectrum("l6.csv", {100, 100, 100});
  spectrum("l8.csv", {10, 10, 10});
  const auto loss = run("loss --transmission 4=l4.csv --transmission 6=l6.csv --transmission 8=l8.csv");
  ASSERT_EQ(loss.code, 0) << loss.err;
  EXPECT_NEAR(json::parse(loss.out)["fits"][0]["slope_db_per_cm"].get<double>(), 5.0, 1e-9);
  EXPECT_EQ(run("loss --transmission 4=l4.csv --transmission 6=l6.csv").code, 2);
}

TEST_F(Cli, PregraspDegenerateTrials) {
  spectrum("t/s.csv", {0.1, 0.5, 0.9});
  write("t/trial.json", R"({"object_id": "x", "class": "Foam",
    "stages": {"0": "s.csv", "0.25": "s.csv", "0.5": "s.csv", "0.75": "s.csv", "0.9": "s.csv"}, "final": "s.csv"})");
  const auto r = run("pregrasp --dataset t/trial.json");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("mean_sam_deg", 0) == 0 || line.rfind("std_sam_deg", 0) == 0)
      EXPECT_EQ(line.substr(line.find(',')), ",0,0,0,0,0") << line;
}
