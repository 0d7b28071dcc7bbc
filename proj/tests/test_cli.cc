#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.h"
#include "doctest.h"
#include "surplus/dataset.h"
#include "surplus/importance.h"

namespace fs = std::filesystem;
using namespace surplus;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "surplus");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("surplus_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) +
            "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

json strip_time(json j) {
  if (j.contains("report")) j["report"].erase("wall_time_s");
  j.erase("wall_time_s");
  return j;
}

const std::vector<std::string> kFast = {"--rounds", "20", "--depth", "2", "--k", "8"};

std::vector<std::string> with_fast(std::vector<std::string> args) {
  args.insert(args.end(), kFast.begin(), kFast.end());
  return args;
}

}  // namespace

TEST_CASE("analyze is deterministic apart from wall time") {
  TempDir dir;
  const auto a = invoke(with_fast({"analyze", "--dataset", "DS2", "--n", "200",
                                   "--seed", "4", "--out", dir / "a.json"}));
  REQUIRE(a.code == 0);
  const auto b = invoke(with_fast({"analyze", "--dataset", "DS2", "--n", "200",
                                   "--seed", "4", "--jobs", "3", "--out", dir / "b.json"}));
  REQUIRE(b.code == 0);
  json ja = read_json(dir / "a.json"), jb = read_json(dir / "b.json");
  CHECK(ja["phi"] == jb["phi"]);
  ja.erase("manifest");
  jb.erase("manifest");
  CHECK(strip_time(ja) == strip_time(jb));
  CHECK(ja["method"] == "SMSSM");
  CHECK(ja["feature_names"].size() == 5);
  CHECK(a.out.find("X1\t") != std::string::npos);

  const json man = read_json(dir / "a.json.manifest.json");
  CHECK(man["seed"] == 4);
  CHECK(man["dataset"]["id"] == "DS2");
  CHECK(man["method"]["k"] == 8);
  CHECK(read_json(dir / "a.json")["manifest"] == man);
}

TEST_CASE("seed comes from the environment when not given") {
  TempDir dir;
  ::setenv("SURPLUS_SEED", "17", 1);
  const auto r = invoke(with_fast({"analyze", "--dataset", "DS3", "--n", "100",
                                   "--method", "gain", "--out", dir / "r.json"}));
  ::unsetenv("SURPLUS_SEED");
  REQUIRE(r.code == 0);
  CHECK(read_json(dir / "r.json.manifest.json")["seed"] == 17);
}

TEST_CASE("simulate then analyze matches the in-memory pipeline") {
  TempDir dir;
  const auto s = invoke({"simulate", "--dataset", "DS5", "--n", "150", "--seed", "2",
                         "--out", dir / "ds5.csv"});
  REQUIRE(s.code == 0);
  const Dataset mem = generate({DgpId::kDS5, 150, 2});
  const Dataset disk = load_csv(dir / "ds5.csv", "y");
  CHECK(disk.x() == mem.x());
  CHECK(disk.y() == mem.y());
  CHECK(disk.feature_names() == mem.feature_names());

  const auto a = invoke(with_fast({"analyze", "--csv", dir / "ds5.csv", "--seed", "2",
                                   "--out", dir / "r.json"}));
  REQUIRE(a.code == 0);
  MethodConfig cfg;
  cfg.learner = LearnerSpec::boosted({20, 2, 0.1});
  cfg.k = 8;
  cfg.seed = 2;
  const ImportanceReport expected = run_method(disk, cfg);
  CHECK(read_json(dir / "r.json")["phi"].get<std::vector<double>>() == expected.phi);
}

TEST_CASE("every method runs through the CLI") {
  TempDir dir;
  for (const char* m : {"smssm", "loco", "mcr", "cr", "gain"}) {
    const auto r = invoke(with_fast({"analyze", "--dataset", "DS3", "--n", "120",
                                     "--method", m, "--repeats", "2", "--k-models", "2",
                                     "--n-perms", "2", "--out", dir / "m.json"}));
    CHECK_MESSAGE(r.code == 0, m, " ", r.err);
  }
  const auto ols = invoke({"analyze", "--dataset", "DS3", "--n", "120", "--method", "loco",
                           "--learner", "ols", "--repeats", "3", "--out", dir / "o.json"});
  REQUIRE(ols.code == 0);
  const json j = read_json(dir / "o.json");
  CHECK(j["diagnostics"]["ci_low"].size() == 3);
  CHECK(j["manifest"]["method"]["learner"]["kind"] == "ols");
}

TEST_CASE("evaluate and consistency artifacts") {
  TempDir dir;
  const auto e = invoke(with_fast({"evaluate", "--dataset", "DS1", "--n", "200",
                                   "--truth-n", "1000", "--out", dir / "e.json"}));
  REQUIRE(e.code == 0);
  const json ej = read_json(dir / "e.json");
  CHECK(ej["primary_metric"] == "angle");
  CHECK(ej["ground_truth"]["weights"].size() == 3);
  CHECK(ej["angle"].get<double>() >= 0.0);

  const auto c = invoke(with_fast({"consistency", "--dataset", "DS2", "--n", "200",
                                   "--trials", "2", "--out", dir / "c.json"}));
  REQUIRE(c.code == 0);
  const json cj = read_json(dir / "c.json");
  CHECK(cj["trial_angles"].size() == 2);
  CHECK(cj["skipped"].empty());
}

TEST_CASE("compare fills every cell") {
  TempDir dir;
  const auto r = invoke(with_fast({"compare", "--datasets", "DS2,DS5", "--methods",
                                   "smssm,gain,cr", "--n", "150", "--seeds", "2",
                                   "--truth-n", "800", "--out", dir / "t.json"}));
  REQUIRE(r.code == 0);
  const json j = read_json(dir / "t.json");
  const auto& cells = j["table"]["cells"];
  REQUIRE(cells.size() == 3);
  for (const auto& row : cells) CHECK(row.size() == 2);
  CHECK(j["rank_summary"].size() == 3);
  CHECK(j["scores"][0][0].size() == 2);
  CHECK(j["manifest"]["datasets"] == json::array({"DS2", "DS5"}));
  CHECK(r.out.find("Gain") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir;
  auto config_error = [](const Result& r) {
    CHECK(r.code == 2);
    const json j = json::parse(r.err);
    CHECK(j["exit_code"] == 2);
    CHECK(j["error"]["message"].get<std::string>().size() > 0);
  };
  config_error(invoke({"analyze", "--dataset", "DS1", "--out", dir / "x.json",
                       "--method", "shap"}));
  config_error(invoke({"analyze", "--dataset", "DS9", "--out", dir / "x.json"}));
  config_error(invoke({"analyze", "--out", dir / "x.json"}));
  config_error(invoke({"analyze", "--dataset", "DS1", "--csv", "a.csv", "--out",
                       dir / "x.json"}));
  config_error(invoke({"analyze", "--dataset", "DS1"}));
  config_error(invoke({"analyze", "--dataset", "DS1", "--jobs", "0", "--out",
                       dir / "x.json"}));
  config_error(invoke({"analyze", "--dataset", "DS1", "--folds", "1", "--out",
                       dir / "x.json"}));
  config_error(invoke({"analyze", "--dataset", "DS1", "--bogus", "--out", dir / "x.json"}));
  config_error(invoke({"analyze", "--dataset", "DS1", "--learner", "svm", "--out",
                       dir / "x.json"}));
  config_error(invoke({"frobnicate"}));
  config_error(invoke({"analyze", "--dataset", "DS1", "--k", "1", "--out", dir / "x.json"}));

  // Bad input data is a configuration problem too.
  {
    std::ofstream f(dir / "bad.csv");
    f << "a,y\n1,2\nx,3\n";
  }
  config_error(invoke({"analyze", "--csv", dir / "bad.csv", "--out", dir / "x.json"}));
  config_error(invoke({"analyze", "--csv", dir / "missing.csv", "--out", dir / "x.json"}));

  const auto runtime = invoke({"analyze", "--dataset", "DS1", "--n", "60", "--external-cmd",
                               "exit 3", "--k", "4", "--out", dir / "x.json"});
  CHECK(runtime.code == 1);
  CHECK(json::parse(runtime.err)["exit_code"] == 1);

  const auto help = invoke({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("analyze") != std::string::npos);
  CHECK(invoke({"analyze", "--help"}).code == 0);
}
