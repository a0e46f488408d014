#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "lsa/cli/commands.hpp"
#include "lsa/util/keyvalue.hpp"

namespace fs = std::filesystem;
using namespace lsa;

namespace {

const std::string kFixtures = LSA_FIXTURE_DIR;

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / ("lsa_test_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lsa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST_CASE("exit codes") {
  Scratch s;
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"no-such-command"}).code == cli::kUsage);
  CHECK(run({"analyze-clusters", s / "missing.json", "--out", s / "a"}).code == cli::kDataFailure);
  write_file(s / "bad.json", "{\"version\": 1, \"examples\": [");
  const auto bad = run({"analyze-clusters", s / "bad.json", "--out", s / "a"});
  CHECK(bad.code == cli::kDataFailure);
  CHECK(bad.err.find("bad.json") != std::string::npos);
  CHECK(run({"train", "--train", kFixtures + "/mini_corpus.json", "--la-only", "--ra-only", "--out", s / "t"}).code ==
        cli::kUsage);
  CHECK(run({"train", "--train", kFixtures + "/mini_corpus.json", "--epochs", "many", "--out", s / "t"}).code ==
        cli::kUsage);
}

TEST_CASE("analyze-clusters reproduces the fixture table") {
  Scratch s;
  const auto r = run({"analyze-clusters", kFixtures + "/mini_corpus.json", "--out", s / "c"});
  REQUIRE(r.code == 0);
  CHECK(slurp(s / "c/clusters.csv") == slurp(kFixtures + "/mini_clusters.csv"));
  CHECK(fs::exists(s / "c/manifest.json"));

  write_file(s / "empty.json", "{\"version\": 1, \"examples\": []}");
  REQUIRE(run({"analyze-clusters", s / "empty.json", "--out", s / "e"}).code == 0);
  CHECK(slurp(s / "e/clusters.csv") == "size,count\n1,0\n2,0\n3,0\n4,0\n>=5,0\n");
}

TEST_CASE("train, eval, export and replay") {
  Scratch s;
  write_file(s / "spec.txt", "examples = 60\nimplicit_fraction = 0.3\n");
  REQUIRE(run({"synth", "--spec", s / "spec.txt", "--seed", "4", "--out", s / "syn"}).code == 0);
  write_file(s / "run.txt", "d_model = 8\nlayers = 1\nheads = 2\nepochs = 2\nmax_len = 40\n");
  const std::vector<std::string> train_args = {"train", "--config", s / "run.txt", "--train", s / "syn/dataset.json",
                                               "--test", s / "syn/dataset.json"};
  auto a = train_args, b = train_args;
  a.insert(a.end(), {"--out", s / "a"});
  b.insert(b.end(), {"--out", s / "b"});
  REQUIRE(run(a).code == 0);
  REQUIRE(run(b).code == 0);
  for (const char* f : {"model.ckpt", "metrics.csv", "eta_trajectory.csv"}) {
    CHECK(slurp(s / "a" + "/" + f) == slurp(s / "b" + "/" + f));
  }
  CHECK(slurp(s / "a/eta_trajectory.csv").rfind("step,eta_l,eta_r\n0,1.0,1.0\n", 0) == 0);

  REQUIRE(run({"replay", s / "a/manifest.json", "--out", s / "r"}).code == 0);
  CHECK(slurp(s / "r/model.ckpt") == slurp(s / "a/model.ckpt"));
  CHECK(slurp(s / "r/metrics.csv") == slurp(s / "a/metrics.csv"));

  REQUIRE(run({"export-trajectory", "--checkpoint", s / "a/model.ckpt", "--out", s / "x"}).code == 0);
  CHECK(slurp(s / "x/eta_trajectory.csv") == slurp(s / "a/eta_trajectory.csv"));

  REQUIRE(run({"eval", "--checkpoint", s / "a/model.ckpt", "--dataset", s / "syn/dataset.json", "--slice",
               "implicit", "--out", s / "ev"})
              .code == 0);
  CHECK(slurp(s / "ev/eval.csv").rfind("slice,n,acc,macro_f1\nimplicit,", 0) == 0);

  write_file(s / "explicit.txt", "examples = 10\n");
  REQUIRE(run({"synth", "--spec", s / "explicit.txt", "--out", s / "syn2"}).code == 0);
  CHECK(run({"eval", "--checkpoint", s / "a/model.ckpt", "--dataset", s / "syn2/dataset.json", "--slice",
             "implicit", "--out", s / "ev2"})
            .code == cli::kDataFailure);
}

TEST_CASE("sweep-eta writes one row per grid point") {
  Scratch s;
  write_file(s / "spec.txt", "examples = 30\n");
  REQUIRE(run({"synth", "--spec", s / "spec.txt", "--out", s / "syn"}).code == 0);
  const auto r = run({"sweep-eta", "--train", s / "syn/dataset.json", "--d_model", "8", "--layers", "1", "--heads",
                      "2", "--epochs", "1", "--grid", "0:1:0.5", "--out", s / "sw"});
  REQUIRE(r.code == 0);
  const auto csv = slurp(s / "sw/eta_sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(run({"sweep-eta", "--train", s / "syn/dataset.json", "--grid", "1:0:0.5", "--out", s / "sw2"}).code ==
        cli::kUsage);
}

TEST_CASE("manifest is byte-stable") {
  const nlohmann::json inputs = {{"dataset", "/x/y.json"}};
  const auto text = cli::manifest_text("analyze-clusters", inputs);
  auto parsed = nlohmann::json::parse(text);
  CHECK(parsed.dump(2) == text.substr(0, text.find_last_not_of('\n') + 1));
  CHECK(parsed["code_version"] == cli::kCodeVersion);
}

TEST_CASE("output directory resolution") {
  ::setenv(cli::kOutputRootEnv, "/tmp/root", 1);
  CHECK(cli::resolve_output("train", "") == fs::path("/tmp/root/train"));
  CHECK(cli::resolve_output("train", "mine") == fs::path("/tmp/root/mine"));
  CHECK(cli::resolve_output("train", "/abs") == fs::path("/abs"));
  ::unsetenv(cli::kOutputRootEnv);
  CHECK(cli::resolve_output("eval", "") == fs::path("lsa_runs/eval"));
}

TEST_CASE("installed binary") {
  const char* exe = std::getenv("LSA_CLI");
  if (!exe) return;
  Scratch s;
  const auto cmd = std::string(exe) + " analyze-clusters " + kFixtures + "/mini_corpus.json --out " + (s / "c") +
                   " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(slurp(s / "c/clusters.csv") == slurp(kFixtures + "/mini_clusters.csv"));
  CHECK(WEXITSTATUS(std::system((std::string(exe) + " 2> /dev/null").c_str())) == cli::kUsage);
}
