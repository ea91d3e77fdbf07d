#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// Runs the built CLI with stdout+stderr captured.
RunResult run_cli(const std::string& args) {
  const fs::path out_file = fs::temp_directory_path() / "clickgate_cli_out.txt";
  const std::string command = std::string(CLICKGATE_CLI_PATH) + " " + args + " > " +
                              out_file.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(raw);
  std::ifstream in(out_file);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("clickgate_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("evaluate --bogus").exit_code == 2);
  CHECK(run_cli("report").exit_code == 2);  // missing required --episodes
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("runtime failures exit with code 1") {
  const RunResult missing = run_cli("stats --dataset /does/not/exist.jsonl");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("IoError") != std::string::npos);
}

TEST_CASE("generate then stats conserves the sample count") {
  TempDir dir;
  CHECK(run_cli("generate --n 100 --fraction 0.3 --seed 11 --out " +
                dir.file("data.jsonl"))
            .exit_code == 0);
  const RunResult stats = run_cli("stats --dataset " + dir.file("data.jsonl"));
  CHECK(stats.exit_code == 0);
  CHECK(stats.output.find("\"normal_count\": 70") != std::string::npos);
  CHECK(stats.output.find("\"deception_count\": 30") != std::string::npos);
}

TEST_CASE("artifacts are byte-identical across reruns") {
  TempDir dir;
  const std::string base = "generate --n 40 --fraction 0.5 --seed 9 --out ";
  REQUIRE(run_cli(base + dir.file("a.jsonl")).exit_code == 0);
  REQUIRE(run_cli(base + dir.file("b.jsonl")).exit_code == 0);
  CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));

  const std::string split_args = " split --dataset " + dir.file("a.jsonl") +
                                 " --ratios 0.7,0.15 --seed 42 --out ";
  REQUIRE(run_cli(split_args + dir.file("s1.json")).exit_code == 0);
  REQUIRE(run_cli(split_args + dir.file("s2.json")).exit_code == 0);
  CHECK(slurp(dir.file("s1.json")) == slurp(dir.file("s2.json")));
}

TEST_CASE("reward-audit writes one priced row per judgment") {
  TempDir dir;
  REQUIRE(run_cli("generate --n 10 --fraction 0.5 --seed 3 --out " +
                  dir.file("data.jsonl"))
              .exit_code == 0);
  const RunResult audit =
      run_cli("reward-audit --dataset " + dir.file("data.jsonl") +
              " --clicks-per-sample 1 --seed 4 --out " + dir.file("audit.jsonl"));
  CHECK(audit.exit_code == 0);
  // 10 benign + 5 deceptive + 10 null clicks.
  const std::string log = slurp(dir.file("audit.jsonl"));
  std::size_t lines = 0;
  for (char c : log) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 25);
  // A perfect oracle means every row is Correct with reward = gamma > 0.
  CHECK(log.find("\"category\":\"Correct\"") != std::string::npos);
  for (const char* category : {"\"C1\"", "\"C2\"", "\"C3\"", "\"C4\""}) {
    CHECK(log.find(category) == std::string::npos);
  }
}

TEST_CASE("gate on/off flips the deception failure rate") {
  TempDir dir;
  REQUIRE(run_cli("generate --n 30 --fraction 1.0 --seed 21 --out " +
                  dir.file("deception.jsonl"))
              .exit_code == 0);

  const std::string common = "evaluate --dataset " + dir.file("deception.jsonl") +
                             " --agent.policy trap_first --seed 2 --out-episodes " +
                             dir.file("eps.jsonl") + " --out-metrics " +
                             dir.file("metrics.csv");
  const RunResult off = run_cli(common + " --gate off");
  CHECK(off.exit_code == 0);
  CHECK(slurp(dir.file("metrics.csv")).find("Overall,30,0,100,0,10") !=
        std::string::npos);

  const RunResult on = run_cli(common + " --gate on");
  CHECK(on.exit_code == 0);
  CHECK(slurp(dir.file("metrics.csv")).find("Overall,30,100,0,0,2") !=
        std::string::npos);

  // Re-running with identical config and seed reproduces the artifacts.
  const std::string episodes_before = slurp(dir.file("eps.jsonl"));
  REQUIRE(run_cli(common + " --gate on").exit_code == 0);
  CHECK(slurp(dir.file("eps.jsonl")) == episodes_before);
}

TEST_CASE("duplicate sample ids are rejected") {
  TempDir dir;
  REQUIRE(run_cli("generate --n 2 --fraction 0.0 --seed 1 --out " +
                  dir.file("data.jsonl"))
              .exit_code == 0);
  std::ofstream append(dir.file("data.jsonl"), std::ios::app);
  std::ifstream in(dir.file("data.jsonl"));
  std::string first_line;
  std::getline(in, first_line);
  append << first_line << "\n";
  append.close();
  const RunResult stats = run_cli("stats --dataset " + dir.file("data.jsonl"));
  CHECK(stats.exit_code == 1);
  CHECK(stats.output.find("duplicate sample id") != std::string::npos);
}

TEST_CASE("summarize emits a context and an iteration log") {
  TempDir dir;
  REQUIRE(run_cli("generate --n 12 --fraction 0.5 --seed 5 --out " +
                  dir.file("data.jsonl"))
              .exit_code == 0);
  const RunResult summ = run_cli(
      "summarize --dataset " + dir.file("data.jsonl") +
      " --seed 5 --evaluator.error-benign 0.5 --out-context " + dir.file("ctx.txt") +
      " --out-reports " + dir.file("iters.jsonl"));
  CHECK(summ.exit_code == 0);
  CHECK(slurp(dir.file("ctx.txt")).find("# iteration:") == 0);
  CHECK(fs::exists(dir.file("iters.jsonl")));
}

TEST_CASE("report re-aggregates an episode log") {
  TempDir dir;
  REQUIRE(run_cli("generate --n 10 --fraction 0.0 --seed 6 --out " +
                  dir.file("data.jsonl"))
              .exit_code == 0);
  REQUIRE(run_cli("evaluate --dataset " + dir.file("data.jsonl") +
                  " --agent.policy correct_first --seed 2 --out-episodes " +
                  dir.file("eps.jsonl") + " --out-metrics " + dir.file("m.csv"))
              .exit_code == 0);
  const RunResult report =
      run_cli("report --episodes " + dir.file("eps.jsonl") + " --format csv");
  CHECK(report.exit_code == 0);
  CHECK(report.output.find("Overall,10,100,0,0,1") != std::string::npos);
  CHECK(report.output == slurp(dir.file("m.csv")));
}

TEST_CASE("config file values are read and flags still win") {
  TempDir dir;
  {
    std::ofstream config(dir.file("clickgate.ini"));
    config << "seed=123\n";
    config << "dataset=" << dir.file("data.jsonl") << "\n";
    config << "[agent]\nkind=scripted\npolicy=trap_first\n";
    config << "[harness]\nt-max=3\n";
  }
  REQUIRE(run_cli("generate --n 8 --fraction 0.5 --seed 123 --out " +
                  dir.file("data.jsonl"))
              .exit_code == 0);
  const RunResult from_config =
      run_cli("evaluate --config " + dir.file("clickgate.ini") + " --out-episodes " +
              dir.file("e1.jsonl") + " --out-metrics " + dir.file("m1.csv"));
  CHECK(from_config.exit_code == 0);
  // Flag overrides the config's trap_first; runs still succeed.
  const RunResult overridden =
      run_cli("evaluate --config " + dir.file("clickgate.ini") +
              " --agent.policy correct_first --out-episodes " + dir.file("e2.jsonl") +
              " --out-metrics " + dir.file("m2.csv"));
  CHECK(overridden.exit_code == 0);
  // trap_first costs an extra step on deception pages; correct_first does not.
  CHECK(slurp(dir.file("m1.csv")) != slurp(dir.file("m2.csv")));
}
