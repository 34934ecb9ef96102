#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(FIBERSYS_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("check --scenario trivial --suite system --suite transport").code == 0);
  CHECK(run("check --scenario no-such-scenario").code == 2);
  CHECK(run("check").code == 2);
  CHECK(run("frobnicate --scenario trivial").code == 2);
  CHECK(run("check --scenario trivial --suite nonsense").code == 2);
  CHECK(run("transport --scenario trivial --curve nope").code == 2);
  // An absurdly tight tolerance makes checks fail.
  CHECK(run("check --scenario abelian-area --suite transport --tol-scale 1e-12").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("validation failures exit with 2") {
  const std::string path = "test_cli_broken.json";
  {
    std::ofstream f(path);
    f << R"({"schema": "fibersys/1", "base": {"charts": [{"lo": [0], "hi": [1]}]},
            "fiber": {"kind": "euclidean", "dim": 1},
            "algebra": {"dim": 2, "structure": [0, 0, 0, 1, 0, 0, 0, 0]},
            "action": {"group": "affine", "fields": [{"A": [[0]], "b": [1]}, {"A": [[1]], "b": [0]}]}})";
  }
  CHECK(run("check --scenario " + path).code == 2);
  std::remove(path.c_str());
}

TEST_CASE("reports are deterministic") {
  const Run a = run("check --scenario abelian-area --suite holonomy --suite curvature --seed 7");
  const Run b = run("check --scenario abelian-area --suite holonomy --suite curvature --seed 7");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("runtime_ms") == std::string::npos);
  CHECK(a.out.find("\"seed\": 7") != std::string::npos);
  const Run c = run("check --scenario abelian-area --suite holonomy --output csv");
  CHECK(c.out.rfind("suite,name,status,residual,tolerance,note\n", 0) == 0);
  CHECK(run("check --scenario trivial --suite system --timing").out.find("runtime_ms") != std::string::npos);
}

TEST_CASE("subcommands") {
  const Run hol = run("holonomy --scenario abelian-area");
  CHECK(hol.code == 0);
  CHECK(hol.out.find("\"status\": \"PASS\"") != std::string::npos);

  const Run esc = run("transport --scenario incomplete-interval --curve segment");
  CHECK(esc.code == 0);
  CHECK(esc.out.find("\"escaped\": true") != std::string::npos);

  const std::string trace = "test_cli_trace.csv";
  CHECK(run("transport --scenario so3-sphere --curve arc --route group --trace " + trace).code == 0);
  std::ifstream f(trace);
  std::string header;
  std::getline(f, header);
  CHECK(header.rfind("t,x0,x1,s0,s1,s2", 0) == 0);
  std::remove(trace.c_str());

  CHECK(run("curvature --scenario so3-sphere --x 0.2 0.1").code == 0);
  CHECK(run("curvature --scenario translation-line").code == 2);
  CHECK(run("reconstruct --scenario circle-base-winding --samples 4").code == 0);
  CHECK(run("universal-check --scenario abelian-area --output csv").code == 0);
}

TEST_CASE("FIBERSYS_STEPS sets the default resolution") {
  const Run a = run("transport --scenario abelian-area --curve unit-square");
  const std::string with_env = std::string("FIBERSYS_STEPS=8 ") + FIBERSYS_CLI +
                               " transport --scenario abelian-area --curve unit-square 2>/dev/null";
  FILE* pipe = popen(with_env.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  pclose(pipe);
  CHECK(out.find("\"steps\": 2") != std::string::npos);
  CHECK(a.out.find("\"steps\": 100") != std::string::npos);
  const Run flag = run("transport --scenario abelian-area --curve unit-square --steps 40");
  CHECK(flag.out.find("\"steps\": 10") != std::string::npos);
}
