#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "chc/cli.hpp"
#include "chc/fileio.hpp"
#include "chc/pixelio.hpp"
#include "test_util.hpp"

using namespace chc;
using chc::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Value printed after `key ` on its own line.
std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  return "";
}

constexpr const char* kSpec = R"({
  "image_count": 3, "width": 32, "height": 32, "seed": 4,
  "min_shape": 6, "max_shape": 14, "noise_std": 0.01,
  "palette": [[{"cb": 0.25, "cr": 0.0, "p": 0.5}, {"cb": -0.25, "cr": 0.0, "p": 0.5}]]
})";

}  // namespace

TEST_CASE("usage errors exit 1 and write nothing") {
  TempDir dir("cli");
  const std::string out = (dir / "w.chw").string();
  const Run r = run({"train", "--out", out});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("usage error") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(out));
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"train", "--corpus", "x", "--out", out, "--k", "0"}).code == kExitUsage);
  CHECK(run({"encode", "--color", "a", "--weights", "b", "--out", "c", "--budget", "1", "--quality", "2"}).code ==
        kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("runtime failures exit 2 with the error code") {
  TempDir dir("cli");
  const Run r = run({"eval", "--a", (dir / "missing.png").string(), "--b", (dir / "missing.png").string()});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("FileNotFound") != std::string::npos);
  const Run s = run({"sweep", "--corpus", dir.path().string(), "--weights", "w", "--budgets", "1,x", "--out", "o"});
  CHECK(s.code == kExitRuntime);
}

TEST_CASE("eval on identical files") {
  TempDir dir("cli");
  write_image(chc::testing::random_image(40, 40, 3), dir / "a.png");
  const Run r = run({"eval", "--a", (dir / "a.png").string(), "--b", (dir / "a.png").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(field(r.out, "psnr") == "100");
  CHECK(field(r.out, "mse") == "0");
  CHECK(field(r.out, "ms_ssim") == "1");
}

TEST_CASE("full pipeline through the command line") {
  TempDir dir("cli");
  const auto p = [&](const char* name) { return (dir / name).string(); };
  write_file_atomic(dir / "spec.json", std::string(kSpec));

  REQUIRE(run({"gen-corpus", "--spec", p("spec.json"), "--out", p("corpus")}).code == kExitOk);
  const Run t = run({"train", "--corpus", p("corpus"), "--out", p("w.chw"), "--k", "2", "--epochs", "2",
                     "--trunk-channels", "6", "--branch-hidden", "4", "--predictor-hidden", "6", "--seed", "7",
                     "--log", p("log.csv")});
  REQUIRE(t.code == kExitOk);
  CHECK(field(t.out, "seed") == "7");
  CHECK(read_file(dir / "log.csv").size() > 0);
  REQUIRE(run({"train-predictor", "--corpus", p("corpus"), "--weights", p("w.chw"), "--out", p("w2.chw"),
               "--epochs", "1"})
              .code == kExitOk);

  const std::string color = p("corpus/img_00000.png");
  const Run e = run({"encode", "--color", color, "--weights", p("w2.chw"), "--out", p("a.chc"), "--gray-out",
                     p("g.png")});
  REQUIRE(e.code == kExitOk);
  CHECK(std::stoul(field(e.out, "bytes")) == read_file(dir / "a.chc").size());
  const Run d = run({"decode", "--chc", p("a.chc"), "--gray", p("g.png"), "--weights", p("w2.chw"), "--out",
                     p("out.png"), "--color", color});
  REQUIRE(d.code == kExitOk);
  CHECK(field(d.out, "psnr") == field(e.out, "psnr"));

  const Run small = run({"encode", "--color", color, "--weights", p("w2.chw"), "--out", p("b.chc"), "--budget", "70"});
  if (small.code == kExitOk) CHECK(read_file(dir / "b.chc").size() <= 70);
  else CHECK(small.err.find("NoFeasibleCandidate") != std::string::npos);

  const Run q = run({"encode", "--color", color, "--weights", p("w2.chw"), "--out", p("q.chc"), "--quality", "10"});
  REQUIRE(q.code == kExitOk);
  CHECK(std::stod(field(q.out, "psnr")) >= 10);

  CHECK(run({"colorize", "--gray", p("g.png"), "--weights", p("w2.chw"), "--out", p("z.png")}).code == kExitOk);
  CHECK(read_image(dir / "z.png").width == 32);

  const Run s = run({"sweep", "--corpus", p("corpus"), "--weights", p("w2.chw"), "--budgets", "0,100,100000",
                     "--out", p("rd.csv")});
  REQUIRE(s.code == kExitOk);
  const auto csv = read_file(dir / "rd.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 3 * 3 + 3);
}

TEST_CASE("installed binary reports exit codes") {
  const std::string bin = CHC_CLI_PATH;
  CHECK(WEXITSTATUS(std::system((bin + " > /dev/null 2>&1").c_str())) == kExitUsage);
  CHECK(WEXITSTATUS(std::system((bin + " eval --a /nonexistent.png --b /nonexistent.png 2> /dev/null").c_str())) ==
        kExitRuntime);
  CHECK(WEXITSTATUS(std::system((bin + " --help > /dev/null").c_str())) == kExitOk);
}
