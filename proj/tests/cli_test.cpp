#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "fluxcube_cli_test";

struct Run {
  int code = -1;
  std::string err;
};

Run fluxcube(const std::string& args) {
  const fs::path err = kWork / "stderr.txt";
  const std::string cmd = std::string("\"") + FLUXCUBE_CLI_PATH + "\" " + args + " > \"" + (kWork / "stdout.txt").string() +
                          "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(err);
  std::stringstream ss;
  ss << f.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::string p(const char* name) { return "\"" + (kWork / name).string() + "\""; }

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  ~Workspace() { fs::remove_all(kWork); }
};

}  // namespace

TEST_CASE("cli end to end") {
  Workspace ws;

  SUBCASE("synth writes one row per cell and is reproducible") {
    REQUIRE(fluxcube("synth --scenario logistic-solo --steps 120 --seed 3 --out " + p("a.csv")).code == 0);
    CHECK(lines(kWork / "a.csv").size() == 121);
    CHECK(fs::exists(kWork / "a.truth.json"));
    REQUIRE(fluxcube("synth --scenario logistic-solo --steps 120 --seed 3 --out " + p("b.csv")).code == 0);
    CHECK(slurp(kWork / "a.csv") == slurp(kWork / "b.csv"));
    // logistic-solo is noise-free; the seed only matters for noisy scenarios.
    REQUIRE(fluxcube("synth --scenario competition-pair --steps 120 --seed 3 --out " + p("c.csv")).code == 0);
    REQUIRE(fluxcube("synth --scenario competition-pair --steps 120 --seed 4 --out " + p("e.csv")).code == 0);
    CHECK(slurp(kWork / "c.csv") != slurp(kWork / "e.csv"));
    CHECK(fluxcube("synth --scenario nonsense --out " + p("d.csv")).code == 1);
  }

  SUBCASE("malformed input exits 1 and cites the line") {
    std::ofstream(kWork / "bad.csv") << "date,location,keyword,value\n2020-01-05,a,k,1\n2020-01-12,a,k,oops\n";
    const Run r = fluxcube("fit --input " + p("bad.csv") + " --out " + p("m.json"));
    CHECK(r.code == 1);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK_FALSE(fs::exists(kWork / "m.json"));
  }

  SUBCASE("usage errors exit 1") {
    CHECK(fluxcube("").code == 1);
    CHECK(fluxcube("frobnicate").code == 1);
    CHECK(fluxcube("forecast --model " + p("missing.json") + " --horizon 4 --out " + p("f.csv")).code == 1);
  }

  SUBCASE("fit, forecast, evaluate, explain") {
    REQUIRE(fluxcube("synth --scenario seasonal-spike --steps 170 --seed 1 --out " + p("full.csv")).code == 0);
    // Modeling window: the first 120 weeks.
    const auto all = lines(kWork / "full.csv");
    {
      std::ofstream f(kWork / "train.csv");
      for (std::size_t n = 0; n < 1 + 120 * 4; ++n) f << all[n] << "\n";
    }
    std::ofstream(kWork / "config.json") << R"({"max_epochs": 300, "min_epochs": 100, "diffusion_warmup": 50, "hidden_candidates": [4]})";
    REQUIRE(fluxcube("fit --input " + p("train.csv") + " --config " + p("config.json") + " --out " + p("model.json")).code == 0);
    REQUIRE(fs::exists(kWork / "model.json"));

    REQUIRE(fluxcube("forecast --model " + p("model.json") + " --horizon 52 --out " + p("fc.csv")).code == 0);
    const auto fc = lines(kWork / "fc.csv");
    CHECK(fc.size() == 1 + 52 * 4);
    // The first forecast date is one cadence after the last modeling date.
    CHECK(fc[1].substr(0, 10) == all[1 + 120 * 4].substr(0, 10));

    CHECK(fluxcube("forecast --model " + p("model.json") + " --horizon 0 --out " + p("fc0.csv")).code == 1);
    CHECK(fluxcube("forecast --model " + p("model.json") + " --horizon -3 --out " + p("fc0.csv")).code == 1);

    REQUIRE(fluxcube("evaluate --model " + p("model.json") + " --truth " + p("full.csv") + " --horizons 13,26,52,80 --out " +
                     p("metrics.csv"))
                .code == 0);
    const std::string metrics = slurp(kWork / "metrics.csv");
    CHECK(metrics.find("13,fluxcube_rmse,") != std::string::npos);
    CHECK(metrics.find("52,seasonal_naive_mae,") != std::string::npos);
    CHECK(metrics.find("80,fluxcube_rmse,NA") != std::string::npos);
    CHECK(fs::exists(kWork / "metrics.json"));
    CHECK(fluxcube("evaluate --model " + p("model.json") + " --truth " + p("full.csv") + " --horizons 0 --out " +
                   p("m2.csv"))
              .code == 1);

    REQUIRE(fluxcube("explain --model " + p("model.json") + " --out-dir " + p("explained")).code == 0);
    for (const char* f : {"interactions.json", "flows.json", "seasonality.csv", "groups.json"})
      CHECK(fs::exists(kWork / "explained" / f));
  }
}
