#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "pbpk/commands.hpp"
#include "pbpk/dataio.hpp"

using namespace pbpk;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"pbpk-ipinn"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pbpk_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

const fs::path& dataset() {
  static const fs::path dir = [] {
    const fs::path d = scratch("data");
    REQUIRE(run_cli({"simulate", "--points", "40", "--out", d.string()}) == 0);
    return d;
  }();
  static const fs::path file = dir / "dataset.csv";
  return file;
}

}  // namespace

TEST_CASE("simulate writes data and manifest reproducibly") {
  const fs::path a = scratch("sim_a");
  const fs::path b = scratch("sim_b");
  REQUIRE(run_cli({"simulate", "--seed", "4", "--out", a.string()}) == 0);
  REQUIRE(run_cli({"simulate", "--seed", "4", "--out", b.string()}) == 0);
  CHECK(read_text(a / "dataset.csv") == read_text(b / "dataset.csv"));
  CHECK(read_text(a / "manifest.json") == read_text(b / "manifest.json"));
  CHECK(read_series(a / "dataset.csv").size() == 200);
  CHECK(read_text(a / "manifest.json").find("\"Vbb\": 0.064952435") != std::string::npos);
}

TEST_CASE("bad flags fail fast with exit code 2") {
  const auto start = std::chrono::steady_clock::now();
  CHECK(run_cli({"simulate", "--points", "1", "--out", scratch("bad").string()}) == 2);
  CHECK(run_cli({"train", "--data", dataset().string(), "--free", "", "--out", scratch("bad").string()}) == 2);
  CHECK(run_cli({"train", "--data", dataset().string(), "--free", "Vnope", "--out", scratch("bad").string()}) == 2);
  CHECK(run_cli({"fit-de", "--data", dataset().string(), "--free", "CLBin", "--out", scratch("bad").string()}) == 2);
  CHECK(run_cli({"train", "--data", dataset().string(), "--activation", "gelu", "--out", scratch("bad").string()}) ==
        2);
  CHECK(run_cli({"fit-de", "--data", dataset().string(), "--mutation", "3", "--out", scratch("bad").string()}) == 2);
  CHECK(run_cli({"compare", "--results", "one.csv", "--out", scratch("bad").string()}) == 2);
  CHECK(run_cli({"simulate", "--unknown-flag", "--out", scratch("bad").string()}) != 0);
  CHECK(run_cli({"metrics", "--data", "/nonexistent/file.csv", "--out", scratch("bad").string()}) == 1);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  CHECK(ms < 800.0);
  CHECK_FALSE(fs::exists(scratch("bad") / "dataset.csv"));
}

TEST_CASE("flag helpers") {
  CHECK(cli::parse_weight_vector("3") == std::array<double, 4>{3, 3, 3, 3});
  CHECK(cli::parse_weight_vector("1,2,3,4") == std::array<double, 4>{1, 2, 3, 4});
  CHECK_THROWS_AS(cli::parse_weight_vector("1,2"), cli::UsageError);
  CHECK(cli::parse_bounds_scale("0.5,2.0") == std::pair<double, double>{0.5, 2.0});
  CHECK_THROWS_AS(cli::parse_bounds_scale("2,1"), cli::UsageError);
  CHECK(cli::parse_free_list("Vbb, fubb").size() == 2);
  CHECK(cli::resolve_jobs(3) == 3);
  setenv("PBPK_IPINN_JOBS", "2", 1);
  CHECK(cli::resolve_jobs(std::nullopt) == 2);
  unsetenv("PBPK_IPINN_JOBS");
  CHECK(cli::resolve_jobs(std::nullopt) == 1);
}

TEST_CASE("train writes the full artifact set reproducibly") {
  const fs::path a = scratch("train_a");
  const fs::path b = scratch("train_b");
  for (const auto& out : {a, b}) {
    REQUIRE(run_cli({"train", "--data", dataset().string(), "--layers", "1", "--neurons", "5", "--iters", "30",
                     "--lbfgs-iters", "3", "--log-stride", "10", "--quiet", "--out", out.string()}) == 0);
  }
  for (const char* f : {"loss_history.csv", "param_trajectory.csv", "prediction.csv", "network.txt",
                        "checkpoint.json", "summary.csv", "fit_Cbb.svg", "fit_Cscsf.svg"}) {
    CHECK(fs::exists(a / f));
  }
  for (const char* f : {"loss_history.csv", "param_trajectory.csv", "prediction.csv", "network.txt",
                        "checkpoint.json"}) {
    CHECK(read_text(a / f) == read_text(b / f));
  }
  CHECK(read_loss_history(a / "loss_history.csv").size() == 5);
  const auto summary = read_estimation(a / "summary.csv");
  CHECK(summary.method == "PINN");
  CHECK(summary.names.size() == 6);
  CHECK(summary.abs_errors.size() == 6);
}

TEST_CASE("metrics on a constant series") {
  const fs::path dir = scratch("metrics");
  ConcentrationSeries s;
  for (int i = 0; i <= 48; ++i) s.push_back(i, {2, 2, 2, 2});
  write_series(s, dir / "flat.csv");
  REQUIRE(run_cli({"metrics", "--data", (dir / "flat.csv").string(), "--out", dir.string()}) == 0);
  const std::string text = read_text(dir / "pk_summary.csv");
  for (const char* name : {"Cbb", "Cbm", "Cccsf", "Cscsf"}) {
    CHECK(text.find(std::string(name) + ",96,2,0,NA") != std::string::npos);
  }
}

TEST_CASE("fit-de and compare produce the comparison table") {
  const fs::path de = scratch("de");
  REQUIRE(run_cli({"fit-de", "--data", dataset().string(), "--generations", "3", "--out", de.string()}) == 0);
  CHECK(fs::exists(de / "de_history.csv"));

  const fs::path pinn = scratch("pinn_summary");
  EstimationResult r;
  r.method = "PINN";
  r.names = {"Vbb", "Vbm", "Vccsf", "Vscsf", "fubb", "lam_ccsf"};
  r.values = {0.065, 1.1, 0.104, 0.026, 0.125, 0.026};
  write_estimation(r, pinn / "summary.csv");

  const fs::path cmp = scratch("compare");
  REQUIRE(run_cli({"compare", "--results", (pinn / "summary.csv").string() + "," + (de / "summary.csv").string(),
                   "--data", dataset().string(), "--out", cmp.string()}) == 0);
  const std::string table = read_text(cmp / "comparison.csv");
  const auto lines = split(table.substr(0, table.size() - 1), '\n');
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "parameter,true_value,PINN,PINN_abs_error,DE,DE_abs_error");
  const auto vbb = split(lines[1], ',');
  REQUIRE(vbb.size() == 6);
  CHECK(vbb[0] == "Vbb");
  CHECK(parse_double(vbb[1]) == doctest::Approx(0.064952435).epsilon(1e-15));
  CHECK(parse_double(vbb[2]) == doctest::Approx(0.065).epsilon(1e-15));
  for (const char* name : {"Cbb", "Cbm", "Cccsf", "Cscsf"}) {
    CHECK(fs::exists(cmp / (std::string("overlay_") + name + ".svg")));
  }
}

TEST_CASE("single-cell sweep") {
  const fs::path dir = scratch("sweep");
  REQUIRE(run_cli({"sweep", "--data", dataset().string(), "--activations", "tanh", "--layers", "1", "--neurons", "4",
                   "--iters", "20", "--out", dir.string()}) == 0);
  const std::string table = read_text(dir / "sweep_loss.csv");
  const auto lines = split(table.substr(0, table.size() - 1), '\n');
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "activation,layers,N=4");
  CHECK(lines[1].rfind("tanh,1,", 0) == 0);
  CHECK(fs::exists(dir / "sweep_time.csv"));
}
