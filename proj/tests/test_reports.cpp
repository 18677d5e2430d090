#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aniso/runner.hpp"

using namespace aniso;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("aniso_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json osc_config_json() {
  return Json{
      {"matrix", {{1, 0}, {0, 1}}},
      {"sweep",
       {{"mode", "theorem5"},
        {"eta", {1.0, 0.0}},
        {"zeta", {1.3, 0.0}},
        {"lambda_min", 1.0},
        {"lambda_max", 1e4},
        {"points", 25},
        {"interval", {1.0, 2.0}},
        {"weight", "dt"}}},
      {"seed", 42}};
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("ANISO_CLI");
  REQUIRE(cli != nullptr);
  int status = std::system((std::string(cli) + " " + args).c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config round-trips bit-identically") {
  Json j = osc_config_json();
  auto cfg1 = parse_config(j);
  std::string dump1 = config_to_json(cfg1).dump(2);
  auto cfg2 = parse_config(config_to_json(cfg1));
  std::string dump2 = config_to_json(cfg2).dump(2);
  REQUIRE(dump1 == dump2);
}

TEST_CASE("schema violations are reported") {
  REQUIRE_THROWS_AS(parse_config(Json::array()), SchemaError);
  Json bad = osc_config_json();
  bad["sweep"]["mode"] = "nonsense";
  REQUIRE_THROWS_AS(parse_config(bad), SchemaError);
  Json bad2 = osc_config_json();
  bad2["matrix"] = {{1, 0}};
  REQUIRE_THROWS_AS(parse_config(bad2), SchemaError);
  RunConfig no_matrix;
  REQUIRE_THROWS_AS(run_subcommand("oscillatory", no_matrix), SchemaError);
  REQUIRE_THROWS_AS(run_subcommand("bogus", no_matrix), SchemaError);
}

TEST_CASE("seeded runs are byte-identical") {
  auto cfg = parse_config(osc_config_json());
  auto d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
  cfg.out_dir = d1.string();
  REQUIRE(run_subcommand("oscillatory", cfg) == 0);
  cfg.out_dir = d2.string();
  REQUIRE(run_subcommand("oscillatory", cfg) == 0);
  REQUIRE(slurp(d1 / "oscillatory_summary.json") ==
          slurp(d2 / "oscillatory_summary.json"));
  REQUIRE(slurp(d1 / "oscillatory_sweep.csv") ==
          slurp(d2 / "oscillatory_sweep.csv"));
  REQUIRE_FALSE(slurp(d1 / "oscillatory_sweep.csv").empty());
}

TEST_CASE("dilation subcommand checks and artifacts") {
  RunConfig cfg;
  Matrix A(2, 2);
  A << 1, 1, 0, 1;
  cfg.matrix = A;
  auto dir = fresh_dir("dil");
  cfg.out_dir = dir.string();
  REQUIRE(run_subcommand("dilation", cfg) == 0);
  Json summary = Json::parse(slurp(dir / "dilation_summary.json"));
  REQUIRE(summary["pass"].get<bool>());
  REQUIRE(summary["degree"].get<int>() == 2);

  // user-pinned impossible tolerance turns into exit status 1
  cfg.group_tol = 1e-18;
  REQUIRE(run_subcommand("dilation", cfg) == 1);
  summary = Json::parse(slurp(dir / "dilation_summary.json"));
  REQUIRE_FALSE(summary["pass"].get<bool>());
}

TEST_CASE("quasinorm subcommand context serialization") {
  RunConfig cfg;
  Matrix P(2, 2);
  P << 1, 0.5, 0, 2;
  cfg.matrix = P;
  cfg.samples = 1500;
  auto dir = fresh_dir("qn");
  cfg.out_dir = dir.string();
  REQUIRE(run_subcommand("quasinorm", cfg) == 0);
  Json ctx = Json::parse(slurp(dir / "quasinorm_context.json"));
  REQUIRE(ctx.contains("P"));
  REQUIRE(ctx.contains("B"));
  REQUIRE(ctx["budget"].contains("epsilon0"));
  // B solves P^T B + B P = E: spot-check one entry
  Matrix B(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) B(r, c) = ctx["B"][r][c].get<double>();
  REQUIRE((P.transpose() * B + B * P - Matrix::Identity(2, 2)).norm() <
          1e-10);
}

TEST_CASE("extrapolate subcommand divergence warning path") {
  RunConfig cfg;
  KernelSpec ks;
  ks.omega.cos_coeff = {0.0, 3.0};
  cfg.kernel = ks;
  cfg.extrapolate.a = 2.0;
  auto dir = fresh_dir("ext");
  cfg.out_dir = dir.string();
  REQUIRE(run_subcommand("extrapolate", cfg) == 0);
  Json summary = Json::parse(slurp(dir / "extrapolate_summary.json"));
  REQUIRE(summary["divergence_warning"].get<bool>());
  REQUIRE_FALSE(summary["converged"].get<bool>());
}

TEST_CASE("CLI binary: exit codes and beta presets") {
  auto dir = fresh_dir("cli");
  auto cfg_path = dir / "cfg.json";
  {
    std::ofstream out(cfg_path);
    Json j = osc_config_json();
    j["out_dir"] = (dir / "run").string();
    out << j.dump(2);
  }
  SECTION("happy path exits 0") {
    REQUIRE(run_cli("oscillatory --config " + cfg_path.string()) == 0);
  }
  SECTION("invalid generator exits 2 naming the eigenvalue") {
    auto bad_path = dir / "bad.json";
    {
      std::ofstream out(bad_path);
      out << Json{{"matrix", {{-1, 0}, {0, 1}}},
                  {"out_dir", (dir / "bad").string()}}
                 .dump(2);
    }
    REQUIRE(run_cli("quasinorm --config " + bad_path.string() +
                    " 2>" + (dir / "err.txt").string()) == 2);
    auto err = slurp(dir / "err.txt");
    REQUIRE(err.find("-1") != std::string::npos);
  }
  SECTION("unknown flag exits nonzero") {
    REQUIRE(run_cli("oscillatory --nonsense 2>/dev/null") != 0);
  }
  SECTION("beta presets land in the measures summary") {
    auto mcfg = dir / "measures.json";
    {
      std::ofstream out(mcfg);
      out << Json{{"matrix", {{1, 0}, {0, 1}}},
                  {"kernel",
                   {{"beta", 2.0},
                    {"omega", {{"type", "trig"}, {"cos", {0.0, 1.0}}}},
                    {"h", {{"type", "one"}}},
                    {"curve", Json::array()}}},
                  {"measures",
                   {{"modes", {"eq2_3"}},
                    {"k", 0},
                    {"xi_direction", {0.8, 0.6}},
                    {"x_min", 1e-2},
                    {"x_max", 20.0},
                    {"points", 8},
                    {"resolution", 128}}},
                  {"out_dir", (dir / "meas").string()}}
                 .dump(2);
    }
    REQUIRE(run_cli("measures --config " + mcfg.string() +
                    " --beta-from-q 1.5") == 0);
    Json summary = Json::parse(slurp(dir / "meas" / "measures_summary.json"));
    REQUIRE(summary["beta"].get<double>() == Catch::Approx(8.0));
    REQUIRE(summary["beta_source"].get<std::string>() == "from_q");
    REQUIRE(run_cli("measures --config " + mcfg.string() +
                    " --beta-from-qs 3 3") == 0);
    summary = Json::parse(slurp(dir / "meas" / "measures_summary.json"));
    // q' = s' = 3/2: beta = 2^{2.25}
    REQUIRE(summary["beta"].get<double>() ==
            Catch::Approx(std::pow(2.0, 2.25)));
  }
}
