#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "synthvol/cli.hpp"

using namespace synthvol;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = SYNTHVOL_SOURCE_DIR;
const fs::path kFixtures = kSource / "data" / "fixtures";

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "synthvol");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("synthvol_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string quick_training(int epochs) {
  return R"({"schema_version": 1, "seed": 3, "training": {"train": {"epochs": )" + std::to_string(epochs) +
         R"(, "patience": 1000, "schedule": [{"epoch": 0, "lr": 0.01}]}, "parametric_train": {"epochs": )" +
         std::to_string(epochs) + R"(}}})";
}

class CalibratedModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("model");
    spit(dir_ / "cal.json", quick_training(300));
    const auto r = run_cli({"calibrate", "--ladder", (kFixtures / "ladder.csv").string(), "--sectors",
                            (kFixtures / "sectors.csv").string(), "--earnings", (kFixtures / "earnings.csv").string(),
                            "--tier", "parametric", "--config", (dir_ / "cal.json").string(), "--out",
                            (dir_ / "cal").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  static fs::path scenario_config(const std::string& name, int n_paths) {
    io::json j = io::read_json_file((kSource / "data" / "configs" / "scenario.json").string());
    j["model"] = (dir_ / "cal" / "model.json").string();
    j["hmm_returns"] = (kFixtures / "returns.csv").string();
    j["n_paths"] = n_paths;
    j["horizon"] = 5;
    j["lr_steps"] = 51;
    const auto p = dir_ / name;
    io::write_json_file(p.string(), j);
    return p;
  }

  static inline fs::path dir_;
};

}  // namespace

TEST(Cli, MissingRequiredOptionIsInvalidWithUsage) {
  const auto out = scratch("missing");
  const auto r = run_cli({"calibrate", "--sectors", "x.csv", "--tier", "parametric", "--out", out.string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("--ladder"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsInvalid) { EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitInvalid); }

TEST(Cli, HelpExitsZero) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("scenario"), std::string::npos);
}

TEST(Cli, UnknownTierIsInvalid) {
  const auto out = scratch("tier");
  const auto r = run_cli({"calibrate", "--ladder", (kFixtures / "ladder.csv").string(), "--sectors",
                          (kFixtures / "sectors.csv").string(), "--tier", "bespoke", "--out", out.string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
}

TEST(Cli, UnknownConfigKeyIsInvalid) {
  const auto dir = scratch("badkey");
  spit(dir / "cfg.json", R"({"schema_version": 1, "n_pathz": 3, "assets": []})");
  const auto r = run_cli({"simulate", "--config", (dir / "cfg.json").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("n_pathz"), std::string::npos);
}

TEST(Cli, MalformedJsonIsInvalid) {
  const auto dir = scratch("badjson");
  spit(dir / "cfg.json", "{ not json");
  EXPECT_EQ(run_cli({"simulate", "--config", (dir / "cfg.json").string(), "--out", (dir / "o").string()}).code,
            cli::kExitInvalid);
}

TEST(Cli, OutputPathThatIsAFileIsInternal) {
  const auto dir = scratch("outfile");
  spit(dir / "taken", "x");
  const auto r = run_cli({"simulate", "--config", (kSource / "data" / "configs" / "simulate.json").string(), "--out",
                          (dir / "taken").string()});
  EXPECT_EQ(r.code, cli::kExitInternal);
}

TEST(Cli, SeedPrecedence) {
  ::unsetenv("SYNTHVOL_SEED");
  EXPECT_EQ(cli::resolve_seed(5, 6, 7), 5u);
  EXPECT_EQ(cli::resolve_seed(std::nullopt, 6, 7), 6u);
  EXPECT_EQ(cli::resolve_seed(std::nullopt, std::nullopt, 7), 7u);
  ::setenv("SYNTHVOL_SEED", "41", 1);
  EXPECT_EQ(cli::resolve_seed(std::nullopt, std::nullopt, 7), 41u);
  EXPECT_EQ(cli::resolve_seed(std::nullopt, 6, 7), 6u);
  ::setenv("SYNTHVOL_SEED", "-3", 1);
  EXPECT_THROW(cli::resolve_seed(std::nullopt, std::nullopt, 7), std::invalid_argument);
  ::unsetenv("SYNTHVOL_SEED");
}

TEST(Cli, ConfigPathsResolveAgainstTheConfigDirectory) {
  EXPECT_EQ(cli::resolve_path("/a/b/cfg.json", "../x.csv"), fs::path("/a/b/../x.csv"));
  EXPECT_EQ(cli::resolve_path("/a/b/cfg.json", "/abs/x.csv"), fs::path("/abs/x.csv"));
}

TEST(Cli, SimulateWritesPathsSummaryAndManifest) {
  const auto dir = scratch("simulate");
  const auto r =
      run_cli({"simulate", "--config", (kSource / "data" / "configs" / "simulate.json").string(), "--out",
               dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"paths.csv", "summary.json", "run_manifest.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto m = io::read_json_file((dir / "run_manifest.json").string());
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["seed"], 5);
  const auto s = io::read_json_file((dir / "summary.json").string());
  EXPECT_EQ(s["assets"].size(), 2u);
}

TEST(Cli, SingleSectorSectorTierMatchesGlobal) {
  const auto dir = scratch("single_sector");
  {
    std::ifstream in(kFixtures / "ladder.csv");
    std::ofstream tech(dir / "tech.csv");
    std::string line;
    std::getline(in, line);
    tech << line << '\n';
    while (std::getline(in, line)) {
      for (const char* t : {"AAPL,", "MSFT,", "NVDA,", "AMD,", "META,"}) {
        if (line.rfind(t, 0) == 0) tech << line << '\n';
      }
    }
  }
  spit(dir / "cfg.json", quick_training(40));
  auto calibrate = [&](const std::string& tier) {
    const auto out = dir / tier;
    const auto r = run_cli({"calibrate", "--ladder", (dir / "tech.csv").string(), "--sectors",
                            (kFixtures / "sectors.csv").string(), "--tier", tier, "--config",
                            (dir / "cfg.json").string(), "--out", out.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return slurp(out / "rmse_ticker.csv");
  };
  EXPECT_EQ(calibrate("global-nn"), calibrate("sector-nn"));
}

TEST_F(CalibratedModel, ModelReloadsAndReproducesReportedRmse) {
  const auto bundle = io::read_json_file((dir_ / "cal" / "model.json").string());
  const auto model = bundle.get<calibration::TieredModel>();
  cli::CorpusFiles files{(kFixtures / "ladder.csv").string(), (kFixtures / "sectors.csv").string(),
                         (kFixtures / "earnings.csv").string()};
  const auto corpus = cli::load_corpus(files);
  const auto overall = calibration::rmse_report(model, corpus.rows, calibration::GroupBy::Overall);
  const auto csv = slurp(dir_ / "cal" / "rmse_overall.csv");
  std::istringstream s(csv);
  std::string header, row;
  std::getline(s, header);
  std::getline(s, row);
  const auto a = row.find(',');
  const auto b = row.find(',', a + 1);
  EXPECT_EQ(std::stod(row.substr(a + 1, b - a - 1)), overall.front().rmse_pct);
  EXPECT_EQ(bundle["training"]["seed"], 3);
  for (const char* f : {"groups.csv", "summary.json", "rmse_sector.csv", "run_manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "cal" / f)) << f;
  }
}

TEST_F(CalibratedModel, ScenarioIsByteReproducible) {
  const auto cfg = scenario_config("scen.json", 20);
  auto once = [&](const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{"scenario", "--config", cfg.string(), "--out", (dir_ / name).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return slurp(dir_ / name / "stats.json") + slurp(dir_ / name / "paths.csv");
  };
  const auto a = once("s1", {});
  EXPECT_EQ(a, once("s2", {"--threads", "3"}));
  EXPECT_NE(a, once("s3", {"--seed", "99"}));
  const auto stats = io::read_json_file((dir_ / "s1" / "stats.json").string());
  EXPECT_EQ(stats["seed"], 2026);
  EXPECT_EQ(stats["contracts"].size(), 2u);
  for (const char* f : {"pnl.csv", "bands.csv", "tails.csv"}) EXPECT_TRUE(fs::exists(dir_ / "s1" / f)) << f;
}

TEST_F(CalibratedModel, ScenarioSinglePathIsValid) {
  const auto cfg = scenario_config("one.json", 1);
  const auto r = run_cli({"scenario", "--config", cfg.string(), "--out", (dir_ / "one").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto stats = io::read_json_file((dir_ / "one" / "stats.json").string());
  EXPECT_EQ(stats["n_paths"], 1);
}

TEST_F(CalibratedModel, GreeksSubcommand) {
  const auto cfg = scenario_config("greeks.json", 4);
  const auto r = run_cli({"greeks", "--config", cfg.string(), "--out", (dir_ / "greeks").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "greeks" / "greeks.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "greeks" / "greek_bands.csv"));
}

TEST_F(CalibratedModel, PriceReportNeedsADateOnMultiDayLadders) {
  const std::vector<std::string> base{"price-report", "--model", (dir_ / "cal" / "model.json").string(), "--ladder",
                                      (kFixtures / "ladder.csv").string(), "--sectors",
                                      (kFixtures / "sectors.csv").string(), "--steps", "50"};
  auto args = base;
  args.insert(args.end(), {"--out", (dir_ / "pr_bad").string()});
  EXPECT_EQ(run_cli(args).code, cli::kExitInvalid);
  args = base;
  args.insert(args.end(), {"--obs-date", "2025-03-03", "--out", (dir_ / "pr").string()});
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "pr" / "price_errors.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "pr" / "price_report.json"));
}

TEST(Cli, HoldoutAndLooRun) {
  const auto dir = scratch("holdout");
  auto cfg = io::read_json_file((kSource / "data" / "configs" / "holdout.json").string());
  for (const char* k : {"ladder", "sectors", "earnings"}) {
    cfg[k] = (kSource / "data" / "configs" / cfg[k].get<std::string>()).string();
  }
  cfg["training"] = io::json{{"train", {{"epochs", 150}, {"schedule", {{{"epoch", 0}, {"lr", 0.01}}}}}}};
  io::write_json_file((dir / "h.json").string(), cfg);
  auto r = run_cli({"holdout", "--config", (dir / "h.json").string(), "--out", (dir / "h").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto h = io::read_json_file((dir / "h" / "holdout.json").string());
  ASSERT_EQ(h["configurations"].size(), 3u);
  EXPECT_LT(h["configurations"][1]["overall"]["gap"].get<double>(),
            h["configurations"][0]["overall"]["gap"].get<double>());

  auto loo = io::read_json_file((kSource / "data" / "configs" / "loo.json").string());
  for (const char* k : {"ladder", "sectors", "earnings"}) {
    loo[k] = (kSource / "data" / "configs" / loo[k].get<std::string>()).string();
  }
  loo["training"] = io::json{{"train", {{"epochs", 50}}}};
  io::write_json_file((dir / "l.json").string(), loo);
  r = run_cli({"loo", "--config", (dir / "l.json").string(), "--out", (dir / "l").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "l" / "loo.csv"));
}
