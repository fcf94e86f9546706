#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "synthvol/serialization.hpp"
#include "synthvol/synthetic.hpp"

using namespace synthvol;
using io::json;

namespace {

template <typename T>
void expect_round_trip(const T& value) {
  const json j = value;
  const T back = j.get<T>();
  EXPECT_EQ(json(back), j);
}

calibration::TieredModel small_model() {
  auto rows = synthetic::generate_ladder(synthetic::recovery_fixture());
  rows.resize(400);
  calibration::TierConfig cfg;
  cfg.train.epochs = 3;
  return calibration::fit_tier(rows, calibration::Tier::NNSector, cfg);
}

}  // namespace

TEST(Json, HmmParamsRoundTrip) { expect_round_trip(jumphmm::reference_params()); }

TEST(Json, HmmParamsAreValidatedOnLoad) {
  json j = jumphmm::reference_params();
  j["trans"][0][0] = 0.9;
  EXPECT_THROW(j.get<jumphmm::HMMParams>(), std::invalid_argument);
  j = jumphmm::reference_params();
  j["sigmas"] = j["sigma"];
  EXPECT_THROW(j.get<jumphmm::HMMParams>(), io::SchemaError);
}

TEST(Json, CopulaWithInfiniteDof) {
  const jumphmm::CopulaSpec c{{1, 0.3, 0.3, 1}, std::numeric_limits<double>::infinity()};
  const json j = c;
  EXPECT_EQ(j["nu"], "inf");
  EXPECT_TRUE(std::isinf(j.get<jumphmm::CopulaSpec>().nu));
  expect_round_trip(jumphmm::CopulaSpec{{1, 0.3, 0.3, 1}, 4.0});
}

TEST(Json, VarianceTypes) {
  expect_round_trip(variance::HestonParams{3.0, 0.4, -0.5, 1.0 / 252});
  variance::ThetaSpec t;
  t.gamma = 0.3;
  t.shape = surface::ShapeModel::parametric({{-0.05, -0.8, 0.02, 1.5, 0.01}});
  t.levels["AAA"] = {0.04, {}};
  t.levels["BBB"] = {0.09, variance::tail_multipliers(9, 2, 1.4)};
  expect_round_trip(t);
}

TEST(Json, ShapesAndSurfaces) {
  expect_round_trip(surface::ShapeModel::parametric({{-0.05, -0.8, 0.02, 1.5, 0.01}}));
  const auto w = surface::MLPWeights::glorot(surface::MLPWeights::architecture(4, 8), 2);
  const auto nn = surface::ShapeModel::neural(w, {{1, 2, 3, 4}, {0.5, 0.6, 0.7, 0.8}});
  expect_round_trip(nn);
  surface::SurfaceModel m{nn, {{"AAA", 0.05}}};
  expect_round_trip(m);
  // Reloaded weights evaluate bit-identically.
  const auto back = json(m).get<surface::SurfaceModel>();
  EXPECT_EQ(back.iv("AAA", {12, 0.93, 4, 1}), m.iv("AAA", {12, 0.93, 4, 1}));
}

TEST(Json, TrainingConfigs) {
  expect_round_trip(surface::TrainConfig{});
  calibration::TierConfig c;
  c.group_inputs = 2;
  c.ticker_qualify_min = 100;
  expect_round_trip(c);
  json j = surface::TrainConfig{};
  j["learning_rate"] = 0.1;
  EXPECT_THROW(j.get<surface::TrainConfig>(), io::SchemaError);
}

TEST(Json, ModelBundleRoundTripPreservesPredictions) {
  const auto m = small_model();
  const json j = m;
  EXPECT_EQ(j["schema_version"], io::kSchemaVersion);
  EXPECT_EQ(j["kind"], "model_bundle");
  const auto back = j.get<calibration::TieredModel>();
  EXPECT_EQ(json(back), j);
  const auto rows = synthetic::generate_ladder(synthetic::recovery_fixture());
  for (std::size_t i = 0; i < rows.size(); i += 97) {
    if (m.covers(rows[i])) EXPECT_EQ(back.iv(rows[i]), m.iv(rows[i]));
  }
}

TEST(Json, ModelBundleRejectsBadVersionAndUnknownKeys) {
  json j = small_model();
  j["schema_version"] = 2;
  EXPECT_THROW(j.get<calibration::TieredModel>(), io::SchemaError);
  j = small_model();
  j["extra"] = 1;
  EXPECT_THROW(j.get<calibration::TieredModel>(), io::SchemaError);
}

TEST(Json, ScenarioContract) {
  scenario::ScenarioContract c{"put_180", lattice::Parity::Put, 180, 3.1, -0.3, 12, 4};
  expect_round_trip(c);
  const auto d = json::parse(R"({"parity":"call","strike":200,"entry_premium":3.4})").get<scenario::ScenarioContract>();
  EXPECT_EQ(d.parity, lattice::Parity::Call);
  EXPECT_FALSE(d.market_delta.has_value());
  EXPECT_EQ(d.e, 30.0);
}

TEST(Json, PnlStatsKeyedByRowName) {
  const json j = scenario::PnlStats{};
  for (const auto& name : scenario::pnl_row_names()) EXPECT_TRUE(j.contains(name)) << name;
}

TEST(Json, FilesRoundTripAndParseErrorsAreSchemaErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "synthvol_json_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "hmm.json").string();
  io::write_json_file(path, jumphmm::reference_params());
  EXPECT_EQ(io::read_json_file(path), json(jumphmm::reference_params()));
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{not json", f);
    std::fclose(f);
  }
  EXPECT_THROW(io::read_json_file(path), io::SchemaError);
  EXPECT_THROW(io::read_json_file((dir / "missing.json").string()), io::SchemaError);
  std::filesystem::remove_all(dir);
}
