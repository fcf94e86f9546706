#pragma once

// Batch front end: calibrate, holdout, loo, price-report, simulate, scenario,
// greeks. Exit codes: 0 success, 1 internal error, 2 invalid input.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "synthvol/calibration.hpp"
#include "synthvol/jumphmm.hpp"
#include "synthvol/scenario.hpp"
#include "synthvol/serialization.hpp"

namespace synthvol::cli {

namespace fs = std::filesystem;
using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInvalid = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Flag, then config value, then SYNTHVOL_SEED, then `fallback`.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config_value,
                           std::uint64_t fallback);

/// Relative paths in a config resolve against the config file's directory.
fs::path resolve_path(const fs::path& config_path, const std::string& value);

/// One column named "return"; other columns are ignored.
std::vector<double> load_returns(const std::string& path);

struct ScenarioFile {
  scenario::ScenarioConfig config;
  std::optional<std::uint64_t> seed;  // as written in the file
  std::vector<std::string> inputs;    // files the config pulled in
};
ScenarioFile load_scenario_config(const fs::path& path);

struct SimulateAsset {
  std::string ticker;
  double spot = 0.0;
  jumphmm::HMMParams hmm;
};

struct SimulateFile {
  std::vector<SimulateAsset> assets;
  jumphmm::CopulaSpec copula;
  int steps = 252;
  int n_paths = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
};
SimulateFile load_simulate_config(const fs::path& path);

struct CorpusFiles {
  std::string ladder;
  std::string sectors;
  std::optional<std::string> earnings;
};

struct HoldoutFile {
  CorpusFiles corpus;
  std::vector<dates::Date> train_dates;
  std::vector<dates::Date> test_dates;
  std::vector<calibration::HoldoutConfiguration> configurations;
  double exclusion_days = 3.0;
  calibration::TierConfig tier;
  std::optional<std::uint64_t> seed;
};
HoldoutFile load_holdout_config(const fs::path& path);

struct LooFile {
  CorpusFiles corpus;
  std::vector<dates::Date> held_out;  // empty: every capture date
  calibration::TierConfig tier;
  std::optional<std::uint64_t> seed;
};
LooFile load_loo_config(const fs::path& path);

struct CalibrateFile {
  calibration::TierConfig tier;
  calibration::FilterSpec filter;
  std::optional<std::uint64_t> seed;
};
CalibrateFile load_calibrate_config(const fs::path& path);

/// Ingested, filtered corpus with earnings features attached when a calendar is given.
struct Corpus {
  std::vector<calibration::LadderObservation> rows;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> rejected;
  std::vector<std::string> warnings;
};
Corpus load_corpus(const CorpusFiles& files, const calibration::FilterSpec& filter = {});

}  // namespace synthvol::cli
