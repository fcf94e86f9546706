#pragma once

// JSON documents for fitted models, HMM parameters and scenario settings.
// Readers reject unknown keys so typos in hand-written configs surface early.

#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "synthvol/calibration.hpp"
#include "synthvol/jumphmm.hpp"
#include "synthvol/scenario.hpp"
#include "synthvol/surface.hpp"
#include "synthvol/variance.hpp"

namespace synthvol::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SchemaError naming `where` if `j` is not an object, has a key
/// outside `allowed`, or lacks one of `required`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, std::initializer_list<const char*> required,
                const std::string& where);

/// Requires "schema_version" == kSchemaVersion.
void check_schema_version(const json& j, const std::string& where);

json read_json_file(const std::string& path);
/// Pretty-printed, trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace synthvol::io

namespace synthvol::jumphmm {
void to_json(nlohmann::json& j, const HMMParams& p);
void from_json(const nlohmann::json& j, HMMParams& p);
void to_json(nlohmann::json& j, const CopulaSpec& c);
void from_json(const nlohmann::json& j, CopulaSpec& c);
}  // namespace synthvol::jumphmm

namespace synthvol::variance {
void to_json(nlohmann::json& j, const HestonParams& p);
void from_json(const nlohmann::json& j, HestonParams& p);
void to_json(nlohmann::json& j, const ThetaSpec& s);
void from_json(const nlohmann::json& j, ThetaSpec& s);
}  // namespace synthvol::variance

namespace synthvol::surface {
void to_json(nlohmann::json& j, const ShapeModel& s);
void from_json(const nlohmann::json& j, ShapeModel& s);
void to_json(nlohmann::json& j, const SurfaceModel& m);
void from_json(const nlohmann::json& j, SurfaceModel& m);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
}  // namespace synthvol::surface

namespace synthvol::calibration {
void to_json(nlohmann::json& j, const FittedGroup& g);
void from_json(const nlohmann::json& j, FittedGroup& g);
/// Model bundle: tier, fitted groups and routing tables.
void to_json(nlohmann::json& j, const TieredModel& m);
void from_json(const nlohmann::json& j, TieredModel& m);
void to_json(nlohmann::json& j, const TierConfig& c);
void from_json(const nlohmann::json& j, TierConfig& c);
}  // namespace synthvol::calibration

namespace synthvol::scenario {
void to_json(nlohmann::json& j, const ScenarioContract& c);
void from_json(const nlohmann::json& j, ScenarioContract& c);
void to_json(nlohmann::json& j, const PnlStats& s);
}  // namespace synthvol::scenario
