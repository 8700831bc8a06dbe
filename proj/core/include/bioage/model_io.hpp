#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bioage/baselines.hpp"
#include "bioage/gbm.hpp"

namespace bioage {

enum class ModelKind { kGbm, kRf, kEnet };
std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view s);

using AnyModel = std::variant<BoostedEnsemble, ForestModel, ElasticNetModel>;

ModelKind kind_of(const AnyModel& m);
const std::vector<std::string>& feature_names(const AnyModel& m);
std::vector<double> predict(const AnyModel& m, const FeatureMatrix& x);

// Versioned JSON envelope: {format, version, model_type, params, ...}.
std::string model_to_json(const AnyModel& m);
AnyModel model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const AnyModel& m);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace bioage
