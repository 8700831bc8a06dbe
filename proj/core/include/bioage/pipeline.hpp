#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bioage/eval.hpp"
#include "bioage/features.hpp"
#include "bioage/synthgen.hpp"

namespace bioage {

struct RunConfig {
  std::filesystem::path wave1;
  std::filesystem::path wave2;
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> catalog;
  ModelSpec model;
  std::vector<std::string> slope_columns;  // empty: every shared biomarker
  SlopePolicy slope_policy = SlopePolicy::kMedian;
  Stratifier stratifier = Stratifier::kAge;
  std::vector<std::string> exclusions;
  std::string sex = "both";  // F, M or both
  std::uint64_t seed = 20240601;
  double decile = 0.1;
  std::size_t permutations = kDefaultPermutations;
  SynthConfig synth = SynthConfig::defaults();

  static RunConfig from_json(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  // Pushes the top-level seed into every seeded component.
  void propagate_seed();
  void validate() const;
  std::vector<SexGroup> groups() const;
  // Resolved settings without paths; the basis of the manifest config hash.
  std::string settings_json() const;
};

struct CommandResult {
  std::filesystem::path manifest;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  std::string text;  // human-readable summary
};

struct PreparedCohort {
  LongitudinalCohort cohort;
  WaveMatrices matrices;
  std::vector<std::string> warnings;
};

PreparedCohort prepare_cohort(const RunConfig& cfg, bool include_slopes = true);

CommandResult cmd_synth(const RunConfig& cfg);
CommandResult cmd_train(const RunConfig& cfg);
CommandResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& model_dir);
CommandResult cmd_explain(const RunConfig& cfg, const std::filesystem::path& model_dir);
CommandResult cmd_subgroup(const RunConfig& cfg);
CommandResult cmd_compare(const RunConfig& cfg);
CommandResult cmd_systems(const RunConfig& cfg);

std::string model_file_name(ModelKind kind, SexGroup group);

}  // namespace bioage
