#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bioage/features.hpp"
#include "bioage/model_io.hpp"

namespace bioage {

struct ModelSpec {
  ModelKind kind = ModelKind::kGbm;
  GbmParams gbm;
  ForestParams rf;
  ElasticNetParams enet;
};

AnyModel fit_model(const ModelSpec& spec, const FeatureMatrix& x, std::span<const double> y);

struct EvaluationReport {
  std::string model;
  SexGroup sex = SexGroup::kAll;
  Wave wave = Wave::kWave1;  // wave1 = training fit, wave2 = temporal test
  double r2 = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  std::string stratum;  // empty when unstratified
};

struct SexFit {
  SexGroup group = SexGroup::kAll;
  AnyModel model;
  std::vector<std::string> row_ids;
  std::vector<double> age_wave1, age_wave2;
  std::vector<double> pred_wave1, pred_wave2;
  EvaluationReport train;
  EvaluationReport test;
};

struct TemporalResult {
  std::vector<SexFit> fits;
  // Reads of the wave-2 target vector made while any model was fitting.
  std::size_t wave2_target_reads_during_fit = 0;

  std::vector<EvaluationReport> reports() const;
};

std::vector<SexGroup> sex_groups(bool per_sex);

// Fits on wave-1 features (with slopes) against wave-1 age, then scores the
// same people's wave-2 features against wave-2 age.
TemporalResult temporal_evaluate(const FeatureMatrix& w1, const FeatureMatrix& w2, const ModelSpec& spec,
                                 bool per_sex, const std::string& stratum = {});
TemporalResult temporal_evaluate(const FeatureMatrix& w1, const FeatureMatrix& w2, const ModelSpec& spec,
                                 const std::vector<SexGroup>& groups, const std::string& stratum = {});

// Scores already-fitted per-group models under the same protocol.
TemporalResult evaluate_fitted(const std::vector<std::pair<SexGroup, AnyModel>>& models, const FeatureMatrix& w1,
                               const FeatureMatrix& w2);

void check_same_schema(const FeatureMatrix& w1, const FeatureMatrix& w2);

// --- biological-age deltas ----------------------------------------------------

struct BaDeltaRecord {
  std::string id;
  Wave wave = Wave::kWave1;
  double predicted = 0.0;
  double ca = 0.0;
  double delta = 0.0;  // predicted - ca
};

std::vector<BaDeltaRecord> ba_delta(std::span<const std::string> ids, std::span<const double> predictions,
                                    std::span<const double> ages, Wave wave);
std::vector<BaDeltaRecord> ba_deltas(const TemporalResult& r, Wave wave);

struct GroupComparison {
  std::string feature;
  double mean_fastest = 0.0;
  double mean_slowest = 0.0;
  double difference = 0.0;
  double p_value = 1.0;
};

struct ExtremeAgers {
  std::vector<std::string> fastest;  // top decile of delta change
  std::vector<std::string> slowest;  // bottom decile
  std::vector<std::string> ids;      // all ids, sorted by (change, id)
  std::vector<double> change;        // aligned with ids
  std::vector<GroupComparison> comparisons;
};

inline constexpr std::size_t kDefaultPermutations = 10000;

// Ranks by delta_wave2 - delta_wave1 and compares the groups' wave-1
// baseline means with seeded permutation tests.
ExtremeAgers extreme_agers(const std::vector<BaDeltaRecord>& wave1, const std::vector<BaDeltaRecord>& wave2,
                           const FeatureMatrix& baseline, double decile = 0.1,
                           std::size_t permutations = kDefaultPermutations, std::uint64_t seed = 0);

// --- strata -------------------------------------------------------------------

enum class Stratifier { kNone, kAge, kBmi };
std::optional<Stratifier> parse_stratifier(std::string_view s);
std::string_view to_string(Stratifier s);

struct Stratum {
  std::string label;
  std::vector<std::size_t> rows;
};

// Age uses wave-1 chronological age (<55, >=55); BMI uses the wave-1 bmi
// column (<25, 25-30, >=30).
std::vector<Stratum> stratify(const FeatureMatrix& w1, Stratifier s);

struct SubgroupResult {
  std::vector<EvaluationReport> reports;
  std::vector<std::pair<std::string, std::size_t>> stratum_sizes;
  std::vector<std::string> warnings;
  std::size_t wave2_target_reads_during_fit = 0;
};

inline constexpr std::size_t kMinStratumSize = 50;

SubgroupResult subgroup_eval(const FeatureMatrix& w1, const FeatureMatrix& w2, Stratifier s, const ModelSpec& spec,
                             bool per_sex = true, std::size_t min_size = kMinStratumSize);

// --- physiological systems -----------------------------------------------------

struct SystemResult {
  SystemTag system = SystemTag::kOther;
  std::vector<std::string> features;
  bool skipped = false;
  std::vector<EvaluationReport> reports;
  std::vector<std::string> row_ids;
  std::vector<double> score;  // wave-2 predicted age, aligned with row_ids
};

using SystemMatrix = std::array<std::array<double, kNamedSystems.size()>, kNamedSystems.size()>;

struct SystemAnalysis {
  std::vector<SystemResult> systems;  // kNamedSystems order
  SystemMatrix corr_female{};
  SystemMatrix corr_male{};
  SystemMatrix corr_diff{};  // female - male
  std::vector<std::string> warnings;
  std::size_t wave2_target_reads_during_fit = 0;
};

// Per-system temporal protocol using only that system's columns. System
// score = the per-system model's wave-2 predicted age; matrices are Pearson
// correlations of those scores within each sex. Undefined entries are NaN.
SystemAnalysis system_analysis(const FeatureMatrix& w1, const FeatureMatrix& w2, const ModelSpec& spec);

// --- output -------------------------------------------------------------------

// {model -> sex -> wave -> {r2, rmse, n}}, nested under stratum when present.
std::string reports_json(const std::vector<EvaluationReport>& reports);
std::string reports_table(const std::vector<EvaluationReport>& reports);
void write_ba_deltas(std::ostream& out, const std::vector<BaDeltaRecord>& records);
void write_extreme_agers(std::ostream& out, const ExtremeAgers& ea);
void write_extreme_groups(std::ostream& out, const ExtremeAgers& ea);
void write_system_r2(std::ostream& out, const SystemAnalysis& sa);
void write_system_matrix(std::ostream& out, const SystemMatrix& m);

}  // namespace bioage
