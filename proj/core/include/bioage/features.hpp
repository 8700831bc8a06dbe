#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bioage/catalog.hpp"
#include "bioage/cohort.hpp"
#include "bioage/types.hpp"

namespace bioage {

// Target vector that counts every element read. The temporal protocol uses
// the counter to prove a fit never touched the held-out wave's ages.
class AuditedVector {
 public:
  AuditedVector() = default;
  explicit AuditedVector(std::vector<double> values) : values_(std::move(values)) {}
  AuditedVector(const AuditedVector& other) : values_(other.values_), reads_(other.reads_.load()) {}
  AuditedVector& operator=(const AuditedVector& other) {
    values_ = other.values_;
    reads_ = other.reads_.load();
    return *this;
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator[](std::size_t i) const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    return values_[i];
  }

  // Copies the whole vector out; counts as size() reads.
  std::vector<double> read_all() const {
    reads_.fetch_add(values_.size(), std::memory_order_relaxed);
    return values_;
  }

  // Row selection for plumbing; not a read by any model.
  AuditedVector subset(std::span<const std::size_t> rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto i : rows) out.push_back(values_[i]);
    return AuditedVector(std::move(out));
  }

  std::size_t reads() const { return reads_.load(std::memory_order_relaxed); }
  void reset_reads() { reads_ = 0; }

 private:
  std::vector<double> values_;
  mutable std::atomic<std::size_t> reads_{0};
};

enum class FeatureKind { kBaseline, kInteraction, kSlope };
std::string_view to_string(FeatureKind kind);

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kBaseline;
  SystemTag system = SystemTag::kOther;
  std::string unit;
};

// Row-major design matrix with aligned ids, sexes and target ages.
struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<Sex> sex;
  std::vector<FeatureMeta> columns;
  std::vector<double> values;
  AuditedVector target;

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> column_index(std::string_view name) const;
};

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows);
FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::size_t> cols);
std::vector<std::size_t> rows_of(const FeatureMatrix& m, SexGroup group);

// --- imputation -----------------------------------------------------------

struct ImputationEntry {
  std::string column;
  Sex sex = Sex::kFemale;
  double median = 0.0;
  std::size_t count = 0;
};

struct ImputationResult {
  CohortTable table;
  std::vector<ImputationEntry> log;
};

// column -> median per sex (index 0 female, 1 male); nullopt when a sex has no
// observed value in that column.
using SexMedians = std::map<std::string, std::array<std::optional<double>, 2>>;

double median(std::vector<double> values);
SexMedians compute_sex_medians(const CohortTable& t);
ImputationResult apply_sex_medians(const CohortTable& t, const SexMedians& medians);
ImputationResult impute_sex_median(const CohortTable& t);

// --- slopes -----------------------------------------------------------------

double compute_slope(double y1, double y2, double t1, double t2);
Cell compute_slope(Cell y1, Cell y2, double t1, double t2);

struct SlopeTable {
  std::vector<std::string> ids;
  std::vector<Sex> sex;
  std::vector<std::string> columns;      // "<name>_slope"
  std::vector<std::vector<Cell>> values;  // [row][column]
};

SlopeTable compute_slopes(const LongitudinalCohort& c, const std::vector<std::string>& columns);

// Biomarkers present in both waves, in wave-1 column order.
std::vector<std::string> shared_biomarkers(const LongitudinalCohort& c);

// --- interactions and assembly --------------------------------------------

inline constexpr std::string_view kBmiColumn = "bmi";
inline constexpr std::string_view kSystolicColumn = "sitting_blood_pressure_systolic";
inline constexpr std::string_view kWhrColumn = "waist_to_hip_ratio";
inline constexpr std::string_view kBmiBpInteraction = "bmi_bp_interaction";
inline constexpr std::string_view kWhrSquared = "whr_squared";

struct Interactions {
  double bmi_bp_interaction = 0.0;
  double whr_squared = 0.0;
};

Interactions interaction_features(double bmi, double systolic_bp, double waist_to_hip_ratio);

enum class SlopePolicy { kMedian, kDrop };
std::optional<SlopePolicy> parse_slope_policy(std::string_view s);
std::string_view to_string(SlopePolicy p);

// Columns: baselines, then the two interactions (when their inputs are
// present), then slopes. The baseline table must already be imputed.
FeatureMatrix assemble_matrix(const CohortTable& baseline, const SlopeTable& slopes, SlopePolicy policy,
                              const Catalog& catalog = Catalog::builtin());

// Wave-1 and wave-2 matrices that share one schema, one row set and the same
// slope values. Wave-2 gaps are filled with the wave-1 sex medians.
struct WaveMatrices {
  FeatureMatrix wave1;
  FeatureMatrix wave2;
  std::vector<ImputationEntry> imputation_wave1;
  std::vector<ImputationEntry> imputation_wave2;
};

struct FeatureOptions {
  std::vector<std::string> slope_columns;  // empty: every shared biomarker
  bool include_slopes = true;
  SlopePolicy policy = SlopePolicy::kMedian;
};

WaveMatrices build_wave_matrices(const LongitudinalCohort& c, const FeatureOptions& opts,
                                 const Catalog& catalog = Catalog::builtin());

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);
std::string matrix_meta_json(const FeatureMatrix& m);

}  // namespace bioage
