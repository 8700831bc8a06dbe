#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "bioage/features.hpp"
#include "bioage/random.hpp"
#include "bioage/synthgen.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using namespace bioage;
namespace bt = bioage::testing;

namespace {

// One-column table; sexes[i] and values[i] describe row i.
CohortTable one_column(const std::vector<Sex>& sexes, const std::vector<Cell>& values, const std::string& name = "m") {
  CohortTable t;
  t.biomarker_columns.push_back({name, "", SystemTag::kOther});
  for (std::size_t i = 0; i < values.size(); ++i) {
    ParticipantRecord r;
    r.id = "R" + std::to_string(i);
    r.sex = sexes[i];
    r.age_years = 50;
    r.biomarkers = {values[i]};
    t.rows.push_back(r);
  }
  return t;
}

constexpr auto F = Sex::kFemale;
constexpr auto M = Sex::kMale;

}  // namespace

TEST(Imputation, MedianOfObservedWithinSex) {
  const auto r = impute_sex_median(one_column({F, F, F}, {1.0, std::nullopt, 3.0}));
  EXPECT_EQ(r.table.rows[1].biomarkers[0], 2.0);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].column, "m");
  EXPECT_EQ(r.log[0].median, 2.0);
  EXPECT_EQ(r.log[0].count, 1u);
}

TEST(Imputation, SexStratified) {
  const auto r =
      impute_sex_median(one_column({F, F, F, M, M, M}, {std::nullopt, 10.0, 20.0, 30.0, 40.0, std::nullopt}));
  EXPECT_EQ(r.table.rows[0].biomarkers[0], 15.0);
  EXPECT_EQ(r.table.rows[5].biomarkers[0], 35.0);
}

TEST(Imputation, NoMissingIsIdentity) {
  const auto t = one_column({F, M}, {1.0, 2.0});
  const auto r = impute_sex_median(t);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.table.rows[0].biomarkers, t.rows[0].biomarkers);
  EXPECT_EQ(r.table.rows[1].biomarkers, t.rows[1].biomarkers);
}

TEST(Imputation, UnimputableColumn) {
  EXPECT_BIOAGE_ERROR(impute_sex_median(one_column({F, M}, {1.0, std::nullopt})), ErrorCode::kUnimputable, "m");
}

TEST(Imputation, MediansComputedBeforeReplacement) {
  // Filling row 1 first must not shift the median used for row 3.
  const auto r = impute_sex_median(one_column({F, F, F, F, F}, {1.0, std::nullopt, 2.0, std::nullopt, 9.0}));
  EXPECT_EQ(r.table.rows[1].biomarkers[0], 2.0);
  EXPECT_EQ(r.table.rows[3].biomarkers[0], 2.0);
}

TEST(Imputation, MedianMatchesSortOracle) {
  CounterRng rng(stream_key(3, "median"));
  for (int n = 1; n < 40; ++n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = std::round(rng.uniform(0, 10));
    EXPECT_EQ(median(v), bt::sorted_median(v));
  }
}

TEST(Slope, HandExamples) {
  EXPECT_EQ(compute_slope(80.0, 84.0, 0.0, 2.0), 2.0);
  EXPECT_EQ(compute_slope(5.0, 5.0, 1.0, 3.7), 0.0);
  EXPECT_FALSE(compute_slope(Cell{}, Cell{84.0}, 0.0, 2.0).has_value());
  EXPECT_FALSE(compute_slope(Cell{80.0}, Cell{}, 0.0, 2.0).has_value());
  EXPECT_EQ(compute_slope(Cell{80.0}, Cell{84.0}, 0.0, 2.0), 2.0);
}

TEST(Slope, ChronologyError) {
  EXPECT_BIOAGE_ERROR(compute_slope(1.0, 2.0, 2.0, 2.0), ErrorCode::kChronology);
  EXPECT_BIOAGE_ERROR(compute_slope(1.0, 2.0, 3.0, 2.0), ErrorCode::kChronology);
}

namespace {

LongitudinalCohort two_people() {
  LongitudinalCohort c;
  c.wave1.wave = Wave::kWave1;
  c.wave2.wave = Wave::kWave2;
  for (auto* t : {&c.wave1, &c.wave2}) {
    t->biomarker_columns = {{"bmi", "", SystemTag::kBodyComposition},
                            {"bt_hba1c_float_value", "", SystemTag::kDiet}};
  }
  auto rec = [](std::string id, Sex s, double age, Cell a, Cell b) {
    ParticipantRecord r;
    r.id = std::move(id);
    r.sex = s;
    r.age_years = age;
    r.biomarkers = {a, b};
    return r;
  };
  c.wave1.rows = {rec("A", F, 50, 25.0, 5.5), rec("B", M, 60, 30.0, 6.0)};
  c.wave2.rows = {rec("A", F, 52, 26.0, 5.7), rec("B", M, 62, 31.0, std::nullopt)};
  c.elapsed_years = {2.0, 2.0};
  return c;
}

}  // namespace

TEST(Slopes, PairedRule) {
  const auto s = compute_slopes(two_people(), {"bmi", "bt_hba1c_float_value"});
  EXPECT_EQ(s.columns, (std::vector<std::string>{"bmi_slope", "bt_hba1c_float_value_slope"}));
  EXPECT_EQ(s.values[0][0], 0.5);
  EXPECT_EQ(s.values[1][0], 0.5);
  EXPECT_TRUE(s.values[0][1].has_value());
  EXPECT_FALSE(s.values[1][1].has_value());
}

TEST(Slopes, EmptyColumnListAndUnknownColumn) {
  const auto s = compute_slopes(two_people(), {});
  EXPECT_EQ(s.ids, (std::vector<std::string>{"A", "B"}));
  EXPECT_TRUE(s.columns.empty());
  EXPECT_BIOAGE_ERROR(compute_slopes(two_people(), {"ldl"}), ErrorCode::kConfig, "ldl");
}

TEST(Interactions, HandExamples) {
  EXPECT_EQ(interaction_features(25, 120, 0.9).bmi_bp_interaction, 3000.0);
  EXPECT_DOUBLE_EQ(interaction_features(25, 120, 0.9).whr_squared, 0.81);
  EXPECT_EQ(interaction_features(25, 120, 1.0).whr_squared, 1.0);
}

namespace {

SynthCohort small_cohort(double missing_rate = 0.05, std::size_t n = 150) {
  auto cfg = SynthConfig::defaults();
  cfg.n_female = n;
  cfg.n_male = n;
  cfg.missing_rate = missing_rate;
  cfg.seed = 99;
  return generate_cohort(cfg);
}

}  // namespace

TEST(Assemble, ColumnOrderAndCount) {
  const auto sc = small_cohort();
  const auto c = pair_waves(sc.wave1, sc.wave2).cohort;
  const auto m = build_wave_matrices(c, {}).wave1;
  ASSERT_EQ(m.cols(), 30u);
  for (std::size_t j = 0; j < 14; ++j) EXPECT_EQ(m.columns[j].kind, FeatureKind::kBaseline);
  EXPECT_EQ(m.columns[14].name, "bmi_bp_interaction");
  EXPECT_EQ(m.columns[15].name, "whr_squared");
  for (std::size_t j = 16; j < 30; ++j) {
    EXPECT_EQ(m.columns[j].kind, FeatureKind::kSlope);
    EXPECT_TRUE(m.columns[j].name.ends_with("_slope"));
    EXPECT_EQ(m.columns[j].name, m.columns[j - 16].name + "_slope");
  }
  for (double v : m.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Assemble, MissingSlopeFilledWithSexMedian) {
  const auto sc = small_cohort(0.1);
  const auto c = pair_waves(sc.wave1, sc.wave2).cohort;
  const auto slopes = compute_slopes(c, shared_biomarkers(c));
  const auto m = build_wave_matrices(c, {}).wave1;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < slopes.columns.size(); ++k) {
    const auto col = *m.column_index(slopes.columns[k]);
    std::vector<double> obs[2];
    for (std::size_t i = 0; i < slopes.ids.size(); ++i) {
      if (slopes.values[i][k]) obs[slopes.sex[i] == M].push_back(*slopes.values[i][k]);
    }
    for (std::size_t i = 0; i < slopes.ids.size(); ++i) {
      if (slopes.values[i][k]) {
        EXPECT_EQ(m.at(i, col), *slopes.values[i][k]);
      } else {
        EXPECT_EQ(m.at(i, col), bt::sorted_median(obs[slopes.sex[i] == M]));
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Assemble, DropPolicyRemovesRows) {
  const auto sc = small_cohort(0.05);
  const auto c = pair_waves(sc.wave1, sc.wave2).cohort;
  const auto slopes = compute_slopes(c, shared_biomarkers(c));
  std::size_t complete = 0;
  for (const auto& row : slopes.values) {
    complete += std::all_of(row.begin(), row.end(), [](const Cell& v) { return v.has_value(); });
  }
  FeatureOptions opts;
  opts.policy = SlopePolicy::kDrop;
  const auto mats = build_wave_matrices(c, opts);
  EXPECT_EQ(mats.wave1.rows(), complete);
  EXPECT_EQ(mats.wave2.rows(), complete);
  EXPECT_LT(complete, c.size());
}

TEST(Assemble, IdMismatchIsAlignmentError) {
  const auto c = two_people();
  auto slopes = compute_slopes(c, {"bmi"});
  slopes.ids[1] = "Z";
  const auto imputed = impute_sex_median(c.wave1).table;
  EXPECT_BIOAGE_ERROR(assemble_matrix(imputed, slopes, SlopePolicy::kMedian), ErrorCode::kAlignment);
}

TEST(Assemble, WavesShareSchemaAndSlopes) {
  const auto sc = small_cohort();
  const auto c = pair_waves(sc.wave1, sc.wave2).cohort;
  const auto mats = build_wave_matrices(c, {});
  EXPECT_EQ(mats.wave1.feature_names(), mats.wave2.feature_names());
  EXPECT_EQ(mats.wave1.row_ids, mats.wave2.row_ids);
  for (std::size_t j = 16; j < 30; ++j) {
    for (std::size_t i = 0; i < mats.wave1.rows(); ++i) EXPECT_EQ(mats.wave1.at(i, j), mats.wave2.at(i, j));
  }
}

TEST(Assemble, NoSlopesGivesBaselinePlusInteractions) {
  const auto sc = small_cohort();
  FeatureOptions opts;
  opts.include_slopes = false;
  const auto m = build_wave_matrices(pair_waves(sc.wave1, sc.wave2).cohort, opts).wave1;
  EXPECT_EQ(m.cols(), 16u);
}

TEST(AuditedVector, CountsReadsButNotSubsets) {
  AuditedVector v(std::vector<double>{1, 2, 3});
  EXPECT_EQ(v.reads(), 0u);
  const auto sub = v.subset(std::vector<std::size_t>{0, 2});
  EXPECT_EQ(v.reads(), 0u);
  (void)v[1];
  EXPECT_EQ(v.reads(), 1u);
  (void)v.read_all();
  EXPECT_EQ(v.reads(), 4u);
  EXPECT_EQ(sub.read_all(), (std::vector<double>{1, 3}));
}

TEST(MatrixIo, CsvHeaderAndMeta) {
  const auto sc = small_cohort(0.0, 60);
  const auto m = build_wave_matrices(pair_waves(sc.wave1, sc.wave2).cohort, {}).wave1;
  std::ostringstream out;
  write_matrix_csv(out, m);
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find(',', text.find(',') + 1)), "id,target");
  EXPECT_NE(matrix_meta_json(m).find("\"slope\""), std::string::npos);
}
