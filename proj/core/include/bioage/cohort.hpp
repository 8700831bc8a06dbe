#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bioage/catalog.hpp"
#include "bioage/types.hpp"

namespace bioage {

using Date = std::chrono::year_month_day;

// A biomarker cell: a finite value or explicitly Missing (nullopt).
using Cell = std::optional<double>;

std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

struct DateRange {
  Date first;
  Date last;
  bool contains(Date d) const { return first <= d && d <= last; }
};

// Calendar window of each wave: 2019-2020 and 2021-2022.
DateRange wave_date_range(Wave wave);

inline constexpr double kDaysPerYear = 365.25;
double years_between(Date from, Date to);

struct ColumnMeta {
  std::string name;
  std::string unit;
  SystemTag system = SystemTag::kOther;
};

struct ParticipantRecord {
  std::string id;
  Sex sex = Sex::kFemale;
  double age_years = 0.0;
  Date collection_date{};
  std::vector<Cell> biomarkers;  // aligned with CohortTable::biomarker_columns
  std::vector<bool> flags;       // aligned with CohortTable::exclusion_flags
};

struct CohortTable {
  Wave wave = Wave::kWave1;
  std::vector<std::string> exclusion_flags;  // flag names without the "excl_" prefix
  std::vector<ColumnMeta> biomarker_columns;
  std::vector<ParticipantRecord> rows;

  std::size_t size() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  std::optional<std::size_t> row_index(std::string_view id) const;
  std::vector<std::string> column_names() const;
};

// Parses the wave CSV schema: id,sex,age_years,collection_date,excl_*...,<biomarkers>.
CohortTable read_wave(std::istream& in, Wave wave, const Catalog& catalog = Catalog::builtin());
CohortTable load_wave(const std::filesystem::path& path, Wave wave,
                      const Catalog& catalog = Catalog::builtin());
void write_wave(std::ostream& out, const CohortTable& table);
void save_wave(const std::filesystem::path& path, const CohortTable& table);

// Paired participants. wave1.rows[i] and wave2.rows[i] belong to the same id;
// rows are sorted by id.
struct LongitudinalCohort {
  CohortTable wave1;
  CohortTable wave2;
  std::vector<double> elapsed_years;

  std::size_t size() const { return elapsed_years.size(); }
};

struct PairingResult {
  LongitudinalCohort cohort;
  std::vector<std::string> only_wave1;
  std::vector<std::string> only_wave2;
};

PairingResult pair_waves(const CohortTable& w1, const CohortTable& w2);

struct ExclusionResult {
  LongitudinalCohort cohort;
  std::vector<std::pair<std::string, std::size_t>> removed_per_criterion;
  std::size_t removed_total = 0;
};

// Criterion names may be given with or without the "excl_" prefix.
ExclusionResult apply_exclusions(const LongitudinalCohort& cohort,
                                 const std::vector<std::string>& criteria);

}  // namespace bioage
