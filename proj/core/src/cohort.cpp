#include "bioage/cohort.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "bioage/error.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

constexpr std::string_view kFlagPrefix = "excl_";
constexpr std::array<std::string_view, 4> kFixedColumns = {"id", "sex", "age_years", "collection_date"};

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return -1;
  return v;
}

std::string where(std::size_t line, std::string_view column) {
  return "line " + std::to_string(line) + ", column '" + std::string(column) + "'";
}

bool parse_flag(std::string_view text, bool& out) {
  text = detail::trim(text);
  if (text.empty() || text == "0" || text == "false") {
    out = false;
    return true;
  }
  if (text == "1" || text == "true") {
    out = true;
    return true;
  }
  return false;
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
  text = detail::trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const int y = parse_int(text.substr(0, 4));
  const int m = parse_int(text.substr(5, 2));
  const int d = parse_int(text.substr(8, 2));
  if (y < 0 || m < 0 || d < 0) return std::nullopt;
  Date date{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
            std::chrono::day(static_cast<unsigned>(d))};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_iso_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

DateRange wave_date_range(Wave wave) {
  using namespace std::chrono;
  if (wave == Wave::kWave1) return {year(2019) / January / 1, year(2020) / December / 31};
  return {year(2021) / January / 1, year(2022) / December / 31};
}

double years_between(Date from, Date to) {
  const auto days = (std::chrono::sys_days(to) - std::chrono::sys_days(from)).count();
  return static_cast<double>(days) / kDaysPerYear;
}

std::optional<std::size_t> CohortTable::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < biomarker_columns.size(); ++j) {
    if (biomarker_columns[j].name == name) return j;
  }
  return std::nullopt;
}

std::optional<std::size_t> CohortTable::row_index(std::string_view id) const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> CohortTable::column_names() const {
  std::vector<std::string> names;
  for (const auto& c : biomarker_columns) names.push_back(c.name);
  return names;
}

CohortTable read_wave(std::istream& in, Wave wave, const Catalog& catalog) {
  std::string line;
  if (!detail::read_line(in, line)) fail(ErrorCode::kSchema, "wave file is empty (header required)");
  const auto header = detail::split_csv_line(line);
  if (header.size() < kFixedColumns.size()) {
    fail(ErrorCode::kSchema, "header must start with id,sex,age_years,collection_date");
  }
  for (std::size_t j = 0; j < kFixedColumns.size(); ++j) {
    if (detail::trim(header[j]) != kFixedColumns[j]) {
      fail(ErrorCode::kSchema, "header column " + std::to_string(j + 1) + " must be '" +
                                   std::string(kFixedColumns[j]) + "', found '" + header[j] + "'");
    }
  }

  CohortTable table;
  table.wave = wave;
  std::vector<int> flag_slot(header.size(), -1);
  std::vector<int> marker_slot(header.size(), -1);
  std::set<std::string> seen;
  for (std::size_t j = kFixedColumns.size(); j < header.size(); ++j) {
    const std::string name(detail::trim(header[j]));
    if (name.empty()) fail(ErrorCode::kSchema, "empty column name at position " + std::to_string(j + 1));
    if (!seen.insert(name).second) fail(ErrorCode::kSchema, "duplicate column '" + name + "'");
    if (name.starts_with(kFlagPrefix)) {
      flag_slot[j] = static_cast<int>(table.exclusion_flags.size());
      table.exclusion_flags.push_back(name.substr(kFlagPrefix.size()));
    } else {
      marker_slot[j] = static_cast<int>(table.biomarker_columns.size());
      table.biomarker_columns.push_back({name, catalog.unit_of(name), catalog.system_of(name)});
    }
  }

  const DateRange range = wave_date_range(wave);
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorCode::kSchema, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                   " fields, expected " + std::to_string(header.size()));
    }
    ParticipantRecord rec;
    rec.id = std::string(detail::trim(fields[0]));
    if (rec.id.empty()) fail(ErrorCode::kParse, "empty id at " + where(line_no, "id"));
    if (!ids.insert(rec.id).second) fail(ErrorCode::kDuplicate, "duplicate participant id '" + rec.id + "'");

    auto sex = parse_sex(detail::trim(fields[1]));
    if (!sex) fail(ErrorCode::kParse, "sex must be F or M at " + where(line_no, "sex"));
    rec.sex = *sex;

    auto age = detail::parse_double(fields[2]);
    if (!age || !std::isfinite(*age)) fail(ErrorCode::kParse, "non-numeric age at " + where(line_no, "age_years"));
    if (!(*age > 18.0 && *age < 120.0)) {
      fail(ErrorCode::kValidation, "age outside (18, 120) for id '" + rec.id + "'");
    }
    rec.age_years = *age;

    auto date = parse_iso_date(fields[3]);
    if (!date) fail(ErrorCode::kParse, "invalid ISO date at " + where(line_no, "collection_date"));
    if (!range.contains(*date)) {
      fail(ErrorCode::kValidation, "collection_date " + format_iso_date(*date) + " outside " +
                                       std::string(to_string(wave)) + " range for id '" + rec.id + "'");
    }
    rec.collection_date = *date;

    rec.flags.assign(table.exclusion_flags.size(), false);
    rec.biomarkers.assign(table.biomarker_columns.size(), std::nullopt);
    for (std::size_t j = kFixedColumns.size(); j < fields.size(); ++j) {
      if (flag_slot[j] >= 0) {
        bool v = false;
        if (!parse_flag(fields[j], v)) fail(ErrorCode::kParse, "flag must be 0/1 at " + where(line_no, header[j]));
        rec.flags[static_cast<std::size_t>(flag_slot[j])] = v;
        continue;
      }
      const auto text = detail::trim(fields[j]);
      if (text.empty()) continue;
      auto v = detail::parse_double(text);
      if (!v || !std::isfinite(*v)) {
        fail(ErrorCode::kParse, "non-numeric biomarker value '" + std::string(text) + "' at " +
                                    where(line_no, header[j]));
      }
      rec.biomarkers[static_cast<std::size_t>(marker_slot[j])] = *v;
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

CohortTable load_wave(const std::filesystem::path& path, Wave wave, const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open wave file " + path.string());
  return read_wave(in, wave, catalog);
}

void write_wave(std::ostream& out, const CohortTable& table) {
  std::vector<std::string> fields(kFixedColumns.begin(), kFixedColumns.end());
  for (const auto& f : table.exclusion_flags) fields.push_back(std::string(kFlagPrefix) + f);
  for (const auto& c : table.biomarker_columns) fields.push_back(c.name);
  detail::write_csv_row(out, fields);
  for (const auto& r : table.rows) {
    fields.clear();
    fields.push_back(r.id);
    fields.emplace_back(to_string(r.sex));
    fields.push_back(detail::format_double(r.age_years));
    fields.push_back(format_iso_date(r.collection_date));
    for (bool f : r.flags) fields.emplace_back(f ? "1" : "0");
    for (const auto& v : r.biomarkers) fields.push_back(v ? detail::format_double(*v) : std::string());
    detail::write_csv_row(out, fields);
  }
}

void save_wave(const std::filesystem::path& path, const CohortTable& table) {
  std::ostringstream ss;
  write_wave(ss, table);
  detail::write_file(path, ss.str());
}

PairingResult pair_waves(const CohortTable& w1, const CohortTable& w2) {
  if (w1.wave != Wave::kWave1 || w2.wave != Wave::kWave2) {
    fail(ErrorCode::kValidation, "pair_waves expects a wave1 table and a wave2 table");
  }
  std::map<std::string_view, std::size_t> idx1, idx2;
  for (std::size_t i = 0; i < w1.rows.size(); ++i) idx1.emplace(w1.rows[i].id, i);
  for (std::size_t i = 0; i < w2.rows.size(); ++i) idx2.emplace(w2.rows[i].id, i);

  PairingResult result;
  auto& c = result.cohort;
  c.wave1.wave = Wave::kWave1;
  c.wave1.exclusion_flags = w1.exclusion_flags;
  c.wave1.biomarker_columns = w1.biomarker_columns;
  c.wave2.wave = Wave::kWave2;
  c.wave2.exclusion_flags = w2.exclusion_flags;
  c.wave2.biomarker_columns = w2.biomarker_columns;

  for (const auto& [id, i] : idx1) {
    auto it = idx2.find(id);
    if (it == idx2.end()) {
      result.only_wave1.emplace_back(id);
      continue;
    }
    const auto& r1 = w1.rows[i];
    const auto& r2 = w2.rows[it->second];
    if (r1.sex != r2.sex) fail(ErrorCode::kAlignment, "sex differs between waves for id '" + r1.id + "'");
    if (r2.collection_date <= r1.collection_date) {
      fail(ErrorCode::kChronology, "wave2 date is not after wave1 date for id '" + r1.id + "'");
    }
    c.wave1.rows.push_back(r1);
    c.wave2.rows.push_back(r2);
    c.elapsed_years.push_back(years_between(r1.collection_date, r2.collection_date));
  }
  for (const auto& [id, i] : idx2) {
    if (!idx1.count(id)) result.only_wave2.emplace_back(id);
  }
  if (c.size() == 0) fail(ErrorCode::kEmptyCohort, "no participant ids appear in both waves");
  return result;
}

ExclusionResult apply_exclusions(const LongitudinalCohort& cohort, const std::vector<std::string>& criteria) {
  std::vector<std::size_t> slots;
  ExclusionResult result;
  for (const auto& raw : criteria) {
    std::string name = raw.starts_with(kFlagPrefix) ? raw.substr(kFlagPrefix.size()) : raw;
    const auto& flags = cohort.wave1.exclusion_flags;
    auto it = std::find(flags.begin(), flags.end(), name);
    if (it == flags.end()) fail(ErrorCode::kConfig, "unknown exclusion criterion '" + raw + "'");
    slots.push_back(static_cast<std::size_t>(it - flags.begin()));
    result.removed_per_criterion.emplace_back(name, 0);
  }

  auto& out = result.cohort;
  out.wave1.wave = cohort.wave1.wave;
  out.wave1.exclusion_flags = cohort.wave1.exclusion_flags;
  out.wave1.biomarker_columns = cohort.wave1.biomarker_columns;
  out.wave2.wave = cohort.wave2.wave;
  out.wave2.exclusion_flags = cohort.wave2.exclusion_flags;
  out.wave2.biomarker_columns = cohort.wave2.biomarker_columns;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    bool excluded = false;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (cohort.wave1.rows[i].flags[slots[k]]) {
        ++result.removed_per_criterion[k].second;
        excluded = true;
      }
    }
    if (excluded) {
      ++result.removed_total;
      continue;
    }
    out.wave1.rows.push_back(cohort.wave1.rows[i]);
    out.wave2.rows.push_back(cohort.wave2.rows[i]);
    out.elapsed_years.push_back(cohort.elapsed_years[i]);
  }
  if (out.size() == 0) fail(ErrorCode::kEmptyCohort, "exclusions removed every participant");
  return result;
}

}  // namespace bioage
