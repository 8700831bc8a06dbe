#include "bioage/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "bioage/error.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

std::size_t sex_slot(Sex s) { return s == Sex::kFemale ? 0 : 1; }

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBaseline: return "baseline";
    case FeatureKind::kInteraction: return "interaction";
    case FeatureKind::kSlope: return "slope";
  }
  return "baseline";
}

std::vector<std::string> FeatureMatrix::feature_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return j;
  }
  return std::nullopt;
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.columns = m.columns;
  out.values.reserve(rows.size() * m.cols());
  for (auto i : rows) {
    out.row_ids.push_back(m.row_ids[i]);
    out.sex.push_back(m.sex[i]);
    auto r = m.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  out.target = m.target.subset(rows);
  return out;
}

FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::size_t> cols) {
  FeatureMatrix out;
  out.row_ids = m.row_ids;
  out.sex = m.sex;
  for (auto j : cols) out.columns.push_back(m.columns[j]);
  out.values.reserve(m.rows() * cols.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (auto j : cols) out.values.push_back(m.at(i, j));
  }
  std::vector<std::size_t> all(m.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  out.target = m.target.subset(all);
  return out;
}

std::vector<std::size_t> rows_of(const FeatureMatrix& m, SexGroup group) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (contains(group, m.sex[i])) out.push_back(i);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::kUnimputable, "median of an empty set");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lo + (hi - lo) / 2.0;
}

SexMedians compute_sex_medians(const CohortTable& t) {
  SexMedians out;
  for (std::size_t j = 0; j < t.biomarker_columns.size(); ++j) {
    std::array<std::vector<double>, 2> observed;
    for (const auto& r : t.rows) {
      if (r.biomarkers[j]) observed[sex_slot(r.sex)].push_back(*r.biomarkers[j]);
    }
    auto& slot = out[t.biomarker_columns[j].name];
    for (std::size_t s = 0; s < 2; ++s) {
      if (!observed[s].empty()) slot[s] = median(std::move(observed[s]));
    }
  }
  return out;
}

ImputationResult apply_sex_medians(const CohortTable& t, const SexMedians& medians) {
  ImputationResult result;
  result.table = t;
  for (std::size_t j = 0; j < t.biomarker_columns.size(); ++j) {
    const auto& name = t.biomarker_columns[j].name;
    std::array<std::size_t, 2> filled{0, 0};
    auto it = medians.find(name);
    for (auto& r : result.table.rows) {
      if (r.biomarkers[j]) continue;
      const auto s = sex_slot(r.sex);
      if (it == medians.end() || !it->second[s]) {
        fail(ErrorCode::kUnimputable, "column '" + name + "' has no observed values for sex " +
                                          std::string(to_string(r.sex)));
      }
      r.biomarkers[j] = *it->second[s];
      ++filled[s];
    }
    for (std::size_t s = 0; s < 2; ++s) {
      if (filled[s] == 0) continue;
      result.log.push_back({name, s == 0 ? Sex::kFemale : Sex::kMale, *it->second[s], filled[s]});
    }
  }
  return result;
}

ImputationResult impute_sex_median(const CohortTable& t) { return apply_sex_medians(t, compute_sex_medians(t)); }

double compute_slope(double y1, double y2, double t1, double t2) {
  if (!(t2 > t1)) fail(ErrorCode::kChronology, "slope requires t2 > t1");
  return (y2 - y1) / (t2 - t1);
}

Cell compute_slope(Cell y1, Cell y2, double t1, double t2) {
  if (!(t2 > t1)) fail(ErrorCode::kChronology, "slope requires t2 > t1");
  if (!y1 || !y2) return std::nullopt;
  return compute_slope(*y1, *y2, t1, t2);
}

SlopeTable compute_slopes(const LongitudinalCohort& c, const std::vector<std::string>& columns) {
  SlopeTable out;
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (const auto& name : columns) {
    auto j1 = c.wave1.column_index(name);
    auto j2 = c.wave2.column_index(name);
    if (!j1 || !j2) fail(ErrorCode::kConfig, "slope column '" + name + "' is not present in both waves");
    slots.emplace_back(*j1, *j2);
    out.columns.push_back(name + "_slope");
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& r1 = c.wave1.rows[i];
    const auto& r2 = c.wave2.rows[i];
    out.ids.push_back(r1.id);
    out.sex.push_back(r1.sex);
    std::vector<Cell> row;
    row.reserve(slots.size());
    for (auto [j1, j2] : slots) {
      row.push_back(compute_slope(r1.biomarkers[j1], r2.biomarkers[j2], 0.0, c.elapsed_years[i]));
    }
    out.values.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> shared_biomarkers(const LongitudinalCohort& c) {
  std::vector<std::string> out;
  for (const auto& col : c.wave1.biomarker_columns) {
    if (c.wave2.column_index(col.name)) out.push_back(col.name);
  }
  return out;
}

Interactions interaction_features(double bmi, double systolic_bp, double waist_to_hip_ratio) {
  return {bmi * systolic_bp, waist_to_hip_ratio * waist_to_hip_ratio};
}

std::optional<SlopePolicy> parse_slope_policy(std::string_view s) {
  if (s == "median") return SlopePolicy::kMedian;
  if (s == "drop" || s == "drop-row") return SlopePolicy::kDrop;
  return std::nullopt;
}

std::string_view to_string(SlopePolicy p) { return p == SlopePolicy::kMedian ? "median" : "drop"; }

FeatureMatrix assemble_matrix(const CohortTable& baseline, const SlopeTable& slopes, SlopePolicy policy,
                              const Catalog& catalog) {
  const std::size_t n = baseline.rows.size();
  std::unordered_map<std::string_view, std::size_t> slope_row;
  for (std::size_t i = 0; i < slopes.ids.size(); ++i) slope_row.emplace(slopes.ids[i], i);
  if (slope_row.size() != n) {
    fail(ErrorCode::kAlignment, "slope table has " + std::to_string(slopes.ids.size()) + " ids, baseline has " +
                                    std::to_string(n));
  }
  std::vector<std::size_t> slope_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = slope_row.find(baseline.rows[i].id);
    if (it == slope_row.end()) {
      fail(ErrorCode::kAlignment, "id '" + baseline.rows[i].id + "' missing from slope table");
    }
    slope_of[i] = it->second;
  }

  FeatureMatrix m;
  for (const auto& c : baseline.biomarker_columns) {
    m.columns.push_back({c.name, FeatureKind::kBaseline, c.system, c.unit});
  }
  const auto bmi = baseline.column_index(kBmiColumn);
  const auto sbp = baseline.column_index(kSystolicColumn);
  const auto whr = baseline.column_index(kWhrColumn);
  const bool with_bmi_bp = bmi && sbp;
  const bool with_whr2 = whr.has_value();
  for (std::string_view name : {kBmiBpInteraction, kWhrSquared}) {
    if ((name == kBmiBpInteraction && !with_bmi_bp) || (name == kWhrSquared && !with_whr2)) continue;
    m.columns.push_back({std::string(name), FeatureKind::kInteraction, catalog.system_of(name),
                         catalog.unit_of(name)});
  }
  for (const auto& name : slopes.columns) {
    m.columns.push_back({name, FeatureKind::kSlope, catalog.system_of(name), catalog.unit_of(name)});
  }

  // Sex medians of computed slopes, from an untouched scan of the slope table.
  const std::size_t ns = slopes.columns.size();
  std::vector<std::array<std::optional<double>, 2>> slope_median(ns);
  if (policy == SlopePolicy::kMedian) {
    for (std::size_t k = 0; k < ns; ++k) {
      std::array<std::vector<double>, 2> obs;
      for (std::size_t i = 0; i < slopes.ids.size(); ++i) {
        if (slopes.values[i][k]) obs[sex_slot(slopes.sex[i])].push_back(*slopes.values[i][k]);
      }
      for (std::size_t s = 0; s < 2; ++s) {
        if (obs[s].empty()) continue;
        slope_median[k][s] = median(std::move(obs[s]));
      }
    }
  }

  std::vector<double> target;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = baseline.rows[i];
    const auto& srow = slopes.values[slope_of[i]];
    if (slopes.sex[slope_of[i]] != r.sex) fail(ErrorCode::kAlignment, "sex mismatch for id '" + r.id + "'");
    if (policy == SlopePolicy::kDrop &&
        std::any_of(srow.begin(), srow.end(), [](const Cell& c) { return !c.has_value(); })) {
      continue;
    }
    const std::size_t start = m.values.size();
    for (std::size_t j = 0; j < r.biomarkers.size(); ++j) {
      if (!r.biomarkers[j]) {
        fail(ErrorCode::kValidation, "baseline column '" + baseline.biomarker_columns[j].name +
                                         "' has a Missing cell for id '" + r.id + "'; impute first");
      }
      m.values.push_back(*r.biomarkers[j]);
    }
    if (with_bmi_bp || with_whr2) {
      const double b = with_bmi_bp ? *r.biomarkers[*bmi] : 0.0;
      const double p = with_bmi_bp ? *r.biomarkers[*sbp] : 0.0;
      const double w = with_whr2 ? *r.biomarkers[*whr] : 0.0;
      const auto inter = interaction_features(b, p, w);
      if (with_bmi_bp) m.values.push_back(inter.bmi_bp_interaction);
      if (with_whr2) m.values.push_back(inter.whr_squared);
    }
    for (std::size_t k = 0; k < ns; ++k) {
      if (srow[k]) {
        m.values.push_back(*srow[k]);
        continue;
      }
      const auto& fill = slope_median[k][sex_slot(r.sex)];
      if (!fill) {
        fail(ErrorCode::kUnimputable, "slope column '" + slopes.columns[k] + "' has no observed values for sex " +
                                          std::string(to_string(r.sex)));
      }
      m.values.push_back(*fill);
    }
    for (std::size_t j = start; j < m.values.size(); ++j) {
      if (!std::isfinite(m.values[j])) fail(ErrorCode::kValidation, "non-finite feature for id '" + r.id + "'");
    }
    m.row_ids.push_back(r.id);
    m.sex.push_back(r.sex);
    target.push_back(r.age_years);
  }
  m.target = AuditedVector(std::move(target));
  return m;
}

WaveMatrices build_wave_matrices(const LongitudinalCohort& c, const FeatureOptions& opts, const Catalog& catalog) {
  const auto names1 = c.wave1.column_names();
  const auto names2 = c.wave2.column_names();
  if (names1 != names2) fail(ErrorCode::kAlignment, "wave files have different biomarker columns");

  WaveMatrices out;
  const auto medians = compute_sex_medians(c.wave1);
  auto imp1 = apply_sex_medians(c.wave1, medians);
  auto imp2 = apply_sex_medians(c.wave2, medians);
  out.imputation_wave1 = std::move(imp1.log);
  out.imputation_wave2 = std::move(imp2.log);

  SlopeTable slopes;
  if (opts.include_slopes) {
    slopes = compute_slopes(c, opts.slope_columns.empty() ? shared_biomarkers(c) : opts.slope_columns);
  } else {
    for (std::size_t i = 0; i < c.size(); ++i) {
      slopes.ids.push_back(c.wave1.rows[i].id);
      slopes.sex.push_back(c.wave1.rows[i].sex);
      slopes.values.emplace_back();
    }
  }
  out.wave1 = assemble_matrix(imp1.table, slopes, opts.policy, catalog);
  out.wave2 = assemble_matrix(imp2.table, slopes, opts.policy, catalog);
  return out;
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
  std::vector<std::string> fields{"id", "target"};
  for (const auto& c : m.columns) fields.push_back(c.name);
  detail::write_csv_row(out, fields);
  const auto target = m.target.read_all();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    fields.clear();
    fields.push_back(m.row_ids[i]);
    fields.push_back(detail::format_double(target[i]));
    for (double v : m.row(i)) fields.push_back(detail::format_double(v));
    detail::write_csv_row(out, fields);
  }
}

std::string matrix_meta_json(const FeatureMatrix& m) {
  nlohmann::json doc;
  doc["rows"] = m.rows();
  auto& cols = doc["columns"] = nlohmann::json::array();
  for (const auto& c : m.columns) {
    cols.push_back({{"name", c.name},
                    {"kind", to_string(c.kind)},
                    {"system", to_string(c.system)},
                    {"unit", c.unit}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace bioage
