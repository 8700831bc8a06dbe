#include "bioage/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "bioage/error.hpp"
#include "bioage/random.hpp"
#include "bioage/stats.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

EvaluationReport make_report(const std::string& model, SexGroup group, Wave wave, std::span<const double> y,
                             std::span<const double> yhat, const std::string& stratum) {
  return {model, group, wave, r2(y, yhat), rmse(y, yhat), y.size(), stratum};
}

SexFit score(SexGroup group, AnyModel model, const FeatureMatrix& s1, const FeatureMatrix& s2,
             const std::string& stratum) {
  SexFit fit;
  fit.group = group;
  fit.row_ids = s1.row_ids;
  fit.pred_wave1 = predict(model, s1);
  fit.pred_wave2 = predict(model, s2);
  fit.age_wave1 = s1.target.read_all();
  fit.age_wave2 = s2.target.read_all();
  const std::string name(to_string(kind_of(model)));
  fit.train = make_report(name, group, Wave::kWave1, fit.age_wave1, fit.pred_wave1, stratum);
  fit.test = make_report(name, group, Wave::kWave2, fit.age_wave2, fit.pred_wave2, stratum);
  fit.model = std::move(model);
  return fit;
}

}  // namespace

AnyModel fit_model(const ModelSpec& spec, const FeatureMatrix& x, std::span<const double> y) {
  switch (spec.kind) {
    case ModelKind::kGbm: return fit(x, y, spec.gbm);
    case ModelKind::kRf: return rf_fit(x, y, spec.rf);
    case ModelKind::kEnet: return enet_fit(x, y, spec.enet);
  }
  fail(ErrorCode::kConfig, "unknown model kind");
}

std::vector<EvaluationReport> TemporalResult::reports() const {
  std::vector<EvaluationReport> out;
  for (const auto& f : fits) {
    out.push_back(f.train);
    out.push_back(f.test);
  }
  return out;
}

std::vector<SexGroup> sex_groups(bool per_sex) {
  if (per_sex) return {SexGroup::kFemale, SexGroup::kMale};
  return {SexGroup::kAll};
}

void check_same_schema(const FeatureMatrix& w1, const FeatureMatrix& w2) {
  if (w1.feature_names() != w2.feature_names()) {
    fail(ErrorCode::kAlignment, "wave-1 and wave-2 feature schemas differ");
  }
  if (w1.row_ids != w2.row_ids) fail(ErrorCode::kAlignment, "wave-1 and wave-2 matrices cover different ids");
}

TemporalResult temporal_evaluate(const FeatureMatrix& w1, const FeatureMatrix& w2, const ModelSpec& spec,
                                 bool per_sex, const std::string& stratum) {
  return temporal_evaluate(w1, w2, spec, sex_groups(per_sex), stratum);
}

TemporalResult temporal_evaluate(const FeatureMatrix& w1, const FeatureMatrix& w2, const ModelSpec& spec,
                                 const std::vector<SexGroup>& groups, const std::string& stratum) {
  check_same_schema(w1, w2);
  TemporalResult result;
  std::vector<std::pair<SexGroup, AnyModel>> models;
  const std::size_t before = w2.target.reads();
  for (auto g : groups) {
    const auto rows = rows_of(w1, g);
    if (rows.empty()) fail(ErrorCode::kInsufficientGroup, "no rows for group " + std::string(to_string(g)));
    const auto train = select_rows(w1, rows);
    const auto y = train.target.read_all();
    models.emplace_back(g, fit_model(spec, train, y));
  }
  result.wave2_target_reads_during_fit = w2.target.reads() - before;
  for (auto& [g, model] : models) {
    const auto rows = rows_of(w1, g);
    result.fits.push_back(score(g, std::move(model), select_rows(w1, rows), select_rows(w2, rows), stratum));
  }
  return result;
}

TemporalResult evaluate_fitted(const std::vector<std::pair<SexGroup, AnyModel>>& models, const FeatureMatrix& w1,
                               const FeatureMatrix& w2) {
  check_same_schema(w1, w2);
  TemporalResult result;
  for (const auto& [g, model] : models) {
    const auto rows = rows_of(w1, g);
    if (rows.empty()) fail(ErrorCode::kInsufficientGroup, "no rows for group " + std::string(to_string(g)));
    result.fits.push_back(score(g, model, select_rows(w1, rows), select_rows(w2, rows), {}));
  }
  return result;
}

std::vector<BaDeltaRecord> ba_delta(std::span<const std::string> ids, std::span<const double> predictions,
                                    std::span<const double> ages, Wave wave) {
  if (ids.size() != predictions.size() || ids.size() != ages.size()) {
    fail(ErrorCode::kValidation, "ba_delta: length mismatch");
  }
  std::vector<BaDeltaRecord> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.push_back({ids[i], wave, predictions[i], ages[i], predictions[i] - ages[i]});
  }
  return out;
}

std::vector<BaDeltaRecord> ba_deltas(const TemporalResult& r, Wave wave) {
  std::vector<BaDeltaRecord> out;
  for (const auto& f : r.fits) {
    const bool w1 = wave == Wave::kWave1;
    auto part = ba_delta(f.row_ids, w1 ? f.pred_wave1 : f.pred_wave2, w1 ? f.age_wave1 : f.age_wave2, wave);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

ExtremeAgers extreme_agers(const std::vector<BaDeltaRecord>& wave1, const std::vector<BaDeltaRecord>& wave2,
                           const FeatureMatrix& baseline, double decile, std::size_t permutations,
                           std::uint64_t seed) {
  if (!(decile > 0.0 && decile <= 0.5)) fail(ErrorCode::kConfig, "decile must be in (0, 0.5]");
  std::unordered_map<std::string_view, double> d2;
  for (const auto& r : wave2) d2.emplace(r.id, r.delta);
  std::vector<std::pair<double, std::string>> change;
  for (const auto& r : wave1) {
    auto it = d2.find(r.id);
    if (it == d2.end()) fail(ErrorCode::kAlignment, "id '" + r.id + "' has no wave-2 delta");
    change.emplace_back(it->second - r.delta, r.id);
  }
  const std::size_t n = change.size();
  const double group_size = static_cast<double>(n) * decile;
  if (group_size < 5.0) {
    fail(ErrorCode::kInsufficientGroup, "extreme-ager groups need n * decile >= 5 (have " +
                                            detail::format_double(group_size) + ")");
  }
  const auto k = static_cast<std::size_t>(std::floor(group_size + 1e-9));
  std::sort(change.begin(), change.end());

  ExtremeAgers out;
  for (const auto& [c, id] : change) {
    out.ids.push_back(id);
    out.change.push_back(c);
  }
  for (std::size_t i = 0; i < k; ++i) {
    out.slowest.push_back(change[i].second);
    out.fastest.push_back(change[n - 1 - i].second);
  }

  std::unordered_map<std::string_view, std::size_t> row;
  for (std::size_t i = 0; i < baseline.rows(); ++i) row.emplace(baseline.row_ids[i], i);
  auto rows_for = [&](const std::vector<std::string>& ids) {
    std::vector<std::size_t> r;
    for (const auto& id : ids) {
      auto it = row.find(id);
      if (it == row.end()) fail(ErrorCode::kAlignment, "id '" + id + "' missing from baseline matrix");
      r.push_back(it->second);
    }
    return r;
  };
  const auto fast_rows = rows_for(out.fastest);
  const auto slow_rows = rows_for(out.slowest);
  for (std::size_t j = 0; j < baseline.cols(); ++j) {
    const auto& meta = baseline.columns[j];
    if (meta.kind != FeatureKind::kBaseline) continue;
    std::vector<double> a, b;
    for (auto i : fast_rows) a.push_back(baseline.at(i, j));
    for (auto i : slow_rows) b.push_back(baseline.at(i, j));
    const auto test = permutation_test_mean_diff(a, b, permutations, stream_key(seed, "extreme_agers", meta.name));
    out.comparisons.push_back({meta.name, mean(a), mean(b), test.observed, test.p_value});
  }
  return out;
}

std::optional<Stratifier> parse_stratifier(std::string_view s) {
  if (s == "none" || s == "all") return Stratifier::kNone;
  if (s == "age") return Stratifier::kAge;
  if (s == "bmi") return Stratifier::kBmi;
  return std::nullopt;
}

std::string_view to_string(Stratifier s) {
  switch (s) {
    case Stratifier::kNone: return "none";
    case Stratifier::kAge: return "age";
    case Stratifier::kBmi: return "bmi";
  }
  return "none";
}

std::vector<Stratum> stratify(const FeatureMatrix& w1, Stratifier s) {
  const std::size_t n = w1.rows();
  switch (s) {
    case Stratifier::kNone: {
      Stratum all{"all", {}};
      for (std::size_t i = 0; i < n; ++i) all.rows.push_back(i);
      return {all};
    }
    case Stratifier::kAge: {
      std::vector<Stratum> out{{"age<55", {}}, {"age>=55", {}}};
      const auto age = w1.target.read_all();
      for (std::size_t i = 0; i < n; ++i) out[age[i] < 55.0 ? 0 : 1].rows.push_back(i);
      return out;
    }
    case Stratifier::kBmi: {
      auto j = w1.column_index(kBmiColumn);
      if (!j) fail(ErrorCode::kConfig, "bmi stratifier needs a baseline 'bmi' column");
      std::vector<Stratum> out{{"bmi<25", {}}, {"bmi25-30", {}}, {"bmi>=30", {}}};
      for (std::size_t i = 0; i < n; ++i) {
        const double v = w1.at(i, *j);
        out[v < 25.0 ? 0 : (v < 30.0 ? 1 : 2)].rows.push_back(i);
      }
      return out;
    }
  }
  return {};
}

SubgroupResult subgroup_eval(const FeatureMatrix& w1, const FeatureMatrix& w2, Stratifier s, const ModelSpec& spec,
                             bool per_sex, std::size_t min_size) {
  check_same_schema(w1, w2);
  SubgroupResult out;
  for (const auto& stratum : stratify(w1, s)) {
    out.stratum_sizes.emplace_back(stratum.label, stratum.rows.size());
    const auto s1 = select_rows(w1, stratum.rows);
    const auto s2 = select_rows(w2, stratum.rows);
    for (auto g : sex_groups(per_sex)) {
      const std::size_t n = rows_of(s1, g).size();
      if (n < min_size) {
        out.warnings.push_back("stratum " + stratum.label + " / " + std::string(to_string(g)) + " skipped: n=" +
                               std::to_string(n) + " < " + std::to_string(min_size));
        continue;
      }
      const auto r = temporal_evaluate(s1, s2, spec, std::vector<SexGroup>{g}, stratum.label);
      out.wave2_target_reads_during_fit += r.wave2_target_reads_during_fit;
      for (auto& rep : r.reports()) out.reports.push_back(rep);
    }
  }
  return out;
}

SystemAnalysis system_analysis(const FeatureMatrix& w1, const FeatureMatrix& w2, const ModelSpec& spec) {
  check_same_schema(w1, w2);
  SystemAnalysis out;
  for (auto tag : kNamedSystems) {
    SystemResult sr;
    sr.system = tag;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < w1.cols(); ++j) {
      if (w1.columns[j].system == tag) {
        cols.push_back(j);
        sr.features.push_back(w1.columns[j].name);
      }
    }
    if (cols.empty()) {
      sr.skipped = true;
      out.warnings.push_back("system " + std::string(to_string(tag)) + " has no features; skipped");
      out.systems.push_back(std::move(sr));
      continue;
    }
    const auto r = temporal_evaluate(select_columns(w1, cols), select_columns(w2, cols), spec, true);
    out.wave2_target_reads_during_fit += r.wave2_target_reads_during_fit;
    sr.reports = r.reports();
    for (const auto& f : r.fits) {
      sr.row_ids.insert(sr.row_ids.end(), f.row_ids.begin(), f.row_ids.end());
      sr.score.insert(sr.score.end(), f.pred_wave2.begin(), f.pred_wave2.end());
    }
    out.systems.push_back(std::move(sr));
  }

  std::unordered_map<std::string_view, Sex> sex_of;
  for (std::size_t i = 0; i < w1.rows(); ++i) sex_of.emplace(w1.row_ids[i], w1.sex[i]);
  auto scores_for = [&](const SystemResult& sr, Sex sex) {
    std::map<std::string_view, double> by_id;
    for (std::size_t i = 0; i < sr.row_ids.size(); ++i) {
      if (sex_of.at(sr.row_ids[i]) == sex) by_id.emplace(sr.row_ids[i], sr.score[i]);
    }
    std::vector<double> v;
    for (const auto& [id, s] : by_id) v.push_back(s);
    return v;
  };
  const std::size_t k = kNamedSystems.size();
  for (Sex sex : {Sex::kFemale, Sex::kMale}) {
    auto& m = sex == Sex::kFemale ? out.corr_female : out.corr_male;
    std::vector<std::vector<double>> scores(k);
    for (std::size_t a = 0; a < k; ++a) {
      if (!out.systems[a].skipped) scores[a] = scores_for(out.systems[a], sex);
    }
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        m[a][b] = kNaN;
        if (scores[a].empty() || scores[b].empty()) continue;
        if (a > b) {
          m[a][b] = m[b][a];
          continue;
        }
        try {
          m[a][b] = a == b ? 1.0 : pearson(scores[a], scores[b]);
        } catch (const Error&) {
          m[a][b] = kNaN;
        }
      }
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) out.corr_diff[a][b] = out.corr_female[a][b] - out.corr_male[a][b];
  }
  return out;
}

std::string reports_json(const std::vector<EvaluationReport>& reports) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& r : reports) {
    auto& base = r.stratum.empty() ? doc : doc[r.stratum];
    base[r.model][std::string(to_string(r.sex))][std::string(to_string(r.wave))] = {
        {"r2", r.r2}, {"rmse", r.rmse}, {"n", r.n}};
  }
  return doc.dump(2) + "\n";
}

std::string reports_table(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-6s %-8s %-6s %10s %10s %6s\n", "stratum", "model", "sex", "wave", "r2",
                "rmse", "n");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-10s %-6s %-8s %-6s %10.4f %10.4f %6zu\n",
                  r.stratum.empty() ? "-" : r.stratum.c_str(), r.model.c_str(), std::string(to_string(r.sex)).c_str(),
                  std::string(to_string(r.wave)).c_str(), r.r2, r.rmse, r.n);
    out << line;
  }
  return out.str();
}

void write_ba_deltas(std::ostream& out, const std::vector<BaDeltaRecord>& records) {
  detail::write_csv_row(out, {"id", "wave", "predicted_age", "chronological_age", "delta"});
  for (const auto& r : records) {
    detail::write_csv_row(out, {r.id, std::string(to_string(r.wave)), detail::format_double(r.predicted),
                                detail::format_double(r.ca), detail::format_double(r.delta)});
  }
}

void write_extreme_agers(std::ostream& out, const ExtremeAgers& ea) {
  detail::write_csv_row(out, {"feature", "mean_fastest", "mean_slowest", "difference", "p_value"});
  for (const auto& c : ea.comparisons) {
    detail::write_csv_row(out, {c.feature, detail::format_double(c.mean_fastest), detail::format_double(c.mean_slowest),
                                detail::format_double(c.difference), detail::format_double(c.p_value)});
  }
}

void write_extreme_groups(std::ostream& out, const ExtremeAgers& ea) {
  detail::write_csv_row(out, {"id", "group", "delta_change"});
  std::unordered_map<std::string_view, const char*> group;
  for (const auto& id : ea.fastest) group.emplace(id, "fastest");
  for (const auto& id : ea.slowest) group.emplace(id, "slowest");
  for (std::size_t i = 0; i < ea.ids.size(); ++i) {
    auto it = group.find(ea.ids[i]);
    detail::write_csv_row(out, {ea.ids[i], it == group.end() ? "middle" : it->second, detail::format_double(ea.change[i])});
  }
}

void write_system_r2(std::ostream& out, const SystemAnalysis& sa) {
  detail::write_csv_row(out, {"system", "sex", "n_features", "train_r2", "test_r2", "test_rmse", "n"});
  for (const auto& s : sa.systems) {
    if (s.skipped) continue;
    for (std::size_t k = 0; k + 1 < s.reports.size(); k += 2) {
      const auto& train = s.reports[k];
      const auto& test = s.reports[k + 1];
      detail::write_csv_row(out, {std::string(to_string(s.system)), std::string(to_string(test.sex)),
                                  std::to_string(s.features.size()), detail::format_double(train.r2),
                                  detail::format_double(test.r2), detail::format_double(test.rmse),
                                  std::to_string(test.n)});
    }
  }
}

void write_system_matrix(std::ostream& out, const SystemMatrix& m) {
  std::vector<std::string> fields{"system"};
  for (auto tag : kNamedSystems) fields.emplace_back(to_string(tag));
  detail::write_csv_row(out, fields);
  for (std::size_t a = 0; a < kNamedSystems.size(); ++a) {
    fields.assign(1, std::string(to_string(kNamedSystems[a])));
    for (std::size_t b = 0; b < kNamedSystems.size(); ++b) fields.push_back(detail::format_double(m[a][b]));
    detail::write_csv_row(out, fields);
  }
}

}  // namespace bioage
