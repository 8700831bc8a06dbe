#include "bioage/pipeline.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bioage/error.hpp"
#include "bioage/explain.hpp"
#include "bioage/stats.hpp"
#include "csv.hpp"

namespace bioage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

void read_gbm(const json& j, GbmParams& p) {
  read_opt(j, "n_trees", p.n_trees);
  read_opt(j, "learning_rate", p.learning_rate);
  read_opt(j, "num_leaves", p.num_leaves);
  read_opt(j, "min_samples_leaf", p.min_samples_leaf);
  read_opt(j, "lambda", p.lambda);
  read_opt(j, "gamma", p.gamma);
  read_opt(j, "max_bins", p.max_bins);
  if (j.contains("goss") && !j["goss"].is_null()) {
    GossParams g;
    read_opt(j["goss"], "a", g.a);
    read_opt(j["goss"], "b", g.b);
    p.goss = g;
  }
}

void read_rf(const json& j, ForestParams& p) {
  read_opt(j, "n_trees", p.n_trees);
  read_opt(j, "max_depth", p.max_depth);
  read_opt(j, "min_samples_leaf", p.min_samples_leaf);
  read_opt(j, "feature_subsample", p.feature_subsample);
  read_opt(j, "bootstrap", p.bootstrap);
  read_opt(j, "max_bins", p.max_bins);
}

void read_enet(const json& j, ElasticNetParams& p) {
  read_opt(j, "alpha", p.alpha);
  read_opt(j, "l1_ratio", p.l1_ratio);
  read_opt(j, "max_iter", p.max_iter);
  read_opt(j, "tol", p.tol);
}

json gbm_json(const GbmParams& p) {
  return {{"n_trees", p.n_trees},     {"learning_rate", p.learning_rate}, {"num_leaves", p.num_leaves},
          {"min_samples_leaf", p.min_samples_leaf}, {"lambda", p.lambda}, {"gamma", p.gamma},
          {"max_bins", p.max_bins},   {"goss", p.goss ? json{{"a", p.goss->a}, {"b", p.goss->b}} : json(nullptr)}};
}

json rf_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"feature_subsample", p.feature_subsample},
          {"bootstrap", p.bootstrap},
          {"max_bins", p.max_bins}};
}

json enet_json(const ElasticNetParams& p) {
  return {{"alpha", p.alpha}, {"l1_ratio", p.l1_ratio}, {"max_iter", p.max_iter}, {"tol", p.tol}};
}

std::string sex_code(SexGroup g) {
  switch (g) {
    case SexGroup::kFemale: return "F";
    case SexGroup::kMale: return "M";
    case SexGroup::kAll: return "all";
  }
  return "all";
}

// Collects artifacts written under the output directory and emits the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create output directory " + cfg.out_dir.string());
  }

  void input(const fs::path& path) {
    inputs_.push_back({{"name", path.filename().string()}, {"sha256", detail::sha256_hex(detail::read_file(path))}});
  }

  void write(const std::string& name, const std::string& content) {
    detail::write_file(cfg_.out_dir / name, content);
    artifacts_.push_back({{"name", name}, {"bytes", content.size()}, {"sha256", detail::sha256_hex(content)}});
    result_.artifacts.push_back(name);
  }

  CommandResult& result() { return result_; }

  CommandResult finish() {
    const auto settings = cfg_.settings_json();
    json manifest{{"format", "bioage-manifest"},
                  {"version", 1},
                  {"command", command_},
                  {"seed", cfg_.seed},
                  {"config_hash", detail::sha256_hex(settings)},
                  {"config", json::parse(settings)},
                  {"inputs", inputs_},
                  {"artifacts", artifacts_}};
    result_.manifest = cfg_.out_dir / "manifest.json";
    detail::write_file(result_.manifest, manifest.dump(2) + "\n");
    return std::move(result_);
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  json inputs_ = json::array();
  json artifacts_ = json::array();
  CommandResult result_;
};

template <typename F>
std::string to_text(F&& f) {
  std::ostringstream ss;
  f(ss);
  return ss.str();
}

void require_waves(const RunConfig& cfg) {
  if (cfg.wave1.empty() || cfg.wave2.empty()) fail(ErrorCode::kConfig, "wave1 and wave2 paths are required");
  for (const auto& p : {cfg.wave1, cfg.wave2}) {
    if (!fs::exists(p)) fail(ErrorCode::kIo, "input file does not exist: " + p.string());
  }
}

void note_enet(const AnyModel& m, const std::string& label, std::vector<std::string>& warnings) {
  if (kind_of(m) != ModelKind::kEnet) return;
  const auto& e = std::get<ElasticNetModel>(m);
  if (!e.converged) {
    warnings.push_back("elastic net (" + label + ") did not converge in " + std::to_string(e.iterations) +
                       " sweeps; final max |dw| = " + detail::format_double(e.final_delta));
  }
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text) {
  RunConfig c;
  try {
    const auto j = json::parse(text);
    if (j.contains("wave1")) c.wave1 = j["wave1"].get<std::string>();
    if (j.contains("wave2")) c.wave2 = j["wave2"].get<std::string>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("catalog") && !j["catalog"].is_null()) c.catalog = j["catalog"].get<std::string>();
    if (j.contains("model")) {
      const auto s = j["model"].get<std::string>();
      auto k = parse_model_kind(s);
      if (!k) fail(ErrorCode::kConfig, "unknown model '" + s + "'");
      c.model.kind = *k;
    }
    if (j.contains("gbm")) read_gbm(j["gbm"], c.model.gbm);
    if (j.contains("rf")) read_rf(j["rf"], c.model.rf);
    if (j.contains("enet")) read_enet(j["enet"], c.model.enet);
    read_opt(j, "slope_columns", c.slope_columns);
    if (j.contains("slope_policy")) {
      const auto s = j["slope_policy"].get<std::string>();
      auto p = parse_slope_policy(s);
      if (!p) fail(ErrorCode::kConfig, "unknown slope_policy '" + s + "'");
      c.slope_policy = *p;
    }
    if (j.contains("stratifier")) {
      const auto s = j["stratifier"].get<std::string>();
      auto st = parse_stratifier(s);
      if (!st) fail(ErrorCode::kConfig, "unknown stratifier '" + s + "'");
      c.stratifier = *st;
    }
    read_opt(j, "exclusions", c.exclusions);
    read_opt(j, "sex", c.sex);
    read_opt(j, "seed", c.seed);
    read_opt(j, "decile", c.decile);
    read_opt(j, "permutations", c.permutations);
    if (j.contains("synth")) {
      c.synth = j["synth"].is_string() ? SynthConfig::from_json(detail::read_file(j["synth"].get<std::string>()))
                                       : SynthConfig::from_json(j["synth"].dump());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("run config: ") + e.what());
  }
  c.propagate_seed();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) { return from_json(detail::read_file(path)); }

void RunConfig::propagate_seed() {
  model.gbm.seed = seed;
  model.rf.seed = seed;
  synth.seed = seed;
}

void RunConfig::validate() const {
  if (sex != "F" && sex != "M" && sex != "both") fail(ErrorCode::kConfig, "sex must be F, M or both");
  model.gbm.validate();
  model.rf.validate();
  model.enet.validate();
  synth.validate();
  if (!(decile > 0.0 && decile <= 0.5)) fail(ErrorCode::kConfig, "decile must be in (0, 0.5]");
  if (catalog && !fs::exists(*catalog)) fail(ErrorCode::kIo, "catalog file does not exist: " + catalog->string());
}

std::vector<SexGroup> RunConfig::groups() const {
  if (sex == "F") return {SexGroup::kFemale};
  if (sex == "M") return {SexGroup::kMale};
  return {SexGroup::kFemale, SexGroup::kMale};
}

std::string RunConfig::settings_json() const {
  json j{{"model", to_string(model.kind)},
         {"gbm", gbm_json(model.gbm)},
         {"rf", rf_json(model.rf)},
         {"enet", enet_json(model.enet)},
         {"slope_columns", slope_columns},
         {"slope_policy", to_string(slope_policy)},
         {"stratifier", to_string(stratifier)},
         {"exclusions", exclusions},
         {"sex", sex},
         {"seed", seed},
         {"decile", decile},
         {"permutations", permutations},
         {"synth", json::parse(synth.to_json())}};
  return j.dump();
}

std::string model_file_name(ModelKind kind, SexGroup group) {
  return "model_" + std::string(to_string(kind)) + "_" + sex_code(group) + ".json";
}

PreparedCohort prepare_cohort(const RunConfig& cfg, bool include_slopes) {
  require_waves(cfg);
  const Catalog catalog = cfg.catalog ? Catalog::load(cfg.catalog->string()) : Catalog::builtin();
  PreparedCohort out;
  const auto w1 = load_wave(cfg.wave1, Wave::kWave1, catalog);
  const auto w2 = load_wave(cfg.wave2, Wave::kWave2, catalog);
  auto paired = pair_waves(w1, w2);
  if (!paired.only_wave1.empty() || !paired.only_wave2.empty()) {
    out.warnings.push_back("pairing dropped " + std::to_string(paired.only_wave1.size()) + " wave-1-only and " +
                           std::to_string(paired.only_wave2.size()) + " wave-2-only ids");
  }
  auto excluded = apply_exclusions(paired.cohort, cfg.exclusions);
  for (const auto& [name, count] : excluded.removed_per_criterion) {
    out.warnings.push_back("exclusion " + name + " removed " + std::to_string(count) + " participants");
  }
  out.cohort = std::move(excluded.cohort);
  FeatureOptions opts;
  opts.slope_columns = cfg.slope_columns;
  opts.include_slopes = include_slopes;
  opts.policy = cfg.slope_policy;
  out.matrices = build_wave_matrices(out.cohort, opts, catalog);
  const std::size_t dropped = out.cohort.size() - out.matrices.wave1.rows();
  if (dropped > 0) out.warnings.push_back("slope policy drop removed " + std::to_string(dropped) + " participants");
  return out;
}

CommandResult cmd_synth(const RunConfig& cfg) {
  cfg.validate();
  ArtifactWriter w(cfg, "synth");
  const auto cohort = generate_cohort(cfg.synth);
  w.write("wave1.csv", to_text([&](std::ostream& o) { write_wave(o, cohort.wave1); }));
  w.write("wave2.csv", to_text([&](std::ostream& o) { write_wave(o, cohort.wave2); }));
  w.write("ground_truth.csv", to_text([&](std::ostream& o) { write_ground_truth(o, cohort.truth); }));
  w.write("synth_config.json", cfg.synth.to_json());
  w.result().text = "generated " + std::to_string(cohort.wave1.size()) + " participants (" +
                    std::to_string(cfg.synth.n_female) + " F, " + std::to_string(cfg.synth.n_male) + " M)\n";
  return w.finish();
}

CommandResult cmd_train(const RunConfig& cfg) {
  cfg.validate();
  ArtifactWriter w(cfg, "train");
  w.input(cfg.wave1);
  w.input(cfg.wave2);
  auto prep = prepare_cohort(cfg);
  auto& res = w.result();
  res.warnings = prep.warnings;
  const auto& m1 = prep.matrices.wave1;
  w.write("features_wave1.csv", to_text([&](std::ostream& o) { write_matrix_csv(o, m1); }));
  w.write("features_meta.json", matrix_meta_json(m1));

  std::vector<EvaluationReport> reports;
  for (auto g : cfg.groups()) {
    const auto rows = rows_of(m1, g);
    if (rows.empty()) fail(ErrorCode::kInsufficientGroup, "no participants for sex " + sex_code(g));
    const auto train = select_rows(m1, rows);
    const auto y = train.target.read_all();
    const auto model = fit_model(cfg.model, train, y);
    note_enet(model, sex_code(g), res.warnings);
    const auto pred = predict(model, train);
    reports.push_back({std::string(to_string(cfg.model.kind)), g, Wave::kWave1, r2(y, pred), rmse(y, pred), y.size(), {}});
    w.write(model_file_name(cfg.model.kind, g), model_to_json(model));
  }
  w.write("train_report.json", reports_json(reports));
  res.text = reports_table(reports);
  return w.finish();
}

namespace {

std::vector<std::pair<SexGroup, AnyModel>> load_models(const RunConfig& cfg, const fs::path& model_dir,
                                                       const FeatureMatrix& m, ArtifactWriter& w) {
  std::vector<std::pair<SexGroup, AnyModel>> models;
  for (auto g : cfg.groups()) {
    const auto path = model_dir / model_file_name(cfg.model.kind, g);
    if (!fs::exists(path)) fail(ErrorCode::kIo, "model file not found: " + path.string());
    w.input(path);
    auto model = load_model(path);
    auto names = feature_names(model);
    auto have = m.feature_names();
    std::sort(names.begin(), names.end());
    std::sort(have.begin(), have.end());
    if (names != have) {
      fail(ErrorCode::kAlignment, "feature schema of " + path.filename().string() +
                                      " does not match the features built from the wave files");
    }
    models.emplace_back(g, std::move(model));
  }
  return models;
}

}  // namespace

CommandResult cmd_evaluate(const RunConfig& cfg, const fs::path& model_dir) {
  cfg.validate();
  ArtifactWriter w(cfg, "evaluate");
  w.input(cfg.wave1);
  w.input(cfg.wave2);
  auto prep = prepare_cohort(cfg);
  auto& res = w.result();
  res.warnings = prep.warnings;
  const auto& mats = prep.matrices;
  const auto models = load_models(cfg, model_dir, mats.wave1, w);
  const auto result = evaluate_fitted(models, mats.wave1, mats.wave2);
  const auto reports = result.reports();
  w.write("report.json", reports_json(reports));
  w.write("report.txt", reports_table(reports));
  const auto d1 = ba_deltas(result, Wave::kWave1);
  const auto d2 = ba_deltas(result, Wave::kWave2);
  auto all = d1;
  all.insert(all.end(), d2.begin(), d2.end());
  w.write("ba_deltas.csv", to_text([&](std::ostream& o) { write_ba_deltas(o, all); }));
  try {
    const auto ea = extreme_agers(d1, d2, mats.wave1, cfg.decile, cfg.permutations, cfg.seed);
    w.write("extreme_agers.csv", to_text([&](std::ostream& o) { write_extreme_agers(o, ea); }));
    w.write("extreme_groups.csv", to_text([&](std::ostream& o) { write_extreme_groups(o, ea); }));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientGroup) throw;
    res.warnings.push_back(std::string("extreme agers skipped: ") + e.what());
  }
  res.text = reports_table(reports);
  return w.finish();
}

CommandResult cmd_explain(const RunConfig& cfg, const fs::path& model_dir) {
  cfg.validate();
  if (cfg.model.kind == ModelKind::kEnet) fail(ErrorCode::kConfig, "explain supports tree models (gbm, rf)");
  ArtifactWriter w(cfg, "explain");
  w.input(cfg.wave1);
  w.input(cfg.wave2);
  auto prep = prepare_cohort(cfg);
  auto& res = w.result();
  res.warnings = prep.warnings;
  const auto& m2 = prep.matrices.wave2;
  const auto models = load_models(cfg, model_dir, m2, w);
  std::ostringstream text;
  for (const auto& [g, model] : models) {
    const auto rows = select_rows(m2, rows_of(m2, g));
    const auto shap = kind_of(model) == ModelKind::kGbm ? tree_shap(std::get<BoostedEnsemble>(model), rows)
                                                        : tree_shap(std::get<ForestModel>(model), rows);
    const auto summary = summarize(shap);
    w.write("shap_summary_" + sex_code(g) + ".csv", to_text([&](std::ostream& o) { write_shap_summary(o, summary); }));
    w.write("shap_points_" + sex_code(g) + ".csv",
            to_text([&](std::ostream& o) { write_shap_points(o, shap, summary); }));
    text << "top features (" << to_string(g) << "):";
    for (std::size_t r = 1; r <= std::min<std::size_t>(5, summary.size()); ++r) {
      for (const auto& f : summary) {
        if (f.rank == r) text << ' ' << f.feature;
      }
    }
    text << '\n';
  }
  res.text = text.str();
  return w.finish();
}

CommandResult cmd_subgroup(const RunConfig& cfg) {
  cfg.validate();
  ArtifactWriter w(cfg, "subgroup");
  w.input(cfg.wave1);
  w.input(cfg.wave2);
  auto prep = prepare_cohort(cfg);
  auto& res = w.result();
  res.warnings = prep.warnings;
  const auto sub = subgroup_eval(prep.matrices.wave1, prep.matrices.wave2, cfg.stratifier, cfg.model,
                                 cfg.sex == "both");
  res.warnings.insert(res.warnings.end(), sub.warnings.begin(), sub.warnings.end());
  w.write("subgroup_report.json", reports_json(sub.reports));
  w.write("subgroup_report.txt", reports_table(sub.reports));
  res.text = reports_table(sub.reports);
  return w.finish();
}

CommandResult cmd_compare(const RunConfig& cfg) {
  cfg.validate();
  ArtifactWriter w(cfg, "compare");
  w.input(cfg.wave1);
  w.input(cfg.wave2);
  auto prep = prepare_cohort(cfg);
  auto& res = w.result();
  res.warnings = prep.warnings;
  const auto& mats = prep.matrices;
  std::vector<EvaluationReport> reports;
  json ranking = json::object();
  std::map<SexGroup, std::vector<std::pair<double, std::string>>> by_sex;
  for (auto kind : {ModelKind::kGbm, ModelKind::kRf, ModelKind::kEnet}) {
    ModelSpec spec = cfg.model;
    spec.kind = kind;
    const auto r = temporal_evaluate(mats.wave1, mats.wave2, spec, cfg.groups());
    for (const auto& f : r.fits) {
      note_enet(f.model, sex_code(f.group), res.warnings);
      reports.push_back(f.train);
      reports.push_back(f.test);
      by_sex[f.group].emplace_back(f.test.r2, std::string(to_string(kind)));
    }
  }
  for (auto& [g, v] : by_sex) {
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    auto& arr = ranking[std::string(to_string(g))] = json::array();
    for (const auto& [r2v, name] : v) arr.push_back({{"model", name}, {"test_r2", r2v}});
  }

  // Same protocol without slope columns, for the ablation ratio.
  std::vector<std::size_t> base_cols;
  for (std::size_t j = 0; j < mats.wave1.cols(); ++j) {
    if (mats.wave1.columns[j].kind != FeatureKind::kSlope) base_cols.push_back(j);
  }
  ModelSpec spec = cfg.model;
  spec.kind = ModelKind::kGbm;
  const auto ablated = temporal_evaluate(select_columns(mats.wave1, base_cols), select_columns(mats.wave2, base_cols),
                                         spec, cfg.groups());
  json ablation = json::object();
  for (const auto& f : ablated.fits) {
    double full = 0.0;
    for (const auto& r : reports) {
      if (r.model == "gbm" && r.sex == f.group && r.wave == Wave::kWave2) full = r.r2;
    }
    ablation[std::string(to_string(f.group))] = {
        {"with_slopes_test_r2", full}, {"baseline_only_test_r2", f.test.r2},
        {"ratio", f.test.r2 != 0.0 ? full / f.test.r2 : 0.0}};
  }

  json doc = json::parse(reports_json(reports));
  json out{{"models", doc}, {"ranking_by_test_r2", ranking}, {"slope_ablation", ablation}};
  w.write("compare.json", out.dump(2) + "\n");
  res.text = reports_table(reports);
  return w.finish();
}

CommandResult cmd_systems(const RunConfig& cfg) {
  cfg.validate();
  ArtifactWriter w(cfg, "systems");
  w.input(cfg.wave1);
  w.input(cfg.wave2);
  auto prep = prepare_cohort(cfg);
  auto& res = w.result();
  res.warnings = prep.warnings;
  const auto sa = system_analysis(prep.matrices.wave1, prep.matrices.wave2, cfg.model);
  res.warnings.insert(res.warnings.end(), sa.warnings.begin(), sa.warnings.end());
  w.write("system_r2.csv", to_text([&](std::ostream& o) { write_system_r2(o, sa); }));
  w.write("system_corr_F.csv", to_text([&](std::ostream& o) { write_system_matrix(o, sa.corr_female); }));
  w.write("system_corr_M.csv", to_text([&](std::ostream& o) { write_system_matrix(o, sa.corr_male); }));
  w.write("system_corr_diff.csv", to_text([&](std::ostream& o) { write_system_matrix(o, sa.corr_diff); }));
  res.text = to_text([&](std::ostream& o) { write_system_r2(o, sa); });
  return w.finish();
}

}  // namespace bioage
