// bioage command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bioage/error.hpp"
#include "bioage/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

// Flag values; unset options leave the config file (or defaults) alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> sex;
  std::optional<std::string> model;
  std::optional<std::string> slope_policy;
  std::optional<std::string> wave1;
  std::optional<std::string> wave2;
  std::optional<std::string> stratifier;
  std::string model_dir;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "top-level random seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--sex", o.sex, "sex group")->check(CLI::IsMember({"F", "M", "both"}));
  cmd->add_option("--model", o.model, "model family")->check(CLI::IsMember({"gbm", "rf", "enet"}));
  cmd->add_option("--slope-policy", o.slope_policy, "missing-slope handling")
      ->check(CLI::IsMember({"median", "drop"}));
}

void add_inputs(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--wave1", o.wave1, "wave-1 CSV");
  cmd->add_option("--wave2", o.wave2, "wave-2 CSV");
}

bioage::RunConfig resolve(const Overrides& o) {
  using namespace bioage;
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.sex) cfg.sex = *o.sex;
  if (o.model) cfg.model.kind = *parse_model_kind(*o.model);
  if (o.slope_policy) cfg.slope_policy = *parse_slope_policy(*o.slope_policy);
  if (o.wave1) cfg.wave1 = *o.wave1;
  if (o.wave2) cfg.wave2 = *o.wave2;
  if (o.stratifier) {
    auto s = parse_stratifier(*o.stratifier);
    if (!s) fail(ErrorCode::kConfig, "unknown stratifier '" + *o.stratifier + "'");
    cfg.stratifier = *s;
  }
  cfg.propagate_seed();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal biological-age modelling toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic two-wave cohort");
  add_common(synth, o);

  auto* train = app.add_subcommand("train", "fit per-sex models on wave 1");
  add_common(train, o);
  add_inputs(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "score trained models on both waves");
  add_common(evaluate, o);
  add_inputs(evaluate, o);
  evaluate->add_option("--model-dir", o.model_dir, "directory holding trained models (default: --out)");

  auto* explain = app.add_subcommand("explain", "exact SHAP attributions on wave 2");
  add_common(explain, o);
  add_inputs(explain, o);
  explain->add_option("--model-dir", o.model_dir, "directory holding trained models (default: --out)");

  auto* subgroup = app.add_subcommand("subgroup", "temporal protocol within age or BMI strata");
  add_common(subgroup, o);
  add_inputs(subgroup, o);
  subgroup->add_option("--stratifier", o.stratifier, "none, age or bmi")
      ->check(CLI::IsMember({"none", "age", "bmi"}));

  auto* compare = app.add_subcommand("compare", "gbm, rf and enet on identical splits");
  add_common(compare, o);
  add_inputs(compare, o);

  auto* systems = app.add_subcommand("systems", "per-system models and correlation matrices");
  add_common(systems, o);
  add_inputs(systems, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(o);
    const fs::path model_dir = o.model_dir.empty() ? cfg.out_dir : fs::path(o.model_dir);
    bioage::CommandResult r;
    if (*synth) r = bioage::cmd_synth(cfg);
    else if (*train) r = bioage::cmd_train(cfg);
    else if (*evaluate) r = bioage::cmd_evaluate(cfg, model_dir);
    else if (*explain) r = bioage::cmd_explain(cfg, model_dir);
    else if (*subgroup) r = bioage::cmd_subgroup(cfg);
    else if (*compare) r = bioage::cmd_compare(cfg);
    else r = bioage::cmd_systems(cfg);

    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << r.text;
    if (!r.text.empty() && r.text.back() != '\n') std::cout << '\n';
    std::cout << "manifest: " << r.manifest.string() << '\n';
    return 0;
  } catch (const bioage::Error& e) {
    std::cerr << "error[" << bioage::to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 3;
  }
}
