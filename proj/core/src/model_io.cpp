#include "bioage/model_io.hpp"

#include <json.hpp>

#include "bioage/error.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "bioage-model";
constexpr int kVersion = 1;

json tree_to_json(const Tree& t, std::size_t k = 0) {
  const auto& n = t.nodes[k];
  json j{{"cover", n.cover}, {"G", n.sum_grad}, {"H", n.sum_hess}, {"weight", n.weight}};
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["bin"] = n.threshold_bin;
    j["threshold"] = n.threshold;
    j["left"] = tree_to_json(t, static_cast<std::size_t>(n.left));
    j["right"] = tree_to_json(t, static_cast<std::size_t>(n.right));
  }
  return j;
}

int tree_from_json(const json& j, Tree& t) {
  const int k = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  TreeNode n;
  n.cover = j.at("cover").get<double>();
  n.sum_grad = j.at("G").get<double>();
  n.sum_hess = j.at("H").get<double>();
  n.weight = j.at("weight").get<double>();
  if (j.contains("feature")) {
    n.feature = j.at("feature").get<int>();
    n.threshold_bin = j.at("bin").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.left = tree_from_json(j.at("left"), t);
    n.right = tree_from_json(j.at("right"), t);
  }
  t.nodes[static_cast<std::size_t>(k)] = n;
  return k;
}

json trees_to_json(const std::vector<Tree>& trees) {
  json arr = json::array();
  for (const auto& t : trees) arr.push_back(tree_to_json(t));
  return arr;
}

std::vector<Tree> trees_from_json(const json& arr, std::size_t n_features) {
  std::vector<Tree> out;
  for (const auto& j : arr) {
    Tree t;
    tree_from_json(j, t);
    for (const auto& n : t.nodes) {
      if (!n.is_leaf() && (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features)) {
        fail(ErrorCode::kModelIntegrity, "tree references feature index out of range");
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

json envelope(std::string_view type, const std::vector<std::string>& names) {
  return json{{"format", kFormat}, {"version", kVersion}, {"model_type", type}, {"feature_names", names}};
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGbm: return "gbm";
    case ModelKind::kRf: return "rf";
    case ModelKind::kEnet: return "enet";
  }
  return "gbm";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "gbm") return ModelKind::kGbm;
  if (s == "rf") return ModelKind::kRf;
  if (s == "enet") return ModelKind::kEnet;
  return std::nullopt;
}

ModelKind kind_of(const AnyModel& m) { return static_cast<ModelKind>(m.index()); }

const std::vector<std::string>& feature_names(const AnyModel& m) {
  return std::visit([](const auto& x) -> const std::vector<std::string>& { return x.feature_names; }, m);
}

std::vector<double> predict(const AnyModel& m, const FeatureMatrix& x) {
  switch (kind_of(m)) {
    case ModelKind::kGbm: return predict(std::get<BoostedEnsemble>(m), x);
    case ModelKind::kRf: return rf_predict(std::get<ForestModel>(m), x);
    case ModelKind::kEnet: return enet_predict(std::get<ElasticNetModel>(m), x);
  }
  return {};
}

std::string model_to_json(const AnyModel& any) {
  json doc;
  switch (kind_of(any)) {
    case ModelKind::kGbm: {
      const auto& m = std::get<BoostedEnsemble>(any);
      const auto& p = m.params;
      doc = envelope("gbm", m.feature_names);
      doc["params"] = {{"n_trees", p.n_trees},   {"learning_rate", p.learning_rate},
                       {"num_leaves", p.num_leaves}, {"min_samples_leaf", p.min_samples_leaf},
                       {"lambda", p.lambda},     {"gamma", p.gamma},
                       {"max_bins", p.max_bins}, {"seed", p.seed}};
      doc["params"]["goss"] = p.goss ? json{{"a", p.goss->a}, {"b", p.goss->b}} : json(nullptr);
      doc["base_score"] = m.base_score;
      doc["learning_rate"] = m.learning_rate;
      doc["bin_edges"] = m.bin_edges;
      doc["trees"] = trees_to_json(m.trees);
      break;
    }
    case ModelKind::kRf: {
      const auto& m = std::get<ForestModel>(any);
      const auto& p = m.params;
      doc = envelope("rf", m.feature_names);
      doc["params"] = {{"n_trees", p.n_trees},
                       {"max_depth", p.max_depth},
                       {"min_samples_leaf", p.min_samples_leaf},
                       {"feature_subsample", p.feature_subsample},
                       {"bootstrap", p.bootstrap},
                       {"max_bins", p.max_bins},
                       {"seed", p.seed}};
      doc["bin_edges"] = m.bin_edges;
      doc["trees"] = trees_to_json(m.trees);
      break;
    }
    case ModelKind::kEnet: {
      const auto& m = std::get<ElasticNetModel>(any);
      const auto& p = m.params;
      doc = envelope("enet", m.feature_names);
      doc["params"] = {{"alpha", p.alpha}, {"l1_ratio", p.l1_ratio}, {"max_iter", p.max_iter}, {"tol", p.tol}};
      doc["intercept"] = m.intercept;
      doc["coef"] = m.coef;
      doc["coef_standard"] = m.coef_standard;
      doc["mean"] = m.mean;
      doc["scale"] = m.scale;
      doc["converged"] = m.converged;
      doc["iterations"] = m.iterations;
      doc["final_delta"] = m.final_delta;
      break;
    }
  }
  return doc.dump(1) + "\n";
}

AnyModel model_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    if (doc.value("format", std::string()) != kFormat) fail(ErrorCode::kSchema, "not a bioage model document");
    if (doc.value("version", 0) != kVersion) fail(ErrorCode::kSchema, "unsupported model version");
    const auto type = doc.at("model_type").get<std::string>();
    const auto names = doc.at("feature_names").get<std::vector<std::string>>();
    const auto& p = doc.at("params");
    if (type == "gbm") {
      BoostedEnsemble m;
      m.feature_names = names;
      m.params.n_trees = p.at("n_trees").get<int>();
      m.params.learning_rate = p.at("learning_rate").get<double>();
      m.params.num_leaves = p.at("num_leaves").get<int>();
      m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
      m.params.lambda = p.at("lambda").get<double>();
      m.params.gamma = p.at("gamma").get<double>();
      m.params.max_bins = p.at("max_bins").get<int>();
      m.params.seed = p.at("seed").get<std::uint64_t>();
      if (p.contains("goss") && !p["goss"].is_null()) {
        m.params.goss = GossParams{p["goss"].at("a").get<double>(), p["goss"].at("b").get<double>()};
      }
      m.base_score = doc.at("base_score").get<double>();
      m.learning_rate = doc.at("learning_rate").get<double>();
      m.bin_edges = doc.at("bin_edges").get<std::vector<std::vector<double>>>();
      m.trees = trees_from_json(doc.at("trees"), names.size());
      return m;
    }
    if (type == "rf") {
      ForestModel m;
      m.feature_names = names;
      m.params.n_trees = p.at("n_trees").get<int>();
      m.params.max_depth = p.at("max_depth").get<int>();
      m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
      m.params.feature_subsample = p.at("feature_subsample").get<double>();
      m.params.bootstrap = p.at("bootstrap").get<bool>();
      m.params.max_bins = p.at("max_bins").get<int>();
      m.params.seed = p.at("seed").get<std::uint64_t>();
      m.bin_edges = doc.at("bin_edges").get<std::vector<std::vector<double>>>();
      m.trees = trees_from_json(doc.at("trees"), names.size());
      if (m.trees.empty()) fail(ErrorCode::kModelIntegrity, "forest has no trees");
      return m;
    }
    if (type == "enet") {
      ElasticNetModel m;
      m.feature_names = names;
      m.params.alpha = p.at("alpha").get<double>();
      m.params.l1_ratio = p.at("l1_ratio").get<double>();
      m.params.max_iter = p.at("max_iter").get<int>();
      m.params.tol = p.at("tol").get<double>();
      m.intercept = doc.at("intercept").get<double>();
      m.coef = doc.at("coef").get<std::vector<double>>();
      m.coef_standard = doc.at("coef_standard").get<std::vector<double>>();
      m.mean = doc.at("mean").get<std::vector<double>>();
      m.scale = doc.at("scale").get<std::vector<double>>();
      m.converged = doc.at("converged").get<bool>();
      m.iterations = doc.at("iterations").get<int>();
      m.final_delta = doc.at("final_delta").get<double>();
      if (m.coef.size() != names.size()) fail(ErrorCode::kModelIntegrity, "coefficient count mismatch");
      return m;
    }
    fail(ErrorCode::kSchema, "unknown model_type '" + type + "'");
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, std::string("model document: ") + e.what());
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchema, std::string("model document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const AnyModel& m) { detail::write_file(path, model_to_json(m)); }

AnyModel load_model(const std::filesystem::path& path) { return model_from_json(detail::read_file(path)); }

}  // namespace bioage
