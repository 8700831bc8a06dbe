#include <filesystem>

#include <gtest/gtest.h>

#include "bioage/model_io.hpp"
#include "expect_error.hpp"
#include "test_data.hpp"

using namespace bioage;
namespace bt = bioage::testing;

namespace {

FeatureMatrix as_matrix(const bt::Regression& d) {
  FeatureMatrix m;
  for (std::size_t j = 0; j < d.p; ++j) m.columns.push_back({"x" + std::to_string(j)});
  m.values = d.x;
  for (std::size_t i = 0; i < d.n; ++i) m.row_ids.push_back(std::to_string(i));
  m.sex.assign(d.n, Sex::kFemale);
  m.target = AuditedVector(d.y);
  return m;
}

void expect_round_trip(const AnyModel& model, const FeatureMatrix& x) {
  const auto text = model_to_json(model);
  const auto back = model_from_json(text);
  EXPECT_EQ(kind_of(back), kind_of(model));
  EXPECT_EQ(feature_names(back), feature_names(model));
  EXPECT_EQ(predict(back, x), predict(model, x));  // bit-identical
  EXPECT_EQ(model_to_json(back), text);
}

}  // namespace

TEST(ModelIo, GbmRoundTripBitIdentical) {
  const auto d = bt::friedman1(500, 6, 1.0, 1);
  const auto x = as_matrix(d);
  GbmParams p;
  p.n_trees = 40;
  p.goss = GossParams{0.3, 0.2};
  expect_round_trip(fit(x, d.y, p), x);
}

TEST(ModelIo, ForestRoundTripBitIdentical) {
  const auto d = bt::friedman1(400, 6, 1.0, 2);
  const auto x = as_matrix(d);
  ForestParams p;
  p.n_trees = 10;
  expect_round_trip(rf_fit(x, d.y, p), x);
}

TEST(ModelIo, EnetRoundTripBitIdentical) {
  const auto d = bt::linear(300, 4, 0.5, 3);
  const auto x = as_matrix(d);
  expect_round_trip(enet_fit(x, d.y, ElasticNetParams{}), x);
}

TEST(ModelIo, FileRoundTrip) {
  const auto d = bt::friedman1(300, 5, 1.0, 4);
  const auto x = as_matrix(d);
  GbmParams p;
  p.n_trees = 5;
  const AnyModel m = fit(x, d.y, p);
  const auto path = std::filesystem::temp_directory_path() / "bioage_model_io_test.json";
  save_model(path, m);
  EXPECT_EQ(predict(load_model(path), x), predict(m, x));
  std::filesystem::remove(path);
}

TEST(ModelIo, Envelope) {
  const auto d = bt::linear(100, 2, 0.5, 5);
  const auto text = model_to_json(enet_fit(as_matrix(d), d.y, ElasticNetParams{}));
  EXPECT_NE(text.find("\"format\""), std::string::npos);
  EXPECT_NE(text.find("\"model_type\""), std::string::npos);
  EXPECT_NE(text.find("\"enet\""), std::string::npos);
}

TEST(ModelIo, RejectsBadDocuments) {
  EXPECT_BIOAGE_ERROR(model_from_json("not json"), ErrorCode::kParse);
  EXPECT_BIOAGE_ERROR(model_from_json(R"({"format":"bioage-model","version":99,"model_type":"gbm"})"),
                      ErrorCode::kSchema);
  EXPECT_BIOAGE_ERROR(model_from_json(R"({"format":"bioage-model","version":1,"model_type":"xgb"})"),
                      ErrorCode::kSchema);
  EXPECT_BIOAGE_ERROR(load_model("/nonexistent/model.json"), ErrorCode::kIo);
}

TEST(ModelIo, KindStrings) {
  EXPECT_EQ(parse_model_kind("rf"), ModelKind::kRf);
  EXPECT_EQ(to_string(ModelKind::kEnet), "enet");
  EXPECT_FALSE(parse_model_kind("lgbm").has_value());
}
