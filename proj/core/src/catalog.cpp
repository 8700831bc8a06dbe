#include "bioage/catalog.hpp"

#include <json.hpp>

#include "bioage/error.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

constexpr std::string_view kSlopeSuffix = "_slope";

std::string_view strip_slope(std::string_view column) {
  if (column.size() > kSlopeSuffix.size() && column.ends_with(kSlopeSuffix)) {
    column.remove_suffix(kSlopeSuffix.size());
  }
  return column;
}

}  // namespace

const Catalog& Catalog::builtin() {
  static const Catalog catalog = from_json(default_catalog_json());
  return catalog;
}

Catalog Catalog::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("biomarker catalog: ") + e.what());
  }
  if (!doc.contains("columns") || !doc["columns"].is_array()) {
    fail(ErrorCode::kConfig, "biomarker catalog: missing 'columns' array");
  }
  std::vector<CatalogEntry> entries;
  for (const auto& item : doc["columns"]) {
    CatalogEntry e;
    e.name = item.at("name").get<std::string>();
    const auto sys = item.value("system", std::string("Other"));
    auto tag = parse_system_tag(sys);
    if (!tag) fail(ErrorCode::kConfig, "biomarker catalog: unknown system '" + sys + "' for " + e.name);
    e.system = *tag;
    e.unit = item.value("unit", std::string());
    entries.push_back(std::move(e));
  }
  return Catalog(std::move(entries));
}

Catalog Catalog::load(const std::string& path) { return from_json(detail::read_file(path)); }

std::optional<CatalogEntry> Catalog::find(std::string_view column) const {
  for (const auto& e : entries_) {
    if (e.name == column) return e;
  }
  const auto base = strip_slope(column);
  if (base.size() != column.size()) {
    for (const auto& e : entries_) {
      if (e.name == base) return CatalogEntry{std::string(column), e.system, e.unit + "/year"};
    }
  }
  return std::nullopt;
}

SystemTag Catalog::system_of(std::string_view column) const {
  auto e = find(column);
  return e ? e->system : SystemTag::kOther;
}

std::string Catalog::unit_of(std::string_view column) const {
  auto e = find(column);
  return e ? e->unit : std::string();
}

}  // namespace bioage
