#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bioage/types.hpp"

namespace bioage {

struct CatalogEntry {
  std::string name;
  SystemTag system = SystemTag::kOther;
  std::string unit;
};

// Static column -> (system, unit) map. Slope columns ("<name>_slope") resolve
// through their source biomarker.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {}

  static const Catalog& builtin();
  static Catalog from_json(std::string_view text);
  static Catalog load(const std::string& path);

  std::optional<CatalogEntry> find(std::string_view column) const;
  SystemTag system_of(std::string_view column) const;
  std::string unit_of(std::string_view column) const;

  const std::vector<CatalogEntry>& entries() const { return entries_; }

 private:
  std::vector<CatalogEntry> entries_;
};

std::string_view default_synth_config_json();
std::string_view default_catalog_json();

}  // namespace bioage
