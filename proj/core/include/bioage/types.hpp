#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace bioage {

enum class Sex { kFemale, kMale };
enum class Wave { kWave1, kWave2 };

// Physiological domains used for system-level analyses. kOther collects
// columns that no catalog entry maps to one of the seven named systems.
enum class SystemTag {
  kCardiovascular,
  kBloodLipids,
  kSleep,
  kBodyComposition,
  kLifestyle,
  kDiet,
  kRenal,
  kOther,
};

inline constexpr std::array<SystemTag, 7> kNamedSystems = {
    SystemTag::kCardiovascular, SystemTag::kBloodLipids, SystemTag::kSleep,
    SystemTag::kBodyComposition, SystemTag::kLifestyle,  SystemTag::kDiet,
    SystemTag::kRenal,
};

// Sex selection for per-sex model fitting and reporting.
enum class SexGroup { kFemale, kMale, kAll };

std::string_view to_string(Sex sex);         // "F" / "M"
std::string_view to_string(Wave wave);       // "wave1" / "wave2"
std::string_view to_string(SystemTag tag);   // "Cardiovascular", "BloodLipids", ...
std::string_view to_string(SexGroup group);  // "female" / "male" / "all"

std::optional<Sex> parse_sex(std::string_view code);
std::optional<SystemTag> parse_system_tag(std::string_view name);

inline bool contains(SexGroup group, Sex sex) {
  return group == SexGroup::kAll || (group == SexGroup::kFemale) == (sex == Sex::kFemale);
}

inline SexGroup group_of(Sex sex) {
  return sex == Sex::kFemale ? SexGroup::kFemale : SexGroup::kMale;
}

}  // namespace bioage
