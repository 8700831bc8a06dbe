#include "bioage/types.hpp"

namespace bioage {

std::string_view to_string(Sex sex) { return sex == Sex::kFemale ? "F" : "M"; }

std::string_view to_string(Wave wave) { return wave == Wave::kWave1 ? "wave1" : "wave2"; }

std::string_view to_string(SystemTag tag) {
  switch (tag) {
    case SystemTag::kCardiovascular: return "Cardiovascular";
    case SystemTag::kBloodLipids: return "BloodLipids";
    case SystemTag::kSleep: return "Sleep";
    case SystemTag::kBodyComposition: return "BodyComposition";
    case SystemTag::kLifestyle: return "Lifestyle";
    case SystemTag::kDiet: return "Diet";
    case SystemTag::kRenal: return "Renal";
    case SystemTag::kOther: return "Other";
  }
  return "Other";
}

std::string_view to_string(SexGroup group) {
  switch (group) {
    case SexGroup::kFemale: return "female";
    case SexGroup::kMale: return "male";
    case SexGroup::kAll: return "all";
  }
  return "all";
}

std::optional<Sex> parse_sex(std::string_view code) {
  if (code == "F") return Sex::kFemale;
  if (code == "M") return Sex::kMale;
  return std::nullopt;
}

std::optional<SystemTag> parse_system_tag(std::string_view name) {
  for (auto tag : kNamedSystems) {
    if (to_string(tag) == name) return tag;
  }
  if (name == "Other") return SystemTag::kOther;
  return std::nullopt;
}

}  // namespace bioage
