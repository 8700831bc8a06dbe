#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bioage/cohort.hpp"

namespace bioage {

struct BiomarkerSpec {
  std::string name;
  double mean_female = 0.0;
  double mean_male = 0.0;
  double baseline_sd = 0.0;          // persistent per-person offset
  double age_trend_per_year = 0.0;   // population slope
  double slope_age_linear = 0.0;     // slope gradient in mid-interval age (centred)
  double slope_age_quadratic = 0.0;  // curvature of the same (centred)
  double slope_sd = 0.0;             // personal slope deviation
  double noise_sd = 0.0;             // measurement noise, drawn per wave
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_female = 0;
  std::size_t n_male = 0;
  double age_min = 40.0;
  double age_max = 70.0;
  double elapsed_min = 1.8;
  double elapsed_max = 2.2;
  double latent_rate_sd = 0.0;
  // Age at which personal drift starts to accumulate in wave-1 levels.
  double rate_onset_age = 0.0;
  double missing_rate = 0.0;
  DateRange wave1_dates = wave_date_range(Wave::kWave1);
  DateRange wave2_dates = wave_date_range(Wave::kWave2);
  std::vector<BiomarkerSpec> biomarkers;

  static SynthConfig defaults();
  static SynthConfig from_json(std::string_view text);
  std::string to_json() const;
  void validate() const;
};

// Latent quantities behind a synthetic cohort. Never written to wave files.
struct GroundTruth {
  std::vector<std::string> ids;
  std::vector<double> latent_rate;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> true_slopes;  // [row][column], per year
};

struct SynthCohort {
  CohortTable wave1;
  CohortTable wave2;
  GroundTruth truth;
};

SynthCohort generate_cohort(const SynthConfig& cfg);

void write_ground_truth(std::ostream& out, const GroundTruth& truth);

}  // namespace bioage
