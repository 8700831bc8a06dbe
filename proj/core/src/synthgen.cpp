#include "bioage/synthgen.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include <json.hpp>

#include "bioage/catalog.hpp"
#include "bioage/error.hpp"
#include "bioage/random.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

using nlohmann::json;

Date date_field(const json& doc, const char* key, std::size_t i) {
  const auto text = doc.at(key).at(i).get<std::string>();
  auto d = parse_iso_date(text);
  if (!d) fail(ErrorCode::kConfig, std::string("synth config: bad date in ") + key);
  return *d;
}

std::string participant_id(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "P%05zu", index + 1);
  return buf;
}

long to_day_count(double years) { return std::lround(years * kDaysPerYear); }

}  // namespace

SynthConfig SynthConfig::defaults() { return from_json(default_synth_config_json()); }

SynthConfig SynthConfig::from_json(std::string_view text) {
  SynthConfig c;
  try {
    const auto doc = json::parse(text);
    c.seed = doc.value("seed", std::uint64_t{0});
    c.n_female = doc.at("n_female").get<std::size_t>();
    c.n_male = doc.at("n_male").get<std::size_t>();
    c.age_min = doc.at("age_range").at(0).get<double>();
    c.age_max = doc.at("age_range").at(1).get<double>();
    if (doc.contains("elapsed_years_range")) {
      c.elapsed_min = doc["elapsed_years_range"].at(0).get<double>();
      c.elapsed_max = doc["elapsed_years_range"].at(1).get<double>();
    }
    c.latent_rate_sd = doc.at("latent_rate_sd").get<double>();
    c.rate_onset_age = doc.value("rate_onset_age", c.age_min);
    c.missing_rate = doc.value("missing_rate", 0.0);
    if (doc.contains("wave1_dates")) c.wave1_dates = {date_field(doc, "wave1_dates", 0), date_field(doc, "wave1_dates", 1)};
    if (doc.contains("wave2_dates")) c.wave2_dates = {date_field(doc, "wave2_dates", 0), date_field(doc, "wave2_dates", 1)};
    for (const auto& b : doc.at("biomarkers")) {
      BiomarkerSpec s;
      s.name = b.at("name").get<std::string>();
      s.mean_female = b.at("baseline_mean").at("F").get<double>();
      s.mean_male = b.at("baseline_mean").at("M").get<double>();
      s.baseline_sd = b.at("baseline_sd").get<double>();
      s.age_trend_per_year = b.at("age_trend_per_year").get<double>();
      s.slope_age_linear = b.value("slope_age_linear", 0.0);
      s.slope_age_quadratic = b.value("slope_age_quadratic", 0.0);
      s.slope_sd = b.at("slope_sd").get<double>();
      s.noise_sd = b.at("noise_sd").get<double>();
      c.biomarkers.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string SynthConfig::to_json() const {
  json doc;
  doc["format"] = "bioage-synth-config";
  doc["version"] = 1;
  doc["seed"] = seed;
  doc["n_female"] = n_female;
  doc["n_male"] = n_male;
  doc["age_range"] = {age_min, age_max};
  doc["elapsed_years_range"] = {elapsed_min, elapsed_max};
  doc["latent_rate_sd"] = latent_rate_sd;
  doc["rate_onset_age"] = rate_onset_age;
  doc["missing_rate"] = missing_rate;
  doc["wave1_dates"] = {format_iso_date(wave1_dates.first), format_iso_date(wave1_dates.last)};
  doc["wave2_dates"] = {format_iso_date(wave2_dates.first), format_iso_date(wave2_dates.last)};
  auto& arr = doc["biomarkers"] = json::array();
  for (const auto& b : biomarkers) {
    arr.push_back({{"name", b.name},
                   {"baseline_mean", {{"F", b.mean_female}, {"M", b.mean_male}}},
                   {"baseline_sd", b.baseline_sd},
                   {"age_trend_per_year", b.age_trend_per_year},
                   {"slope_age_linear", b.slope_age_linear},
                   {"slope_age_quadratic", b.slope_age_quadratic},
                   {"slope_sd", b.slope_sd},
                   {"noise_sd", b.noise_sd}});
  }
  return doc.dump(2) + "\n";
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, "synth config: " + what); };
  if (!(age_min < age_max)) bad("age_range must be ordered");
  if (!(age_min > 18.0) || !(age_max + elapsed_max < 120.0)) bad("ages must stay inside (18, 120)");
  if (!(elapsed_min > 0.0) || !(elapsed_min <= elapsed_max)) bad("elapsed_years_range must be positive and ordered");
  if (!(latent_rate_sd >= 0.0)) bad("latent_rate_sd must be >= 0");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) bad("missing_rate must be in [0, 1)");
  if (!(wave1_dates.first <= wave1_dates.last) || !(wave2_dates.first <= wave2_dates.last)) bad("date ranges must be ordered");
  const long dmin = to_day_count(elapsed_min);
  const long dmax = to_day_count(elapsed_max);
  const auto s1 = std::chrono::sys_days(wave1_dates.first), e1 = std::chrono::sys_days(wave1_dates.last);
  const auto s2 = std::chrono::sys_days(wave2_dates.first), e2 = std::chrono::sys_days(wave2_dates.last);
  for (long d : {dmin, dmax}) {
    const auto lo = std::max(s1, s2 - std::chrono::days(d));
    const auto hi = std::min(e1, e2 - std::chrono::days(d));
    if (lo > hi) bad("elapsed range cannot place both visits inside their wave windows");
  }
  std::set<std::string> names;
  for (const auto& b : biomarkers) {
    if (b.name.empty() || b.name.starts_with("excl_")) bad("invalid biomarker name '" + b.name + "'");
    if (!names.insert(b.name).second) bad("duplicate biomarker '" + b.name + "'");
    for (double sd : {b.baseline_sd, b.slope_sd, b.noise_sd}) {
      if (!(sd >= 0.0)) bad("standard deviations must be >= 0 for " + b.name);
    }
  }
}

SynthCohort generate_cohort(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_female + cfg.n_male;
  const std::size_t p = cfg.biomarkers.size();

  SynthCohort out;
  out.wave1.wave = Wave::kWave1;
  out.wave2.wave = Wave::kWave2;
  const auto& catalog = Catalog::builtin();
  for (const auto& b : cfg.biomarkers) {
    ColumnMeta meta{b.name, catalog.unit_of(b.name), catalog.system_of(b.name)};
    out.wave1.biomarker_columns.push_back(meta);
    out.wave2.biomarker_columns.push_back(meta);
    out.truth.columns.push_back(b.name);
  }

  // Slope age terms are centred on the mean mid-interval age so the
  // population mean slope stays equal to age_trend_per_year.
  const double centre = (cfg.age_min + cfg.age_max) / 2.0 + (cfg.elapsed_min + cfg.elapsed_max) / 4.0;
  const double age_span = cfg.age_max - cfg.age_min;
  const double el_span = cfg.elapsed_max - cfg.elapsed_min;
  const double second_moment = age_span * age_span / 12.0 + el_span * el_span / 48.0;

  const long dmin = to_day_count(cfg.elapsed_min);
  const long dmax = to_day_count(cfg.elapsed_max);
  const auto s1 = std::chrono::sys_days(cfg.wave1_dates.first), e1 = std::chrono::sys_days(cfg.wave1_dates.last);
  const auto s2 = std::chrono::sys_days(cfg.wave2_dates.first), e2 = std::chrono::sys_days(cfg.wave2_dates.last);

  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = participant_id(i);
    const Sex sex = i < cfg.n_female ? Sex::kFemale : Sex::kMale;
    CounterRng person(stream_key(cfg.seed, "person", id));
    const double age = person.uniform(cfg.age_min, cfg.age_max);
    const double rate = person.normal(0.0, cfg.latent_rate_sd);
    const long days = dmin + static_cast<long>(person.bounded(static_cast<std::uint64_t>(dmax - dmin + 1)));
    const auto lo = std::max(s1, s2 - std::chrono::days(days));
    const auto hi = std::min(e1, e2 - std::chrono::days(days));
    const auto date1 = lo + std::chrono::days(static_cast<long>(person.bounded(static_cast<std::uint64_t>((hi - lo).count() + 1))));
    const auto date2 = date1 + std::chrono::days(days);
    const double elapsed = static_cast<double>(days) / kDaysPerYear;

    ParticipantRecord r1{id, sex, age, Date(date1), {}, {}};
    ParticipantRecord r2{id, sex, age + elapsed, Date(date2), {}, {}};
    r1.biomarkers.reserve(p);
    r2.biomarkers.reserve(p);
    std::vector<double> slopes;
    slopes.reserve(p);

    const double mid = age + elapsed / 2.0 - centre;
    for (const auto& b : cfg.biomarkers) {
      CounterRng rng(stream_key(cfg.seed, "marker", id, b.name));
      const double personal = rng.normal(0.0, b.slope_sd);
      const double offset = rng.normal(0.0, b.baseline_sd);
      const double noise1 = rng.normal(0.0, b.noise_sd);
      const double noise2 = rng.normal(0.0, b.noise_sd);
      const bool miss1 = rng.uniform() < cfg.missing_rate;
      const bool miss2 = rng.uniform() < cfg.missing_rate;

      const double trend = b.age_trend_per_year;
      const double mean = sex == Sex::kFemale ? b.mean_female : b.mean_male;
      const double level = mean + trend * (age - 50.0) + (age - cfg.rate_onset_age) * (trend * rate + personal) + offset;
      const double slope = trend * (1.0 + rate) + personal + b.slope_age_linear * mid +
                           b.slope_age_quadratic * (mid * mid - second_moment);
      const double v1 = level + noise1;
      const double v2 = level + elapsed * slope + noise2;
      r1.biomarkers.push_back(miss1 ? Cell{} : Cell{v1});
      r2.biomarkers.push_back(miss2 ? Cell{} : Cell{v2});
      slopes.push_back(slope);
    }
    out.wave1.rows.push_back(std::move(r1));
    out.wave2.rows.push_back(std::move(r2));
    out.truth.ids.push_back(id);
    out.truth.latent_rate.push_back(rate);
    out.truth.true_slopes.push_back(std::move(slopes));
  }
  return out;
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  std::vector<std::string> fields{"id", "latent_rate"};
  for (const auto& c : truth.columns) fields.push_back(c + "_true_slope");
  detail::write_csv_row(out, fields);
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    fields.clear();
    fields.push_back(truth.ids[i]);
    fields.push_back(detail::format_double(truth.latent_rate[i]));
    for (double v : truth.true_slopes[i]) fields.push_back(detail::format_double(v));
    detail::write_csv_row(out, fields);
  }
}

}  // namespace bioage
