#include "nhplan/cohort.hpp"

#include "nhplan/random.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace nhplan {

namespace {

constexpr std::array<std::string_view, 3> kDispositionTokens = {"community", "hospital", "censored"};
constexpr std::array<std::string_view, 2> kStayTokens = {"short", "long"};
constexpr std::array<std::string_view, kRehabLevels> kRehabTokens = {"none",      "low",      "medium",
                                                                      "high",      "very_high", "ultra_high"};
constexpr std::array<std::string_view, kExtensiveLevels> kExtensiveTokens = {"none", "level1", "level2"};

constexpr std::array<std::string_view, 7> kFixedColumns = {
    "id", "admit_day", "los_days", "disposition", "stay_class", "rehab_level", "extensive_care_level"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& tokens, std::string_view token) {
  for (std::size_t i = 0; i < N; ++i)
    if (tokens[i] == token) return static_cast<E>(i);
  return std::nullopt;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string format_real(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

bool is_other_disposition(std::string_view token) {
  return token == "death" || token == "transfer" || token == "other";
}

}  // namespace

std::string_view to_token(Disposition d) { return kDispositionTokens[static_cast<int>(d)]; }
std::string_view to_token(StayClass s) { return kStayTokens[static_cast<int>(s)]; }
std::string_view to_token(RehabLevel r) { return kRehabTokens[static_cast<int>(r)]; }
std::string_view to_token(ExtensiveCare e) { return kExtensiveTokens[static_cast<int>(e)]; }
std::optional<Disposition> parse_disposition(std::string_view t) { return lookup<Disposition>(kDispositionTokens, t); }
std::optional<StayClass> parse_stay_class(std::string_view t) { return lookup<StayClass>(kStayTokens, t); }
std::optional<RehabLevel> parse_rehab_level(std::string_view t) { return lookup<RehabLevel>(kRehabTokens, t); }
std::optional<ExtensiveCare> parse_extensive_care(std::string_view t) {
  return lookup<ExtensiveCare>(kExtensiveTokens, t);
}

bool ResidentRecord::operator==(const ResidentRecord& o) const {
  return id == o.id && admit_day == o.admit_day && los_days == o.los_days && disposition == o.disposition &&
         stay_class == o.stay_class && rehab == o.rehab && extensive == o.extensive &&
         covariates.size() == o.covariates.size() && covariates == o.covariates;
}

CohortError::CohortError(std::string what, std::vector<RowIssue> rows)
    : std::runtime_error(std::move(what)), rows_(std::move(rows)) {}

const std::vector<std::string>& default_covariate_names() {
  static const std::vector<std::string> names = {
      "adl",          "anemia",      "diabetes",      "obstructive_uropathy", "hypertension", "cancer",
      "dementia",     "depression",  "heart_failure", "copd",                 "stroke",       "renal_failure",
      "hip_fracture", "pneumonia",   "age_85_plus",   "female"};
  return names;
}

Cohort::Cohort(std::vector<ResidentRecord> residents, std::vector<std::string> covariate_names,
               Provenance provenance)
    : residents_(std::move(residents)),
      covariate_names_(std::move(covariate_names)),
      provenance_(std::move(provenance)) {
  std::unordered_set<std::string> ids;
  for (const auto& r : residents_) {
    if (r.covariates.size() != static_cast<Eigen::Index>(covariate_names_.size()))
      throw CohortError("resident " + r.id + " has " + std::to_string(r.covariates.size()) +
                        " covariates, expected " + std::to_string(covariate_names_.size()));
    if (!ids.insert(r.id).second) throw CohortError("duplicate resident id: " + r.id);
  }
}

int Cohort::covariate_index(std::string_view name) const {
  for (std::size_t i = 0; i < covariate_names_.size(); ++i)
    if (covariate_names_[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::MatrixXd Cohort::design_matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(residents_.size()), static_cast<Eigen::Index>(covariate_names_.size()));
  for (std::size_t i = 0; i < residents_.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = residents_[i].covariates;
  return x;
}

double Cohort::prevalence(std::string_view name) const {
  const int j = covariate_index(name);
  if (j < 0) throw CohortError("unknown covariate: " + std::string(name));
  if (residents_.empty()) return 0.0;
  double count = 0.0;
  for (const auto& r : residents_) count += r.covariates(j) == 1.0 ? 1.0 : 0.0;
  return count / static_cast<double>(residents_.size());
}

double Cohort::mean_adl() const {
  const int j = covariate_index("adl");
  if (j < 0 || residents_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : residents_) s += r.covariates(j);
  return s / static_cast<double>(residents_.size());
}

bool Cohort::operator==(const Cohort& o) const {
  return covariate_names_ == o.covariate_names_ && residents_ == o.residents_ && provenance_ == o.provenance_;
}

std::string validate_record(const ResidentRecord& r, const std::vector<std::string>& names) {
  if (r.id.empty()) return "empty id";
  if (r.id.find(',') != std::string::npos) return "id contains a comma";
  if (r.admit_day < 0) return "admit_day must be >= 0";
  if (r.los_days && *r.los_days <= 0) return "los_days must be positive";
  if (!r.los_days && r.disposition != Disposition::censored) return "los_days absent for a completed stay";
  if (r.los_days) {
    const bool short_by_los = *r.los_days <= kShortStayMaxDays;
    if (short_by_los != (r.stay_class == StayClass::short_stay))
      return "stay_class inconsistent with los_days (short means los_days <= 100)";
  }
  if (r.covariates.size() != static_cast<Eigen::Index>(names.size())) return "covariate count mismatch";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const double v = r.covariates(static_cast<Eigen::Index>(j));
    if (names[j] == "adl") {
      if (v < 0.0 || v > kAdlMax || v != std::floor(v)) return "adl must be an integer in [0, 16]";
    } else if (v != 0.0 && v != 1.0) {
      return names[j] + " must be 0 or 1";
    }
  }
  return {};
}

Cohort read_cohort_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CohortError("missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  {
    std::unordered_set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second) throw CohortError("duplicate column: " + h);
  }
  if (header.size() < kFixedColumns.size()) throw CohortError("header has too few columns");
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i)
    if (header[i] != kFixedColumns[i])
      throw CohortError("missing column '" + std::string(kFixedColumns[i]) + "' at position " + std::to_string(i + 1));
  std::vector<std::string> covariate_names(header.begin() + kFixedColumns.size(), header.end());
  if (std::find(covariate_names.begin(), covariate_names.end(), "adl") == covariate_names.end())
    throw CohortError("missing column 'adl'");

  std::vector<ResidentRecord> residents;
  std::vector<CohortError::RowIssue> issues;
  std::unordered_set<std::string> ids;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      issues.push_back({row, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size())});
      continue;
    }
    if (is_other_disposition(f[3])) continue;
    ResidentRecord r;
    r.id = f[0];
    std::string problem;
    auto admit = parse_int(f[1]);
    auto disp = parse_disposition(f[3]);
    auto stay = parse_stay_class(f[4]);
    auto rehab = parse_rehab_level(f[5]);
    auto ext = parse_extensive_care(f[6]);
    if (!admit) problem = "unparseable admit_day '" + f[1] + "'";
    else if (!f[2].empty() && !parse_int(f[2])) problem = "unparseable los_days '" + f[2] + "'";
    else if (!disp) problem = "unknown disposition '" + f[3] + "'";
    else if (!stay) problem = "unknown stay_class '" + f[4] + "'";
    else if (!rehab) problem = "unknown rehab_level '" + f[5] + "'";
    else if (!ext) problem = "unknown extensive_care_level '" + f[6] + "'";
    if (problem.empty()) {
      r.admit_day = *admit;
      if (!f[2].empty()) r.los_days = *parse_int(f[2]);
      r.disposition = *disp;
      r.stay_class = *stay;
      r.rehab = *rehab;
      r.extensive = *ext;
      r.covariates.resize(static_cast<Eigen::Index>(covariate_names.size()));
      for (std::size_t j = 0; j < covariate_names.size(); ++j) {
        auto v = parse_double(f[kFixedColumns.size() + j]);
        if (!v) {
          problem = "unparseable value for " + covariate_names[j];
          break;
        }
        r.covariates(static_cast<Eigen::Index>(j)) = *v;
      }
    }
    if (problem.empty()) problem = validate_record(r, covariate_names);
    if (problem.empty() && !ids.insert(r.id).second) problem = "duplicate id '" + r.id + "'";
    if (!problem.empty()) {
      issues.push_back({row, problem});
      continue;
    }
    residents.push_back(std::move(r));
  }
  if (!issues.empty()) {
    std::ostringstream msg;
    msg << issues.size() << " invalid row(s); first: row " << issues.front().row << ": " << issues.front().message;
    throw CohortError(msg.str(), std::move(issues));
  }
  return Cohort(std::move(residents), std::move(covariate_names), Provenance{});
}

Cohort ingest_cohort(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CohortError("cannot open " + path.string());
  return read_cohort_csv(in);
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i) out << (i ? "," : "") << kFixedColumns[i];
  for (const auto& n : cohort.covariate_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : cohort.residents()) {
    out << r.id << ',' << r.admit_day << ',';
    if (r.los_days) out << *r.los_days;
    out << ',' << to_token(r.disposition) << ',' << to_token(r.stay_class) << ',' << to_token(r.rehab) << ','
        << to_token(r.extensive);
    for (Eigen::Index j = 0; j < r.covariates.size(); ++j) out << ',' << format_real(r.covariates(j));
    out << '\n';
  }
}

void save_cohort(const std::filesystem::path& path, const Cohort& cohort) {
  std::ofstream out(path);
  if (!out) throw CohortError("cannot write " + path.string());
  write_cohort_csv(out, cohort);
}

void ScenarioSpec::validate() const {
  if (!(adl_mean_scale > 0.0)) throw std::invalid_argument("adl_mean_scale: must be > 0");
  if (!(rehab_need_scale > 0.0)) throw std::invalid_argument("rehab_need_scale: must be > 0");
  for (const auto& [name, frac] : prevalence_overrides)
    if (!(frac >= 0.0 && frac <= 1.0))
      throw std::invalid_argument("prevalence_overrides." + name + ": must be in [0, 1]");
  if (extensive_care_target && !(*extensive_care_target >= 0.0 && *extensive_care_target <= 1.0))
    throw std::invalid_argument("extensive_care_target: must be in [0, 1]");
}

bool ScenarioSpec::is_identity() const {
  return prevalence_overrides.empty() && adl_mean_scale == 1.0 && rehab_need_scale == 1.0 &&
         !extensive_care_target.has_value();
}

ScenarioSpec preset_scenario(std::string_view id) {
  ScenarioSpec s;
  s.id = std::string(id);
  if (id == "S1") return s;
  if (id == "S2") {
    s.prevalence_overrides = {{"diabetes", 0.5}, {"anemia", 0.5}, {"obstructive_uropathy", 0.55}};
    return s;
  }
  if (id == "S3") {
    s.adl_mean_scale = 0.2;
    return s;
  }
  if (id == "S4") {
    s.adl_mean_scale = 1.8;
    return s;
  }
  if (id == "S5") {
    s.rehab_need_scale = 0.5;
    return s;
  }
  if (id == "S6") {
    s.extensive_care_target = 0.9;
    return s;
  }
  throw std::invalid_argument("unknown scenario id: " + std::string(id));
}

std::vector<std::string> preset_scenario_ids() { return {"S1", "S2", "S3", "S4", "S5", "S6"}; }

namespace {

// Moves `count(pred)` to `target` by flipping uniformly chosen residents.
template <typename Pred, typename SetOn, typename SetOff>
void flip_to_target(std::vector<ResidentRecord>& rs, std::size_t target, Rng& rng, Pred is_on, SetOn set_on,
                    SetOff set_off) {
  std::vector<std::size_t> on;
  std::vector<std::size_t> off;
  for (std::size_t i = 0; i < rs.size(); ++i) (is_on(rs[i]) ? on : off).push_back(i);
  if (on.size() < target) {
    std::shuffle(off.begin(), off.end(), rng);
    for (std::size_t k = 0; k < target - on.size(); ++k) set_on(rs[off[k]]);
  } else if (on.size() > target) {
    std::shuffle(on.begin(), on.end(), rng);
    for (std::size_t k = 0; k < on.size() - target; ++k) set_off(rs[on[k]]);
  }
}

std::size_t target_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(n) + 0.5));
}

}  // namespace

Cohort apply_scenario(const Cohort& cohort, const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<ResidentRecord> rs = cohort.residents();
  const std::size_t n = rs.size();
  Rng rng = make_stream(seed, 0, 0x5CE7);

  for (const auto& [name, fraction] : spec.prevalence_overrides) {
    const int j = cohort.covariate_index(name);
    if (j < 0 || name == "adl") throw std::invalid_argument("prevalence_overrides." + name + ": not a binary covariate");
    flip_to_target(
        rs, target_count(fraction, n), rng, [j](const ResidentRecord& r) { return r.covariates(j) == 1.0; },
        [j](ResidentRecord& r) { r.covariates(j) = 1.0; }, [j](ResidentRecord& r) { r.covariates(j) = 0.0; });
  }

  if (spec.adl_mean_scale != 1.0) {
    const int j = cohort.covariate_index("adl");
    if (j >= 0) {
      for (auto& r : rs) {
        // half-up rounding, then clamp to the score range
        const double scaled = std::floor(r.covariates(j) * spec.adl_mean_scale + 0.5);
        r.covariates(j) = std::clamp(scaled, 0.0, static_cast<double>(kAdlMax));
      }
    }
  }

  if (spec.rehab_need_scale != 1.0) {
    const auto current = static_cast<double>(
        std::count_if(rs.begin(), rs.end(), [](const ResidentRecord& r) { return r.rehab != RehabLevel::none; }));
    const double frac = n ? current / static_cast<double>(n) * spec.rehab_need_scale : 0.0;
    flip_to_target(
        rs, target_count(frac, n), rng, [](const ResidentRecord& r) { return r.rehab != RehabLevel::none; },
        [](ResidentRecord& r) { r.rehab = RehabLevel::low; }, [](ResidentRecord& r) { r.rehab = RehabLevel::none; });
  }

  if (spec.extensive_care_target) {
    // newly flagged residents get level1 three times as often as level2
    flip_to_target(
        rs, target_count(*spec.extensive_care_target, n), rng,
        [](const ResidentRecord& r) { return r.extensive != ExtensiveCare::none; },
        [&rng](ResidentRecord& r) { r.extensive = uniform01(rng) < 0.75 ? ExtensiveCare::level1 : ExtensiveCare::level2; },
        [](ResidentRecord& r) { r.extensive = ExtensiveCare::none; });
  }

  Provenance prov = cohort.provenance();
  prov.scenario_id = spec.id;
  return Cohort(std::move(rs), cohort.covariate_names(), prov);
}

}  // namespace nhplan
