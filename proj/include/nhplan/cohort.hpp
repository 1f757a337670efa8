#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nhplan {

enum class Disposition { community, hospital, censored };
enum class StayClass { short_stay, long_stay };
enum class RehabLevel { none, low, medium, high, very_high, ultra_high };
enum class ExtensiveCare { none, level1, level2 };

inline constexpr int kRehabLevels = 6;
inline constexpr int kExtensiveLevels = 3;
inline constexpr int kShortStayMaxDays = 100;
inline constexpr int kAdlMax = 16;

std::string_view to_token(Disposition d);
std::string_view to_token(StayClass s);
std::string_view to_token(RehabLevel r);
std::string_view to_token(ExtensiveCare e);
std::optional<Disposition> parse_disposition(std::string_view token);
std::optional<StayClass> parse_stay_class(std::string_view token);
std::optional<RehabLevel> parse_rehab_level(std::string_view token);
std::optional<ExtensiveCare> parse_extensive_care(std::string_view token);

/// One resident stay. For censored stays `los_days` holds the observed
/// (right-truncated) time in house, or is empty when nothing was observed.
struct ResidentRecord {
  std::string id;
  int admit_day = 0;
  std::optional<int> los_days;
  Disposition disposition = Disposition::censored;
  StayClass stay_class = StayClass::short_stay;
  Eigen::VectorXd covariates;
  RehabLevel rehab = RehabLevel::none;
  ExtensiveCare extensive = ExtensiveCare::none;

  bool operator==(const ResidentRecord& other) const;
};

struct Provenance {
  enum class Kind { ingested, synthetic } kind = Kind::ingested;
  std::uint64_t seed = 0;
  std::string scenario_id;

  bool operator==(const Provenance&) const = default;
};

/// Row-level validation failure; `rows` are 1-based data row numbers.
class CohortError : public std::runtime_error {
 public:
  struct RowIssue {
    int row;
    std::string message;
  };
  explicit CohortError(std::string what, std::vector<RowIssue> rows = {});
  const std::vector<RowIssue>& rows() const { return rows_; }

 private:
  std::vector<RowIssue> rows_;
};

/// The 16 LOS covariates, in model order. Only the first six are named
/// conditions in the source census; the rest are placeholders.
const std::vector<std::string>& default_covariate_names();

class Cohort {
 public:
  Cohort() = default;
  Cohort(std::vector<ResidentRecord> residents, std::vector<std::string> covariate_names,
         Provenance provenance = {});

  const std::vector<ResidentRecord>& residents() const { return residents_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return residents_.size(); }
  bool empty() const { return residents_.empty(); }

  /// Column index of a covariate, or -1.
  int covariate_index(std::string_view name) const;
  /// n x p matrix of covariates in resident order.
  Eigen::MatrixXd design_matrix() const;
  /// Fraction of residents with covariate == 1.
  double prevalence(std::string_view name) const;
  double mean_adl() const;

  bool operator==(const Cohort& other) const;

 private:
  std::vector<ResidentRecord> residents_;
  std::vector<std::string> covariate_names_;
  Provenance provenance_;
};

/// Checks the record invariants; returns an empty string when valid.
std::string validate_record(const ResidentRecord& r, const std::vector<std::string>& covariate_names);

/// CSV: id,admit_day,los_days,disposition,stay_class,rehab_level,
/// extensive_care_level followed by one column per covariate. Records with a
/// disposition other than community/hospital/censored are dropped.
Cohort read_cohort_csv(std::istream& in);
Cohort ingest_cohort(const std::filesystem::path& path);
void write_cohort_csv(std::ostream& out, const Cohort& cohort);
void save_cohort(const std::filesystem::path& path, const Cohort& cohort);

struct ScenarioSpec {
  std::string id = "S1";
  std::map<std::string, double> prevalence_overrides;
  double adl_mean_scale = 1.0;
  double rehab_need_scale = 1.0;
  std::optional<double> extensive_care_target;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool is_identity() const;
};

/// The six census compositions used for what-if comparison: S1 baseline,
/// S2 worse health, S3 less dependent, S4 more dependent, S5 less rehab,
/// S6 more extensive care.
ScenarioSpec preset_scenario(std::string_view id);
std::vector<std::string> preset_scenario_ids();

/// Transforms covariates and care levels; LOS outcomes are left untouched.
/// Flag changes flip uniformly chosen residents until the target count
/// round(target * n) is met.
Cohort apply_scenario(const Cohort& cohort, const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace nhplan
