#pragma once

#include "nhplan/cohort.hpp"
#include "nhplan/random.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace nhplan {

/// Sum of two independent exponentials with rates per minute.
struct HypoExp {
  double rate1 = 1.0;
  double rate2 = 1.0;

  static HypoExp from_means(double mean1, double mean2) { return {1.0 / mean1, 1.0 / mean2}; }
  double mean() const { return 1.0 / rate1 + 1.0 / rate2; }
};

double hypoexp_pdf(const HypoExp& d, double t);
double hypoexp_cdf(const HypoExp& d, double t);
/// Smallest t with cdf(t) >= q, by bisection.
double hypoexp_quantile(const HypoExp& d, double q);
double hypoexp_sample(const HypoExp& d, Rng& rng);

/// Jensen-Shannon divergence in nats on [0, quantile 1 - 1e-10] of the
/// wider distribution. Symmetric by construction.
double jsd(const HypoExp& p, const HypoExp& q, double abs_tol = 1e-8);

struct Signature {
  int adl_lo = 0;
  int adl_hi = kAdlMax;
  RehabLevel rehab = RehabLevel::none;
  ExtensiveCare extensive = ExtensiveCare::none;

  bool contains(int adl, RehabLevel r, ExtensiveCare e) const {
    return adl >= adl_lo && adl <= adl_hi && r == rehab && e == extensive;
  }
  bool operator==(const Signature&) const = default;
};

struct RawGroup {
  std::string id;
  double direct_minutes = 0.0;
  double indirect_minutes = 0.0;
  Signature signature;

  HypoExp distribution() const { return HypoExp::from_means(direct_minutes, indirect_minutes); }
};

struct RawGroupTable {
  std::vector<RawGroup> groups;

  void validate() const;
  /// Index of the group whose signature covers the resident's variables, or -1.
  int lookup(int adl, RehabLevel r, ExtensiveCare e) const;
};

/// CSV: group_id,direct_minutes,indirect,indirect_kind,adl_lo,adl_hi,
/// rehab_level,extensive_care_level. indirect_kind is "minutes" or
/// "proportion"; a proportion p is stored as direct*p/(1-p) minutes.
RawGroupTable read_group_table(std::istream& in);
RawGroupTable load_group_table(const std::filesystem::path& path);
void write_group_table(std::ostream& out, const RawGroupTable& table);

/// The bundled CNA staff-time table: 3 ADL bands x 6 rehab levels x 3
/// extensive-care levels.
RawGroupTable bundled_group_table();

/// Node of the identifying-variable decision tree. Leaves carry a 1-based
/// cluster id; inner nodes send `value <= threshold` left.
struct TreeNode {
  int feature = -1;  // 0 ADL, 1 rehab ordinal, 2 extensive ordinal; -1 leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int cluster = 0;
};

struct AssociationRule {
  int feature;
  int value;
  int cluster;
  double support;
  double confidence;
};

struct Classifier {
  std::vector<TreeNode> nodes;  // root at 0
  std::vector<AssociationRule> rules;

  int classify(int adl, RehabLevel r, ExtensiveCare e) const;
  std::size_t leaves() const;
};

struct NeedCluster {
  int id = 0;  // 1-based, ordered by total mean
  std::vector<std::string> members;
  HypoExp distribution;
  double max_within_jsd = 0.0;
};

struct NeedGroupTable {
  std::vector<NeedCluster> clusters;
  Classifier classifier;
  double tolerance = 0.002;

  std::size_t count() const { return clusters.size(); }
  const NeedCluster& cluster(int id) const { return clusters.at(static_cast<std::size_t>(id - 1)); }
};

/// Pairwise JSD matrix over the raw groups.
Eigen::MatrixXd jsd_matrix(const RawGroupTable& table);

/// Complete-linkage agglomeration; merging stops once the next merge would
/// exceed the tolerance. Ties go to the pair with the lowest group indices.
/// Returns, per raw group, its 0-based cluster label before reordering.
std::vector<int> complete_linkage(const Eigen::MatrixXd& distance, double tolerance);

/// Clusters the table, pools member rates by arithmetic mean, orders the
/// clusters by total mean staff-time and builds the classifier.
NeedGroupTable cluster_groups(const RawGroupTable& table, double tolerance = 0.002);

/// Apriori over signature items followed by a Gini tree, pruned where
/// sibling leaves agree. `labels` holds the 1-based cluster of each group.
Classifier build_classifier(const RawGroupTable& table, const std::vector<int>& labels, double min_support = 0.01,
                            double min_confidence = 0.9);

int classify_resident(const NeedGroupTable& needs, const ResidentRecord& r);

/// Cramer-von Mises W^2 of the sample against d.
double cvm_statistic(std::vector<double> samples, const HypoExp& d);

struct CvmResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Parametric bootstrap p-value: fraction of resamples from d whose W^2 is at
/// least the observed one.
CvmResult cvm_test(const std::vector<double>& samples, const HypoExp& d, std::uint64_t seed, int resamples = 2000);

/// n equally spaced quantiles of the equal-weight mixture of the member
/// groups of a cluster; a noise-free stand-in for pooled member samples.
std::vector<double> pooled_member_quantiles(const RawGroupTable& table, const NeedCluster& cluster, int n);

}  // namespace nhplan
