#include "nhplan/need.hpp"

#include "nhplan/stats.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <optional>
#include <tuple>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nhplan {

namespace {

bool near_equal_rates(const HypoExp& d) { return std::fabs(d.rate1 - d.rate2) / d.rate1 < 1e-9; }

void check_rates(const HypoExp& d) {
  if (!(d.rate1 > 0.0) || !(d.rate2 > 0.0)) throw std::invalid_argument("hypoexponential rates must be positive");
}

}  // namespace

double hypoexp_pdf(const HypoExp& d, double t) {
  check_rates(d);
  if (t < 0.0) throw std::invalid_argument("hypoexp_pdf: negative time");
  if (near_equal_rates(d)) return d.rate1 * d.rate1 * t * std::exp(-d.rate1 * t);
  // e^{-a t} - e^{-b t} written to stay accurate when the rates are close
  const double diff = -std::exp(-d.rate1 * t) * std::expm1(-(d.rate2 - d.rate1) * t);
  return d.rate1 * d.rate2 / (d.rate2 - d.rate1) * diff;
}

double hypoexp_cdf(const HypoExp& d, double t) {
  check_rates(d);
  if (t <= 0.0) return 0.0;
  if (near_equal_rates(d)) return -std::expm1(-d.rate1 * t) - d.rate1 * t * std::exp(-d.rate1 * t);
  const double a = d.rate1;
  const double b = d.rate2;
  const double tail = (b * std::exp(-a * t) - a * std::exp(-b * t)) / (b - a);
  return std::clamp(1.0 - tail, 0.0, 1.0);
}

double hypoexp_quantile(const HypoExp& d, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("hypoexp_quantile: q must lie in (0, 1)");
  double lo = 0.0;
  double hi = d.mean();
  while (hypoexp_cdf(d, hi) < q) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (hypoexp_cdf(d, mid) < q ? lo : hi) = mid;
  }
  return hi;
}

double hypoexp_sample(const HypoExp& d, Rng& rng) {
  return standard_exponential(rng) / d.rate1 + standard_exponential(rng) / d.rate2;
}

double jsd(const HypoExp& p, const HypoExp& q, double abs_tol) {
  // Order the pair canonically so jsd(p, q) and jsd(q, p) run the same code.
  const bool swap = std::tie(q.rate1, q.rate2) < std::tie(p.rate1, p.rate2);
  const HypoExp& a = swap ? q : p;
  const HypoExp& b = swap ? p : q;
  const double upper = std::max(hypoexp_quantile(a, 1.0 - 1e-10), hypoexp_quantile(b, 1.0 - 1e-10));
  auto f = [&](double t) {
    const double fa = hypoexp_pdf(a, t);
    const double fb = hypoexp_pdf(b, t);
    const double m = 0.5 * (fa + fb);
    double v = 0.0;
    if (fa > 0.0) v += 0.5 * fa * std::log(fa / m);
    if (fb > 0.0) v += 0.5 * fb * std::log(fb / m);
    return v;
  };
  // Split at quantiles of both laws so a narrow density is not stepped over
  // when the scales differ widely.
  std::vector<double> cuts{0.0, upper};
  for (const HypoExp* d : {&a, &b})
    for (double q : {1e-6, 0.01, 0.5, 0.99, 1.0 - 1e-10}) cuts.push_back(std::min(upper, hypoexp_quantile(*d, q)));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate(f, cuts[i], cuts[i + 1], abs_tol / static_cast<double>(cuts.size()), 4000).value;
  return std::clamp(total, 0.0, std::log(2.0));
}

// --- raw group table -----------------------------------------------------------

void RawGroupTable::validate() const {
  std::set<std::string> ids;
  for (const auto& g : groups) {
    if (!(g.direct_minutes > 0.0) || !(g.indirect_minutes > 0.0))
      throw std::invalid_argument("group " + g.id + ": staff-time means must be positive");
    if (!ids.insert(g.id).second) throw std::invalid_argument("group " + g.id + ": duplicate id");
    if (g.signature.adl_lo < 0 || g.signature.adl_hi > kAdlMax || g.signature.adl_lo > g.signature.adl_hi)
      throw std::invalid_argument("group " + g.id + ": invalid ADL band");
  }
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const Signature& a = groups[i].signature;
      const Signature& b = groups[j].signature;
      if (a.rehab == b.rehab && a.extensive == b.extensive && a.adl_lo <= b.adl_hi && b.adl_lo <= a.adl_hi)
        throw std::invalid_argument("groups " + groups[i].id + " and " + groups[j].id + ": overlapping signatures");
    }
}

int RawGroupTable::lookup(int adl, RehabLevel r, ExtensiveCare e) const {
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (groups[i].signature.contains(adl, r, e)) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw std::invalid_argument(what + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

RawGroupTable read_group_table(std::istream& in) {
  static const std::vector<std::string> kHeader = {"group_id", "direct_minutes", "indirect", "indirect_kind",
                                                   "adl_lo", "adl_hi", "rehab_level", "extensive_care_level"};
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != kHeader)
    throw std::invalid_argument("group table: header must be " + std::string("group_id,direct_minutes,indirect,"
                                                                            "indirect_kind,adl_lo,adl_hi,rehab_level,"
                                                                            "extensive_care_level"));
  RawGroupTable table;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    const std::string where = "group table row " + std::to_string(row);
    if (cells.size() != kHeader.size()) throw std::invalid_argument(where + ": expected 8 columns");
    RawGroup g;
    g.id = cells[0];
    g.direct_minutes = to_double(cells[1], where);
    const double indirect = to_double(cells[2], where);
    if (cells[3] == "minutes") {
      g.indirect_minutes = indirect;
    } else if (cells[3] == "proportion") {
      if (!(indirect > 0.0 && indirect < 1.0)) throw std::invalid_argument(where + ": proportion must lie in (0, 1)");
      g.indirect_minutes = g.direct_minutes * indirect / (1.0 - indirect);
    } else {
      throw std::invalid_argument(where + ": indirect_kind must be minutes or proportion");
    }
    g.signature.adl_lo = static_cast<int>(to_double(cells[4], where));
    g.signature.adl_hi = static_cast<int>(to_double(cells[5], where));
    const auto r = parse_rehab_level(cells[6]);
    const auto e = parse_extensive_care(cells[7]);
    if (!r || !e) throw std::invalid_argument(where + ": unknown rehab or extensive-care token");
    g.signature.rehab = *r;
    g.signature.extensive = *e;
    table.groups.push_back(std::move(g));
  }
  table.validate();
  return table;
}

RawGroupTable load_group_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open group table " + path.string());
  return read_group_table(in);
}

void write_group_table(std::ostream& out, const RawGroupTable& table) {
  out << "group_id,direct_minutes,indirect,indirect_kind,adl_lo,adl_hi,rehab_level,extensive_care_level\n";
  out.precision(17);
  for (const auto& g : table.groups)
    out << g.id << ',' << g.direct_minutes << ',' << g.indirect_minutes << ",minutes," << g.signature.adl_lo << ','
        << g.signature.adl_hi << ',' << to_token(g.signature.rehab) << ',' << to_token(g.signature.extensive) << '\n';
}

RawGroupTable bundled_group_table() {
  static constexpr int kBands[3][2] = {{0, 5}, {6, 10}, {11, 16}};
  static constexpr double kBase[3] = {35.0, 55.0, 80.0};
  static constexpr double kRehabAdd[kRehabLevels] = {0.0, 6.0, 12.0, 20.0, 28.0, 36.0};
  static constexpr double kExtAdd[kExtensiveLevels] = {0.0, 15.0, 30.0};
  constexpr double kIndirectShare = 0.25;
  RawGroupTable t;
  int k = 0;
  for (int b = 0; b < 3; ++b)
    for (int r = 0; r < kRehabLevels; ++r)
      for (int e = 0; e < kExtensiveLevels; ++e) {
        RawGroup g;
        char id[24];
        std::snprintf(id, sizeof id, "G%02d", ++k);
        g.id = id;
        g.direct_minutes = kBase[b] + kRehabAdd[r] + kExtAdd[e];
        g.indirect_minutes = g.direct_minutes * kIndirectShare / (1.0 - kIndirectShare);
        g.signature = {kBands[b][0], kBands[b][1], static_cast<RehabLevel>(r), static_cast<ExtensiveCare>(e)};
        t.groups.push_back(g);
      }
  return t;
}

// --- clustering --------------------------------------------------------------

Eigen::MatrixXd jsd_matrix(const RawGroupTable& table) {
  const auto n = static_cast<Eigen::Index>(table.groups.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = jsd(table.groups[static_cast<std::size_t>(i)].distribution(),
                              table.groups[static_cast<std::size_t>(j)].distribution());
  return d;
}

std::vector<int> complete_linkage(const Eigen::MatrixXd& distance, double tolerance) {
  const auto n = static_cast<std::size_t>(distance.rows());
  std::vector<std::vector<int>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {static_cast<int>(i)};
  auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
    double h = 0.0;
    for (int i : a)
      for (int j : b) h = std::max(h, distance(i, j));
    return h;
  };
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    // clusters stay sorted by their smallest member, so the first strict
    // minimum is the lowest-id pair
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double h = linkage(clusters[i], clusters[j]);
        if (h < best) {
          best = h;
          bi = i;
          bj = j;
        }
      }
    if (best > tolerance) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::vector<int> label(n);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (int i : clusters[c]) label[static_cast<std::size_t>(i)] = static_cast<int>(c);
  return label;
}

NeedGroupTable cluster_groups(const RawGroupTable& table, double tolerance) {
  if (table.groups.empty()) throw std::invalid_argument("cluster_groups: empty group table");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance: must be positive");
  const Eigen::MatrixXd d = jsd_matrix(table);
  const std::vector<int> raw = complete_linkage(d, tolerance);
  const int k = *std::max_element(raw.begin(), raw.end()) + 1;

  std::vector<NeedCluster> clusters(static_cast<std::size_t>(k));
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < raw.size(); ++i) members[static_cast<std::size_t>(raw[i])].push_back(i);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    double r1 = 0.0;
    double r2 = 0.0;
    for (std::size_t i : members[c]) {
      const HypoExp h = table.groups[i].distribution();
      r1 += h.rate1;
      r2 += h.rate2;
      clusters[c].members.push_back(table.groups[i].id);
      for (std::size_t j : members[c]) clusters[c].max_within_jsd = std::max(clusters[c].max_within_jsd, d(i, j));
    }
    const double m = static_cast<double>(members[c].size());
    clusters[c].distribution = {r1 / m, r2 / m};
  }
  std::vector<std::size_t> order(clusters.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return clusters[a].distribution.mean() < clusters[b].distribution.mean();
  });
  NeedGroupTable out;
  out.tolerance = tolerance;
  std::vector<int> rank(clusters.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    rank[order[pos]] = static_cast<int>(pos) + 1;
    out.clusters.push_back(clusters[order[pos]]);
    out.clusters.back().id = static_cast<int>(pos) + 1;
  }
  std::vector<int> labels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) labels[i] = rank[static_cast<std::size_t>(raw[i])];
  out.classifier = build_classifier(table, labels);
  return out;
}

// --- classifier ------------------------------------------------------------------

namespace {

struct Row {
  std::array<int, 3> value;  // ADL band index, rehab ordinal, extensive ordinal
  int label;
};

struct Split {
  int feature;
  int value;  // left branch takes value <= this
};

double gini(const std::vector<const Row*>& rows) {
  if (rows.empty()) return 0.0;
  std::map<int, int> counts;
  for (const Row* r : rows) ++counts[r->label];
  double g = 1.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(rows.size());
    g -= p * p;
  }
  return g;
}

int majority(const std::vector<const Row*>& rows) {
  std::map<int, int> counts;
  for (const Row* r : rows) ++counts[r->label];
  int best = 0;
  int label = 0;
  for (const auto& [l, c] : counts)
    if (c > best) {
      best = c;
      label = l;
    }
  return label;
}

class TreeBuilder {
 public:
  TreeBuilder(std::vector<Split> candidates, std::vector<Split> all, std::vector<int> band_hi)
      : candidates_(std::move(candidates)), all_(std::move(all)), band_hi_(std::move(band_hi)) {}

  int grow(const std::vector<const Row*>& rows, std::vector<TreeNode>& nodes) {
    const int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    if (gini(rows) == 0.0) {
      nodes[static_cast<std::size_t>(index)].cluster = rows.empty() ? 1 : rows.front()->label;
      return index;
    }
    auto best = choose(rows, candidates_);
    if (!best) best = choose(rows, all_);
    if (!best) {
      nodes[static_cast<std::size_t>(index)].cluster = majority(rows);
      return index;
    }
    std::vector<const Row*> left;
    std::vector<const Row*> right;
    for (const Row* r : rows) (r->value[static_cast<std::size_t>(best->feature)] <= best->value ? left : right).push_back(r);
    const int l = grow(left, nodes);
    const int rr = grow(right, nodes);
    TreeNode& node = nodes[static_cast<std::size_t>(index)];
    node.feature = best->feature;
    node.threshold = best->feature == 0 ? band_hi_[static_cast<std::size_t>(best->value)] : best->value;
    node.left = l;
    node.right = rr;
    return index;
  }

 private:
  std::optional<Split> choose(const std::vector<const Row*>& rows, const std::vector<Split>& splits) const {
    const double parent = gini(rows);
    double best_score = parent;
    std::optional<Split> best;
    for (const Split& s : splits) {
      std::vector<const Row*> l;
      std::vector<const Row*> r;
      for (const Row* row : rows) (row->value[static_cast<std::size_t>(s.feature)] <= s.value ? l : r).push_back(row);
      if (l.empty() || r.empty()) continue;
      const double n = static_cast<double>(rows.size());
      const double score = (static_cast<double>(l.size()) * gini(l) + static_cast<double>(r.size()) * gini(r)) / n;
      if (score < best_score - 1e-12) {
        best_score = score;
        best = s;
      }
    }
    return best;
  }

  std::vector<Split> candidates_;
  std::vector<Split> all_;
  std::vector<int> band_hi_;
};

// Collapses inner nodes whose two children are leaves of the same cluster.
void prune(std::vector<TreeNode>& nodes, int index) {
  TreeNode& node = nodes[static_cast<std::size_t>(index)];
  if (node.feature < 0) return;
  prune(nodes, node.left);
  prune(nodes, node.right);
  const TreeNode& l = nodes[static_cast<std::size_t>(node.left)];
  const TreeNode& r = nodes[static_cast<std::size_t>(node.right)];
  if (l.feature < 0 && r.feature < 0 && l.cluster == r.cluster) {
    node.cluster = l.cluster;
    node.feature = -1;
    node.left = node.right = -1;
  }
}

// Drops unreachable nodes left behind by pruning; keeps preorder numbering.
std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes) {
  std::vector<TreeNode> out;
  auto copy = [&](auto&& self, int index) -> int {
    const TreeNode& src = nodes[static_cast<std::size_t>(index)];
    const int at = static_cast<int>(out.size());
    out.push_back(src);
    if (src.feature >= 0) {
      const int l = self(self, src.left);
      const int r = self(self, src.right);
      out[static_cast<std::size_t>(at)].left = l;
      out[static_cast<std::size_t>(at)].right = r;
    }
    return at;
  };
  copy(copy, 0);
  return out;
}

}  // namespace

Classifier build_classifier(const RawGroupTable& table, const std::vector<int>& labels, double min_support,
                            double min_confidence) {
  if (labels.size() != table.groups.size()) throw std::invalid_argument("build_classifier: one label per group");
  std::vector<std::pair<int, int>> bands;
  for (const auto& g : table.groups) bands.emplace_back(g.signature.adl_lo, g.signature.adl_hi);
  std::sort(bands.begin(), bands.end());
  bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
  std::vector<int> band_hi;
  for (const auto& b : bands) band_hi.push_back(b.second);

  std::vector<Row> rows;
  std::map<std::array<int, 3>, int> seen;
  for (std::size_t i = 0; i < table.groups.size(); ++i) {
    const Signature& s = table.groups[i].signature;
    const auto band = static_cast<int>(
        std::find(bands.begin(), bands.end(), std::make_pair(s.adl_lo, s.adl_hi)) - bands.begin());
    const std::array<int, 3> key = {band, static_cast<int>(s.rehab), static_cast<int>(s.extensive)};
    const auto [it, fresh] = seen.emplace(key, labels[i]);
    if (!fresh && it->second != labels[i])
      throw std::invalid_argument("build_classifier: signature of group " + table.groups[i].id +
                                  " maps to two clusters");
    rows.push_back({key, labels[i]});
  }

  Classifier out;
  // Apriori on single items (feature = value) and item pairs; rules with
  // enough support and confidence nominate the splits tried first.
  const double n = static_cast<double>(rows.size());
  std::set<std::pair<int, int>> split_set;
  std::map<std::pair<int, int>, int> item_count;
  for (const Row& r : rows)
    for (int f = 0; f < 3; ++f) ++item_count[{f, r.value[static_cast<std::size_t>(f)]}];
  std::vector<std::pair<int, int>> frequent;
  for (const auto& [item, c] : item_count)
    if (c / n >= min_support) frequent.push_back(item);
  auto add_rules = [&](const std::vector<std::pair<int, int>>& items) {
    std::map<int, int> by_label;
    int cover = 0;
    for (const Row& r : rows) {
      bool match = true;
      for (const auto& [f, v] : items) match = match && r.value[static_cast<std::size_t>(f)] == v;
      if (!match) continue;
      ++cover;
      ++by_label[r.label];
    }
    if (cover / n < min_support) return;
    for (const auto& [label, c] : by_label) {
      const double conf = static_cast<double>(c) / cover;
      if (c / n < min_support || conf < min_confidence) continue;
      for (const auto& [f, v] : items) {
        out.rules.push_back({f, v, label, c / n, conf});
        split_set.insert({f, v});
        split_set.insert({f, v - 1});
      }
    }
  };
  for (const auto& item : frequent) add_rules({item});
  for (std::size_t a = 0; a < frequent.size(); ++a)
    for (std::size_t b = a + 1; b < frequent.size(); ++b) {
      if (frequent[a].first == frequent[b].first) continue;
      add_rules({frequent[a], frequent[b]});
      for (std::size_t c = b + 1; c < frequent.size(); ++c)
        if (frequent[c].first != frequent[a].first && frequent[c].first != frequent[b].first)
          add_rules({frequent[a], frequent[b], frequent[c]});
    }

  const std::array<int, 3> levels = {static_cast<int>(bands.size()), kRehabLevels, kExtensiveLevels};
  std::vector<Split> candidates;
  std::vector<Split> all;
  for (int f = 0; f < 3; ++f)
    for (int v = 0; v + 1 < levels[static_cast<std::size_t>(f)]; ++v) {
      all.push_back({f, v});
      if (split_set.count({f, v})) candidates.push_back({f, v});
    }

  std::vector<const Row*> ptrs;
  for (const Row& r : rows) ptrs.push_back(&r);
  TreeBuilder builder(candidates, all, band_hi);
  std::vector<TreeNode> nodes;
  builder.grow(ptrs, nodes);
  prune(nodes, 0);
  out.nodes = compact(nodes);
  return out;
}

int Classifier::classify(int adl, RehabLevel r, ExtensiveCare e) const {
  const std::array<double, 3> v = {static_cast<double>(adl), static_cast<double>(r), static_cast<double>(e)};
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = v[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].cluster;
}

std::size_t Classifier::leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int classify_resident(const NeedGroupTable& needs, const ResidentRecord& r) {
  const int adl = std::clamp(static_cast<int>(std::lround(r.covariates(0))), 0, kAdlMax);
  return needs.classifier.classify(adl, r.rehab, r.extensive);
}

// --- Cramer-von Mises ------------------------------------------------------------

double cvm_statistic(std::vector<double> samples, const HypoExp& d) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double w = 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double gap = hypoexp_cdf(d, samples[i]) - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n);
    w += gap * gap;
  }
  return w;
}

CvmResult cvm_test(const std::vector<double>& samples, const HypoExp& d, std::uint64_t seed, int resamples) {
  if (samples.size() < 20) throw std::invalid_argument("cvm_test: at least 20 samples required");
  CvmResult out;
  out.statistic = cvm_statistic(samples, d);
  Rng rng = make_stream(seed, 0, 0xC7A);
  std::vector<double> boot(samples.size());
  int exceed = 0;
  for (int b = 0; b < resamples; ++b) {
    for (auto& v : boot) v = hypoexp_sample(d, rng);
    if (cvm_statistic(boot, d) >= out.statistic) ++exceed;
  }
  out.p_value = (1.0 + exceed) / (1.0 + resamples);
  return out;
}

std::vector<double> pooled_member_quantiles(const RawGroupTable& table, const NeedCluster& cluster, int n) {
  std::vector<HypoExp> parts;
  for (const auto& id : cluster.members)
    for (const auto& g : table.groups)
      if (g.id == id) parts.push_back(g.distribution());
  auto cdf = [&](double t) {
    double s = 0.0;
    for (const auto& p : parts) s += hypoexp_cdf(p, t);
    return s / static_cast<double>(parts.size());
  };
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double q = (i + 0.5) / n;
    double lo = 0.0;
    double hi = 100.0;
    while (cdf(hi) < q) hi *= 2.0;
    for (int k = 0; k < 100; ++k) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < q ? lo : hi) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

}  // namespace nhplan
