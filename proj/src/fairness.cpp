#include "biasforge/fairness.hpp"

#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

#include "biasforge/dataset_io.hpp"
#include "biasforge/error.hpp"
#include "biasforge/parallel.hpp"

namespace biasforge {
namespace {

// Per-applicant accumulators within one segment.
struct Cluster {
  bool female = false;
  double profit = 0.0;      // sum of weight * realized profit
  double repaid_hits = 0.0; // sum of weight over repaid records
  double repaid_n = 0.0;    // count of repaid records
};

double ratio_variance(const std::vector<const Cluster*>& group, double ratio) {
  const std::size_t n = group.size();
  if (n < 2) return 0.0;
  double denom = 0.0, ss = 0.0;
  for (const Cluster* c : group) {
    denom += c->repaid_n;
    const double resid = c->repaid_hits - ratio * c->repaid_n;
    ss += resid * resid;
  }
  if (denom <= 0.0) return 0.0;
  return static_cast<double>(n) / static_cast<double>(n - 1) * ss / (denom * denom);
}

double total_se(const std::vector<double>& per_cluster) {
  const std::size_t n = per_cluster.size();
  if (n < 2) return 0.0;
  const double mean = pairwise_sum(per_cluster) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : per_cluster) ss += (v - mean) * (v - mean);
  return std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1) * ss);
}

// Clusters keyed by applicant, ordered by first appearance.
std::vector<Cluster> build_clusters(std::span<const DecisionRecord> records, Segment segment,
                                    TprConvention convention,
                                    std::span<const DecisionRecord> subtract = {}) {
  std::unordered_map<std::size_t, std::size_t> index;
  std::vector<Cluster> clusters;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const DecisionRecord& r = records[k];
    if (!in_segment(r, segment)) continue;
    auto [it, fresh] = index.emplace(r.applicant, clusters.size());
    if (fresh) {
      clusters.emplace_back();
      clusters.back().female = r.gender == Gender::Female;
    }
    Cluster& c = clusters[it->second];
    double w = approval_weight(r, convention);
    if (!subtract.empty()) w -= approval_weight(subtract[k], convention);
    c.profit += w * r.realized_profit;
    if (r.outcome == Outcome::Repaid) {
      c.repaid_hits += w;
      c.repaid_n += 1.0;
    }
  }
  return clusters;
}

struct GapEstimate {
  std::optional<double> female, male, gap, gap_se;
};

GapEstimate gap_from_clusters(const std::vector<Cluster>& clusters) {
  std::vector<const Cluster*> fem, mal;
  std::vector<double> fh, fn, mh, mn;
  for (const Cluster& c : clusters) {
    if (c.repaid_n <= 0.0) continue;
    (c.female ? fem : mal).push_back(&c);
    (c.female ? fh : mh).push_back(c.repaid_hits);
    (c.female ? fn : mn).push_back(c.repaid_n);
  }
  GapEstimate g;
  if (!fem.empty()) g.female = pairwise_sum(fh) / pairwise_sum(fn);
  if (!mal.empty()) g.male = pairwise_sum(mh) / pairwise_sum(mn);
  if (g.female && g.male) {
    g.gap = *g.female - *g.male;
    g.gap_se = std::sqrt(ratio_variance(fem, *g.female) + ratio_variance(mal, *g.male));
  }
  return g;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string_view to_string(Segment s) {
  switch (s) {
    case Segment::All: return "all";
    case Segment::NewOnly: return "new";
    case Segment::RepeatedOnly: return "repeated";
  }
  return "?";
}

bool in_segment(const DecisionRecord& r, Segment s) noexcept {
  switch (s) {
    case Segment::All: return true;
    case Segment::NewOnly: return r.t == 1;
    case Segment::RepeatedOnly: return r.t > 1;
  }
  return false;
}

double approval_weight(const DecisionRecord& r, TprConvention convention) {
  if (convention == TprConvention::Expected) return r.approval_prob;
  if (!r.approved)
    throw Error(ErrorKind::Data, "sampled-decision metrics need drawn decisions");
  return *r.approved ? 1.0 : 0.0;
}

double tpr_gap(std::span<const DecisionRecord> records, TprConvention convention) {
  std::vector<double> fh, mh;
  for (const DecisionRecord& r : records) {
    if (r.outcome != Outcome::Repaid) continue;
    (r.gender == Gender::Female ? fh : mh).push_back(approval_weight(r, convention));
  }
  if (fh.empty() || mh.empty())
    throw Error(ErrorKind::UndefinedMetric,
                std::string("TPR undefined: no repaid records for ") +
                    (fh.empty() ? "female" : "male") + " applicants");
  return pairwise_sum(fh) / static_cast<double>(fh.size()) -
         pairwise_sum(mh) / static_cast<double>(mh.size());
}

double expected_profit(std::span<const DecisionRecord> records, TprConvention convention) {
  std::vector<double> terms;
  terms.reserve(records.size());
  for (const DecisionRecord& r : records)
    terms.push_back(approval_weight(r, convention) * r.realized_profit);
  return pairwise_sum(terms);
}

SegmentMetrics segment_metrics(std::span<const DecisionRecord> records, Segment segment,
                               TprConvention convention) {
  SegmentMetrics m;
  std::vector<double> profit_terms, fa, ma;
  for (const DecisionRecord& r : records) {
    if (!in_segment(r, segment)) continue;
    ++m.n_applications;
    const double w = approval_weight(r, convention);
    profit_terms.push_back(w * r.realized_profit);
    const bool female = r.gender == Gender::Female;
    ++(female ? m.n_female : m.n_male);
    (female ? fa : ma).push_back(w);
    if (r.outcome == Outcome::Repaid) ++(female ? m.n_repaid_female : m.n_repaid_male);
  }
  m.expected_profit = pairwise_sum(profit_terms);
  if (!fa.empty()) m.approval_rate_female = pairwise_sum(fa) / static_cast<double>(fa.size());
  if (!ma.empty()) m.approval_rate_male = pairwise_sum(ma) / static_cast<double>(ma.size());

  const auto clusters = build_clusters(records, segment, convention);
  std::vector<double> per_cluster_profit;
  per_cluster_profit.reserve(clusters.size());
  for (const Cluster& c : clusters) per_cluster_profit.push_back(c.profit);
  m.expected_profit_se = total_se(per_cluster_profit);

  const GapEstimate g = gap_from_clusters(clusters);
  m.tpr_female = g.female;
  m.tpr_male = g.male;
  m.tpr_gap = g.gap;
  m.tpr_gap_se = g.gap_se;
  return m;
}

Json to_json(const SegmentMetrics& m) {
  return {{"n_applications", m.n_applications},
          {"n_female", m.n_female},
          {"n_male", m.n_male},
          {"n_repaid_female", m.n_repaid_female},
          {"n_repaid_male", m.n_repaid_male},
          {"expected_profit", m.expected_profit},
          {"expected_profit_se", m.expected_profit_se},
          {"tpr_by_gender", {{"female", optional_json(m.tpr_female)},
                             {"male", optional_json(m.tpr_male)}}},
          {"tpr_gap", optional_json(m.tpr_gap)},
          {"tpr_gap_se", optional_json(m.tpr_gap_se)},
          {"approval_rate_by_gender", {{"female", optional_json(m.approval_rate_female)},
                                       {"male", optional_json(m.approval_rate_male)}}}};
}

Contrast contrast(std::span<const DecisionRecord> a, std::span<const DecisionRecord> b,
                  Segment segment, TprConvention convention) {
  if (a.size() != b.size())
    throw Error(ErrorKind::Data, "contrast needs decision streams over the same applications");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].applicant != b[k].applicant || a[k].t != b[k].t)
      throw Error(ErrorKind::Data, "contrast streams are not aligned");

  const auto diff = build_clusters(a, segment, convention, b);
  Contrast c;
  std::vector<double> profits;
  profits.reserve(diff.size());
  for (const Cluster& cl : diff) profits.push_back(cl.profit);
  c.profit_diff = pairwise_sum(profits);
  c.profit_diff_se = total_se(profits);

  const GapEstimate g = gap_from_clusters(diff);
  if (!g.gap)
    throw Error(ErrorKind::UndefinedMetric, "TPR contrast undefined: a gender has no repaid records");
  c.gap_diff = *g.gap;
  c.gap_diff_se = *g.gap_se;
  return c;
}

std::vector<CohortStats> expected_cohort_stats(std::span<const DecisionRecord> records,
                                               std::span<const ApplicantProfile> profiles) {
  struct Acc {
    double users = 0, female = 0, housing = 0, dpi = 0, education = 0, income = 0;
  };
  std::map<int, Acc> by_t;
  std::unordered_map<std::size_t, double> survival;
  auto cov = [](const ApplicantProfile& p, const char* name) {
    const auto it = p.covariates.find(name);
    return it == p.covariates.end() ? 0.0 : it->second;
  };
  for (const DecisionRecord& r : records) {
    if (r.applicant >= profiles.size())
      throw Error(ErrorKind::Data, "decision record refers to an unknown applicant");
    // Records of one applicant arrive in t order.
    double& s = survival.try_emplace(r.applicant, 1.0).first->second;
    const double w = s * r.approval_prob;
    s = w;
    const ApplicantProfile& p = profiles[r.applicant];
    Acc& a = by_t[r.t];
    a.users += w;
    if (p.gender == Gender::Female) a.female += w;
    a.housing += w * cov(p, "housing");
    a.dpi += w * cov(p, "dpi");
    a.education += w * cov(p, "education");
    a.income += w * cov(p, "income");
  }
  std::vector<CohortStats> out;
  for (const auto& [t, a] : by_t) {
    CohortStats c;
    c.t = t;
    c.expected_user_count = a.users;
    c.expected_female_count = a.female;
    if (a.users > 0.0) {
      c.mean_housing = a.housing / a.users;
      c.mean_dpi = a.dpi / a.users;
      c.mean_education = a.education / a.users;
      c.mean_income = a.income / a.users;
    }
    out.push_back(c);
  }
  return out;
}

Json to_json(const std::vector<CohortStats>& stats) {
  Json rows = Json::array();
  for (const CohortStats& c : stats)
    rows.push_back({{"t", c.t},
                    {"expected_user_count", c.expected_user_count},
                    {"expected_female_count", c.expected_female_count},
                    {"mean_housing", c.mean_housing},
                    {"mean_dpi", c.mean_dpi},
                    {"mean_education", c.mean_education},
                    {"mean_income", c.mean_income}});
  return rows;
}

std::string cohort_stats_csv(const std::vector<CohortStats>& stats) {
  std::string out =
      "t,expected_user_count,expected_female_count,mean_housing,mean_dpi,mean_education,"
      "mean_income\n";
  for (const CohortStats& c : stats) {
    out += std::to_string(c.t) + ',' + format_number(c.expected_user_count) + ',' +
           format_number(c.expected_female_count) + ',' + format_number(c.mean_housing) + ',' +
           format_number(c.mean_dpi) + ',' + format_number(c.mean_education) + ',' +
           format_number(c.mean_income) + '\n';
  }
  return out;
}

}  // namespace biasforge
