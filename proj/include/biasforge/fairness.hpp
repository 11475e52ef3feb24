#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "biasforge/dataset.hpp"
#include "biasforge/json_io.hpp"

namespace biasforge {

// Expected: approvals weighted by approval probability. Sampled: drawn 0/1
// decisions (records must carry them).
enum class TprConvention { Expected, Sampled };

enum class Segment { All, NewOnly, RepeatedOnly };

std::string_view to_string(Segment s);
bool in_segment(const DecisionRecord& r, Segment s) noexcept;

double approval_weight(const DecisionRecord& r, TprConvention convention);

// Female TPR minus male TPR among repaid applications. Throws UndefinedMetric
// when a gender has no repaid records.
double tpr_gap(std::span<const DecisionRecord> records,
               TprConvention convention = TprConvention::Expected);

// Sum of approval weight times realized profit.
double expected_profit(std::span<const DecisionRecord> records,
                       TprConvention convention = TprConvention::Expected);

struct SegmentMetrics {
  std::size_t n_applications = 0;
  std::size_t n_female = 0;
  std::size_t n_male = 0;
  std::size_t n_repaid_female = 0;
  std::size_t n_repaid_male = 0;
  double expected_profit = 0.0;
  double expected_profit_se = 0.0;
  std::optional<double> tpr_female;
  std::optional<double> tpr_male;
  std::optional<double> tpr_gap;
  std::optional<double> tpr_gap_se;
  std::optional<double> approval_rate_female;
  std::optional<double> approval_rate_male;
};

// Standard errors treat applicants as independent clusters.
SegmentMetrics segment_metrics(std::span<const DecisionRecord> records, Segment segment,
                               TprConvention convention = TprConvention::Expected);

Json to_json(const SegmentMetrics& m);

// Paired difference A - B between two decision streams over the same
// applications (same order).
struct Contrast {
  double gap_diff = 0.0;
  double gap_diff_se = 0.0;
  double profit_diff = 0.0;
  double profit_diff_se = 0.0;
};

Contrast contrast(std::span<const DecisionRecord> a, std::span<const DecisionRecord> b,
                  Segment segment, TprConvention convention = TprConvention::Expected);

struct CohortStats {
  int t = 1;
  double expected_user_count = 0.0;
  double expected_female_count = 0.0;
  double mean_housing = 0.0;
  double mean_dpi = 0.0;
  double mean_education = 0.0;
  double mean_income = 0.0;
};

// Expected approved-user characteristics per application index. Applicant i
// contributes to t with weight prod_{s<t} P_is * P_it.
std::vector<CohortStats> expected_cohort_stats(std::span<const DecisionRecord> records,
                                               std::span<const ApplicantProfile> profiles);

Json to_json(const std::vector<CohortStats>& stats);
std::string cohort_stats_csv(const std::vector<CohortStats>& stats);

}  // namespace biasforge
