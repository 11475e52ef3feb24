#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "biasforge/error.hpp"
#include "biasforge/fairness.hpp"

using namespace biasforge;

namespace {

DecisionRecord rec(std::size_t applicant, int t, Gender g, double prob, Outcome o, double profit) {
  DecisionRecord r;
  r.applicant = applicant;
  r.t = t;
  r.gender = g;
  r.approval_prob = prob;
  r.outcome = o;
  r.realized_profit = profit;
  return r;
}

std::vector<DecisionRecord> fixture() {
  return {rec(0, 1, Gender::Female, 0.8, Outcome::Repaid, 10),
          rec(1, 1, Gender::Female, 0.6, Outcome::Repaid, 20),
          rec(1, 2, Gender::Female, 0.9, Outcome::Defaulted, -100),
          rec(2, 1, Gender::Male, 0.5, Outcome::Repaid, 30),
          rec(3, 1, Gender::Male, 0.2, Outcome::Defaulted, -50)};
}

}  // namespace

TEST_CASE("tpr gap") {
  const auto r = fixture();
  CHECK(tpr_gap(r) == doctest::Approx(0.2).epsilon(1e-14));
  std::vector<DecisionRecord> men{r[3], r[4]};
  try {
    tpr_gap(men);
    FAIL("expected an undefined metric");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedMetric);
  }
  CHECK_THROWS_AS(tpr_gap(r, TprConvention::Sampled), Error);

  auto drawn = r;
  for (auto& d : drawn) d.approved = d.approval_prob > 0.55;
  CHECK(tpr_gap(drawn, TprConvention::Sampled) == 1.0);
}

TEST_CASE("expected profit") {
  const auto r = fixture();
  CHECK(expected_profit(r) == doctest::Approx(0.8 * 10 + 0.6 * 20 - 90 + 15 - 10).epsilon(1e-14));
  CHECK(expected_profit(std::vector<DecisionRecord>{}) == 0.0);
}

TEST_CASE("segments") {
  const auto r = fixture();
  const auto all = segment_metrics(r, Segment::All);
  CHECK(all.n_applications == 5);
  CHECK(all.n_female == 3);
  CHECK(all.n_repaid_male == 1);
  CHECK(*all.tpr_gap == doctest::Approx(0.2));
  CHECK(*all.approval_rate_female == doctest::Approx((0.8 + 0.6 + 0.9) / 3));

  const auto repeated = segment_metrics(r, Segment::RepeatedOnly);
  CHECK(repeated.n_applications == 1);
  CHECK_FALSE(repeated.tpr_gap.has_value());
  CHECK(to_json(repeated)["tpr_gap"].is_null());
  CHECK(segment_metrics(r, Segment::NewOnly).n_applications == 4);
}

TEST_CASE("cluster standard error of a total") {
  // Per-applicant profits 10, -5, 3: sqrt(3/2 * sum of squared deviations) = 13.
  const std::vector<DecisionRecord> r{rec(0, 1, Gender::Female, 1.0, Outcome::Repaid, 10),
                                      rec(1, 1, Gender::Male, 1.0, Outcome::Repaid, 2),
                                      rec(1, 2, Gender::Male, 1.0, Outcome::Defaulted, -7),
                                      rec(2, 1, Gender::Male, 1.0, Outcome::Repaid, 3)};
  const auto m = segment_metrics(r, Segment::All);
  CHECK(m.expected_profit == 8.0);
  CHECK(m.expected_profit_se == doctest::Approx(13.0).epsilon(1e-13));
}

TEST_CASE("paired contrast") {
  const auto a = fixture();
  const auto same = contrast(a, a, Segment::All);
  CHECK(same.gap_diff == 0.0);
  CHECK(same.gap_diff_se == 0.0);
  CHECK(same.profit_diff == 0.0);

  auto b = a;
  for (auto& r : b)
    if (r.gender == Gender::Male) r.approval_prob = std::min(1.0, r.approval_prob + 0.1);
  const auto c = contrast(a, b, Segment::All);
  CHECK(c.gap_diff == doctest::Approx(tpr_gap(a) - tpr_gap(b)).epsilon(1e-12));
  CHECK(c.profit_diff == doctest::Approx(expected_profit(a) - expected_profit(b)).epsilon(1e-12));

  b.pop_back();
  CHECK_THROWS_AS(contrast(a, b, Segment::All), Error);
}

TEST_CASE("gender relabelling negates the gap") {
  const auto r = fixture();
  auto swapped = r;
  for (auto& d : swapped) d.gender = d.gender == Gender::Male ? Gender::Female : Gender::Male;
  const auto m = segment_metrics(r, Segment::All);
  const auto s = segment_metrics(swapped, Segment::All);
  CHECK(*s.tpr_gap == -*m.tpr_gap);
  CHECK(*s.tpr_female == *m.tpr_male);
  CHECK(*s.tpr_gap_se == *m.tpr_gap_se);
  CHECK(s.expected_profit == m.expected_profit);
}

TEST_CASE("expected cohort statistics") {
  std::vector<ApplicantProfile> profiles(2);
  profiles[0].gender = Gender::Female;
  profiles[0].covariates = {{"constant", 1}, {"housing", 1}, {"dpi", 2}, {"education", 3}, {"income", 4}};
  profiles[1].gender = Gender::Male;
  profiles[1].covariates = {{"constant", 1}, {"housing", 0}, {"dpi", 4}, {"education", 1}, {"income", 2}};
  const std::vector<DecisionRecord> r{rec(0, 1, Gender::Female, 0.5, Outcome::Repaid, 1),
                                      rec(0, 2, Gender::Female, 0.4, Outcome::Repaid, 1),
                                      rec(1, 1, Gender::Male, 0.5, Outcome::Repaid, 1)};
  const auto stats = expected_cohort_stats(r, profiles);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].expected_user_count == 1.0);
  CHECK(stats[0].expected_female_count == 0.5);
  CHECK(stats[0].mean_dpi == 3.0);
  CHECK(stats[1].expected_user_count == doctest::Approx(0.2));
  CHECK(stats[1].mean_income == 4.0);
  const std::string csv = cohort_stats_csv(stats);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
