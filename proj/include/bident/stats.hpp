#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/scores.hpp"

namespace bident::stats {

// Both throw InputError on length mismatch, n < 3, NaN, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Student t cumulative distribution, via the regularized incomplete beta.
double students_t_cdf(double t, double df);

enum class Alternative { kGreater, kLess };

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_one_tailed = 1.0;
  double alpha = 0.01;
  bool significant = false;
};

// One-tailed paired t-test on d = a - b. `alpha` is the rejection level, so
// a 99% confidence test uses alpha = 0.01 and is significant when p < alpha.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          Alternative alternative, double alpha = 0.01);

struct CorrelationRow {
  std::string metric;
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n_systems = 0;
};

struct CorrelationReport {
  std::string language_pair;
  // Sorted by metric name.
  std::vector<CorrelationRow> rows;
  std::optional<TTestResult> significance;
};

struct HumanJudgment {
  std::string system_name;
  double score = 0.0;
};

// Correlates each metric's system scores with human scores, matched by system
// name. Metrics listed in `negated` are sign-flipped first so that higher is
// better for every row. Throws InputError when a metric misses a scored
// system or fewer than 3 systems are scored.
CorrelationReport build_report(const std::map<std::string, std::vector<SystemScore>>& scores,
                               std::span<const HumanJudgment> human,
                               const std::string& language_pair,
                               const std::set<std::string>& negated = {});

nlohmann::ordered_json to_json(const TTestResult& t);
nlohmann::ordered_json to_json(const CorrelationReport& report);

// Metric rows by language-pair columns of Pearson values, then the Pearson
// average and the Spearman average over language pairs.
std::string format_table(std::span<const CorrelationReport> reports);

}  // namespace bident::stats
