#include "bident/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include "bident/error.hpp"

namespace bident::stats {

namespace {

void check_sample(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError(fmt::format("paired sample lengths differ ({} vs {})", x.size(), y.size()));
  }
  if (x.size() < 3) throw InputError("correlation needs at least 3 paired values");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite)) {
    throw InputError("paired sample contains NaN or infinite values");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// P(T > t) for t >= 0.
double upper_tail(double t, double df) {
  const double x = df / (df + t * t);
  return 0.5 * boost::math::ibeta(df / 2.0, 0.5, x);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_sample(x, y);
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InputError("correlation undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank ((i+1) + (j+1)) / 2
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_sample(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double students_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InputError("t distribution needs positive degrees of freedom");
  if (std::isnan(t)) throw InputError("t statistic is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  if (t >= 0.0) return 1.0 - upper_tail(t, df);
  return upper_tail(-t, df);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          Alternative alternative, double alpha) {
  if (a.size() != b.size()) {
    throw InputError(fmt::format("paired t-test lengths differ ({} vs {})", a.size(), b.size()));
  }
  if (a.size() < 2) throw InputError("paired t-test needs at least 2 pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");

  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double mean = mean_of(d);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw InputError("paired differences have zero variance");

  TTestResult r;
  r.t = mean / (sd / std::sqrt(n));
  r.df = static_cast<int>(d.size()) - 1;
  const double df = r.df;
  const double signed_t = alternative == Alternative::kGreater ? r.t : -r.t;
  r.p_one_tailed =
      signed_t >= 0.0 ? upper_tail(signed_t, df) : 1.0 - upper_tail(-signed_t, df);
  r.alpha = alpha;
  r.significant = r.p_one_tailed < alpha;
  return r;
}

CorrelationReport build_report(const std::map<std::string, std::vector<SystemScore>>& scores,
                               std::span<const HumanJudgment> human,
                               const std::string& language_pair,
                               const std::set<std::string>& negated) {
  if (human.size() < 3) {
    throw InputError(fmt::format("{}: correlation needs at least 3 human-scored systems, got {}",
                                 language_pair, human.size()));
  }
  std::vector<double> human_values;
  for (const auto& h : human) human_values.push_back(h.score);

  CorrelationReport report;
  report.language_pair = language_pair;
  for (const auto& [metric, systems] : scores) {  // std::map: ascending metric names
    std::vector<double> values;
    for (const auto& h : human) {
      const auto it = std::find_if(systems.begin(), systems.end(), [&](const SystemScore& s) {
        return s.system_name == h.system_name;
      });
      if (it == systems.end()) {
        throw InputError(fmt::format("{}: metric \"{}\" has no score for system \"{}\"",
                                     language_pair, metric, h.system_name));
      }
      values.push_back(negated.contains(metric) ? -it->value : it->value);
    }
    report.rows.push_back(CorrelationRow{metric, pearson(values, human_values),
                                         spearman(values, human_values), values.size()});
  }
  return report;
}

nlohmann::ordered_json to_json(const TTestResult& t) {
  nlohmann::ordered_json j;
  j["t"] = t.t;
  j["df"] = t.df;
  j["p_one_tailed"] = t.p_one_tailed;
  j["alpha"] = t.alpha;
  j["significant"] = t.significant;
  return j;
}

nlohmann::ordered_json to_json(const CorrelationReport& report) {
  nlohmann::ordered_json j;
  j["lang_pair"] = report.language_pair;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["metric"] = row.metric;
    r["pearson"] = row.pearson;
    r["spearman"] = row.spearman;
    r["n_systems"] = row.n_systems;
    j["rows"].push_back(std::move(r));
  }
  j["significance"] = report.significance ? to_json(*report.significance) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string format_table(std::span<const CorrelationReport> reports) {
  std::set<std::string> metrics;
  for (const auto& r : reports) {
    for (const auto& row : r.rows) metrics.insert(row.metric);
  }

  std::vector<std::string> header{"Metric"};
  for (const auto& r : reports) header.push_back(r.language_pair);
  header.emplace_back("Average");
  header.emplace_back("SpearmanAvg");

  std::vector<std::vector<std::string>> table{header};
  for (const auto& metric : metrics) {
    std::vector<std::string> line{metric};
    double pearson_sum = 0.0;
    double spearman_sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : reports) {
      const auto it = std::find_if(r.rows.begin(), r.rows.end(),
                                   [&](const CorrelationRow& row) { return row.metric == metric; });
      if (it == r.rows.end()) {
        line.emplace_back("-");
        continue;
      }
      line.push_back(fmt::format("{:.3f}", it->pearson));
      pearson_sum += it->pearson;
      spearman_sum += it->spearman;
      ++count;
    }
    const auto n = static_cast<double>(count);
    line.push_back(count ? fmt::format("{:.3f}", pearson_sum / n) : "-");
    line.push_back(count ? fmt::format("{:.3f}", spearman_sum / n) : "-");
    table.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::string out;
  for (std::size_t l = 0; l < table.size(); ++l) {
    const auto& line = table[l];
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) {
        out += fmt::format("{:<{}}", line[c], widths[c]);
      } else {
        out += fmt::format("  {:>{}}", line[c], widths[c]);
      }
    }
    out += '\n';
    if (l == 0) {
      std::size_t total = widths[0];
      for (std::size_t c = 1; c < widths.size(); ++c) total += 2 + widths[c];
      out += std::string(total, '-');
      out += '\n';
    }
  }
  return out;
}

}  // namespace bident::stats
