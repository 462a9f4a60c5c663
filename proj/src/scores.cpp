#include "bident/scores.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bident/error.hpp"

namespace bident {

SystemScore mean_system_score(std::string system_name, std::string language_pair,
                              std::string metric, std::span<const double> values) {
  if (values.empty()) {
    throw InputError(fmt::format("system '{}' has no segment values to average", system_name));
  }
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  return SystemScore{std::move(system_name), std::move(language_pair), std::move(metric),
                     sum / static_cast<double>(values.size()), values.size()};
}

std::string system_scores_to_jsonl(std::span<const SystemScore> scores) {
  std::string out;
  for (const auto& s : scores) {
    nlohmann::ordered_json rec;
    rec["system"] = s.system_name;
    rec["lang_pair"] = s.language_pair;
    rec["metric"] = s.metric;
    rec["value"] = s.value;
    rec["n"] = s.segment_count;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<SystemScore> parse_system_scores(std::istream& in) {
  std::vector<SystemScore> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      SystemScore s;
      s.system_name = rec.at("system").get<std::string>();
      s.language_pair = rec.at("lang_pair").get<std::string>();
      s.metric = rec.at("metric").get<std::string>();
      s.value = rec.at("value").get<double>();
      s.segment_count = rec.at("n").get<std::size_t>();
      if (!std::isfinite(s.value)) throw InputError("non-finite value");
      scores.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("system score line {}: {}", line_no, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("system score line {}: {}", line_no, e.what()));
    }
  }
  return scores;
}

}  // namespace bident
