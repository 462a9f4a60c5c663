#include "bident/metric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace bident::metric {

double odds(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InputError(fmt::format("probability {} is outside [0, 1]", p));
  }
  const double q = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return q / (1.0 - q);
}

bool SegmentScore::one_directional() const {
  const double hi = std::max(odds.forward, odds.backward);
  const double lo = std::min(odds.forward, odds.backward);
  return hi > kOneDirectionalRatio * lo;
}

SegmentScore score_from_probabilities(std::string segment_id, double p_forward,
                                      double p_backward) {
  SegmentScore s;
  s.segment_id = std::move(segment_id);
  s.odds.forward = odds(p_forward);
  s.odds.backward = odds(p_backward);
  s.raw = s.odds.forward * s.odds.backward;
  return s;
}

SegmentScore segment_score(std::string_view candidate, std::string_view reference,
                           nli::Classifier& classifier) {
  const std::vector<nli::PairRequest> pairs{
      {"forward", std::string(candidate), std::string(reference)},
      {"backward", std::string(reference), std::string(candidate)},
  };
  const auto dists = nli::classify_batch(pairs, classifier, {2, 1});
  return score_from_probabilities({}, dists[0].entailment, dists[1].entailment);
}

SegmentScore reduce_references(std::span<const SegmentScore> per_reference) {
  if (per_reference.empty()) throw InputError("no reference scores to reduce");
  // max_element returns the first of equal maxima
  return *std::max_element(per_reference.begin(), per_reference.end(),
                           [](const SegmentScore& a, const SegmentScore& b) {
                             return a.raw < b.raw;
                           });
}

std::string_view to_string(Normalization mode) {
  switch (mode) {
    case Normalization::kNone:
      return "none";
    case Normalization::kMax:
      return "max";
    case Normalization::kMean:
      return "mean";
    case Normalization::kMinMax:
      return "minmax";
  }
  return "none";
}

std::optional<Normalization> parse_normalization(std::string_view name) {
  for (auto mode : {Normalization::kNone, Normalization::kMax, Normalization::kMean,
                    Normalization::kMinMax}) {
    if (name == to_string(mode)) return mode;
  }
  return std::nullopt;
}

std::vector<SegmentScore> normalize_scores(std::vector<SegmentScore> scores, Normalization mode) {
  if (scores.empty()) return scores;
  const auto [min_it, max_it] = std::minmax_element(
      scores.begin(), scores.end(),
      [](const SegmentScore& a, const SegmentScore& b) { return a.raw < b.raw; });
  const double lo = min_it->raw;
  const double hi = max_it->raw;
  const bool degenerate = hi == lo;
  double mean = 0.0;
  for (const auto& s : scores) mean += s.raw;
  mean /= static_cast<double>(scores.size());

  for (auto& s : scores) {
    switch (mode) {
      case Normalization::kNone:
        s.normalized = s.raw;
        break;
      case Normalization::kMax:
        s.normalized = degenerate ? 1.0 : s.raw / hi;
        break;
      case Normalization::kMean:
        s.normalized = degenerate ? 1.0 : s.raw / mean;
        break;
      case Normalization::kMinMax:
        s.normalized = degenerate ? 0.0 : (s.raw - lo) / (hi - lo);
        break;
    }
  }
  return scores;
}

ScoringRun score_systems(const corpus::EvaluationSet& set, nli::Classifier& classifier,
                         const ScoringOptions& options) {
  // Unique classifier requests, in first-use order.
  std::vector<nli::PairRequest> requests;
  std::map<std::pair<std::string_view, std::string_view>, std::size_t> request_index;
  auto request_for = [&](const std::string& premise, const std::string& hypothesis) {
    auto [it, inserted] = request_index.try_emplace({premise, hypothesis}, requests.size());
    if (inserted) {
      requests.push_back({fmt::format("p{}", requests.size() + 1), premise, hypothesis});
    }
    return it->second;
  };

  struct Lookup {
    std::size_t forward;
    std::size_t backward;
  };
  // [system][segment][reference]
  std::vector<std::vector<std::vector<Lookup>>> plan;
  plan.reserve(set.systems.size());
  for (const auto& sys : set.systems) {
    auto& sys_plan = plan.emplace_back();
    for (const auto& seg : sys.segments) {
      auto& seg_plan = sys_plan.emplace_back();
      for (const auto& ref : seg.references) {
        seg_plan.push_back({request_for(seg.candidate, ref), request_for(ref, seg.candidate)});
      }
    }
  }

  std::vector<nli::EntailmentDistribution> dists;
  if (!requests.empty()) {
    dists = nli::cached_classify_batch(requests, classifier, options.cache, options.batch);
  }

  std::vector<SegmentScore> pooled;
  for (std::size_t s = 0; s < set.systems.size(); ++s) {
    const auto& sys = set.systems[s];
    for (std::size_t g = 0; g < sys.segments.size(); ++g) {
      std::vector<SegmentScore> per_ref;
      for (const auto& lookup : plan[s][g]) {
        per_ref.push_back(score_from_probabilities(sys.segments[g].id,
                                                   dists[lookup.forward].entailment,
                                                   dists[lookup.backward].entailment));
      }
      pooled.push_back(reduce_references(per_ref));
    }
  }
  pooled = normalize_scores(std::move(pooled), options.normalization);

  ScoringRun run;
  run.language_pair = set.language_pair;
  std::size_t offset = 0;
  for (const auto& sys : set.systems) {
    SystemSegments segs{sys.name, {}};
    std::vector<double> values;
    for (std::size_t g = 0; g < sys.segments.size(); ++g) {
      segs.segments.push_back(pooled[offset + g]);
      values.push_back(*pooled[offset + g].normalized);
    }
    offset += sys.segments.size();
    run.systems.push_back(
        mean_system_score(sys.name, set.language_pair, std::string(kMetricName), values));
    run.segments.push_back(std::move(segs));
  }
  return run;
}

std::string segment_scores_to_jsonl(const ScoringRun& run) {
  std::string out;
  for (const auto& sys : run.segments) {
    for (const auto& seg : sys.segments) {
      nlohmann::ordered_json rec;
      rec["system"] = sys.system_name;
      rec["lang_pair"] = run.language_pair;
      rec["segment_id"] = seg.segment_id;
      rec["odds_f"] = seg.odds.forward;
      rec["odds_b"] = seg.odds.backward;
      rec["raw"] = seg.raw;
      if (seg.normalized) {
        rec["normalized"] = *seg.normalized;
      } else {
        rec["normalized"] = nullptr;
      }
      rec["one_directional"] = seg.one_directional();
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace bident::metric
