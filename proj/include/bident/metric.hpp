#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bident/corpus.hpp"
#include "bident/nli.hpp"
#include "bident/scores.hpp"

// Bidirectional-entailment translation metric.
//
// A candidate is scored against a reference by asking the entailment
// classifier twice: candidate as premise with the reference as hypothesis
// (forward), then the roles swapped (backward). Each entailment probability is
// turned into odds p / (1 - p) and the segment score is the product of the
// two odds. A candidate that is a paraphrase of the reference entails it in
// both directions and therefore scores high; one-sided entailment (one text
// more general than the other) is penalized by the product. System scores are
// segment-score means.
namespace bident::metric {

inline constexpr std::string_view kMetricName = "bident";

// Probability clamp applied before the odds transform.
inline constexpr double kProbabilityEpsilon = 1e-6;

// Odds ratio between directions above which a segment is flagged as
// one-directional.
inline constexpr double kOneDirectionalRatio = 10.0;

// p / (1 - p) after clamping p to [eps, 1 - eps]. Throws InputError when p is
// outside [0, 1] or NaN.
double odds(double p);

struct DirectionalOdds {
  // candidate entails reference
  double forward = 0.0;
  // reference entails candidate
  double backward = 0.0;
};

struct SegmentScore {
  std::string segment_id;
  DirectionalOdds odds;
  double raw = 0.0;
  std::optional<double> normalized;

  bool one_directional() const;
};

// Score from the two entailment probabilities.
SegmentScore score_from_probabilities(std::string segment_id, double p_forward,
                                      double p_backward);

SegmentScore segment_score(std::string_view candidate, std::string_view reference,
                           nli::Classifier& classifier);

// Highest raw score; ties go to the earliest reference. Throws InputError on
// an empty list.
SegmentScore reduce_references(std::span<const SegmentScore> per_reference);

enum class Normalization { kNone, kMax, kMean, kMinMax };

std::string_view to_string(Normalization mode);
std::optional<Normalization> parse_normalization(std::string_view name);

// Fills `normalized` for every score, pooled over the whole list:
//   none   raw
//   max    raw / max(raw)
//   mean   raw / mean(raw)
//   minmax (raw - min) / (max - min)
// A degenerate pool (max == min) maps to 1.0 for max/mean and 0.0 for minmax.
std::vector<SegmentScore> normalize_scores(std::vector<SegmentScore> scores, Normalization mode);

struct SystemSegments {
  std::string system_name;
  std::vector<SegmentScore> segments;
};

struct ScoringRun {
  std::string language_pair;
  std::vector<SystemScore> systems;
  std::vector<SystemSegments> segments;
};

struct ScoringOptions {
  Normalization normalization = Normalization::kNone;
  nli::BatchOptions batch;
  // Optional classification cache; must match the classifier's model id.
  nli::Cache* cache = nullptr;
};

// Scores every system of `set`. Identical (premise, hypothesis) pairs are
// classified once. Normalization is pooled over all systems of the set and
// each system value is the mean of its normalized segment scores. Results do
// not depend on batch size or concurrency.
ScoringRun score_systems(const corpus::EvaluationSet& set, nli::Classifier& classifier,
                         const ScoringOptions& options = {});

// {"system","lang_pair","segment_id","odds_f","odds_b","raw","normalized","one_directional"}
std::string segment_scores_to_jsonl(const ScoringRun& run);

}  // namespace bident::metric
