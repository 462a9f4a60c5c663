#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bident/corpus.hpp"
#include "bident/scores.hpp"

// Classical lexical baselines. All share one tokenization: ASCII lowercase,
// whitespace split.
namespace bident::baselines {

class TokenSequence {
 public:
  TokenSequence() = default;
  // Throws InputError if any token is empty or contains whitespace.
  explicit TokenSequence(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  bool operator==(const TokenSequence&) const = default;

 private:
  std::vector<std::string> tokens_;
};

TokenSequence tokenize(std::string_view text);

struct BleuResult {
  double score = 0.0;
  // Clipped n-gram precision for n = 1..max_n (0 when there are no n-grams).
  std::vector<double> precisions;
  double brevity_penalty = 1.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

// Corpus-level BLEU, unsmoothed. `references[i]` holds the references of
// candidate i. Effective reference length takes the closest reference per
// segment, ties to the shorter one.
BleuResult bleu_details(std::span<const TokenSequence> candidates,
                        std::span<const std::vector<TokenSequence>> references, int max_n = 4);
double bleu(std::span<const TokenSequence> candidates,
            std::span<const std::vector<TokenSequence>> references, int max_n = 4);

// Word-level Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b);

double wer(const TokenSequence& candidate, const TokenSequence& reference);
double per(const TokenSequence& candidate, const TokenSequence& reference);

inline constexpr std::size_t kMaxShiftLength = 10;

struct TerResult {
  std::size_t shifts = 0;
  std::size_t edits = 0;
  double score = 0.0;
};

// Greedy-shift TER approximation: apply the block shift that most reduces the
// edit distance until none does, then add the residual edit distance.
TerResult ter_details(const TokenSequence& candidate, const TokenSequence& reference);
double ter(const TokenSequence& candidate, const TokenSequence& reference);

enum class Metric { kBleu, kWer, kPer, kTer };

std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
// Error rates; their values are negated before correlation.
bool lower_is_better(std::string_view metric_name);

// BLEU is corpus-level per system. Error rates are per segment (minimum over
// references) and averaged; stored values are the rates themselves.
std::vector<SystemScore> baseline_system_score(const corpus::EvaluationSet& set, Metric metric);

}  // namespace bident::baselines
