#include "bident/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "bident/error.hpp"
#include "bident/text.hpp"

namespace bident::baselines {

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

// Tokens never contain spaces, so a space-joined key is unambiguous.
NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

void require_reference(const TokenSequence& reference) {
  if (reference.empty()) throw InputError("reference has no tokens");
}

bool contains_block(const std::vector<std::string>& haystack, std::span<const std::string> block) {
  return std::search(haystack.begin(), haystack.end(), block.begin(), block.end()) !=
         haystack.end();
}

}  // namespace

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    if (t.empty() || text::lowercase_tokens(t).size() != 1) {
      throw InputError(fmt::format("invalid token \"{}\"", t));
    }
  }
}

TokenSequence tokenize(std::string_view text) { return TokenSequence(text::lowercase_tokens(text)); }

BleuResult bleu_details(std::span<const TokenSequence> candidates,
                        std::span<const std::vector<TokenSequence>> references, int max_n) {
  if (candidates.empty()) throw InputError("BLEU: empty corpus");
  if (candidates.size() != references.size()) {
    throw InputError(fmt::format("BLEU: {} candidates but {} reference sets", candidates.size(),
                                 references.size()));
  }
  if (max_n < 1) throw InputError("BLEU: max_n must be at least 1");
  const auto orders = static_cast<std::size_t>(max_n);

  std::vector<std::size_t> matched(orders, 0);
  std::vector<std::size_t> total(orders, 0);
  BleuResult result;

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i].tokens();
    const auto& refs = references[i];
    if (refs.empty()) throw InputError(fmt::format("BLEU: segment {} has no references", i));

    result.candidate_length += cand.size();
    std::size_t best_len = refs.front().size();
    for (const auto& r : refs) {
      const auto diff = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (diff(r.size()) < diff(best_len) || (diff(r.size()) == diff(best_len) && r.size() < best_len)) {
        best_len = r.size();
      }
    }
    result.reference_length += best_len;

    for (std::size_t n = 1; n <= orders; ++n) {
      const auto cand_counts = count_ngrams(cand, n);
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [gram, c] : count_ngrams(r.tokens(), n)) {
          auto& slot = max_ref[gram];
          slot = std::max(slot, c);
        }
      }
      for (const auto& [gram, c] : cand_counts) {
        total[n - 1] += c;
        if (const auto it = max_ref.find(gram); it != max_ref.end()) {
          matched[n - 1] += std::min(c, it->second);
        }
      }
    }
  }

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < orders; ++n) {
    const double p = total[n] == 0 ? 0.0
                                   : static_cast<double>(matched[n]) / static_cast<double>(total[n]);
    result.precisions.push_back(p);
    if (p == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }

  const auto c = static_cast<double>(result.candidate_length);
  const auto r = static_cast<double>(result.reference_length);
  result.brevity_penalty = (c == 0.0) ? 0.0 : (c >= r ? 1.0 : std::exp(1.0 - r / c));
  result.score = zero ? 0.0
                      : result.brevity_penalty * std::exp(log_sum / static_cast<double>(orders));
  return result;
}

double bleu(std::span<const TokenSequence> candidates,
            std::span<const std::vector<TokenSequence>> references, int max_n) {
  return bleu_details(candidates, references, max_n).score;
}

std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double wer(const TokenSequence& candidate, const TokenSequence& reference) {
  require_reference(reference);
  return static_cast<double>(edit_distance(candidate.tokens(), reference.tokens())) /
         static_cast<double>(reference.size());
}

double per(const TokenSequence& candidate, const TokenSequence& reference) {
  require_reference(reference);
  std::map<std::string_view, std::size_t> ref_counts;
  for (const auto& t : reference.tokens()) ++ref_counts[t];
  std::map<std::string_view, std::size_t> cand_counts;
  for (const auto& t : candidate.tokens()) ++cand_counts[t];

  std::size_t matches = 0;
  for (const auto& [word, c] : cand_counts) {
    if (const auto it = ref_counts.find(word); it != ref_counts.end()) {
      matches += std::min(c, it->second);
    }
  }
  const double excess = candidate.size() > reference.size()
                            ? static_cast<double>(candidate.size() - reference.size())
                            : 0.0;
  const double rate =
      1.0 - (static_cast<double>(matches) - excess) / static_cast<double>(reference.size());
  return std::max(0.0, rate);
}

TerResult ter_details(const TokenSequence& candidate, const TokenSequence& reference) {
  require_reference(reference);
  const auto& ref = reference.tokens();
  std::vector<std::string> words = candidate.tokens();
  TerResult result;

  std::size_t current = edit_distance(words, ref);
  while (current > 0) {
    std::size_t best_gain = 0;
    std::size_t best_start = 0;
    std::size_t best_len = 0;
    std::size_t best_dest = 0;
    std::vector<std::string> trial;
    trial.reserve(words.size());

    const std::size_t n = words.size();
    for (std::size_t len = 1; len <= std::min(kMaxShiftLength, n); ++len) {
      for (std::size_t start = 0; start + len <= n; ++start) {
        const std::span<const std::string> block(words.data() + start, len);
        // Only blocks that occur in the reference can line up after a shift.
        if (!contains_block(ref, block)) continue;
        // `dest` indexes the sequence with the block removed.
        for (std::size_t dest = 0; dest + len <= n; ++dest) {
          if (dest == start) continue;
          trial.clear();
          trial.insert(trial.end(), words.begin(), words.begin() + start);
          trial.insert(trial.end(), words.begin() + start + len, words.end());
          trial.insert(trial.begin() + dest, block.begin(), block.end());
          const std::size_t d = edit_distance(trial, ref);
          if (d < current && current - d > best_gain) {
            best_gain = current - d;
            best_start = start;
            best_len = len;
            best_dest = dest;
          }
        }
      }
    }
    if (best_gain == 0) break;

    std::vector<std::string> block(words.begin() + best_start,
                                   words.begin() + best_start + best_len);
    words.erase(words.begin() + best_start, words.begin() + best_start + best_len);
    words.insert(words.begin() + best_dest, block.begin(), block.end());
    ++result.shifts;
    current -= best_gain;
  }

  result.edits = current;
  result.score = static_cast<double>(result.shifts + result.edits) /
                 static_cast<double>(reference.size());
  return result;
}

double ter(const TokenSequence& candidate, const TokenSequence& reference) {
  return ter_details(candidate, reference).score;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kBleu:
      return "bleu";
    case Metric::kWer:
      return "wer";
    case Metric::kPer:
      return "per";
    case Metric::kTer:
      return "ter";
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (auto m : {Metric::kBleu, Metric::kWer, Metric::kPer, Metric::kTer}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

bool lower_is_better(std::string_view metric_name) {
  return metric_name == "wer" || metric_name == "per" || metric_name == "ter";
}

std::vector<SystemScore> baseline_system_score(const corpus::EvaluationSet& set, Metric metric) {
  if (corpus::has_errors(corpus::validate(set))) {
    throw InputError(fmt::format("evaluation set {} failed validation", set.language_pair));
  }
  const std::string name(to_string(metric));
  std::vector<SystemScore> out;
  for (const auto& sys : set.systems) {
    std::vector<TokenSequence> cands;
    std::vector<std::vector<TokenSequence>> refs;
    for (const auto& seg : sys.segments) {
      cands.push_back(tokenize(seg.candidate));
      auto& r = refs.emplace_back();
      for (const auto& text : seg.references) r.push_back(tokenize(text));
    }

    if (metric == Metric::kBleu) {
      out.push_back(SystemScore{sys.name, set.language_pair, name, bleu(cands, refs),
                                cands.size()});
      continue;
    }

    std::vector<double> rates;
    rates.reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      double best = 0.0;
      for (std::size_t k = 0; k < refs[i].size(); ++k) {
        double rate = 0.0;
        switch (metric) {
          case Metric::kWer:
            rate = wer(cands[i], refs[i][k]);
            break;
          case Metric::kPer:
            rate = per(cands[i], refs[i][k]);
            break;
          case Metric::kTer:
            rate = ter(cands[i], refs[i][k]);
            break;
          case Metric::kBleu:
            break;
        }
        best = k == 0 ? rate : std::min(best, rate);
      }
      rates.push_back(best);
    }
    out.push_back(mean_system_score(sys.name, set.language_pair, name, rates));
  }
  return out;
}

}  // namespace bident::baselines
