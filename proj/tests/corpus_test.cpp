#include "bident/corpus.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bident/text.hpp"
#include "test_support.hpp"

namespace bident::corpus {
namespace {

std::string record(const std::string& system, const std::string& seg, const std::string& cand,
                   const std::string& ref, const std::string& lp = "de-en") {
  return "{\"system\":\"" + system + "\",\"lang_pair\":\"" + lp + "\",\"segment_id\":\"" + seg +
         "\",\"candidate\":\"" + cand + "\",\"references\":[\"" + ref + "\"]}\n";
}

EvaluationSet parse(const std::string& s) {
  std::istringstream in(s);
  return parse_dataset(in);
}

std::size_t error_line(const std::string& s) {
  try {
    parse(s);
  } catch (const CorpusError& e) {
    return e.line();
  }
  ADD_FAILURE() << "expected CorpusError";
  return 0;
}

TEST(Text, Utf8Validation) {
  EXPECT_TRUE(text::is_valid_utf8("plain"));
  EXPECT_TRUE(text::is_valid_utf8("Mehmet \xC5\x9Eim\xC5\x9F" "ek"));
  EXPECT_TRUE(text::is_valid_utf8("\xF0\x9F\x98\x80"));
  EXPECT_FALSE(text::is_valid_utf8("\xC5"));
  EXPECT_FALSE(text::is_valid_utf8("\xC0\xAF"));          // overlong
  EXPECT_FALSE(text::is_valid_utf8("\xED\xA0\x80"));      // surrogate
  EXPECT_FALSE(text::is_valid_utf8("\xF4\x90\x80\x80"));  // > U+10FFFF
}

TEST(Text, LowercaseTokens) {
  EXPECT_EQ(text::lowercase_tokens("  The CAT\tsat \n"),
            (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_TRUE(text::lowercase_tokens(" \t ").empty());
}

TEST(ParseDataset, TwoSystemsThreeSegments) {
  std::string data;
  for (const char* sys : {"A", "B"}) {
    for (const char* seg : {"s1", "s2", "s3"}) data += record(sys, seg, "cand", "ref");
  }
  const auto set = parse(data);
  EXPECT_EQ(set.language_pair, "de-en");
  ASSERT_EQ(set.systems.size(), 2u);
  EXPECT_EQ(set.systems[0].name, "A");
  EXPECT_EQ(set.systems[1].name, "B");
  ASSERT_EQ(set.systems[1].segments.size(), 3u);
  EXPECT_EQ(set.systems[1].segments[2].id, "s3");
  EXPECT_FALSE(set.systems[0].human_score.has_value());
}

TEST(ParseDataset, PreservesSegmentOrder) {
  const auto set = parse(record("A", "z", "c", "r") + record("A", "a", "c", "r") +
                         record("A", "m", "c", "r"));
  ASSERT_EQ(set.systems[0].segments.size(), 3u);
  EXPECT_EQ(set.systems[0].segments[0].id, "z");
  EXPECT_EQ(set.systems[0].segments[1].id, "a");
  EXPECT_EQ(set.systems[0].segments[2].id, "m");
}

TEST(ParseDataset, MissingCandidateNamesLine) {
  const std::string data =
      record("A", "s1", "c", "r") +
      "{\"system\":\"A\",\"lang_pair\":\"de-en\",\"segment_id\":\"s2\",\"references\":[\"r\"]}\n";
  EXPECT_EQ(error_line(data), 2u);
  try {
    parse(data);
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("candidate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseDataset, InconsistentSegmentSets) {
  const std::string data = record("A", "s1", "c", "r") + record("A", "s2", "c", "r") +
                           record("A", "s3", "c", "r") + record("B", "s1", "c", "r") +
                           record("B", "s2", "c", "r");
  try {
    parse(data);
    FAIL() << "expected consistency error";
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("s3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("missing segment"), std::string::npos) << msg;
  }
}

TEST(ParseDataset, RejectsBadRecords) {
  EXPECT_EQ(error_line(record("A", "s1", "c", "r") + record("A", "s1", "c", "r")), 2u);
  EXPECT_EQ(error_line(record("A", "s1", "  ", "r")), 1u);
  EXPECT_EQ(error_line(record("A", "s1", "c", "")), 1u);
  EXPECT_EQ(error_line(record("A", "s1", "c", "r", "en-de")), 1u);
  EXPECT_EQ(error_line(record("A", "s1", "c", "r") + "not json\n"), 2u);
  EXPECT_EQ(error_line("{\"system\":\"A\",\"lang_pair\":\"de-en\",\"segment_id\":\"s\","
                       "\"candidate\":\"c\",\"references\":[]}\n"),
            1u);
  EXPECT_EQ(error_line("{\"system\":\"A\",\"lang_pair\":\"de-en\",\"segment_id\":\"s\","
                       "\"candidate\":\"c\",\"references\":\"r\"}\n"),
            1u);
  EXPECT_EQ(error_line("{\"system\":\"A\",\"lang_pair\":\"de-en\",\"segment_id\":\"s\","
                       "\"candidate\":\"\xC5\",\"references\":[\"r\"]}\n"),
            1u);
  EXPECT_THROW(parse(""), CorpusError);
}

TEST(ParseCorpus, GroupsLanguagePairs) {
  const std::string data = record("A", "s1", "c", "r", "de-en") + record("A", "s1", "c", "r", "ru-en") +
                           record("B", "s1", "c", "r", "de-en");
  std::istringstream in(data);
  const auto sets = parse_corpus(in);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0].language_pair, "de-en");
  EXPECT_EQ(sets[0].systems.size(), 2u);
  EXPECT_EQ(sets[1].language_pair, "ru-en");
  EXPECT_THROW(parse(data), CorpusError);
}

TEST(LanguagePair, Form) {
  EXPECT_TRUE(is_valid_language_pair("de-en"));
  EXPECT_TRUE(is_valid_language_pair("hsb-en"));
  EXPECT_FALSE(is_valid_language_pair("en-de"));
  EXPECT_FALSE(is_valid_language_pair("DE-en"));
  EXPECT_FALSE(is_valid_language_pair("d-en"));
  EXPECT_FALSE(is_valid_language_pair("de_en"));
}

EvaluationSet valid_set(std::size_t systems, std::size_t segments) {
  EvaluationSet set{"fi-en", {}};
  for (std::size_t s = 0; s < systems; ++s) {
    SystemRecord sys{"sys" + std::to_string(s), "fi-en", {}, std::nullopt};
    for (std::size_t g = 0; g < segments; ++g) {
      sys.segments.push_back({"seg-" + std::to_string(g + 1), "a candidate", {"a reference"}});
    }
    set.systems.push_back(std::move(sys));
  }
  return set;
}

TEST(Validate, ValidFixtureHasNoIssues) { EXPECT_TRUE(validate(valid_set(3, 4)).empty()); }

TEST(Validate, PartialHumanScoresGiveOneInfoIssue) {
  auto set = valid_set(5, 2);
  set.systems[1].human_score = 0.5;
  set.systems[3].human_score = -0.2;
  const auto issues = validate(set);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].severity, Severity::kInfo);
  EXPECT_NE(issues[0].message.find("sys0"), std::string::npos);
  EXPECT_NE(issues[0].message.find("sys2"), std::string::npos);
  EXPECT_NE(issues[0].message.find("sys4"), std::string::npos);
  EXPECT_EQ(issues[0].message.find("sys1"), std::string::npos);
  EXPECT_FALSE(has_errors(issues));
}

TEST(Validate, DuplicateSegmentIdIsError) {
  auto set = valid_set(1, 3);
  set.systems[0].segments[2].id = "seg-1";
  const auto issues = validate(set);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].severity, Severity::kError);
  EXPECT_NE(issues[0].message.find("duplicate"), std::string::npos);
}

TEST(Validate, FlagsStructuralProblems) {
  auto set = valid_set(2, 2);
  set.systems[1].language_pair = "ru-en";
  set.systems[0].segments[0].references.clear();
  set.systems[0].human_score = std::nan("");
  const auto issues = validate(set);
  EXPECT_EQ(std::count_if(issues.begin(), issues.end(),
                          [](const Issue& i) { return i.severity == Severity::kError; }),
            3);
  EXPECT_TRUE(has_errors(validate(EvaluationSet{"de-en", {}})));
}

// parse(to_jsonl(set)) throws exactly when validate(set) reports an error.
TEST(ParseValidateAgreement, RandomDefects) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    auto set = valid_set(1 + rng() % 3, 1 + rng() % 4);
    switch (rng() % 6) {
      case 0:
        break;
      case 1:
        set.systems.back().segments.back().id = set.systems.back().segments.front().id;
        break;
      case 2:
        // an empty system has no JSONL representation
        if (set.systems.back().segments.size() > 1) set.systems.back().segments.pop_back();
        break;
      case 3:
        set.systems.front().segments.front().candidate = " \t";
        break;
      case 4:
        set.systems.front().segments.back().references.push_back("  ");
        break;
      case 5:
        set.systems.back().segments.back().id = "other";
        break;
    }
    const bool invalid = has_errors(validate(set));
    std::istringstream in(to_jsonl(set));
    bool threw = false;
    try {
      const auto parsed = parse_dataset(in);
      EXPECT_EQ(parsed, set);
    } catch (const CorpusError&) {
      threw = true;
    }
    EXPECT_EQ(threw, invalid) << "trial " << trial;
  }
}

std::string convert(const std::string& cands, const std::string& refs,
                    const std::string& lp = "de-en") {
  std::istringstream c(cands);
  std::istringstream r(refs);
  return convert_plain_text(c, r, "sysX", lp);
}

TEST(ConvertPlainText, AssignsSequentialIds) {
  const auto jsonl = convert("one\ntwo\nthree\n", "uno\ndos\ntres\n");
  std::istringstream in(jsonl);
  const auto set = parse_dataset(in);
  ASSERT_EQ(set.systems.size(), 1u);
  const auto& segs = set.systems[0].segments;
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].id, "seg-1");
  EXPECT_EQ(segs[2].id, "seg-3");
  EXPECT_EQ(segs[1].candidate, "two");
  EXPECT_EQ(segs[1].references, std::vector<std::string>{"dos"});
  EXPECT_EQ(jsonl.substr(0, jsonl.find('\n')),
            R"({"system":"sysX","lang_pair":"de-en","segment_id":"seg-1","candidate":"one","references":["uno"]})");
}

TEST(ConvertPlainText, Errors) {
  EXPECT_THROW(convert("a\nb\nc\n", "x\ny\n"), CorpusError);
  EXPECT_THROW(convert("a\n\nc\n", "x\ny\nz\n"), CorpusError);
  EXPECT_THROW(convert("a\n", "x\n", "de-fr"), CorpusError);
  EXPECT_THROW(convert("", ""), CorpusError);
}

TEST(ConvertPlainText, MissingFinalNewlineIsFine) {
  EXPECT_EQ(convert("a\nb", "x\ny"), convert("a\nb\n", "x\ny\n"));
}

// Lossless for arbitrary printable text without embedded newlines.
TEST(ConvertPlainText, RoundTripProperty) {
  std::mt19937_64 rng(2019);
  std::uniform_int_distribution<int> printable(0x20, 0x7E);
  const std::vector<std::string> extra{"\xC3\xA9", "\xC5\x9E", "\xE2\x80\x94", "\t", "\"", "\\"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<std::string> cands;
    std::vector<std::string> refs;
    auto gen = [&] {
      std::string s;
      do {
        s.clear();
        const std::size_t len = 1 + rng() % 30;
        for (std::size_t i = 0; i < len; ++i) {
          if (rng() % 8 == 0) {
            s += extra[rng() % extra.size()];
          } else {
            s += static_cast<char>(printable(rng));
          }
        }
      } while (text::trim(s).empty());
      return s;
    };
    std::string c_text;
    std::string r_text;
    for (std::size_t i = 0; i < n; ++i) {
      cands.push_back(gen());
      refs.push_back(gen());
      c_text += cands.back() + "\n";
      r_text += refs.back() + "\n";
    }
    std::istringstream in(convert(c_text, r_text));
    const auto set = parse_dataset(in);
    const auto& segs = set.systems.at(0).segments;
    ASSERT_EQ(segs.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(segs[i].candidate, cands[i]);
      EXPECT_EQ(segs[i].references.at(0), refs[i]);
    }
  }
}

TEST(HumanScores, ParseAndAttach) {
  std::string data;
  for (const char* sys : {"A", "B"}) data += record(sys, "s1", "c", "r");
  std::istringstream corpus_in(data);
  auto sets = parse_corpus(corpus_in);

  std::istringstream human_in(
      "{\"system\":\"B\",\"lang_pair\":\"de-en\",\"human_score\":-0.25}\n"
      "{\"system\":\"A\",\"lang_pair\":\"de-en\",\"human_score\":0.123}\n");
  const auto scores = parse_human_scores(human_in);
  ASSERT_EQ(scores.size(), 2u);
  attach_human_scores(sets, scores);
  EXPECT_DOUBLE_EQ(*sets[0].systems[0].human_score, 0.123);
  EXPECT_DOUBLE_EQ(*sets[0].systems[1].human_score, -0.25);

  const std::vector<HumanScore> unknown{{"C", "de-en", 1.0}};
  EXPECT_THROW(attach_human_scores(sets, unknown), CorpusError);
  const std::vector<HumanScore> dup{{"A", "de-en", 1.0}, {"A", "de-en", 2.0}};
  EXPECT_THROW(attach_human_scores(sets, dup), CorpusError);

  std::istringstream bad("{\"system\":\"A\",\"lang_pair\":\"de-en\",\"human_score\":\"x\"}\n");
  EXPECT_THROW(parse_human_scores(bad), CorpusError);
}

}  // namespace
}  // namespace bident::corpus
