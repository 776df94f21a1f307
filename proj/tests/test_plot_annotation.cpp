#include "kurosawa/plot_annotation.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

namespace kurosawa {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

std::string words(std::size_t n, const std::string& w = "word") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

std::string annotated(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return words(a, "alpha") + " <one> " + words(b, "beta") + " <two-a> " + words(c, "gamma") + " <two-b> " +
         words(d, "delta") + " <three>";
}

TEST(InsertActTags, FourSentences) {
  EXPECT_EQ(insert_act_tags("A. B. C. D.", ActBoundaries{{2, 5, 8}}), "A. <one> B. <two-a> C. <two-b> D. <three>");
}

TEST(InsertActTags, BadBoundaries) {
  EXPECT_EQ(code_of([] { insert_act_tags("A. B. C. D.", ActBoundaries{{5, 2, 8}}); }), ErrorCode::InvalidBoundaries);
  EXPECT_EQ(code_of([] { insert_act_tags("A. B. C. D.", ActBoundaries{{2, 2, 8}}); }), ErrorCode::InvalidBoundaries);
  EXPECT_EQ(code_of([] { insert_act_tags("A. B. C. D.", ActBoundaries{{1, 5, 8}}); }), ErrorCode::InvalidBoundaries);
  EXPECT_EQ(code_of([] { insert_act_tags("A. B. C. D.", ActBoundaries{{2, 5, 40}}); }), ErrorCode::InvalidBoundaries);
  EXPECT_EQ(code_of([] { insert_act_tags("A. <one> C. D.", ActBoundaries{{2, 8, 11}}); }), ErrorCode::InvalidBoundaries);
}

TEST(ParseActs, DirectSplit) {
  EXPECT_EQ(parse_acts("A <one> B <two-a> C <two-b> D <three>"), (PlotActs{"A", "B", "C", "D"}));
}

TEST(ParseActs, Errors) {
  EXPECT_EQ(code_of([] { parse_acts("A <one> B <two-b> C <two-a> D <three>"); }), ErrorCode::OutOfOrderTags);
  try {
    parse_acts("A <one> B <two-a> C <two-b>");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTag);
    EXPECT_EQ(e.detail()["tag"], "three");
  }
  try {
    parse_acts("A <one> B <one> C <two-a> D <two-b> E <three>");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateTag);
    EXPECT_EQ(e.detail()["tag"], "one");
  }
  try {
    parse_acts("A <one> <two-a> C <two-b> D <three>");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyAct);
    EXPECT_EQ(e.detail()["act"], "two-a");
  }
  EXPECT_EQ(code_of([] { parse_acts("A <one> B <two-a> C <two-b> D <three> E"); }), ErrorCode::StrayText);
}

TEST(ParseActs, OnlyCanonicalOrderOfAllPermutationsParses) {
  std::array<int, 4> order{0, 1, 2, 3};
  int parsed = 0, permutations = 0;
  do {
    ++permutations;
    std::string text;
    for (int i = 0; i < 4; ++i) text += std::string("x") + std::to_string(i) + " " + std::string(kActTags[order[i]]) + " ";
    try {
      parse_acts(text);
      ++parsed;
      EXPECT_EQ(order, (std::array<int, 4>{0, 1, 2, 3}));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::OutOfOrderTags);
    }
  } while (std::next_permutation(order.begin(), order.end()));
  EXPECT_EQ(permutations, 24);
  EXPECT_EQ(parsed, 1);
}

TEST(ParseActs, RoundTripFuzz) {
  std::mt19937_64 rng(21);
  const std::vector<std::string> vocab{"The", "storm", "breaks,", "and", "Ana", "runs.", "Hé", "l'eau", "—", "2024"};
  for (int iter = 0; iter < 3000; ++iter) {
    std::uniform_int_distribution<int> nw(4, 40), pick(0, static_cast<int>(vocab.size()) - 1);
    std::string plot;
    for (int k = nw(rng); k > 0; --k) plot += (plot.empty() ? "" : " ") + vocab[pick(rng)];
    std::vector<std::size_t> cut;
    for (std::size_t i = 1; i < plot.size(); ++i)
      if (plot[i] == ' ' && plot[i - 1] != ' ') cut.push_back(i);
    if (cut.size() < 3) continue;
    std::shuffle(cut.begin(), cut.end(), rng);
    std::array<std::size_t, 3> ends{cut[0], cut[1], cut[2]};
    std::sort(ends.begin(), ends.end());
    const auto acts = parse_acts(insert_act_tags(plot, ActBoundaries{ends}));
    EXPECT_EQ(acts.act_one, plot.substr(0, ends[0]));
    EXPECT_EQ(acts.act_two_a, std::string(trim(plot.substr(ends[0], ends[1] - ends[0]))));
    EXPECT_EQ(acts.act_three, std::string(trim(plot.substr(ends[2]))));
    const auto joined = join_acts(acts);
    EXPECT_EQ(tokenize(joined.text), tokenize(plot));
    EXPECT_EQ(parse_acts(insert_act_tags(joined.text, joined.boundaries)), acts);
  }
}

TEST(StripActTags, InvertsInsert) {
  EXPECT_EQ(strip_act_tags("A. <one> B. <two-a> C. <two-b> D. <three>"), "A. B. C. D.");
}

TEST(ValidatePlot, ValidSevenHundredWords) {
  const auto r = validate_annotated_plot(annotated(175, 175, 175, 175));
  EXPECT_TRUE(r.errors.empty());
  EXPECT_TRUE(r.warnings.empty());
}

TEST(ValidatePlot, HundredWordsIsShort) {
  const auto r = validate_annotated_plot(annotated(25, 25, 25, 25));
  EXPECT_TRUE(r.errors.empty());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].code, ErrorCode::LengthOutOfRange);
  EXPECT_EQ(r.warnings[0].detail["actual"], 100);
  EXPECT_EQ(r.warnings[0].detail["min"], 600);
  EXPECT_EQ(r.warnings[0].detail["max"], 800);
}

TEST(ValidatePlot, DuplicateTagIsError) {
  const auto r = validate_annotated_plot("a <one> b <one> c <two-a> d <two-b> e <three>");
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].code, ErrorCode::DuplicateTag);
  EXPECT_EQ(r.errors[0].detail["tag"], "one");
}

TEST(ValidatePlot, ShortActWarning) {
  const auto r = validate_annotated_plot(annotated(240, 240, 200, 20));
  EXPECT_TRUE(r.errors.empty());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].code, ErrorCode::ShortAct);
  EXPECT_EQ(r.warnings[0].detail["act"], "three");
}

TEST(ValidatePlot, NeverThrows) {
  std::mt19937_64 rng(4);
  const std::vector<std::string> parts{"<one>", "<two-a>", "<two-b>", "<three>", "word", " ", "<", ">", "two"};
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    std::uniform_int_distribution<int> n(0, 15), pick(0, static_cast<int>(parts.size()) - 1);
    for (int k = n(rng); k > 0; --k) s += parts[pick(rng)] + " ";
    ASSERT_NO_THROW(validate_annotated_plot(s));
  }
}

TEST(Profiles, TableMatchesDefinitions) {
  struct Row {
    const char* name;
    bool annotated;
    StorylineKind kind;
    bool genres;
  };
  const Row rows[] = {{"O", false, StorylineKind::Short, false},
                      {"AS", true, StorylineKind::Short, false},
                      {"AL", true, StorylineKind::Long, false},
                      {"ASG", true, StorylineKind::Short, true},
                      {"ALG", true, StorylineKind::Long, true}};
  ASSERT_EQ(kProfiles.size(), 5u);
  for (const auto& r : rows) {
    const auto& p = profile_from_string(r.name);
    EXPECT_EQ(to_string(p.id), r.name);
    EXPECT_EQ(p.annotated_output, r.annotated) << r.name;
    EXPECT_EQ(p.storyline_kind, r.kind) << r.name;
    EXPECT_EQ(p.genres_included, r.genres) << r.name;
  }
  EXPECT_THROW(profile_from_string("XL"), Error);
}

TEST(BuildPrompt, GenresPrepended) {
  EXPECT_EQ(build_prompt("S", {"Comedy", "Romance"}, profile(ProfileId::ASG)).prompt,
            "Comedy, Romance. S" + std::string(kDefaultPromptSeparator));
}

TEST(BuildPrompt, NoGenres) {
  EXPECT_EQ(build_prompt("S", {}, profile(ProfileId::AS)).prompt, "S" + std::string(kDefaultPromptSeparator));
}

TEST(BuildPrompt, ProfileMismatch) {
  EXPECT_EQ(code_of([] { build_prompt("S", {"Comedy"}, profile(ProfileId::AS)); }), ErrorCode::GenresForbidden);
  EXPECT_EQ(code_of([] { build_prompt("S", {}, profile(ProfileId::ALG)); }), ErrorCode::GenresRequired);
  EXPECT_EQ(code_of([] { build_prompt("  ", {}, profile(ProfileId::AS)); }), ErrorCode::EmptyStoryline);
}

TEST(BuildPrompt, EndsWithSeparatorAndWarnsOnLength) {
  for (const auto& p : kProfiles) {
    const std::vector<Genre> g = p.genres_included ? std::vector<Genre>{"Drama"} : std::vector<Genre>{};
    const auto r = build_prompt(words(10), g, p, "\n--\n");
    EXPECT_TRUE(r.prompt.ends_with("\n--\n"));
    ASSERT_EQ(r.warnings.size(), 1u) << to_string(p.id);
    EXPECT_EQ(r.warnings[0].code, ErrorCode::LengthViolation);
  }
  EXPECT_TRUE(build_prompt(words(20), {}, profile(ProfileId::AS)).warnings.empty());
  EXPECT_TRUE(build_prompt(words(100), {}, profile(ProfileId::AL)).warnings.empty());
}

}  // namespace
}  // namespace kurosawa
