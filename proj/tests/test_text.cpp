#include "kurosawa/text.hpp"

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace kurosawa {
namespace {

// ASCII-only reference: split on isspace, strip ispunct from both ends, tolower.
std::vector<std::string> ascii_reference(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  auto finish = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (b < e) {
      std::string t = cur.substr(b, e - b);
      for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(t);
    }
    cur.clear();
  };
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      finish();
    } else {
      cur.push_back(c);
    }
  }
  finish();
  return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces{"a", "B", "cat", "Sat", ".", ",", "!", "-", "'", " ", " ", "\t",
                                               "\n", "é", "Ö", "ж", "Ω", "…", "“", "”", "INT.", "x1", "(v.o.)"};
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, pieces.size() - 1);
  std::string s;
  for (auto n = len(rng); n > 0; --n) s += pieces[pick(rng)];
  return s;
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, SimpleSentence) {
  EXPECT_EQ(tokenize("The cat sat."), (TokenSeq{"the", "cat", "sat"}));
  EXPECT_EQ(tokenize("The cat sat."), ascii_reference("The cat sat."));
}

TEST(Tokenize, SluglineDropsBareDashes) {
  EXPECT_EQ(tokenize("INT. - RESTAURANT - NIGHT"), (TokenSeq{"int", "restaurant", "night"}));
}

TEST(Tokenize, KeepsInnerPunctuation) {
  EXPECT_EQ(tokenize("don't CONT'D (V.O.)"), (TokenSeq{"don't", "cont'd", "v.o"}));
}

TEST(Tokenize, LowercasesBeyondAscii) {
  EXPECT_EQ(tokenize("JOSÉ ZOË ÀÉÎ ΩΣ ЖЯ Ÿ"), (TokenSeq{"josé", "zoë", "àéî", "ωσ", "жя", "ÿ"}));
}

TEST(Tokenize, StripsUnicodePunctuation) {
  EXPECT_EQ(tokenize("“Hello…” — ¿qué?"), (TokenSeq{"hello", "qué"}));
}

TEST(Tokenize, SplitsOnUnicodeWhitespace) {
  EXPECT_EQ(tokenize("a b c　d"), (TokenSeq{"a", "b", "c", "d"}));
}

TEST(Tokenize, MatchesAsciiReferenceOnRandomAscii) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "abcXYZ019 .,;:!?'\"-()[]\t\n";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    std::uniform_int_distribution<std::size_t> len(0, 60), pick(0, alphabet.size() - 1);
    for (auto n = len(rng); n > 0; --n) s.push_back(alphabet[pick(rng)]);
    ASSERT_EQ(tokenize(s), ascii_reference(s)) << s;
  }
}

TEST(Tokenize, IdempotentOnJoinedOutput) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_text(rng, 30);
    const auto t = tokenize(s);
    ASSERT_EQ(tokenize(join(t, " ")), t) << s;
  }
}

TEST(WordCount, Basics) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("one two three"), 3u);
}

TEST(WordCount, SevenHundredWords) {
  std::string s;
  for (int i = 0; i < 700; ++i) s += (i % 7 == 0 ? "Word, " : "word ");
  EXPECT_EQ(word_count(s), 700u);
}

TEST(WordCount, AdditiveOverSpaceJoin) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_text(rng, 20);
    const auto b = random_text(rng, 20);
    ASSERT_EQ(word_count(a + " " + b), word_count(a) + word_count(b)) << a << "|" << b;
  }
}

TEST(SplitLines, NormalizesLineEndings) {
  EXPECT_EQ(split_lines("a\r\nb\rc\nd"), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(split_lines("a\n"), (std::vector<std::string>{"a"}));
  EXPECT_EQ(split_lines("a\n\n"), (std::vector<std::string>{"a", ""}));
}

TEST(NormalizeWhitespace, CollapsesRuns) { EXPECT_EQ(normalize_whitespace("  a \n\t b  "), "a b"); }

TEST(Utf8, InvalidBytesDoNotThrow) {
  const std::string bad = "ab\xff\xfe c\xc3";
  EXPECT_NO_THROW(tokenize(bad));
  EXPECT_EQ(word_count(bad), 2u);
}

}  // namespace
}  // namespace kurosawa
