#include "kurosawa/generation.hpp"

#include <atomic>
#include <chrono>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace kurosawa {
namespace {

const std::string kBank = KUROSAWA_DATA_DIR "/mock_bank";
const std::string kData = KUROSAWA_TEST_DATA_DIR;

const MockBackend& bank() {
  static const MockBackend b = MockBackend::from_directory(kBank);
  return b;
}

json requests() { return json::parse(read_file(kData + "/mock_requests.json")); }

RetryPolicy no_sleep(std::vector<std::chrono::milliseconds>* slept = nullptr) {
  RetryPolicy p;
  p.sleep = [slept](std::chrono::milliseconds d) {
    if (slept) slept->push_back(d);
  };
  return p;
}

// Fails a set number of times with a chosen code, then replies.
class FlakyBackend : public CompletionBackend {
 public:
  FlakyBackend(int failures, ErrorCode code, std::string text = "ok")
      : failures_(failures), code_(code), text_(std::move(text)) {}
  std::string identity() const override { return "flaky"; }
  BackendCapabilities capabilities() const override { return {false}; }
  BackendReply complete_once(const std::string&, const GenerationConfig&) const override {
    ++calls;
    if (calls <= failures_) throw Error(code_, "injected");
    return BackendReply{text_, std::nullopt, false};
  }
  mutable std::atomic<int> calls{0};

 private:
  int failures_;
  ErrorCode code_;
  std::string text_;
};

std::set<ErrorCode> codes(const ValidationReport& r) {
  std::set<ErrorCode> out;
  for (const auto& i : r.errors) out.insert(i.code);
  for (const auto& i : r.warnings) out.insert(i.code);
  return out;
}

TEST(GenerationConfig, Defaults) {
  const GenerationConfig c;
  EXPECT_EQ(c.temperature, 0.7);
  EXPECT_EQ(c.top_p, 1.0);
  EXPECT_EQ(c.frequency_penalty, 0.1);
  EXPECT_EQ(c.presence_penalty, 0.1);
  EXPECT_EQ(c.max_tokens, 900);
  EXPECT_EQ(c.stop, (std::vector<std::string>{"\n<|end|>"}));
  EXPECT_NO_THROW(c.validate());
}

TEST(GenerationConfig, Invalid) {
  GenerationConfig c;
  c.top_p = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.temperature = -1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_tokens = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Complete, ContextOverflow) {
  try {
    complete(bank(), std::string(8000, 'x'), GenerationConfig{}, no_sleep());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ContextOverflow);
    EXPECT_EQ(e.detail()["estimated"], 2900);
    EXPECT_EQ(e.detail()["limit"], 2048);
  }
  EXPECT_THROW(complete(bank(), "", GenerationConfig{}, no_sleep()), Error);
}

TEST(Complete, MockIsDeterministic) {
  GenerationConfig c;
  c.seed = 9;
  const auto a = complete(bank(), "A storyline.\n\n###\n\n", c, no_sleep());
  const auto b = complete(bank(), "A storyline.\n\n###\n\n", c, no_sleep());
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.token_logprobs, b.token_logprobs);
  EXPECT_EQ(a.backend_id, "mock");
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    c.seed = s;
    seen.insert(complete(bank(), "A storyline.\n\n###\n\n", c, no_sleep()).text);
  }
  EXPECT_GT(seen.size(), 5u);
}

TEST(Complete, MockPerplexityIsFour) {
  GenerationConfig c;
  c.model_ref = "fixture:plot_rescue";
  const auto r = complete(bank(), "x", c, no_sleep());
  ASSERT_TRUE(r.token_logprobs);
  EXPECT_NEAR(perplexity(*r.token_logprobs), 4.0, 1e-12);
}

TEST(Complete, UnknownFixturePin) {
  GenerationConfig c;
  c.model_ref = "fixture:nope";
  EXPECT_THROW(complete(bank(), "x", c, no_sleep()), Error);
}

TEST(Complete, RetriesTransientFailuresWithBackoff) {
  std::vector<std::chrono::milliseconds> slept;
  FlakyBackend two(2, ErrorCode::BackendUnavailable);
  EXPECT_EQ(complete(two, "p", GenerationConfig{}, no_sleep(&slept)).text, "ok");
  EXPECT_EQ(two.calls, 3);
  EXPECT_EQ(slept, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500), std::chrono::milliseconds(1000)}));

  FlakyBackend three(3, ErrorCode::Timeout);
  try {
    complete(three, "p", GenerationConfig{}, no_sleep());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Timeout);
  }
  EXPECT_EQ(three.calls, 3);

  FlakyBackend rejected(5, ErrorCode::BackendRejected);
  EXPECT_THROW(complete(rejected, "p", GenerationConfig{}, no_sleep()), Error);
  EXPECT_EQ(rejected.calls, 1);
}

TEST(Complete, StopSequenceTruncates) {
  FlakyBackend b(0, ErrorCode::Timeout, "Act text.\n<|end|>garbage after stop");
  const auto r = complete(b, "p", GenerationConfig{}, no_sleep());
  EXPECT_EQ(r.text, "Act text.");
  EXPECT_TRUE(r.stop_truncated);
  FlakyBackend plain(0, ErrorCode::Timeout, "no stop here");
  EXPECT_FALSE(complete(plain, "p", GenerationConfig{}, no_sleep()).stop_truncated);
}

TEST(Pipelines, EveryFixtureYieldsExactlyItsExpectedCodes) {
  const auto reqs = requests();
  for (const auto& fx : bank().bank()) {
    SCOPED_TRACE(fx.name);
    ASSERT_TRUE(reqs.contains(fx.name));
    const auto& req = reqs[fx.name];
    GenerationConfig c;
    c.model_ref = "fixture:" + fx.name;
    if (fx.kind == RecordKind::Plot) {
      const auto& prof = profile(*fx.profile);
      const auto story = prof.storyline_kind == StorylineKind::Long ? req["long_storyline"].get<std::string>()
                                                                     : req["storyline"].get<std::string>();
      const auto g = generate_plot(story, req["genres"].get<std::vector<Genre>>(), prof, bank(), c, no_sleep());
      EXPECT_EQ(codes(g.report), fx.expect);
      EXPECT_EQ(g.acts.has_value(), prof.annotated_output && g.report.ok());
      EXPECT_NEAR(perplexity(*g.raw.token_logprobs), 4.0, 1e-12);
    } else {
      const auto s = generate_scene(req["description"].get<std::string>(), bank(), c, no_sleep());
      EXPECT_EQ(codes(s.report), fx.expect);
    }
  }
}

TEST(Pipelines, UnannotatedProfileHasNoActs) {
  GenerationConfig c;
  c.model_ref = "fixture:plot_unannotated";
  const auto g = generate_plot(requests()["plot_unannotated"]["storyline"].get<std::string>(), {},
                               profile(ProfileId::O), bank(), c, no_sleep());
  EXPECT_FALSE(g.acts);
  EXPECT_TRUE(g.report.ok());
  for (auto tag : kActTags) EXPECT_EQ(g.raw.text.find(tag), std::string::npos);
}

TEST(Pipelines, CleanFixturesReencodeToTheirText) {
  for (const auto& fx : bank().bank()) {
    if (!fx.expect.empty()) continue;
    SCOPED_TRACE(fx.name);
    GenerationConfig c;
    c.model_ref = "fixture:" + fx.name;
    auto expected = fx.text;
    if (const auto p = expected.find(kDefaultStopSequence); p != std::string::npos) expected.erase(p);
    if (fx.kind == RecordKind::Scene) {
      const auto s = generate_scene(requests()[fx.name]["description"].get<std::string>(), bank(), c, no_sleep());
      EXPECT_EQ(normalize_whitespace(encode_tagged(s.scene)), normalize_whitespace(expected));
    } else if (fx.profile != ProfileId::O) {
      const auto req = requests().at(fx.name);
      const auto& prof = profile(*fx.profile);
      const auto story = prof.storyline_kind == StorylineKind::Long ? req["long_storyline"].get<std::string>()
                                                                     : req["storyline"].get<std::string>();
      const auto g = generate_plot(story, req["genres"].get<std::vector<Genre>>(), prof, bank(), c, no_sleep());
      ASSERT_TRUE(g.acts);
      const auto joined = join_acts(*g.acts);
      EXPECT_EQ(insert_act_tags(joined.text, joined.boundaries), normalize_whitespace(expected));
    }
  }
}

TEST(Pipelines, SceneExampleAndShortDescription) {
  FlakyBackend b(0, ErrorCode::Timeout,
                 "<bsl> INT. LAB - NIGHT <esl> <bal> Rain hits the glass. <eal> <bcn> MARA <ecn> <bd> We're out of time. <ed>");
  const auto s = generate_scene("Mara races the storm to save the lab.", b, GenerationConfig{}, no_sleep());
  ASSERT_EQ(s.scene.elements.size(), 4u);
  EXPECT_EQ(s.scene.elements[0].kind, ElementKind::Slugline);
  EXPECT_EQ(s.scene.elements[0].text, "INT. LAB - NIGHT");
  EXPECT_EQ(s.scene.elements[3].kind, ElementKind::Dialogue);
  EXPECT_EQ(s.scene.elements[3].text, "We're out of time.");
  ASSERT_TRUE(s.report.ok());
  ASSERT_EQ(s.report.warnings.size(), 2u);
  EXPECT_EQ(s.report.warnings[0].code, ErrorCode::LengthViolation);
  EXPECT_EQ(s.report.warnings[0].detail["actual"], 8);
  EXPECT_EQ(s.report.warnings[1].code, ErrorCode::LengthOutOfRange);
  EXPECT_THROW(generate_scene("   ", b, GenerationConfig{}, no_sleep()), Error);
}

TEST(Pipelines, MaxTokensWarning) {
  class Cut : public CompletionBackend {
   public:
    std::string identity() const override { return "cut"; }
    BackendCapabilities capabilities() const override { return {}; }
    BackendReply complete_once(const std::string&, const GenerationConfig&) const override {
      return BackendReply{"A <one> B <two-a> C", std::nullopt, true};
    }
  } cut;
  const auto g = generate_plot(std::string(100, 'a'), {}, profile(ProfileId::AS), cut, GenerationConfig{}, no_sleep());
  EXPECT_FALSE(g.acts);
  EXPECT_TRUE(codes(g.report).count(ErrorCode::MaxTokensTruncated));
  EXPECT_TRUE(codes(g.report).count(ErrorCode::MissingTag));
}

}  // namespace
}  // namespace kurosawa
