#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "kurosawa/dataset.hpp"
#include "kurosawa/error.hpp"
#include "kurosawa/plot_annotation.hpp"
#include "kurosawa/script_parser.hpp"
#include "kurosawa/text.hpp"
#include "kurosawa/types.hpp"

namespace kurosawa {

/// Sampling settings sent with every completion request. The sampling
/// defaults are the values the fine-tuned plot models were evaluated with.
struct GenerationConfig {
  double temperature = 0.7;
  double top_p = 1.0;
  double frequency_penalty = 0.1;
  double presence_penalty = 0.1;
  int max_tokens = 900;
  std::vector<std::string> stop{std::string(kDefaultStopSequence)};
  std::string model_ref;
  std::string prompt_separator{kDefaultPromptSeparator};
  int context_limit = 2048;
  int chars_per_token = 4;
  std::uint64_t seed = 0;
  bool logprobs = true;

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0", {{"temperature", temperature}});
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "top_p must be in (0, 1]", {{"top_p", top_p}});
    if (max_tokens < 1) throw Error(ErrorCode::InvalidConfig, "max_tokens must be >= 1", {{"max_tokens", max_tokens}});
    if (context_limit < 1 || chars_per_token < 1) throw Error(ErrorCode::InvalidConfig, "context settings must be positive");
  }
};

struct GenerationResult {
  std::string text;
  std::optional<std::vector<double>> token_logprobs;
  std::string backend_id;
  std::int64_t elapsed_ms = 0;
  bool hit_max_tokens = false;
  bool stop_truncated = false;
};

struct BackendCapabilities {
  bool supports_logprobs = false;
};

// Raw reply from one backend call, before stop-sequence truncation.
struct BackendReply {
  std::string text;
  std::optional<std::vector<double>> token_logprobs;
  bool hit_max_tokens = false;
};

/// Text-completion provider. Implementations must be safe to call from
/// several threads at once.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string identity() const = 0;
  virtual BackendCapabilities capabilities() const = 0;
  // One attempt. Transport failures throw BackendUnavailable or Timeout;
  // refusals throw BackendRejected.
  virtual BackendReply complete_once(const std::string& prompt, const GenerationConfig& config) const = 0;
  virtual bool reachable() const { return true; }
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

inline std::size_t estimate_tokens(std::string_view text, int chars_per_token = 4) {
  const auto cpt = static_cast<std::size_t>(chars_per_token);
  return (utf8::length(text) + cpt - 1) / cpt;
}

/// Validates, checks the context budget, calls the backend with bounded
/// retries on transport failures, and cuts the text at the first stop
/// sequence.
inline GenerationResult complete(const CompletionBackend& backend, const std::string& prompt,
                                 const GenerationConfig& config, const RetryPolicy& retry = {}) {
  config.validate();
  if (prompt.empty()) throw Error(ErrorCode::EmptyPrompt, "prompt is empty");
  const auto estimated = estimate_tokens(prompt, config.chars_per_token) + static_cast<std::size_t>(config.max_tokens);
  if (estimated > static_cast<std::size_t>(config.context_limit)) {
    throw Error(ErrorCode::ContextOverflow, "prompt plus max_tokens exceeds the context limit",
                {{"estimated", estimated}, {"limit", config.context_limit}});
  }

  const auto start = std::chrono::steady_clock::now();
  auto backoff = retry.initial_backoff;
  BackendReply reply;
  for (int attempt = 1;; ++attempt) {
    try {
      reply = backend.complete_once(prompt, config);
      break;
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::BackendUnavailable || e.code() == ErrorCode::Timeout;
      if (!transient || attempt >= retry.max_attempts) throw;
      retry.sleep(backoff);
      backoff = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(backoff.count()) * retry.multiplier));
    }
  }

  GenerationResult out;
  out.backend_id = backend.identity();
  out.text = std::move(reply.text);
  out.token_logprobs = std::move(reply.token_logprobs);
  out.hit_max_tokens = reply.hit_max_tokens;
  std::size_t cut = std::string::npos;
  for (const auto& s : config.stop) {
    if (s.empty()) continue;
    cut = std::min(cut, out.text.find(s));
  }
  if (cut != std::string::npos) {
    out.text.erase(cut);
    out.stop_truncated = true;
  }
  out.elapsed_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic mock backend

struct MockFixture {
  std::string name;
  RecordKind kind = RecordKind::Plot;
  std::optional<ProfileId> profile;  // plot fixtures: the profile they target
  std::set<ErrorCode> expect;        // issue codes the fixture is meant to raise
  std::string text;
};

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Canned-completion backend. Without a pin, the fixture is chosen by
/// hash(prompt, seed) mod bank size; a model_ref of "fixture:<name>" pins
/// one fixture. Token log-probabilities are ln(1/4) per whitespace token.
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(std::vector<MockFixture> bank) : bank_(std::move(bank)) {
    if (bank_.empty()) throw Error(ErrorCode::InvalidConfig, "mock fixture bank is empty");
  }

  /// Loads <dir>/index.tsv: name, kind, profile, expect, file. Codes in
  /// "expect" are comma-separated, "-" for none.
  static MockBackend from_directory(const std::filesystem::path& dir) {
    const auto index = read_file(dir / "index.tsv");
    std::vector<MockFixture> bank;
    for (const auto& line : split_lines(index)) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto f = detail::split_fields(line, '\t');
      if (f.size() != 5) throw Error(ErrorCode::InvalidConfig, "mock index row needs 5 fields", {{"line", line}});
      if (f[0] == "name") continue;
      MockFixture fx;
      fx.name = f[0];
      fx.kind = record_kind_from_string(f[1]);
      if (f[2] != "-") fx.profile = profile_from_string(f[2]).id;
      if (f[3] != "-") {
        for (const auto& code : detail::split_fields(f[3], ',')) {
          const auto c = error_code_from_string(code);
          if (!c) throw Error(ErrorCode::InvalidConfig, "unknown error code in mock index", {{"code", code}});
          fx.expect.insert(*c);
        }
      }
      fx.text = read_file(dir / f[4]);
      bank.push_back(std::move(fx));
    }
    return MockBackend(std::move(bank));
  }

  std::string identity() const override { return "mock"; }
  BackendCapabilities capabilities() const override { return {true}; }

  BackendReply complete_once(const std::string& prompt, const GenerationConfig& config) const override {
    constexpr std::string_view pin = "fixture:";
    if (config.model_ref.rfind(pin, 0) == 0) {
      const auto name = config.model_ref.substr(pin.size());
      for (const auto& fx : bank_)
        if (fx.name == name) return reply_for(fx);
      throw Error(ErrorCode::InvalidConfig, "unknown mock fixture", {{"fixture", name}});
    }
    return mock_complete(prompt, config.seed);
  }

  BackendReply mock_complete(std::string_view prompt, std::uint64_t seed) const {
    std::string key(prompt);
    key.push_back('\0');
    key += std::to_string(seed);
    return reply_for(bank_[fnv1a64(key) % bank_.size()]);
  }

  const std::vector<MockFixture>& bank() const noexcept { return bank_; }

 private:
  static BackendReply reply_for(const MockFixture& fx) {
    BackendReply r;
    r.text = fx.text;
    const auto n = std::max<std::size_t>(1, split_whitespace(fx.text).size());
    r.token_logprobs = std::vector<double>(n, std::log(0.25));
    return r;
  }

  std::vector<MockFixture> bank_;
};

// ---------------------------------------------------------------------------
// Pipelines

struct PlotGeneration {
  std::string prompt;
  GenerationResult raw;
  std::optional<PlotActs> acts;
  ValidationReport report;
};

/// Prompt per profile, one completion, then structural validation of the
/// output. Malformed output lands in the report, never in an exception.
inline PlotGeneration generate_plot(std::string_view storyline, const std::vector<Genre>& genres,
                                    const GenerationProfile& prof, const CompletionBackend& backend,
                                    const GenerationConfig& config, const RetryPolicy& retry = {}) {
  auto built = build_prompt(storyline, genres, prof, config.prompt_separator);
  PlotGeneration out;
  out.prompt = std::move(built.prompt);
  out.report.warnings = std::move(built.warnings);
  out.raw = complete(backend, out.prompt, config, retry);

  if (prof.annotated_output) {
    auto v = validate_annotated_plot(out.raw.text);
    if (v.ok()) out.acts = parse_acts(out.raw.text);
    out.report.merge(v);
  } else {
    const auto n = word_count(out.raw.text);
    if (!kPlotWords.contains(n)) {
      out.report.warn(ErrorCode::LengthOutOfRange, "plot length outside the expected word range",
                      {{"actual", n}, {"min", kPlotWords.min}, {"max", kPlotWords.max}});
    }
  }
  if (out.raw.hit_max_tokens) {
    out.report.warn(ErrorCode::MaxTokensTruncated, "completion stopped at max_tokens", {{"max_tokens", config.max_tokens}});
  }
  return out;
}

struct SceneGeneration {
  std::string prompt;
  GenerationResult raw;
  Scene scene;
  ValidationReport report;
};

inline std::string strip_scene_tags(std::string_view text) {
  std::string out(text);
  for (const auto& t : detail::kSceneTags) {
    for (auto tag : {t.begin, t.end}) {
      for (auto p = out.find(tag); p != std::string::npos; p = out.find(tag, p)) out.replace(p, tag.size(), " ");
    }
  }
  return out;
}

inline SceneGeneration generate_scene(std::string_view description, const CompletionBackend& backend,
                                      const GenerationConfig& config, const RetryPolicy& retry = {}) {
  const auto desc = trim(description);
  if (desc.empty()) throw Error(ErrorCode::EmptyPrompt, "scene description is empty");
  SceneGeneration out;
  const auto n_desc = word_count(desc);
  if (!kShortStorylineWords.contains(n_desc)) {
    out.report.warn(ErrorCode::LengthViolation, "description length out of range",
                    {{"actual", n_desc}, {"min", kShortStorylineWords.min}, {"max", kShortStorylineWords.max}});
  }
  out.prompt = std::string(desc) + config.prompt_separator;
  out.raw = complete(backend, out.prompt, config, retry);

  try {
    auto decoded = decode_tagged(out.raw.text, DecodeMode::Lenient);
    out.scene = std::move(decoded.scene);
    out.report.warnings.insert(out.report.warnings.end(), decoded.warnings.begin(), decoded.warnings.end());
  } catch (const Error& e) {
    out.report.errors.push_back(Issue::from(e));
  }
  const auto words = word_count(strip_scene_tags(out.raw.text));
  if (!kSceneWords.contains(words)) {
    out.report.warn(ErrorCode::LengthOutOfRange, "scene length outside the expected word range",
                    {{"actual", words}, {"min", kSceneWords.min}, {"max", kSceneWords.max}});
  }
  if (out.raw.hit_max_tokens) {
    out.report.warn(ErrorCode::MaxTokensTruncated, "completion stopped at max_tokens", {{"max_tokens", config.max_tokens}});
  }
  return out;
}

}  // namespace kurosawa
