#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kurosawa/error.hpp"
#include "kurosawa/text.hpp"
#include "kurosawa/types.hpp"

namespace kurosawa {

inline constexpr std::array<std::string_view, 4> kActNames{"one", "two-a", "two-b", "three"};
inline constexpr std::array<std::string_view, 4> kActTags{"<one>", "<two-a>", "<two-b>", "<three>"};

inline constexpr std::string_view kDefaultPromptSeparator = "\n\n###\n\n";
inline constexpr std::string_view kDefaultStopSequence = "\n<|end|>";

struct WordRange {
  std::size_t min;
  std::size_t max;
  bool contains(std::size_t n) const noexcept { return n >= min && n <= max; }
};

inline constexpr WordRange kShortStorylineWords{15, 40};
inline constexpr WordRange kLongStorylineWords{30, 200};
inline constexpr WordRange kPlotWords{600, 800};
inline constexpr WordRange kSceneWords{200, 500};
inline constexpr double kMinActShare = 0.05;

/// End offsets of acts one, two-a and two-b; act three runs to the end.
struct ActBoundaries {
  std::array<std::size_t, 3> ends{};
};

namespace detail {
inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }
}  // namespace detail

inline void check_boundaries(std::string_view plot, const ActBoundaries& b) {
  const auto& e = b.ends;
  if (!(0 < e[0] && e[0] < e[1] && e[1] < e[2] && e[2] < plot.size())) {
    throw Error(ErrorCode::InvalidBoundaries, "offsets must satisfy 0 < e0 < e1 < e2 < length",
                {{"ends", e}, {"length", plot.size()}});
  }
  for (auto off : e) {
    if (!detail::is_ascii_space(plot[off]) || detail::is_ascii_space(plot[off - 1])) {
      throw Error(ErrorCode::InvalidBoundaries, "offset must sit at the end of a word before whitespace",
                  {{"offset", off}});
    }
  }
  for (auto tag : kActTags) {
    if (plot.find(tag) != std::string_view::npos) {
      throw Error(ErrorCode::InvalidBoundaries, "plot already contains an act tag", {{"tag", std::string(tag)}});
    }
  }
}

/// Inserts " <one>", " <two-a>", " <two-b>" at the boundaries and appends " <three>".
inline std::string insert_act_tags(std::string_view plot, const ActBoundaries& b) {
  check_boundaries(plot, b);
  std::string out;
  out.reserve(plot.size() + 32);
  std::size_t prev = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    out.append(plot.substr(prev, b.ends[i] - prev));
    out.push_back(' ');
    out.append(kActTags[i]);
    prev = b.ends[i];
  }
  out.append(plot.substr(prev));
  out.push_back(' ');
  out.append(kActTags[3]);
  return out;
}

/// Splits an annotated plot on its four act tags. Each tag must appear
/// exactly once, in canonical order, with non-empty text before it and
/// nothing but whitespace after <three>.
inline PlotActs parse_acts(std::string_view annotated) {
  std::array<std::size_t, 4> at{};
  for (std::size_t t = 0; t < 4; ++t) {
    const auto first = annotated.find(kActTags[t]);
    if (first == std::string_view::npos) {
      throw Error(ErrorCode::MissingTag, "missing act tag " + std::string(kActTags[t]),
                  {{"tag", std::string(kActNames[t])}});
    }
    if (annotated.find(kActTags[t], first + 1) != std::string_view::npos) {
      throw Error(ErrorCode::DuplicateTag, "act tag appears more than once: " + std::string(kActTags[t]),
                  {{"tag", std::string(kActNames[t])}});
    }
    at[t] = first;
  }
  for (std::size_t t = 1; t < 4; ++t) {
    if (at[t] < at[t - 1]) {
      throw Error(ErrorCode::OutOfOrderTags, "act tags are not in order one, two-a, two-b, three",
                  {{"tag", std::string(kActNames[t])}});
    }
  }
  std::array<std::string, 4> acts;
  std::size_t prev = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    acts[t] = std::string(trim(annotated.substr(prev, at[t] - prev)));
    if (acts[t].empty()) {
      throw Error(ErrorCode::EmptyAct, "act " + std::string(kActNames[t]) + " is empty",
                  {{"act", std::string(kActNames[t])}});
    }
    prev = at[t] + kActTags[t].size();
  }
  const auto tail = trim(annotated.substr(prev));
  if (!tail.empty()) {
    throw Error(ErrorCode::StrayText, "text after the final act tag",
                {{"offset", prev}, {"text", std::string(tail.substr(0, 80))}});
  }
  return PlotActs{std::move(acts[0]), std::move(acts[1]), std::move(acts[2]), std::move(acts[3])};
}

struct JoinedActs {
  std::string text;
  ActBoundaries boundaries;
};

/// Joins acts with single spaces and records where each act ends, so that
/// insert_act_tags(text, boundaries) re-annotates the plot.
inline JoinedActs join_acts(const PlotActs& acts) {
  JoinedActs out;
  const auto parts = acts.acts();
  for (std::size_t t = 0; t < 4; ++t) {
    if (t) out.text.push_back(' ');
    out.text += *parts[t];
    if (t < 3) out.boundaries.ends[t] = out.text.size();
  }
  return out;
}

/// Removes the act tags written by insert_act_tags (tag plus its leading
/// space) and trims the result.
inline std::string strip_act_tags(std::string_view annotated) {
  std::string out(annotated);
  for (auto tag : kActTags) {
    for (auto p = out.find(tag); p != std::string::npos; p = out.find(tag, p)) {
      std::size_t from = p, len = tag.size();
      if (from > 0 && out[from - 1] == ' ') {
        --from;
        ++len;
      }
      out.erase(from, len);
      p = from;
    }
  }
  return std::string(trim(out));
}

/// Structural check plus length and balance warnings. Never throws.
inline ValidationReport validate_annotated_plot(std::string_view annotated) {
  ValidationReport report;
  std::size_t total = 0;
  try {
    const auto acts = parse_acts(annotated);
    std::array<std::size_t, 4> counts{};
    const auto parts = acts.acts();
    for (std::size_t t = 0; t < 4; ++t) {
      counts[t] = word_count(*parts[t]);
      total += counts[t];
    }
    for (std::size_t t = 0; t < 4; ++t) {
      if (static_cast<double>(counts[t]) < kMinActShare * static_cast<double>(total)) {
        report.warn(ErrorCode::ShortAct, "act " + std::string(kActNames[t]) + " holds under 5% of the plot",
                    {{"act", std::string(kActNames[t])}, {"words", counts[t]}, {"total", total}});
      }
    }
  } catch (const Error& e) {
    report.errors.push_back(Issue::from(e));
    total = word_count(strip_act_tags(annotated));
  }
  if (!kPlotWords.contains(total)) {
    report.warn(ErrorCode::LengthOutOfRange, "plot length outside the expected word range",
                {{"actual", total}, {"min", kPlotWords.min}, {"max", kPlotWords.max}});
  }
  return report;
}

enum class ProfileId { O, AS, AL, ASG, ALG };
enum class StorylineKind { Short, Long };

inline std::string_view to_string(ProfileId id) {
  switch (id) {
    case ProfileId::O: return "O";
    case ProfileId::AS: return "AS";
    case ProfileId::AL: return "AL";
    case ProfileId::ASG: return "ASG";
    case ProfileId::ALG: return "ALG";
  }
  return "O";
}

inline std::string_view to_string(StorylineKind k) { return k == StorylineKind::Short ? "short" : "long"; }

struct GenerationProfile {
  ProfileId id;
  bool annotated_output;
  StorylineKind storyline_kind;
  bool genres_included;

  friend bool operator==(const GenerationProfile&, const GenerationProfile&) = default;
};

// O: short storyline in, plain plot out. AS/AL: short/long storyline in,
// act-annotated plot out. ASG/ALG: the same with genres prefixed.
inline constexpr std::array<GenerationProfile, 5> kProfiles{{
    {ProfileId::O, false, StorylineKind::Short, false},
    {ProfileId::AS, true, StorylineKind::Short, false},
    {ProfileId::AL, true, StorylineKind::Long, false},
    {ProfileId::ASG, true, StorylineKind::Short, true},
    {ProfileId::ALG, true, StorylineKind::Long, true},
}};

inline const GenerationProfile& profile(ProfileId id) {
  for (const auto& p : kProfiles)
    if (p.id == id) return p;
  return kProfiles[0];
}

inline const GenerationProfile& profile_from_string(std::string_view name) {
  const auto up = to_upper(trim(name));
  for (const auto& p : kProfiles)
    if (to_string(p.id) == up) return p;
  throw Error(ErrorCode::InvalidArgument, "unknown generation profile", {{"profile", std::string(name)}});
}

inline WordRange storyline_range(StorylineKind k) {
  return k == StorylineKind::Short ? kShortStorylineWords : kLongStorylineWords;
}

struct BuiltPrompt {
  std::string prompt;
  std::vector<Issue> warnings;
};

/// Genre-conditioned prompt: "G1, G2. storyline" + separator, or the bare
/// storyline + separator for profiles without genres.
inline BuiltPrompt build_prompt(std::string_view storyline, const std::vector<Genre>& genres,
                                const GenerationProfile& prof,
                                std::string_view separator = kDefaultPromptSeparator) {
  const auto story = trim(storyline);
  if (story.empty()) throw Error(ErrorCode::EmptyStoryline, "storyline is empty");
  if (prof.genres_included && genres.empty()) {
    throw Error(ErrorCode::GenresRequired, "profile " + std::string(to_string(prof.id)) + " requires genres",
                {{"profile", std::string(to_string(prof.id))}});
  }
  if (!prof.genres_included && !genres.empty()) {
    throw Error(ErrorCode::GenresForbidden, "profile " + std::string(to_string(prof.id)) + " takes no genres",
                {{"profile", std::string(to_string(prof.id))}});
  }
  BuiltPrompt out;
  if (prof.genres_included) out.prompt = join(genres, ", ") + ". ";
  out.prompt += story;
  out.prompt += separator;

  const auto range = storyline_range(prof.storyline_kind);
  const auto n = word_count(story);
  if (!range.contains(n)) {
    out.warnings.push_back(Issue{Severity::Warning, ErrorCode::LengthViolation,
                                 std::string(to_string(prof.storyline_kind)) + " storyline length out of range",
                                 {{"actual", n}, {"min", range.min}, {"max", range.max}}});
  }
  return out;
}

}  // namespace kurosawa
