#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kurosawa/error.hpp"
#include "kurosawa/text.hpp"
#include "kurosawa/types.hpp"

namespace kurosawa {

/// Column thresholds and keyword tables for line classification. Defaults
/// were calibrated against the bundled sample corpus.
struct LayoutConfig {
  int cue_indent_min = 20;
  int dialogue_indent_min = 8;
  std::set<std::string> transition_keywords{"CUT TO:",      "FADE IN:",     "FADE OUT.",     "FADE OUT:",
                                            "FADE TO:",     "DISSOLVE TO:", "SMASH CUT TO:", "MATCH CUT TO:"};
  std::set<std::string> slugline_prefixes{"INT.", "EXT.", "INT./EXT.", "EXT./INT.", "I/E."};
  std::set<std::string> cue_extension_allowlist{"V.O.", "O.S.", "O.C.", "CONT'D"};

  void validate() const {
    if (dialogue_indent_min < 0 || dialogue_indent_min >= cue_indent_min) {
      throw Error(ErrorCode::InvalidConfig, "require 0 <= dialogue_indent_min < cue_indent_min",
                  {{"dialogue_indent_min", dialogue_indent_min}, {"cue_indent_min", cue_indent_min}});
    }
    if (transition_keywords.empty() || slugline_prefixes.empty() || cue_extension_allowlist.empty()) {
      throw Error(ErrorCode::InvalidConfig, "keyword sets must be non-empty");
    }
  }
};

enum class LineClass { Slugline, Transition, CharacterCue, DialogueLine, ActionLine, Parenthetical, Noise, Blank };

inline std::string_view to_string(LineClass c) {
  switch (c) {
    case LineClass::Slugline: return "Slugline";
    case LineClass::Transition: return "Transition";
    case LineClass::CharacterCue: return "CharacterCue";
    case LineClass::DialogueLine: return "DialogueLine";
    case LineClass::ActionLine: return "ActionLine";
    case LineClass::Parenthetical: return "Parenthetical";
    case LineClass::Noise: return "Noise";
    case LineClass::Blank: return "Blank";
  }
  return "ActionLine";
}

namespace detail {

// Leading whitespace width in columns, tabs stopping every 8 columns.
inline int indent_of(std::string_view line) {
  int col = 0;
  for (char c : line) {
    if (c == ' ') {
      ++col;
    } else if (c == '\t') {
      col = (col / 8 + 1) * 8;
    } else {
      break;
    }
  }
  return col;
}

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline bool is_page_number(std::string_view t) {
  if (!t.empty() && t.back() == '.') t.remove_suffix(1);
  return all_digits(t) && t.size() <= 4;
}

// 12/03/1998, 3-12-98, 12.03.1998
inline bool is_numeric_date(std::string_view t) {
  std::array<std::string_view, 3> parts;
  std::size_t n = 0, start = 0;
  char sep = 0;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    if (i == t.size() || t[i] == '/' || t[i] == '-' || t[i] == '.') {
      if (i < t.size()) {
        if (sep == 0) sep = t[i];
        if (t[i] != sep) return false;
      }
      if (n == 3) return false;
      parts[n++] = t.substr(start, i - start);
      start = i + 1;
    }
  }
  return n == 3 && all_digits(parts[0]) && parts[0].size() <= 2 && all_digits(parts[1]) &&
         parts[1].size() <= 2 && all_digits(parts[2]) && (parts[2].size() == 2 || parts[2].size() == 4);
}

// "March 3, 1998", "Mar. 3 1998", optionally prefixed by a weekday.
inline bool is_written_date(std::string_view t) {
  static constexpr std::array<std::string_view, 12> months{"jan", "feb", "mar", "apr", "may", "jun",
                                                           "jul", "aug", "sep", "oct", "nov", "dec"};
  auto words = split_whitespace(to_lower(t));
  if (words.size() == 4) words.erase(words.begin());
  if (words.size() != 3) return false;
  auto strip = [](std::string w) {
    while (!w.empty() && (w.back() == ',' || w.back() == '.')) w.pop_back();
    return w;
  };
  const auto month = strip(words[0]);
  const auto day = strip(words[1]);
  const auto year = strip(words[2]);
  const bool month_ok = month.size() >= 3 && std::any_of(months.begin(), months.end(), [&](auto m) {
                          return month.compare(0, 3, m) == 0;
                        });
  return month_ok && all_digits(day) && day.size() <= 2 && all_digits(year) && year.size() == 4;
}

inline bool is_noise(std::string_view t) {
  const auto up = to_upper(t);
  if (up == "(CONTINUED)" || up.rfind("CONTINUED:", 0) == 0) return true;
  return is_page_number(t) || is_numeric_date(t) || is_written_date(t);
}

// At least one cased letter and no lowercase letters.
inline bool fully_uppercase(std::string_view s) {
  bool any_upper = false;
  for (std::size_t i = 0; i < s.size();) {
    const auto d = utf8::decode(s, i);
    if (is_lower_letter(d.cp)) return false;
    if (is_upper_letter(d.cp)) any_upper = true;
    i += d.len;
  }
  return any_upper;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool looks_like_cue(std::string_view trimmed, int indent, const LayoutConfig& config) {
  if (indent < config.cue_indent_min) return false;
  if (split_whitespace(trimmed).size() > 5) return false;
  std::string_view name = trimmed;
  if (!trimmed.empty() && trimmed.back() == ')') {
    const auto open = trimmed.rfind('(');
    if (open != std::string_view::npos) {
      const auto ext = to_upper(trim(trimmed.substr(open + 1, trimmed.size() - open - 2)));
      if (config.cue_extension_allowlist.count(ext)) name = trim(trimmed.substr(0, open));
    }
  }
  return fully_uppercase(name);
}

inline bool in_dialogue_block(LineClass prev) {
  return prev == LineClass::CharacterCue || prev == LineClass::DialogueLine || prev == LineClass::Parenthetical;
}

}  // namespace detail

/// Classifies one source line. First matching rule wins: blank, noise,
/// slugline, transition, character cue, parenthetical, dialogue, action.
inline LineClass classify_line(std::string_view raw_line, LineClass prev_class, const LayoutConfig& config) {
  const auto trimmed = trim(raw_line);
  if (trimmed.empty()) return LineClass::Blank;
  if (detail::is_noise(trimmed)) return LineClass::Noise;

  const auto upper = to_upper(trimmed);
  for (const auto& prefix : config.slugline_prefixes) {
    if (upper.rfind(prefix, 0) == 0) return LineClass::Slugline;
  }
  if (detail::fully_uppercase(trimmed) &&
      (detail::ends_with(trimmed, "TO:") || config.transition_keywords.count(std::string(trimmed)))) {
    return LineClass::Transition;
  }
  const int indent = detail::indent_of(raw_line);
  if (detail::looks_like_cue(trimmed, indent, config)) return LineClass::CharacterCue;
  if (detail::in_dialogue_block(prev_class)) {
    if (trimmed.front() == '(') return LineClass::Parenthetical;
    if (indent >= config.dialogue_indent_min) return LineClass::DialogueLine;
  }
  return LineClass::ActionLine;
}

/// Classifies every line of a document. Noise lines are transparent to the
/// threaded previous class so a page break inside a speech keeps the speech.
inline std::vector<LineClass> classify_lines(const std::vector<std::string>& lines, const LayoutConfig& config) {
  std::vector<LineClass> out;
  out.reserve(lines.size());
  LineClass prev = LineClass::Blank;
  for (const auto& line : lines) {
    const auto c = classify_line(line, prev, config);
    out.push_back(c);
    if (c != LineClass::Noise) prev = c;
  }
  return out;
}

inline constexpr std::string_view kSynthesizedSlugline = "INT. UNKNOWN - DAY";

struct ParseResult {
  Script script;
  std::vector<Issue> warnings;
};

/// Parses plain screenplay text into scenes of screenplay elements.
inline ParseResult parse_script(std::string_view text, const LayoutConfig& config = {}, std::string title = {}) {
  config.validate();
  const auto lines = split_lines(text);
  const bool any_content =
      std::any_of(lines.begin(), lines.end(), [](const auto& l) { return !trim(l).empty(); });
  if (!any_content) throw Error(ErrorCode::EmptyInput, "screenplay text has no non-blank lines");

  const auto classes = classify_lines(lines, config);
  ParseResult result;
  result.script.title = std::move(title);
  auto& scenes = result.script.scenes;

  std::optional<ScreenplayElement> current;
  std::vector<std::string> current_lines;

  auto flush = [&] {
    if (!current) return;
    current->text = join(current_lines, "\n");
    if (scenes.empty()) {
      Scene lead;
      lead.elements.push_back({ElementKind::Slugline, std::string(kSynthesizedSlugline), {0, 0}});
      scenes.push_back(std::move(lead));
      result.warnings.push_back(Issue{Severity::Warning, ErrorCode::HeaderlessScene,
                                      "content before the first slugline placed under a synthesized heading",
                                      {{"line", current->line_span.start}}});
    }
    scenes.back().elements.push_back(std::move(*current));
    current.reset();
    current_lines.clear();
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cls = classes[i];
    std::optional<ElementKind> kind;
    switch (cls) {
      case LineClass::Noise:
        continue;
      case LineClass::Blank:
      case LineClass::Transition:
        flush();
        continue;
      case LineClass::Slugline:
        flush();
        scenes.emplace_back();
        scenes.back().elements.push_back({ElementKind::Slugline, std::string(trim(lines[i])), {i, i + 1}});
        continue;
      case LineClass::ActionLine: kind = ElementKind::Action; break;
      case LineClass::CharacterCue: kind = ElementKind::CharacterCue; break;
      case LineClass::DialogueLine:
      case LineClass::Parenthetical: kind = ElementKind::Dialogue; break;
    }
    if (current && current->kind != *kind) flush();
    if (!current) current = ScreenplayElement{*kind, {}, {i, i + 1}};
    current_lines.emplace_back(trim(lines[i]));
    current->line_span.end = i + 1;
  }
  flush();

  if (scenes.empty()) throw Error(ErrorCode::NoElements, "no screenplay elements found");
  return result;
}

namespace detail {

struct TagPair {
  ElementKind kind;
  std::string_view begin;
  std::string_view end;
};

inline constexpr std::array<TagPair, 4> kSceneTags{{
    {ElementKind::Slugline, "<bsl>", "<esl>"},
    {ElementKind::Action, "<bal>", "<eal>"},
    {ElementKind::CharacterCue, "<bcn>", "<ecn>"},
    {ElementKind::Dialogue, "<bd>", "<ed>"},
}};

inline const TagPair* tag_for(ElementKind k) {
  for (const auto& t : kSceneTags)
    if (t.kind == k) return &t;
  return nullptr;
}

struct TagHit {
  std::size_t pos = std::string_view::npos;
  const TagPair* pair = nullptr;
  bool is_begin = false;
  std::size_t len = 0;
};

inline TagHit find_scene_tag(std::string_view text, std::size_t from) {
  TagHit best;
  for (const auto& t : kSceneTags) {
    for (bool begin : {true, false}) {
      const auto tag = begin ? t.begin : t.end;
      const auto p = text.find(tag, from);
      if (p != std::string_view::npos && p < best.pos) best = {p, &t, begin, tag.size()};
    }
  }
  return best;
}

}  // namespace detail

/// Serializes a scene to the tagged wire format, one element per line.
inline std::string encode_tagged(const Scene& scene) {
  std::string out;
  for (std::size_t i = 0; i < scene.elements.size(); ++i) {
    const auto& el = scene.elements[i];
    const auto* tags = detail::tag_for(el.kind);
    if (!tags) {
      throw Error(ErrorCode::UnsupportedElement, "no tag mapping for element kind",
                  {{"kind", to_string(el.kind)}, {"index", i}});
    }
    if (detail::find_scene_tag(el.text, 0).pair) {
      throw Error(ErrorCode::InvalidElementText, "element text contains a scene tag", {{"index", i}});
    }
    std::vector<std::string> parts;
    for (const auto& line : split_lines(el.text)) {
      const auto t = trim(line);
      if (!t.empty()) parts.emplace_back(t);
    }
    if (parts.empty()) throw Error(ErrorCode::EmptyElement, "element text is empty", {{"index", i}});
    if (i) out.push_back('\n');
    out += tags->begin;
    out.push_back(' ');
    out += join(parts, " ");
    out.push_back(' ');
    out += tags->end;
  }
  return out;
}

enum class DecodeMode { Strict, Lenient };

struct DecodeResult {
  Scene scene;
  std::vector<Issue> warnings;
};

/// Parses tagged scene text. Unbalanced tags always throw; stray text, empty
/// elements, empty scenes and orphan dialogue throw in strict mode and are
/// reported as warnings in lenient mode.
inline DecodeResult decode_tagged(std::string_view text, DecodeMode mode = DecodeMode::Lenient) {
  DecodeResult result;
  auto recoverable = [&](ErrorCode code, std::string msg, nlohmann::json detail) {
    if (mode == DecodeMode::Strict) throw Error(code, msg, std::move(detail));
    result.warnings.push_back(Issue{Severity::Warning, code, std::move(msg), std::move(detail)});
  };

  constexpr std::string_view ws = " \t\r\n\v\f";
  std::size_t pos = 0;
  while (true) {
    pos = text.find_first_not_of(ws, pos);
    if (pos == std::string_view::npos) break;
    const auto hit = detail::find_scene_tag(text, pos);
    if (hit.pos != pos) {
      const auto stop = std::min(hit.pos, text.size());
      const auto stray = trim(text.substr(pos, stop - pos));
      recoverable(ErrorCode::StrayText, "text outside any tag pair",
                  {{"offset", pos}, {"text", std::string(stray.substr(0, 80))}});
      pos = stop;
      continue;
    }
    if (!hit.is_begin) {
      throw Error(ErrorCode::UnbalancedTags, "end tag without matching begin tag",
                  {{"offset", pos}, {"tag", std::string(hit.pair->end)}});
    }
    const auto body_start = pos + hit.len;
    const auto next = detail::find_scene_tag(text, body_start);
    if (!next.pair) {
      throw Error(ErrorCode::UnbalancedTags, "begin tag without matching end tag",
                  {{"offset", pos}, {"tag", std::string(hit.pair->begin)}});
    }
    if (next.is_begin || next.pair != hit.pair) {
      throw Error(ErrorCode::UnbalancedTags, "mismatched tag pair",
                  {{"offset", pos},
                   {"tag", std::string(hit.pair->begin)},
                   {"found", std::string(next.is_begin ? next.pair->begin : next.pair->end)},
                   {"found_offset", next.pos}});
    }
    const auto body = trim(text.substr(body_start, next.pos - body_start));
    if (body.empty()) {
      recoverable(ErrorCode::EmptyElement, "tag pair encloses no text",
                  {{"offset", pos}, {"tag", std::string(hit.pair->begin)}});
    } else {
      result.scene.elements.push_back({hit.pair->kind, std::string(body), {0, 0}});
    }
    pos = next.pos + next.len;
  }

  if (result.scene.elements.empty()) recoverable(ErrorCode::EmptyScene, "no tagged elements", {});
  if (!dialogue_adjacency_holds(result.scene)) {
    recoverable(ErrorCode::DialogueWithoutCue, "dialogue element without a preceding character cue", {});
  }
  return result;
}

namespace detail {

inline std::string spaces(std::size_t n) { return std::string(n, ' '); }

inline std::vector<std::string> wrap_words(std::string_view line, std::size_t width) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t cur_len = 0;
  for (const auto& w : split_whitespace(line)) {
    const auto wl = utf8::length(w);
    if (!cur.empty() && cur_len + 1 + wl > width) {
      out.push_back(std::move(cur));
      cur.clear();
      cur_len = 0;
    }
    if (!cur.empty()) {
      cur.push_back(' ');
      ++cur_len;
    }
    cur += w;
    cur_len += wl;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// Lays a scene out as screenplay text: sluglines flush-left in capitals,
/// action flush-left, cues centred, dialogue in a centred half-width block,
/// transitions flush-right.
inline std::string render_screenplay(const Scene& scene, int page_width = 60) {
  if (page_width < 40) throw Error(ErrorCode::InvalidArgument, "page_width must be >= 40", {{"page_width", page_width}});
  const auto width = static_cast<std::size_t>(page_width);
  const auto block = width / 2;
  const auto block_indent = (width - block) / 2;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scene.elements.size(); ++i) {
    const auto& el = scene.elements[i];
    const bool speech_continues = i > 0 && el.kind == ElementKind::Dialogue &&
                                  (scene.elements[i - 1].kind == ElementKind::CharacterCue ||
                                   scene.elements[i - 1].kind == ElementKind::Dialogue);
    if (i > 0 && !speech_continues) out.emplace_back();
    switch (el.kind) {
      case ElementKind::Slugline:
        out.push_back(to_upper(normalize_whitespace(el.text)));
        break;
      case ElementKind::Action:
        for (const auto& line : split_lines(el.text)) {
          const auto t = trim(line);
          if (!t.empty()) out.emplace_back(t);
        }
        break;
      case ElementKind::CharacterCue: {
        const auto cue = to_upper(normalize_whitespace(el.text));
        const auto len = utf8::length(cue);
        out.push_back(detail::spaces(len < width ? (width - len) / 2 : 0) + cue);
        break;
      }
      case ElementKind::Dialogue:
        for (const auto& line : split_lines(el.text)) {
          for (const auto& wrapped : detail::wrap_words(line, block)) {
            out.push_back(detail::spaces(block_indent) + wrapped);
          }
        }
        break;
      case ElementKind::Transition: {
        const auto t = to_upper(normalize_whitespace(el.text));
        const auto len = utf8::length(t);
        out.push_back(detail::spaces(len < width ? width - len : 0) + t);
        break;
      }
    }
  }
  return join(out, "\n");
}

inline std::string render_screenplay(const Script& script, int page_width = 60) {
  std::vector<std::string> scenes;
  for (const auto& s : script.scenes) scenes.push_back(render_screenplay(s, page_width));
  return join(scenes, "\n\n");
}

}  // namespace kurosawa
