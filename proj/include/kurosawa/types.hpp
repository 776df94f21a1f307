#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kurosawa/error.hpp"
#include "kurosawa/text.hpp"

namespace kurosawa {

using Genre = std::string;

enum class ElementKind { Slugline, Action, CharacterCue, Dialogue, Transition };

inline std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Slugline: return "Slugline";
    case ElementKind::Action: return "Action";
    case ElementKind::CharacterCue: return "CharacterCue";
    case ElementKind::Dialogue: return "Dialogue";
    case ElementKind::Transition: return "Transition";
  }
  return "Action";
}

inline std::optional<ElementKind> element_kind_from_string(std::string_view s) {
  for (auto k : {ElementKind::Slugline, ElementKind::Action, ElementKind::CharacterCue,
                 ElementKind::Dialogue, ElementKind::Transition}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// Half-open range of 0-based source lines; {0, 0} for synthesized elements.
struct LineSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  bool synthesized() const noexcept { return start == 0 && end == 0; }
  friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

struct ScreenplayElement {
  ElementKind kind = ElementKind::Action;
  std::string text;
  LineSpan line_span;

  friend bool operator==(const ScreenplayElement&, const ScreenplayElement&) = default;
};

struct Scene {
  std::vector<ScreenplayElement> elements;
  std::optional<std::string> description;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct Script {
  std::string title;
  std::vector<Scene> scenes;

  friend bool operator==(const Script&, const Script&) = default;
};

// Content equivalence: kinds match and texts match after whitespace
// normalization. Line spans and descriptions are provenance, not content,
// and the tagged wire format carries neither.
inline bool equivalent(const ScreenplayElement& a, const ScreenplayElement& b) {
  return a.kind == b.kind && normalize_whitespace(a.text) == normalize_whitespace(b.text);
}

inline bool equivalent(const Scene& a, const Scene& b) {
  return std::equal(a.elements.begin(), a.elements.end(), b.elements.begin(), b.elements.end(),
                    [](const auto& x, const auto& y) { return equivalent(x, y); });
}

// True when every Dialogue element directly follows a cue or another dialogue.
inline bool dialogue_adjacency_holds(const Scene& scene) {
  for (std::size_t i = 0; i < scene.elements.size(); ++i) {
    if (scene.elements[i].kind != ElementKind::Dialogue) continue;
    if (i == 0) return false;
    const auto prev = scene.elements[i - 1].kind;
    if (prev != ElementKind::CharacterCue && prev != ElementKind::Dialogue) return false;
  }
  return true;
}

struct PlotActs {
  std::string act_one;
  std::string act_two_a;
  std::string act_two_b;
  std::string act_three;

  friend bool operator==(const PlotActs&, const PlotActs&) = default;

  std::array<const std::string*, 4> acts() const { return {&act_one, &act_two_a, &act_two_b, &act_three}; }
};

/// Controlled genre vocabulary. Lookups are case-insensitive and return the
/// canonical spelling.
class GenreVocabulary {
 public:
  GenreVocabulary() : names_(default_names()) {}
  explicit GenreVocabulary(std::vector<std::string> names) : names_(std::move(names)) {}

  static std::vector<std::string> default_names() {
    return {"Drama",   "Comedy",  "Romance", "Action",    "Thriller", "Crime",
            "Adventure", "Sci-Fi", "Horror",  "Fantasy",   "Mystery",  "Family",
            "Biography", "Musical", "War",    "History",   "Sport",    "Western"};
  }

  std::optional<std::string> canonical(std::string_view name) const {
    const auto want = to_lower(trim(name));
    for (const auto& n : names_) {
      if (to_lower(n) == want) return n;
    }
    return std::nullopt;
  }

  bool contains(std::string_view name) const { return canonical(name).has_value(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

}  // namespace kurosawa
