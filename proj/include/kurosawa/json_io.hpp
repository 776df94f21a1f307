#pragma once

// JSON mappings for the domain types. Field names here are the wire schema
// shared by the CLI (--format json), the HTTP API and the on-disk stores.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kurosawa/error.hpp"
#include "kurosawa/metrics.hpp"
#include "kurosawa/plot_annotation.hpp"
#include "kurosawa/types.hpp"

namespace kurosawa {

using nlohmann::json;

namespace jsonio {

template <typename T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::BadRequest, std::string("missing field '") + key + "'", {{"field", key}});
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' has the wrong type", {{"field", key}});
  }
}

template <typename T>
std::optional<T> optional(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return require<T>(j, key);
}

}  // namespace jsonio

inline void to_json(json& j, const Issue& i) {
  j = json{{"code", to_string(i.code)},
           {"severity", i.severity == Severity::Error ? "error" : "warning"},
           {"message", i.message}};
  if (!i.detail.empty()) j["detail"] = i.detail;
}

inline void from_json(const json& j, Issue& i) {
  const auto code = error_code_from_string(jsonio::require<std::string>(j, "code"));
  if (!code) throw Error(ErrorCode::BadRequest, "unknown issue code");
  i.code = *code;
  i.severity = jsonio::optional<std::string>(j, "severity").value_or("error") == "warning" ? Severity::Warning
                                                                                          : Severity::Error;
  i.message = jsonio::optional<std::string>(j, "message").value_or("");
  i.detail = j.value("detail", json::object());
}

inline void to_json(json& j, const ValidationReport& r) { j = json{{"errors", r.errors}, {"warnings", r.warnings}}; }

inline void from_json(const json& j, ValidationReport& r) {
  r.errors = j.value("errors", std::vector<Issue>{});
  r.warnings = j.value("warnings", std::vector<Issue>{});
}

inline json error_json(const Error& e) {
  json j{{"code", to_string(e.code())}, {"message", e.what()}};
  if (!e.detail().empty()) j["detail"] = e.detail();
  return j;
}

inline void to_json(json& j, const ScreenplayElement& e) {
  j = json{{"kind", to_string(e.kind)}, {"text", e.text}, {"line_span", {e.line_span.start, e.line_span.end}}};
}

inline void from_json(const json& j, ScreenplayElement& e) {
  const auto kind = element_kind_from_string(jsonio::require<std::string>(j, "kind"));
  if (!kind) throw Error(ErrorCode::BadRequest, "unknown element kind");
  e.kind = *kind;
  e.text = jsonio::require<std::string>(j, "text");
  const auto span = jsonio::optional<std::vector<std::size_t>>(j, "line_span").value_or(std::vector<std::size_t>{0, 0});
  if (span.size() != 2) throw Error(ErrorCode::BadRequest, "line_span must have two entries");
  e.line_span = {span[0], span[1]};
}

inline void to_json(json& j, const Scene& s) {
  j = json{{"elements", s.elements}};
  if (s.description) j["description"] = *s.description;
}

inline void from_json(const json& j, Scene& s) {
  s.elements = jsonio::require<std::vector<ScreenplayElement>>(j, "elements");
  s.description = jsonio::optional<std::string>(j, "description");
}

inline void to_json(json& j, const Script& s) { j = json{{"title", s.title}, {"scenes", s.scenes}}; }

inline void from_json(const json& j, Script& s) {
  s.title = jsonio::optional<std::string>(j, "title").value_or("");
  s.scenes = jsonio::require<std::vector<Scene>>(j, "scenes");
}

inline void to_json(json& j, const PlotActs& a) {
  j = json{{"one", a.act_one}, {"two-a", a.act_two_a}, {"two-b", a.act_two_b}, {"three", a.act_three}};
}

inline void from_json(const json& j, PlotActs& a) {
  a.act_one = jsonio::require<std::string>(j, "one");
  a.act_two_a = jsonio::require<std::string>(j, "two-a");
  a.act_two_b = jsonio::require<std::string>(j, "two-b");
  a.act_three = jsonio::require<std::string>(j, "three");
}

inline void to_json(json& j, const GenerationProfile& p) {
  j = json{{"id", to_string(p.id)},
           {"annotated_output", p.annotated_output},
           {"storyline_kind", to_string(p.storyline_kind)},
           {"genres_included", p.genres_included}};
}

inline void to_json(json& j, const MetricReport& r) {
  j = json{{"perplexity", r.perplexity ? json(*r.perplexity) : json(nullptr)},
           {"bleu", {{"2", r.bleu.at(2)}, {"3", r.bleu.at(3)}, {"4", r.bleu.at(4)}}},
           {"rouge_l", r.rouge_l},
           {"distinct_3", r.distinct_3},
           {"repetition_3", r.repetition_3},
           {"n_candidates", r.n_candidates}};
}

inline void to_json(json& j, const LikertRating& r) {
  json scores = json::object();
  for (auto f : kLikertFeatures) scores[std::string(to_string(f))] = r.score(f);
  j = json{{"item_id", r.item_id}, {"rater_id", r.rater_id}, {"scores", scores}};
}

inline void from_json(const json& j, LikertRating& r) {
  r.item_id = jsonio::require<std::string>(j, "item_id");
  r.rater_id = jsonio::optional<std::string>(j, "rater_id").value_or("anonymous");
  const auto scores = jsonio::require<json>(j, "scores");
  for (auto f : kLikertFeatures) {
    r.scores[static_cast<std::size_t>(f)] = jsonio::require<int>(scores, std::string(to_string(f)).c_str());
  }
}

inline void to_json(json& j, const BoxStats& s) {
  j = json{{"mean", s.mean}, {"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"min", s.min}, {"max", s.max}};
}

inline void to_json(json& j, const LikertSummary& s) {
  json features = json::object();
  for (auto f : kLikertFeatures) features[std::string(to_string(f))] = s[f];
  j = json{{"n_ratings", s.n_ratings}, {"features", features}};
}

}  // namespace kurosawa
