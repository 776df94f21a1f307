#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kurosawa/error.hpp"
#include "kurosawa/io.hpp"
#include "kurosawa/json_io.hpp"
#include "kurosawa/plot_annotation.hpp"
#include "kurosawa/script_parser.hpp"
#include "kurosawa/text.hpp"
#include "kurosawa/types.hpp"

namespace kurosawa {

enum class RecordKind { Plot, Scene };

inline std::string_view to_string(RecordKind k) { return k == RecordKind::Plot ? "plot" : "scene"; }

inline RecordKind record_kind_from_string(std::string_view s) {
  const auto t = to_lower(trim(s));
  if (t == "plot") return RecordKind::Plot;
  if (t == "scene") return RecordKind::Scene;
  throw Error(ErrorCode::InvalidArgument, "record kind must be 'plot' or 'scene'", {{"kind", std::string(s)}});
}

/// One storyline/target pair. For scene records the storyline is the short
/// scene description and the target is tagged scene text.
struct DatasetRecord {
  std::string id;
  RecordKind kind = RecordKind::Plot;
  std::string storyline;
  std::optional<std::string> long_storyline;
  std::vector<Genre> genres;
  std::string target_text;
  std::optional<std::string> source_note;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

inline void to_json(json& j, const DatasetRecord& r) {
  j = json{{"id", r.id},
           {"kind", to_string(r.kind)},
           {"storyline", r.storyline},
           {"genres", r.genres},
           {"target_text", r.target_text}};
  if (r.long_storyline) j["long_storyline"] = *r.long_storyline;
  if (r.source_note) j["source_note"] = *r.source_note;
}

inline void from_json(const json& j, DatasetRecord& r) {
  r.id = jsonio::require<std::string>(j, "id");
  r.kind = record_kind_from_string(jsonio::optional<std::string>(j, "kind").value_or("plot"));
  r.storyline = jsonio::require<std::string>(j, "storyline");
  r.long_storyline = jsonio::optional<std::string>(j, "long_storyline");
  r.genres = jsonio::optional<std::vector<std::string>>(j, "genres").value_or(std::vector<std::string>{});
  r.target_text = jsonio::require<std::string>(j, "target_text");
  r.source_note = jsonio::optional<std::string>(j, "source_note");
}

enum class ValidationMode { Strict, Lenient };

struct FinetuneRecord {
  std::string prompt;
  std::string completion;

  friend bool operator==(const FinetuneRecord&, const FinetuneRecord&) = default;
};

enum class FinetuneFormat { PromptCompletionJsonl };

struct FinetuneConfig {
  std::string prompt_separator{kDefaultPromptSeparator};
  std::string stop_sequence{kDefaultStopSequence};
  FinetuneFormat format = FinetuneFormat::PromptCompletionJsonl;
};

/// Append-ordered collection of validated records with unique ids.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::string name, GenreVocabulary vocab = {}) : name_(std::move(name)), vocab_(std::move(vocab)) {}

  const std::string& name() const noexcept { return name_; }
  const std::vector<DatasetRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  bool contains(const std::string& id) const { return ids_.count(id) > 0; }
  const GenreVocabulary& vocabulary() const noexcept { return vocab_; }

  /// Validates and appends. Strict mode turns every warning into a
  /// rejection; lenient mode appends and returns the warnings.
  std::vector<Issue> add_record(DatasetRecord record, ValidationMode mode = ValidationMode::Strict) {
    auto warnings = check(record);
    if (mode == ValidationMode::Strict && !warnings.empty()) {
      const auto& w = warnings.front();
      throw Error(w.code, w.message, w.detail);
    }
    ids_.insert(record.id);
    records_.push_back(std::move(record));
    return warnings;
  }

  /// Runs every invariant check without mutating. Throws on hard errors,
  /// returns warnings. Genres are canonicalized in place.
  std::vector<Issue> check(DatasetRecord& record) const {
    if (trim(record.id).empty()) throw Error(ErrorCode::InvalidArgument, "record id is empty");
    if (contains(record.id)) throw Error(ErrorCode::DuplicateId, "duplicate record id", {{"id", record.id}});
    for (auto& g : record.genres) {
      const auto canon = vocab_.canonical(g);
      if (!canon) throw Error(ErrorCode::UnknownGenre, "genre not in the active vocabulary", {{"genre", g}});
      g = *canon;
    }
    if (trim(record.storyline).empty()) throw Error(ErrorCode::EmptyStoryline, "storyline is empty", {{"id", record.id}});

    std::vector<Issue> warnings;
    ValidationReport plot_report;
    try {
      if (record.kind == RecordKind::Plot) {
        plot_report = validate_annotated_plot(record.target_text);
        if (!plot_report.errors.empty()) {
          const auto& e = plot_report.errors.front();
          throw Error(e.code, e.message, e.detail);
        }
      } else {
        decode_tagged(record.target_text, DecodeMode::Strict);
      }
    } catch (const Error& e) {
      json detail{{"id", record.id}, {"cause", to_string(e.code())}};
      for (const auto& [k, v] : e.detail().items()) detail[k] = v;
      throw Error(ErrorCode::TargetParseFailure, std::string("target does not parse: ") + e.what(), detail);
    }

    const auto n = word_count(record.storyline);
    if (!kShortStorylineWords.contains(n)) {
      warnings.push_back(Issue{Severity::Warning, ErrorCode::LengthViolation, "storyline length out of range",
                               {{"id", record.id}, {"actual", n}, {"min", kShortStorylineWords.min},
                                {"max", kShortStorylineWords.max}}});
    }
    if (record.long_storyline) {
      const auto m = word_count(*record.long_storyline);
      if (!kLongStorylineWords.contains(m)) {
        warnings.push_back(Issue{Severity::Warning, ErrorCode::LengthViolation, "long storyline length out of range",
                                 {{"id", record.id}, {"actual", m}, {"min", kLongStorylineWords.min},
                                  {"max", kLongStorylineWords.max}}});
      }
    }
    warnings.insert(warnings.end(), plot_report.warnings.begin(), plot_report.warnings.end());
    return warnings;
  }

 private:
  std::string name_;
  GenreVocabulary vocab_;
  std::vector<DatasetRecord> records_;
  std::set<std::string> ids_;
};

/// Genre histogram, highest count first, ties broken by name.
inline std::vector<std::pair<std::string, std::size_t>> genre_distribution(const Dataset& dataset) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : dataset.records())
    for (const auto& g : r.genres) ++counts[g];
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

/// One prompt/completion pair per record. Plot prompts follow the profile's
/// storyline and genre scheme; profile O completions carry no act tags.
inline std::vector<FinetuneRecord> export_finetune(const Dataset& dataset, const GenerationProfile& prof,
                                                   const FinetuneConfig& cfg = {}) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyCorpus, "dataset is empty");
  std::vector<FinetuneRecord> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset.records()) {
    FinetuneRecord fr;
    if (r.kind == RecordKind::Scene) {
      fr.prompt = std::string(trim(r.storyline)) + cfg.prompt_separator;
      fr.completion = " " + r.target_text + cfg.stop_sequence;
      out.push_back(std::move(fr));
      continue;
    }
    const bool wants_long = prof.storyline_kind == StorylineKind::Long;
    if (wants_long && !r.long_storyline) {
      throw Error(ErrorCode::MissingLongStoryline, "profile needs a long storyline",
                  {{"id", r.id}, {"profile", std::string(to_string(prof.id))}});
    }
    if (prof.genres_included && r.genres.empty()) {
      throw Error(ErrorCode::MissingGenres, "profile needs genres",
                  {{"id", r.id}, {"profile", std::string(to_string(prof.id))}});
    }
    const std::vector<Genre> no_genres;
    fr.prompt = build_prompt(wants_long ? *r.long_storyline : r.storyline, prof.genres_included ? r.genres : no_genres,
                             prof, cfg.prompt_separator)
                    .prompt;
    fr.completion = " " + (prof.annotated_output ? r.target_text : strip_act_tags(r.target_text)) + cfg.stop_sequence;
    out.push_back(std::move(fr));
  }
  return out;
}

/// Export file text: a "# {...}" header recording delimiters, then one JSON
/// object per line.
inline std::string render_finetune_jsonl(const std::vector<FinetuneRecord>& records, const GenerationProfile& prof,
                                         const FinetuneConfig& cfg = {}) {
  std::string out = "# " +
                    json{{"format", "prompt-completion"},
                         {"profile", to_string(prof.id)},
                         {"prompt_separator", cfg.prompt_separator},
                         {"stop_sequence", cfg.stop_sequence}}
                        .dump() +
                    "\n";
  for (const auto& r : records) out += json{{"prompt", r.prompt}, {"completion", r.completion}}.dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline std::string dataset_to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& r : dataset.records()) out += json(r).dump() + "\n";
  return out;
}

inline Dataset dataset_from_jsonl(std::string_view text, std::string name = {},
                                  ValidationMode mode = ValidationMode::Strict, GenreVocabulary vocab = {}) {
  Dataset ds(std::move(name), std::move(vocab));
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception&) {
      throw Error(ErrorCode::CorruptRecord, "dataset line is not valid JSON", {{"line", i + 1}});
    }
    ds.add_record(j.get<DatasetRecord>(), mode);
  }
  return ds;
}

struct ImportRejection {
  std::size_t row = 0;  // 1-based data row
  std::string id;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

struct ImportReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<ImportRejection> rejections;
};

struct ImportResult {
  Dataset dataset;
  ImportReport report;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

}  // namespace detail

/// Builds a dataset from a pairing manifest with header columns id,
/// storyline_file, long_storyline_file (optional), genres (';'-joined),
/// target_file, kind. Tab- or comma-delimited; paths resolve against the
/// manifest's directory. Bad rows are rejected and reported; the batch
/// continues.
inline ImportResult import_corpus(const std::filesystem::path& manifest_path, GenreVocabulary vocab = {}) {
  const auto text = read_file(manifest_path);
  const auto base = manifest_path.parent_path();
  ImportResult result{Dataset(manifest_path.stem().string(), std::move(vocab)), {}};

  const auto lines = split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) return result;

  const char delim = lines[first].find('\t') != std::string::npos ? '\t' : ',';
  const auto header = detail::split_fields(lines[first], delim);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[to_lower(header[i])] = i;
  for (const char* required : {"id", "storyline_file", "genres", "target_file", "kind"}) {
    if (!col.count(required)) {
      throw Error(ErrorCode::ManifestParseError, std::string("manifest header lacks column '") + required + "'",
                  {{"column", required}});
    }
  }

  std::size_t row = 0;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(lines[li], delim);
    auto field = [&](const char* name) -> std::string {
      const auto it = col.find(name);
      return it != col.end() && it->second < fields.size() ? fields[it->second] : std::string{};
    };
    const auto id = field("id");
    try {
      if (fields.size() != header.size()) {
        throw Error(ErrorCode::ManifestParseError, "row has the wrong number of fields",
                    {{"row", row}, {"expected", header.size()}, {"found", fields.size()}});
      }
      DatasetRecord rec;
      rec.id = id;
      rec.kind = record_kind_from_string(field("kind"));
      rec.storyline = std::string(trim(read_file(base / field("storyline_file"))));
      if (const auto lf = field("long_storyline_file"); !lf.empty()) {
        rec.long_storyline = std::string(trim(read_file(base / lf)));
      }
      for (const auto& g : detail::split_fields(field("genres"), ';')) {
        if (!g.empty()) rec.genres.push_back(g);
      }
      rec.target_text = std::string(trim(read_file(base / field("target_file"))));
      rec.source_note = "manifest:" + manifest_path.filename().string() + "#" + std::to_string(row);
      result.dataset.add_record(std::move(rec), ValidationMode::Strict);
      ++result.report.accepted;
    } catch (const Error& e) {
      ++result.report.rejected;
      result.report.rejections.push_back({row, id, e.code(), e.what()});
    }
  }
  return result;
}

/// Seeded Fisher-Yates split; the first `train_fraction` of the shuffled
/// records go to the first dataset.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must be in [0, 1]");
  }
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  const auto cut = static_cast<std::size_t>(train_fraction * static_cast<double>(order.size()) + 0.5);
  Dataset train(dataset.name() + "-train", dataset.vocabulary());
  Dataset held(dataset.name() + "-heldout", dataset.vocabulary());
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? train : held).add_record(dataset.records()[order[i]], ValidationMode::Lenient);
  }
  return {std::move(train), std::move(held)};
}

}  // namespace kurosawa
