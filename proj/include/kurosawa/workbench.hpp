#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "kurosawa/config.hpp"
#include "kurosawa/dataset.hpp"
#include "kurosawa/error.hpp"
#include "kurosawa/generation.hpp"
#include "kurosawa/http_backend.hpp"
#include "kurosawa/json_io.hpp"
#include "kurosawa/metrics.hpp"
#include "kurosawa/plot_annotation.hpp"
#include "kurosawa/script_parser.hpp"
#include "kurosawa/store.hpp"

namespace kurosawa {

/// HTTP status for each error code. Total over ErrorCode.
inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::GenresRequired:
    case ErrorCode::GenresForbidden:
    case ErrorCode::MissingLongStoryline:
    case ErrorCode::MissingGenres:
      return 422;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BackendRejected:
      return 502;
    case ErrorCode::Timeout:
      return 504;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::StorageFull:
      return 507;
    case ErrorCode::IoError:
    case ErrorCode::CorruptRecord:
      return 500;
    default:
      return 400;
  }
}

inline bool is_backend_error(ErrorCode c) {
  return c == ErrorCode::BackendUnavailable || c == ErrorCode::BackendRejected || c == ErrorCode::Timeout;
}

inline json error_body(const Error& e) { return json{{"error", error_json(e)}}; }

inline std::unique_ptr<CompletionBackend> make_backend(const ServiceConfig& cfg) {
  if (cfg.backend == "mock") return std::make_unique<MockBackend>(MockBackend::from_directory(cfg.mock_bank));
  if (cfg.backend == "live") return std::make_unique<LiveBackend>(cfg.live);
  throw Error(ErrorCode::InvalidConfig, "backend must be mock or live", {{"backend", cfg.backend}});
}

/// Operations behind the CLI and the HTTP API. Takes and returns JSON in the
/// wire schema; every mutation goes through the store first.
class Workbench {
 public:
  Workbench(ServiceConfig cfg, std::shared_ptr<const CompletionBackend> backend, RetryPolicy retry = {})
      : cfg_(std::move(cfg)), backend_(std::move(backend)), retry_(std::move(retry)), store_(cfg_.data_dir) {
    cfg_.generation.validate();
    cfg_.layout.validate();
    replay_datasets();
  }

  const ServiceConfig& config() const noexcept { return cfg_; }
  Store& store() noexcept { return store_; }
  const CompletionBackend& backend() const noexcept { return *backend_; }

  // --- parsing ---------------------------------------------------------

  json parse_script(const json& req) const {
    const auto text = jsonio::require<std::string>(req, "text");
    const auto layout = apply_layout_json(cfg_.layout, req.value("layout", json()));
    const auto title = jsonio::optional<std::string>(req, "title").value_or("");
    const auto result = kurosawa::parse_script(text, layout, title);
    return json{{"script", result.script}, {"warnings", result.warnings}};
  }

  json encode_scene(const json& req) const {
    const auto scene = jsonio::require<Scene>(req, "scene");
    return json{{"text", encode_tagged(scene)}};
  }

  json decode_scene(const json& req) const {
    const auto text = jsonio::require<std::string>(req, "text");
    const auto mode_name = jsonio::optional<std::string>(req, "mode").value_or("lenient");
    DecodeMode mode;
    if (mode_name == "strict") {
      mode = DecodeMode::Strict;
    } else if (mode_name == "lenient") {
      mode = DecodeMode::Lenient;
    } else {
      throw Error(ErrorCode::BadRequest, "mode must be strict or lenient", {{"mode", mode_name}});
    }
    const auto result = decode_tagged(text, mode);
    return json{{"scene", result.scene}, {"warnings", result.warnings}};
  }

  ValidationReport validate_plot(const json& req) const {
    return validate_annotated_plot(jsonio::require<std::string>(req, "annotated"));
  }

  // --- generation ------------------------------------------------------

  StoredItem generate_plot(const json& req) {
    const auto& prof = profile_from_string(jsonio::require<std::string>(req, "profile"));
    const auto storyline = jsonio::require<std::string>(req, "storyline");
    const auto long_storyline = jsonio::optional<std::string>(req, "long_storyline");
    auto genres = canonical_genres(jsonio::optional<std::vector<std::string>>(req, "genres").value_or(std::vector<std::string>{}));
    const auto config = apply_generation_json(cfg_.generation, req.value("config", json()));

    std::string input = storyline;
    if (prof.storyline_kind == StorylineKind::Long) {
      if (!long_storyline || trim(*long_storyline).empty()) {
        throw Error(ErrorCode::MissingLongStoryline, "profile needs long_storyline",
                    {{"profile", std::string(to_string(prof.id))}});
      }
      input = *long_storyline;
    }
    auto gen = kurosawa::generate_plot(input, genres, prof, *backend_, config, retry_);
    json request{{"storyline", storyline},
                 {"long_storyline", long_storyline ? json(*long_storyline) : json(nullptr)},
                 {"genres", genres},
                 {"profile", std::string(to_string(prof.id))},
                 {"config", generation_config_json(config)}};
    json payload{{"request", request},
                 {"prompt", gen.prompt},
                 {"raw", raw_json(gen.raw)},
                 {"acts", gen.acts ? json(*gen.acts) : json(nullptr)},
                 {"report", gen.report}};
    return store_.append(ItemKind::PlotGeneration, std::move(payload));
  }

  StoredItem generate_scene(const json& req) {
    const auto description = jsonio::require<std::string>(req, "description");
    const auto config = apply_generation_json(cfg_.generation, req.value("config", json()));
    auto gen = kurosawa::generate_scene(description, *backend_, config, retry_);
    json payload{{"request", {{"description", description}, {"config", generation_config_json(config)}}},
                 {"prompt", gen.prompt},
                 {"raw", raw_json(gen.raw)},
                 {"scene", gen.scene},
                 {"report", gen.report}};
    return store_.append(ItemKind::SceneGeneration, std::move(payload));
  }

  // --- datasets --------------------------------------------------------

  StoredItem create_dataset(const json& req) {
    const auto name = jsonio::require<std::string>(req, "name");
    if (trim(name).empty()) throw Error(ErrorCode::BadRequest, "dataset name is empty");
    std::unique_lock lock(datasets_mu_);
    auto item = store_.append(ItemKind::Dataset, json{{"op", "create"}, {"name", name}});
    datasets_.emplace(item.id, Dataset(name));
    return item;
  }

  /// Body is a record, optionally with "mode": "strict" | "lenient".
  json add_dataset_record(const std::string& dataset_id, const json& req) {
    auto record = req.contains("record") ? jsonio::require<DatasetRecord>(req, "record") : req.get<DatasetRecord>();
    const auto mode_name = jsonio::optional<std::string>(req, "mode").value_or("strict");
    if (mode_name != "strict" && mode_name != "lenient") {
      throw Error(ErrorCode::BadRequest, "mode must be strict or lenient", {{"mode", mode_name}});
    }
    std::unique_lock lock(datasets_mu_);
    auto& ds = dataset_locked(dataset_id);
    auto warnings = ds.check(record);
    if (mode_name == "strict" && !warnings.empty()) {
      const auto& w = warnings.front();
      throw Error(w.code, w.message, w.detail);
    }
    auto item = store_.append(ItemKind::Dataset, json{{"op", "add_record"},
                                                      {"dataset_id", dataset_id},
                                                      {"mode", mode_name},
                                                      {"record", record}});
    ds.add_record(std::move(record), ValidationMode::Lenient);
    return json{{"item", item}, {"warnings", warnings}};
  }

  json import_manifest(const std::string& dataset_id, const std::filesystem::path& manifest, bool lenient) {
    auto imported = import_corpus(manifest);
    json added = json::array();
    json rejected = json::array();
    for (const auto& r : imported.report.rejections) {
      rejected.push_back({{"row", r.row}, {"id", r.id}, {"code", to_string(r.code)}, {"message", r.message}});
    }
    for (const auto& rec : imported.dataset.records()) {
      try {
        json body = rec;
        body["mode"] = lenient ? "lenient" : "strict";
        add_dataset_record(dataset_id, body);
        added.push_back(rec.id);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) throw;
        rejected.push_back({{"id", rec.id}, {"code", to_string(e.code())}, {"message", e.what()}});
      }
    }
    return json{{"accepted", added}, {"rejected", rejected}};
  }

  json export_dataset(const std::string& dataset_id, const std::string& profile_name) const {
    const auto& prof = profile_from_string(profile_name);
    std::shared_lock lock(datasets_mu_);
    const auto& ds = dataset_locked(dataset_id);
    FinetuneConfig fc;
    fc.prompt_separator = cfg_.generation.prompt_separator;
    const auto records = export_finetune(ds, prof, fc);
    json rows = json::array();
    for (const auto& r : records) rows.push_back({{"prompt", r.prompt}, {"completion", r.completion}});
    return json{{"dataset_id", dataset_id},
                {"profile", std::string(to_string(prof.id))},
                {"records", rows},
                {"jsonl", render_finetune_jsonl(records, prof, fc)}};
  }

  json dataset_stats(const std::string& dataset_id) const {
    std::shared_lock lock(datasets_mu_);
    const auto& ds = dataset_locked(dataset_id);
    json hist = json::array();
    for (const auto& [g, n] : genre_distribution(ds)) hist.push_back({{"genre", g}, {"count", n}});
    std::size_t plots = 0;
    for (const auto& r : ds.records()) plots += r.kind == RecordKind::Plot;
    return json{{"dataset_id", dataset_id},
                {"name", ds.name()},
                {"records", ds.size()},
                {"plots", plots},
                {"scenes", ds.size() - plots},
                {"genres", hist}};
  }

  json list_datasets() const {
    std::shared_lock lock(datasets_mu_);
    json out = json::array();
    for (const auto& [id, ds] : datasets_) out.push_back({{"id", id}, {"name", ds.name()}, {"records", ds.size()}});
    return out;
  }

  json genres() const { return json{{"genres", GenreVocabulary().names()}}; }

  // --- evaluation ------------------------------------------------------

  MetricReport eval_report(const json& req) const {
    const auto cands = jsonio::require<std::vector<std::string>>(req, "candidates");
    const auto refs = jsonio::require<std::vector<std::string>>(req, "references");
    const auto lps = jsonio::optional<std::vector<std::vector<double>>>(req, "logprobs");
    return metric_report(cands, refs, lps);
  }

  StoredItem add_rating(const json& req) {
    const auto rating = req.get<LikertRating>();
    check_rating(rating);
    const auto target = store_.get(rating.item_id);
    if (target.kind != ItemKind::PlotGeneration && target.kind != ItemKind::SceneGeneration) {
      throw Error(ErrorCode::BadRequest, "ratings attach to generation items", {{"item_id", rating.item_id}});
    }
    return store_.append(ItemKind::Rating, rating);
  }

  /// kind filters by the rated item's kind: plot_generation or scene_generation.
  LikertSummary ratings_summary(const std::optional<std::string>& kind) const {
    std::optional<ItemKind> want;
    if (kind && !kind->empty()) {
      want = item_kind_from_string(*kind);
      if (!want) throw Error(ErrorCode::BadRequest, "unknown kind", {{"kind", *kind}});
    }
    std::vector<LikertRating> ratings;
    for (const auto& item : store_.all(ItemKind::Rating)) {
      auto r = item.payload.get<LikertRating>();
      if (want) {
        if (!store_.contains(r.item_id) || store_.get(r.item_id).kind != *want) continue;
      }
      ratings.push_back(std::move(r));
    }
    return likert_summary(ratings);
  }

  // --- items -----------------------------------------------------------

  StoredItem get_item(const std::string& id) const { return store_.get(id); }

  ItemPage list_items(const std::optional<std::string>& kind, const std::string& cursor, std::size_t limit) const {
    std::optional<ItemKind> k;
    if (kind && !kind->empty()) {
      k = item_kind_from_string(*kind);
      if (!k) throw Error(ErrorCode::BadRequest, "unknown kind", {{"kind", *kind}});
    }
    if (limit == 0 || limit > 500) throw Error(ErrorCode::BadRequest, "limit must be in [1, 500]", {{"limit", limit}});
    return store_.list(k, cursor, limit);
  }

  json health() const {
    return json{{"status", "ok"}, {"backend", backend_->identity()}, {"backend_reachable", backend_->reachable()}};
  }

 private:
  static json raw_json(const GenerationResult& r) {
    return json{{"text", r.text},
                {"token_logprobs", r.token_logprobs ? json(*r.token_logprobs) : json(nullptr)},
                {"backend_id", r.backend_id},
                {"elapsed_ms", r.elapsed_ms},
                {"hit_max_tokens", r.hit_max_tokens},
                {"stop_truncated", r.stop_truncated}};
  }

  static std::vector<Genre> canonical_genres(const std::vector<std::string>& in) {
    GenreVocabulary vocab;
    std::vector<Genre> out;
    for (const auto& g : in) {
      const auto c = vocab.canonical(g);
      if (!c) throw Error(ErrorCode::UnknownGenre, "genre not in the active vocabulary", {{"genre", g}});
      out.push_back(*c);
    }
    return out;
  }

  Dataset& dataset_locked(const std::string& id) {
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw Error(ErrorCode::NotFound, "no such dataset", {{"id", id}});
    return it->second;
  }
  const Dataset& dataset_locked(const std::string& id) const {
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw Error(ErrorCode::NotFound, "no such dataset", {{"id", id}});
    return it->second;
  }

  void replay_datasets() {
    for (const auto& item : store_.all(ItemKind::Dataset)) {
      const auto& p = item.payload;
      if (p["op"] == "create") {
        datasets_.emplace(item.id, Dataset(p["name"].get<std::string>()));
      } else {
        auto it = datasets_.find(p["dataset_id"].get<std::string>());
        if (it == datasets_.end()) continue;
        it->second.add_record(p["record"].get<DatasetRecord>(), ValidationMode::Lenient);
      }
    }
  }

  ServiceConfig cfg_;
  std::shared_ptr<const CompletionBackend> backend_;
  RetryPolicy retry_;
  Store store_;
  mutable std::shared_mutex datasets_mu_;
  std::map<std::string, Dataset> datasets_;
};

inline json page_json(const ItemPage& page) {
  return json{{"items", page.items}, {"next_cursor", page.next_cursor ? json(*page.next_cursor) : json(nullptr)}};
}

}  // namespace kurosawa
