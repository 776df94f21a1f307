// kurosawa: command-line front end for the workbench.
// Exit codes: 0 success, 1 validation failure, 2 backend failure.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kurosawa/kurosawa.hpp"

using namespace kurosawa;

namespace {

struct Globals {
  std::string config_path;
  std::string data_dir;
  std::string backend;
  std::string mock_bank;
  std::string format = "text";
};

ServiceConfig load_config(const Globals& g) {
  ServiceConfig cfg = g.config_path.empty() ? ServiceConfig{} : ServiceConfig::from_file(g.config_path);
  cfg.apply_env();
  if (!g.data_dir.empty()) cfg.data_dir = g.data_dir;
  if (!g.backend.empty()) cfg.backend = g.backend;
  if (!g.mock_bank.empty()) cfg.mock_bank = g.mock_bank;
  return cfg;
}

std::unique_ptr<Workbench> open_workbench(const Globals& g) {
  auto cfg = load_config(g);
  std::shared_ptr<const CompletionBackend> backend = make_backend(cfg);
  return std::make_unique<Workbench>(std::move(cfg), std::move(backend));
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_file(path);
}

json parse_json_input(const std::string& path) {
  try {
    return json::parse(read_input(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("input is not valid JSON: ") + e.what(), {{"path", path}});
  }
}

void print_issues(const std::vector<Issue>& issues) {
  for (const auto& i : issues) {
    std::cerr << (i.severity == Severity::Error ? "error" : "warning") << ": " << to_string(i.code) << ": "
              << i.message;
    if (!i.detail.empty()) std::cerr << " " << i.detail.dump();
    std::cerr << "\n";
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      auto t = std::string(trim(cur));
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

// One document per line, tokens separated by whitespace.
std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  for (auto& l : split_lines(read_input(path))) {
    if (!trim(l).empty()) out.push_back(l);
  }
  return out;
}

std::vector<std::vector<double>> read_logprob_lines(const std::string& path) {
  std::vector<std::vector<double>> out;
  for (const auto& line : read_lines(path)) {
    std::vector<double> row;
    for (const auto& tok : split_whitespace(line)) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadRequest, "logprob is not a number", {{"token", tok}});
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

void print_item(const StoredItem& item, const Globals& g) {
  if (g.format == "json") {
    std::cout << json(item).dump(2) << "\n";
  } else {
    std::cout << item.id << "\t" << to_string(item.kind) << "\t" << item.created_at << "\n";
  }
}

int report_exit(const ValidationReport& r) {
  print_issues(r.errors);
  print_issues(r.warnings);
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scriptwriter workbench: parsing, plot annotation, datasets, generation, evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--data-dir", g.data_dir, "Store directory");
  app.add_option("--backend", g.backend, "Completion backend")->check(CLI::IsMember({"mock", "live"}));
  app.add_option("--mock-bank", g.mock_bank, "Mock fixture directory");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::function<int()> action;

  // parse
  auto* parse = app.add_subcommand("parse", "Parse a plain-text screenplay");
  std::string parse_in, parse_title;
  bool parse_tagged = false;
  parse->add_option("file", parse_in, "Screenplay file or -")->required();
  parse->add_option("--title", parse_title);
  parse->add_flag("--tagged", parse_tagged, "Print tagged scenes instead of a summary");
  parse->callback([&] {
    action = [&] {
      const auto cfg = load_config(g);
      const auto r = parse_script(read_input(parse_in), cfg.layout, parse_title);
      print_issues(r.warnings);
      if (g.format == "json") {
        std::cout << json{{"script", r.script}, {"warnings", r.warnings}}.dump(2) << "\n";
      } else if (parse_tagged) {
        for (std::size_t i = 0; i < r.script.scenes.size(); ++i) {
          if (i) std::cout << "\n";
          std::cout << encode_tagged(r.script.scenes[i]) << "\n";
        }
      } else {
        std::size_t n = 0;
        for (const auto& s : r.script.scenes) n += s.elements.size();
        std::cout << r.script.scenes.size() << " scenes, " << n << " elements\n";
        for (const auto& s : r.script.scenes) std::cout << "  " << s.elements.front().text << "\n";
      }
      return 0;
    };
  });

  // encode
  auto* encode = app.add_subcommand("encode", "Scene JSON to tagged text");
  std::string encode_in;
  encode->add_option("file", encode_in, "Scene JSON file or -")->required();
  encode->callback([&] {
    action = [&] {
      const auto j = parse_json_input(encode_in);
      const auto scene = j.contains("scene") ? j["scene"].get<Scene>() : j.get<Scene>();
      std::cout << encode_tagged(scene) << "\n";
      return 0;
    };
  });

  // decode
  auto* decode = app.add_subcommand("decode", "Tagged text to a scene");
  std::string decode_in;
  bool decode_strict = false, decode_render = false;
  decode->add_option("file", decode_in, "Tagged scene file or -")->required();
  decode->add_flag("--strict", decode_strict, "Reject recoverable defects");
  decode->add_flag("--render", decode_render, "Print formatted screenplay text");
  decode->callback([&] {
    action = [&] {
      const auto r = decode_tagged(read_input(decode_in), decode_strict ? DecodeMode::Strict : DecodeMode::Lenient);
      print_issues(r.warnings);
      if (decode_render) {
        std::cout << render_screenplay(r.scene) << "\n";
      } else {
        std::cout << json{{"scene", r.scene}, {"warnings", r.warnings}}.dump(2) << "\n";
      }
      return 0;
    };
  });

  // validate-plot
  auto* vplot = app.add_subcommand("validate-plot", "Check a 4-act annotated plot");
  std::string vplot_in;
  vplot->add_option("file", vplot_in, "Annotated plot file or -")->required();
  vplot->callback([&] {
    action = [&] {
      const auto r = validate_annotated_plot(read_input(vplot_in));
      if (g.format == "json") std::cout << json(r).dump(2) << "\n";
      else if (r.ok()) std::cout << "ok\n";
      return report_exit(r);
    };
  });

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Dataset operations");
  dataset->require_subcommand(1);
  auto* ds_create = dataset->add_subcommand("create", "Create a dataset");
  std::string ds_name;
  ds_create->add_option("name", ds_name)->required();
  ds_create->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      print_item(wb->create_dataset(json{{"name", ds_name}}), g);
      return 0;
    };
  });
  auto* ds_add = dataset->add_subcommand("add", "Add records from a JSON file or a corpus manifest");
  std::string ds_id, ds_record, ds_manifest;
  bool ds_lenient = false;
  ds_add->add_option("dataset_id", ds_id)->required();
  auto* rec_opt = ds_add->add_option("--record", ds_record, "Record JSON file (object or array)");
  auto* man_opt = ds_add->add_option("--manifest", ds_manifest, "Corpus manifest (TSV/CSV)");
  rec_opt->excludes(man_opt);
  ds_add->add_flag("--lenient", ds_lenient, "Accept records with warnings");
  ds_add->callback([&] {
    action = [&]() -> int {
      auto wb = open_workbench(g);
      if (!ds_manifest.empty()) {
        const auto r = wb->import_manifest(ds_id, ds_manifest, ds_lenient);
        if (g.format == "json") {
          std::cout << r.dump(2) << "\n";
        } else {
          std::cout << r["accepted"].size() << " accepted, " << r["rejected"].size() << " rejected\n";
          for (const auto& x : r["rejected"]) std::cerr << "rejected " << x.dump() << "\n";
        }
        return r["rejected"].empty() ? 0 : 1;
      }
      if (ds_record.empty()) throw Error(ErrorCode::BadRequest, "one of --record or --manifest is required");
      auto j = parse_json_input(ds_record);
      if (!j.is_array()) j = json::array({j});
      int rc = 0;
      for (auto rec : j) {
        rec["mode"] = ds_lenient ? "lenient" : "strict";
        try {
          const auto r = wb->add_dataset_record(ds_id, rec);
          print_issues(r["warnings"].get<std::vector<Issue>>());
          print_item(r["item"].get<StoredItem>(), g);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::NotFound) throw;
          std::cerr << "error: " << e.what() << "\n";
          rc = 1;
        }
      }
      return rc;
    };
  });
  auto* ds_export = dataset->add_subcommand("export", "Write fine-tuning JSONL for a profile");
  std::string ds_profile, ds_out;
  ds_export->add_option("dataset_id", ds_id)->required();
  ds_export->add_option("--profile", ds_profile)->required()->check(CLI::IsMember({"O", "AS", "AL", "ASG", "ALG"}));
  ds_export->add_option("--out", ds_out, "Output file (default stdout)");
  ds_export->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      const auto r = wb->export_dataset(ds_id, ds_profile);
      const auto text = g.format == "json" ? r.dump(2) + "\n" : r["jsonl"].get<std::string>();
      if (ds_out.empty()) std::cout << text;
      else write_file(ds_out, text);
      return 0;
    };
  });
  auto* ds_stats = dataset->add_subcommand("stats", "Genre histogram");
  ds_stats->add_option("dataset_id", ds_id)->required();
  ds_stats->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      const auto r = wb->dataset_stats(ds_id);
      if (g.format == "json") {
        std::cout << r.dump(2) << "\n";
      } else {
        std::cout << r["name"].get<std::string>() << ": " << r["records"] << " records\n";
        for (const auto& h : r["genres"]) std::cout << h["genre"].get<std::string>() << "\t" << h["count"] << "\n";
      }
      return 0;
    };
  });
  auto* ds_list = dataset->add_subcommand("list", "List datasets");
  ds_list->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      const auto r = wb->list_datasets();
      if (g.format == "json") std::cout << r.dump(2) << "\n";
      else
        for (const auto& d : r) std::cout << d["id"].get<std::string>() << "\t" << d["name"].get<std::string>() << "\t" << d["records"] << "\n";
      return 0;
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Automatic metrics over candidate/reference files (one document per line)");
  std::string ev_c, ev_r, ev_lp;
  eval->add_option("--candidates", ev_c)->required();
  eval->add_option("--references", ev_r)->required();
  eval->add_option("--logprobs", ev_lp, "Per-candidate token logprobs, one line each");
  eval->callback([&] {
    action = [&] {
      std::optional<std::vector<std::vector<double>>> lps;
      if (!ev_lp.empty()) lps = read_logprob_lines(ev_lp);
      const auto r = metric_report(read_lines(ev_c), read_lines(ev_r), lps);
      if (g.format == "json") std::cout << json(r).dump(2) << "\n";
      else std::cout << render_report(r);
      return 0;
    };
  });

  // generate
  auto* gen = app.add_subcommand("generate", "Run the generation pipeline");
  gen->require_subcommand(1);
  auto* gen_plot = gen->add_subcommand("plot", "Storyline to plot");
  std::string gp_story, gp_long, gp_genres, gp_profile = "ASG", gp_fixture;
  std::uint64_t gp_seed = 0;
  gen_plot->add_option("--storyline", gp_story)->required();
  gen_plot->add_option("--long-storyline", gp_long);
  gen_plot->add_option("--genres", gp_genres, "Comma-separated genres");
  gen_plot->add_option("--profile", gp_profile)->check(CLI::IsMember({"O", "AS", "AL", "ASG", "ALG"}));
  gen_plot->add_option("--seed", gp_seed);
  gen_plot->add_option("--model-ref", gp_fixture, "Model reference (mock: fixture:<name>)");
  gen_plot->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      json req{{"storyline", gp_story}, {"genres", split_csv(gp_genres)}, {"profile", gp_profile}};
      if (!gp_long.empty()) req["long_storyline"] = gp_long;
      req["config"] = json{{"seed", gp_seed}};
      if (!gp_fixture.empty()) req["config"]["model_ref"] = gp_fixture;
      const auto item = wb->generate_plot(req);
      const auto report = item.payload["report"].get<ValidationReport>();
      if (g.format == "json") {
        std::cout << json(item).dump(2) << "\n";
      } else {
        std::cout << "item " << item.id << "\n";
        if (item.payload["acts"].is_object()) {
          const auto acts = item.payload["acts"].get<PlotActs>();
          const char* labels[] = {"Act 1", "Act 2A", "Act 2B", "Act 3"};
          const auto parts = acts.acts();
          for (std::size_t i = 0; i < 4; ++i) std::cout << "\n[" << labels[i] << "]\n" << *parts[i] << "\n";
        } else {
          std::cout << "\n" << item.payload["raw"]["text"].get<std::string>() << "\n";
        }
      }
      return report_exit(report);
    };
  });
  auto* gen_scene = gen->add_subcommand("scene", "Scene description to scene");
  std::string gs_desc, gs_fixture;
  std::uint64_t gs_seed = 0;
  gen_scene->add_option("--description", gs_desc)->required();
  gen_scene->add_option("--seed", gs_seed);
  gen_scene->add_option("--model-ref", gs_fixture, "Model reference (mock: fixture:<name>)");
  gen_scene->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      json req{{"description", gs_desc}, {"config", {{"seed", gs_seed}}}};
      if (!gs_fixture.empty()) req["config"]["model_ref"] = gs_fixture;
      const auto item = wb->generate_scene(req);
      const auto report = item.payload["report"].get<ValidationReport>();
      if (g.format == "json") {
        std::cout << json(item).dump(2) << "\n";
      } else {
        std::cout << "item " << item.id << "\n\n" << render_screenplay(item.payload["scene"].get<Scene>()) << "\n";
      }
      return report_exit(report);
    };
  });

  // ratings
  auto* ratings = app.add_subcommand("ratings", "Human Likert ratings");
  ratings->require_subcommand(1);
  auto* r_add = ratings->add_subcommand("add", "Record a rating");
  std::string r_item, r_rater = "anonymous", r_scores;
  r_add->add_option("--item", r_item)->required();
  r_add->add_option("--rater", r_rater);
  r_add->add_option("--scores", r_scores, "fluency,coherence,relevance,likability,creativity")->required();
  r_add->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      const auto parts = split_csv(r_scores);
      if (parts.size() != kLikertFeatures.size()) {
        throw Error(ErrorCode::BadRequest, "expected five comma-separated scores", {{"got", parts.size()}});
      }
      json scores = json::object();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        int v = 0;
        try {
          v = std::stoi(parts[i]);
        } catch (const std::exception&) {
          throw Error(ErrorCode::OutOfRangeScore, "score is not an integer", {{"score", parts[i]}});
        }
        scores[std::string(to_string(kLikertFeatures[i]))] = v;
      }
      print_item(wb->add_rating(json{{"item_id", r_item}, {"rater_id", r_rater}, {"scores", scores}}), g);
      return 0;
    };
  });
  auto* r_sum = ratings->add_subcommand("summary", "Per-feature box statistics");
  std::string r_kind;
  r_sum->add_option("--kind", r_kind)->check(CLI::IsMember({"plot_generation", "scene_generation"}));
  r_sum->callback([&] {
    action = [&] {
      auto wb = open_workbench(g);
      const auto s = wb->ratings_summary(r_kind.empty() ? std::nullopt : std::optional(r_kind));
      if (g.format == "json") {
        std::cout << json(s).dump(2) << "\n";
      } else {
        std::cout << "ratings: " << s.n_ratings << "\nfeature\tmean\tmedian\tq1\tq3\tmin\tmax\n";
        for (auto f : kLikertFeatures) {
          const auto& b = s[f];
          std::cout << to_string(f) << "\t" << format_fixed(b.mean) << "\t" << format_fixed(b.median) << "\t"
                    << format_fixed(b.q1) << "\t" << format_fixed(b.q3) << "\t" << format_fixed(b.min) << "\t"
                    << format_fixed(b.max) << "\n";
        }
      }
      return 0;
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string listen;
  serve->add_option("--listen", listen, "host:port");
  serve->callback([&] {
    action = [&] {
      auto cfg = load_config(g);
      if (!listen.empty()) cfg.listen_address = listen;
      std::shared_ptr<const CompletionBackend> backend = make_backend(cfg);
      Workbench wb(cfg, backend);
      HttpServer server(wb);
      std::cerr << "listening on " << cfg.listen_address << " (data " << cfg.data_dir.string() << ", backend "
                << backend->identity() << ")\n";
      if (!server.listen(cfg.host(), cfg.port())) {
        throw Error(ErrorCode::IoError, "cannot bind listen address", {{"listen_address", cfg.listen_address}});
      }
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    return action();
  } catch (const Error& e) {
    if (g.format == "json") std::cout << error_body(e).dump(2) << "\n";
    std::cerr << "error: " << e.what();
    if (!e.detail().empty()) std::cerr << " " << e.detail().dump();
    std::cerr << "\n";
    return is_backend_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
