// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kurosawa/kurosawa.hpp"

using namespace kurosawa;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = KUROSAWA_DATA_DIR;
const std::string kTestData = KUROSAWA_TEST_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string note;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.note.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  static int n = 0;
  auto p = fs::temp_directory_path() / ("kurosawa_accept_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
  fs::remove_all(p);
  return p;
}

// ---------------------------------------------------------------------------
// Brute-force metric oracle: n-grams as token vectors, LCS by memoized
// recursion, no shared code with the library.

namespace oracle {

using Gram = std::vector<std::string>;

std::map<Gram, int> grams(const TokenSeq& s, std::size_t n) {
  std::map<Gram, int> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Gram(s.begin() + i, s.begin() + i + n)];
  return out;
}

double bleu(const std::vector<TokenSeq>& c, const std::vector<TokenSeq>& r, int max_n) {
  double c_len = 0, r_len = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c_len += c[i].size();
    r_len += r[i].size();
  }
  if (c_len == 0) return 0.0;
  double log_sum = 0;
  for (int n = 1; n <= max_n; ++n) {
    double hit = 0, all = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      auto cg = grams(c[i], n), rg = grams(r[i], n);
      for (auto& [g, k] : cg) {
        all += k;
        hit += std::min(k, rg.count(g) ? rg[g] : 0);
      }
    }
    if (hit == 0) return 0.0;
    log_sum += std::log(hit / all) / max_n;
  }
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  return 100.0 * bp * std::exp(log_sum);
}

std::size_t lcs(const TokenSeq& a, const TokenSeq& b, std::size_t i, std::size_t j,
                std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  const auto key = std::make_pair(i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const std::size_t v = a[i] == b[j] ? 1 + lcs(a, b, i + 1, j + 1, memo)
                                     : std::max(lcs(a, b, i + 1, j, memo), lcs(a, b, i, j + 1, memo));
  return memo[key] = v;
}

double rouge(const std::vector<TokenSeq>& c, const std::vector<TokenSeq>& r) {
  double sum = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    const double l = lcs(c[i], r[i], 0, 0, memo);
    const double p = l / c[i].size(), q = l / r[i].size();
    sum += p + q > 0 ? 200.0 * p * q / (p + q) : 0.0;
  }
  return sum / c.size();
}

// Returns {distinct, repetition}; nullopt when no document has n tokens.
std::optional<std::pair<double, double>> diversity(const std::vector<TokenSeq>& docs, std::size_t n) {
  double d = 0, rep = 0;
  int eligible = 0;
  for (const auto& doc : docs) {
    if (doc.size() < n) continue;
    const auto g = grams(doc, n);
    int twice = 0;
    for (auto& [gram, k] : g) twice += k >= 2;
    d += static_cast<double>(g.size()) / (doc.size() - n + 1);
    rep += static_cast<double>(twice) / g.size();
    ++eligible;
  }
  if (!eligible) return std::nullopt;
  return std::make_pair(100.0 * d / eligible, 100.0 * rep / eligible);
}

}  // namespace oracle

Outcome metric_oracle() {
  std::mt19937_64 rng(20240611);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int mismatches = 0;
  for (int corpus = 0; corpus < 1000; ++corpus) {
    std::uniform_int_distribution<int> ndocs(1, 10), vocab(2, 12);
    const int v = vocab(rng);
    std::uniform_int_distribution<int> len(1, 50), sym(0, v - 1);
    std::vector<TokenSeq> c, r;
    for (int d = ndocs(rng); d > 0; --d) {
      TokenSeq x, y;
      for (int k = len(rng); k > 0; --k) x.push_back("w" + std::to_string(sym(rng)));
      for (int k = len(rng); k > 0; --k) y.push_back("w" + std::to_string(sym(rng)));
      c.push_back(std::move(x));
      r.push_back(std::move(y));
    }
    auto cmp = [&](double got, double want) {
      const double e = std::abs(got - want);
      worst = std::max(worst, e);
      if (e > 1e-9) ++mismatches;
    };
    for (int n : {2, 3, 4}) cmp(bleu_n(c, r, n), oracle::bleu(c, r, n));
    cmp(rouge_l_corpus(c, r), oracle::rouge(c, r));
    const auto div = oracle::diversity(c, 3);
    if (div) {
      cmp(distinct_n(c, 3), div->first);
      cmp(repetition_n(c, 3), div->second);
    } else {
      bool threw = false;
      try {
        distinct_n(c, 3);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::NoEligibleDocs;
      }
      if (!threw) ++mismatches;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mismatches == 0 && secs < 60.0, "corpora=1000 tol=1e-9 max_abs_err=" + fmt(worst) + " mismatches=" +
                                              std::to_string(mismatches) + " runtime_s=" + fmt(secs) + " (limit 60)"};
}

Outcome perplexity_identity() {
  double worst = 0.0;
  for (int v = 2; v <= 64; ++v) {
    for (std::size_t k : {1u, 10u, 977u}) {
      worst = std::max(worst, std::abs(perplexity(std::vector<double>(k, std::log(1.0 / v))) - v));
    }
  }
  return {worst <= 1e-9, "V=2..64 tol=1e-9 max_abs_err=" + fmt(worst)};
}

Outcome hand_cases() {
  const double b2 = bleu_n({tokenize("a b c d")}, {tokenize("a b x d")}, 2);
  const double rl = rouge_l(tokenize("a b c d"), tokenize("a c d e")).f;
  const double d3 = distinct_n({tokenize("a b a b a")}, 3);
  const double r3 = repetition_n({tokenize("a b a b a")}, 3);
  const bool ok = format_fixed(b2) == "50.00" && format_fixed(rl) == "75.00" && format_fixed(d3) == "66.67" &&
                  format_fixed(r3) == "50.00" && std::abs(std::stod(format_fixed(d3)) - 66.67) <= 0.01;
  return {ok, "BLEU-2=" + format_fixed(b2) + " ROUGE-L=" + format_fixed(rl) + " distinct-3=" + format_fixed(d3) +
                  " repetition-3=" + format_fixed(r3) + " tol=0.01 after 2-decimal rendering"};
}

// ---------------------------------------------------------------------------
// Round-trips

const std::vector<std::string> kWords{"rain", "Mara", "door,", "\"No.\"", "JOSÉ", "zoë", "it's", "—", "42",
                                      "(beat)", "INT.", "a<b", "x>y", "<", ">", "ok!", "...", "l'été", "Straße"};

std::string random_text(std::mt19937_64& rng, int min_words, int max_words) {
  std::uniform_int_distribution<int> n(min_words, max_words);
  std::uniform_int_distribution<std::size_t> w(0, kWords.size() - 1);
  std::string out;
  for (int k = n(rng); k > 0; --k) out += (out.empty() ? "" : " ") + kWords[w(rng)];
  return out;
}

Outcome scene_round_trip() {
  std::mt19937_64 rng(7);
  const std::array<ElementKind, 4> kinds{ElementKind::Slugline, ElementKind::Action, ElementKind::CharacterCue,
                                         ElementKind::Dialogue};
  int failed = 0;
  for (int i = 0; i < 10000; ++i) {
    Scene s;
    std::uniform_int_distribution<int> count(1, 12), kind(0, 3);
    for (int k = count(rng); k > 0; --k) s.elements.push_back({kinds[kind(rng)], random_text(rng, 1, 20), {}});
    try {
      const auto back = decode_tagged(encode_tagged(s), DecodeMode::Lenient).scene;
      if (!equivalent(back, s)) ++failed;
    } catch (const Error&) {
      ++failed;
    }
  }
  return {failed == 0, "scenes=10000 failures=" + std::to_string(failed)};
}

Outcome act_round_trip() {
  std::mt19937_64 rng(11);
  int failed = 0;
  for (int i = 0; i < 10000; ++i) {
    std::array<std::string, 4> acts;
    for (auto& a : acts) a = random_text(rng, 1, 40);
    const std::string plot = acts[0] + " " + acts[1] + " " + acts[2] + " " + acts[3];
    const ActBoundaries b{{acts[0].size(), acts[0].size() + 1 + acts[1].size(),
                           acts[0].size() + 1 + acts[1].size() + 1 + acts[2].size()}};
    try {
      const auto parsed = parse_acts(insert_act_tags(plot, b));
      if (parsed != PlotActs{acts[0], acts[1], acts[2], acts[3]}) ++failed;
    } catch (const Error&) {
      ++failed;
    }
  }
  return {failed == 0, "plots=10000 failures=" + std::to_string(failed)};
}

// ---------------------------------------------------------------------------

Outcome parser_corpus() {
  const auto golden_text = read_file(kTestData + "/corpus_golden.json");
  const auto golden = json::parse(golden_text);
  nlohmann::ordered_json regenerated = nlohmann::ordered_json::array();
  std::size_t files = 0, scenes = 0, unclassified = 0, count_mismatch = 0;
  for (const auto& g : golden) {
    const auto file = g["file"].get<std::string>();
    const auto text = read_file(kDataDir + "/corpus/" + file);
    const auto r = parse_script(text);
    ++files;
    scenes += r.script.scenes.size();

    // Every content line is noise, a dropped transition, or inside some element.
    const auto lines = split_lines(text);
    const auto classes = classify_lines(lines, LayoutConfig{});
    std::vector<bool> covered(lines.size(), false);
    std::size_t sluglines = 0;
    for (const auto& s : r.script.scenes) {
      for (const auto& e : s.elements) {
        if (e.kind == ElementKind::Slugline) ++sluglines;
        for (auto l = e.line_span.start; l < e.line_span.end && l < lines.size(); ++l) covered[l] = true;
      }
    }
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const auto c = classes[l];
      if (c == LineClass::Blank || c == LineClass::Noise || c == LineClass::Transition) continue;
      if (!covered[l]) ++unclassified;
    }
    if (sluglines != r.script.scenes.size()) ++count_mismatch;

    nlohmann::ordered_json jf;
    jf["file"] = file;
    jf["scenes"] = nlohmann::ordered_json::array();
    for (const auto& s : r.script.scenes) {
      nlohmann::ordered_json els = nlohmann::ordered_json::array();
      for (const auto& e : s.elements) {
        nlohmann::ordered_json je;
        je["kind"] = std::string(to_string(e.kind));
        je["text"] = e.text;
        je["line_span"] = {e.line_span.start, e.line_span.end};
        els.push_back(je);
      }
      nlohmann::ordered_json js;
      js["elements"] = els;
      jf["scenes"].push_back(js);
    }
    jf["warnings"] = nlohmann::ordered_json::array();
    for (const auto& w : r.warnings) jf["warnings"].push_back(std::string(to_string(w.code)));
    regenerated.push_back(jf);
  }
  const auto dumped = regenerated.dump(1) + "\n";
  const bool byte_equal = dumped == golden_text && dumped == regenerated.dump(1) + "\n";
  const bool ok = files >= 5 && scenes >= 100 && unclassified == 0 && count_mismatch == 0 && byte_equal;
  return {ok, "files=" + std::to_string(files) + " scenes=" + std::to_string(scenes) + " unclassified_lines=" +
                  std::to_string(unclassified) + " scene/slugline_mismatches=" + std::to_string(count_mismatch) +
                  " golden_byte_equal=" + (byte_equal ? "yes" : "no")};
}

Outcome profile_table() {
  struct Want {
    const char* name;
    bool annotated;
    StorylineKind story;
    bool genres;
  };
  const std::vector<Want> want{{"O", false, StorylineKind::Short, false},
                               {"AS", true, StorylineKind::Short, false},
                               {"AL", true, StorylineKind::Long, false},
                               {"ASG", true, StorylineKind::Short, true},
                               {"ALG", true, StorylineKind::Long, true}};
  int bad = 0;
  for (const auto& w : want) {
    const auto& p = profile_from_string(w.name);
    if (p.annotated_output != w.annotated || p.storyline_kind != w.story || p.genres_included != w.genres) ++bad;
    const std::vector<Genre> g{"Drama", "War"};
    const auto prompt = build_prompt("A storyline.", w.genres ? g : std::vector<Genre>{}, p).prompt;
    const std::string expect = std::string(w.genres ? "Drama, War. " : "") + "A storyline.\n\n###\n\n";
    if (prompt != expect) ++bad;
  }
  const GenerationConfig c;
  const bool defaults = c.temperature == 0.7 && c.top_p == 1.0 && c.frequency_penalty == 0.1 &&
                        c.presence_penalty == 0.1 && c.max_tokens == 900;
  return {bad == 0 && defaults && kProfiles.size() == 5,
          "profiles=5 mismatches=" + std::to_string(bad) + " defaults(temperature,top_p,freq,pres,max_tokens)=(" +
              fmt(c.temperature) + "," + fmt(c.top_p) + "," + fmt(c.frequency_penalty) + "," +
              fmt(c.presence_penalty) + "," + std::to_string(c.max_tokens) + ")"};
}

Outcome end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  const auto dir = temp_dir("e2e");
  ServiceConfig cfg;
  cfg.data_dir = dir;
  cfg.mock_bank = kDataDir + "/mock_bank";
  auto backend = std::shared_ptr<const CompletionBackend>(make_backend(cfg));
  const auto& mock = dynamic_cast<const MockBackend&>(*backend);
  const auto reqs = json::parse(read_file(kTestData + "/mock_requests.json"));
  std::size_t done = 0, wrong = 0;
  std::string wrong_names;
  {
    Workbench wb(cfg, backend);
    for (const auto& fx : mock.bank()) {
      json req = reqs.at(fx.name);
      req["config"] = {{"model_ref", "fixture:" + fx.name}};
      const auto item = fx.kind == RecordKind::Plot ? wb.generate_plot(req) : wb.generate_scene(req);
      const auto fetched = wb.get_item(item.id);
      if (json(fetched) != json(item)) ++wrong;
      const auto rep = fetched.payload["report"].get<ValidationReport>();
      std::set<ErrorCode> got;
      for (const auto& i : rep.errors) got.insert(i.code);
      for (const auto& i : rep.warnings) got.insert(i.code);
      // Re-validate the stored raw text independently of the stored report.
      const auto raw = fetched.payload["raw"]["text"].get<std::string>();
      if (fx.kind == RecordKind::Plot && profile(*fx.profile).annotated_output) {
        const auto again = validate_annotated_plot(raw);
        if (again.ok() != fetched.payload["acts"].is_object()) ++wrong;
      } else if (fx.kind == RecordKind::Scene && rep.ok()) {
        const auto again = decode_tagged(raw, DecodeMode::Lenient);
        if (json(again.scene) != fetched.payload["scene"]) ++wrong;
      }
      if (got != fx.expect) {
        ++wrong;
        wrong_names += " " + fx.name;
      }
      wb.add_rating(json{{"item_id", item.id},
                         {"rater_id", "acceptance"},
                         {"scores", {{"fluency", 4}, {"coherence", 3}, {"relevance", 5}, {"likability", 4}, {"creativity", 2}}}});
      ++done;
    }
    const auto all = wb.ratings_summary(std::nullopt);
    if (all.n_ratings != mock.bank().size() || all[LikertFeature::Relevance].mean != 5.0) ++wrong;
  }
  // Everything is still there after a restart.
  {
    Workbench wb(cfg, backend);
    if (wb.ratings_summary(std::nullopt).n_ratings != mock.bank().size()) ++wrong;
    if (wb.list_items("plot_generation", "", 500).items.size() + wb.list_items("scene_generation", "", 500).items.size() !=
        mock.bank().size())
      ++wrong;
  }
  fs::remove_all(dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {wrong == 0 && done == mock.bank().size() && secs < 120.0,
          "fixtures=" + std::to_string(done) + " mismatches=" + std::to_string(wrong) + wrong_names +
              " runtime_s=" + fmt(secs) + " (limit 120) backend=mock"};
}

// A child appends continuously and reports each acknowledged id; it is
// SIGKILLed at a random point, then the parent reopens the store.
Outcome durability() {
  std::mt19937_64 rng(99);
  std::size_t lost = 0, acked_total = 0, reopen_failures = 0;
  for (int point = 0; point < 100; ++point) {
    const auto dir = temp_dir("crash");
    {
      Store warm(dir);
      warm.append(ItemKind::Dataset, json{{"op", "create"}, {"name", "warm"}});
    }
    int fds[2];
    if (::pipe(fds) != 0) return {false, "pipe failed"};
    const pid_t pid = ::fork();
    if (pid < 0) return {false, "fork failed"};
    if (pid == 0) {
      ::close(fds[0]);
      Store s(dir);
      std::mt19937_64 crng(static_cast<std::uint64_t>(point));
      for (int i = 0;; ++i) {
        json payload;
        ItemKind kind;
        switch (crng() % 3) {
          case 0:
            kind = ItemKind::Rating;
            payload = json{{"item_id", "x"},
                           {"scores", {{"fluency", 1}, {"coherence", 2}, {"relevance", 3}, {"likability", 4}, {"creativity", 5}}}};
            break;
          case 1:
            kind = ItemKind::Dataset;
            payload = json{{"op", "create"}, {"name", std::string(crng() % 2000, 'n')}};
            break;
          default:
            kind = ItemKind::PlotGeneration;
            payload = json{{"raw", {{"text", std::string(crng() % 5000, 't')}}}, {"report", json::object()}};
        }
        const auto line = s.append(kind, payload).id + "\n";
        if (::write(fds[1], line.data(), line.size()) < 0) ::_exit(1);
      }
    }
    ::close(fds[1]);
    // Kill either after a random number of acknowledgements or after a random delay.
    std::string acked;
    char buf[4096];
    if (rng() % 2) {
      const std::size_t target = 27 * (1 + rng() % 60);
      while (acked.size() < target) {
        const auto n = ::read(fds[0], buf, sizeof buf);
        if (n <= 0) break;
        acked.append(buf, static_cast<std::size_t>(n));
      }
    } else {
      ::usleep(static_cast<useconds_t>(rng() % 30000));
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    for (;;) {
      const auto n = ::read(fds[0], buf, sizeof buf);
      if (n <= 0) break;
      acked.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fds[0]);
    try {
      Store s(dir);
      for (const auto& id : split_lines(acked)) {
        if (id.size() != 26) continue;  // a partial id line was never a full acknowledgement
        ++acked_total;
        if (!s.contains(id)) ++lost;
      }
      s.append(ItemKind::Dataset, json{{"op", "create"}, {"name", "after"}});
    } catch (const std::exception&) {
      ++reopen_failures;
    }
    fs::remove_all(dir);
  }
  return {lost == 0 && reopen_failures == 0 && acked_total > 0,
          "crash_points=100 acknowledged=" + std::to_string(acked_total) + " lost=" + std::to_string(lost) +
              " reopen_failures=" + std::to_string(reopen_failures)};
}

Outcome export_conformance() {
  const auto ds = dataset_from_jsonl(read_file(kTestData + "/export20.jsonl"), "export20");
  int bad = 0;
  for (const auto& p : kProfiles) {
    const auto first = render_finetune_jsonl(export_finetune(ds, p), p);
    const auto second = render_finetune_jsonl(export_finetune(ds, p), p);
    const auto golden = read_file(kTestData + "/export20/" + std::string(to_string(p.id)) + ".jsonl");
    if (first != second || first != golden) ++bad;
    const auto lines = split_lines(first);
    std::size_t rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto j = json::parse(lines[i]);
      const auto completion = j["completion"].get<std::string>();
      const auto& rec = ds.records()[rows++];
      if (!completion.starts_with(" ") || !completion.ends_with(kDefaultStopSequence)) {
        ++bad;
        continue;
      }
      const auto body = completion.substr(1, completion.size() - 1 - kDefaultStopSequence.size());
      if (p.annotated_output) {
        if (parse_acts(body) != parse_acts(rec.target_text)) ++bad;
      } else {
        bool has_tag = false;
        for (auto t : kActTags) has_tag |= body.find(t) != std::string::npos;
        if (has_tag || tokenize(body) != tokenize(strip_act_tags(rec.target_text))) ++bad;
      }
      const auto prompt = j["prompt"].get<std::string>();
      const auto story = p.storyline_kind == StorylineKind::Long ? *rec.long_storyline : rec.storyline;
      if (prompt.find(story) == std::string::npos || !prompt.ends_with(kDefaultPromptSeparator)) ++bad;
    }
    if (rows != ds.size()) ++bad;
  }
  return {bad == 0 && ds.size() == 20,
          "records=" + std::to_string(ds.size()) + " profiles=5 runs=2 mismatches=" + std::to_string(bad)};
}

}  // namespace

int main() {
  report("metric-oracle-equivalence", metric_oracle);
  report("perplexity-identity", perplexity_identity);
  report("hand-computed-metric-cases", hand_cases);
  report("tag-round-trips", [] {
    const auto scenes = scene_round_trip();
    const auto acts = act_round_trip();
    return Outcome{scenes.pass && acts.pass, scenes.note + "; act " + acts.note};
  });
  report("parser-corpus", parser_corpus);
  report("profile-table-and-config-defaults", profile_table);
  report("end-to-end-mock", end_to_end);
  report("durability-kill-restart", durability);
  report("export-conformance", export_conformance);
  std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
