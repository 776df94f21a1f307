#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kurosawa/error.hpp"
#include "kurosawa/text.hpp"

namespace kurosawa {

namespace detail {

// Length-prefixed concatenation, injective for arbitrary token contents.
inline std::string ngram_key(const TokenSeq& seq, std::size_t at, std::size_t n) {
  std::string key;
  for (std::size_t k = 0; k < n; ++k) {
    key += std::to_string(seq[at + k].size());
    key.push_back(':');
    key += seq[at + k];
  }
  return key;
}

inline std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSeq& seq, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[ngram_key(seq, i, n)];
  return counts;
}

}  // namespace detail

/// Corpus BLEU with clipped n-gram precisions pooled over all pairs,
/// uniform weights, brevity penalty, no smoothing. Returns a percentage.
inline double bleu_n(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references, int max_n) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, "candidate and reference counts differ",
                {{"candidates", candidates.size()}, {"references", references.size()}});
  }
  if (candidates.empty()) throw Error(ErrorCode::EmptyCorpus, "no candidates");
  if (max_n < 1 || max_n > 4) throw Error(ErrorCode::InvalidArgument, "max_n must be in [1, 4]", {{"max_n", max_n}});

  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
  }
  if (cand_len == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    std::size_t matched = 0, total = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto cand = detail::ngram_counts(candidates[i], n);
      const auto ref = detail::ngram_counts(references[i], n);
      for (const auto& [gram, count] : cand) {
        total += count;
        const auto it = ref.find(gram);
        if (it != ref.end()) matched += std::min(count, it->second);
      }
    }
    if (matched == 0 || total == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  const double bp = cand_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return 100.0 * bp * std::exp(log_sum / max_n);
}

inline std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline RougeScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorCode::EmptySequence, "ROUGE-L needs non-empty sequences",
                {{"candidate", candidate.size()}, {"reference", reference.size()}});
  }
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  const double p = l / static_cast<double>(candidate.size());
  const double r = l / static_cast<double>(reference.size());
  const double f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return {100.0 * p, 100.0 * r, 100.0 * f};
}

// Arithmetic mean of per-pair F over the corpus.
inline double rouge_l_corpus(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, "candidate and reference counts differ",
                {{"candidates", candidates.size()}, {"references", references.size()}});
  }
  if (candidates.empty()) throw Error(ErrorCode::EmptyCorpus, "no candidates");
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge_l(candidates[i], references[i]).f;
  return sum / static_cast<double>(candidates.size());
}

/// exp of the mean negative natural-log token probability.
inline double perplexity(const std::vector<double>& token_logprobs) {
  if (token_logprobs.empty()) throw Error(ErrorCode::EmptyList, "no token log-probabilities");
  double sum = 0.0;
  for (std::size_t i = 0; i < token_logprobs.size(); ++i) {
    const double lp = token_logprobs[i];
    if (std::isnan(lp)) throw Error(ErrorCode::InvalidArgument, "log-probability is NaN", {{"index", i}});
    if (lp > 0.0) throw Error(ErrorCode::PositiveLogProb, "log-probability above zero", {{"index", i}, {"value", lp}});
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

namespace detail {

template <typename PerDoc>
double mean_over_eligible(const std::vector<TokenSeq>& docs, int n, PerDoc per_doc) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1", {{"n", n}});
  double sum = 0.0;
  std::size_t eligible = 0;
  for (const auto& doc : docs) {
    if (doc.size() < static_cast<std::size_t>(n)) continue;
    sum += per_doc(ngram_counts(doc, n), doc.size() - n + 1);
    ++eligible;
  }
  if (eligible == 0) throw Error(ErrorCode::NoEligibleDocs, "no document has enough tokens", {{"n", n}});
  return 100.0 * sum / static_cast<double>(eligible);
}

}  // namespace detail

// Per document: unique n-gram types over n-gram tokens; mean over documents.
inline double distinct_n(const std::vector<TokenSeq>& docs, int n) {
  return detail::mean_over_eligible(docs, n, [](const auto& counts, std::size_t tokens) {
    return static_cast<double>(counts.size()) / static_cast<double>(tokens);
  });
}

// Per document: types seen at least twice over all types; mean over documents.
inline double repetition_n(const std::vector<TokenSeq>& docs, int n) {
  return detail::mean_over_eligible(docs, n, [](const auto& counts, std::size_t) {
    std::size_t repeated = 0;
    for (const auto& [gram, c] : counts)
      if (c >= 2) ++repeated;
    return static_cast<double>(repeated) / static_cast<double>(counts.size());
  });
}

inline std::string format_fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Human ratings

enum class LikertFeature { Fluency, Coherence, Relevance, Likability, Creativity };

inline constexpr std::array<LikertFeature, 5> kLikertFeatures{LikertFeature::Fluency, LikertFeature::Coherence,
                                                              LikertFeature::Relevance, LikertFeature::Likability,
                                                              LikertFeature::Creativity};

inline std::string_view to_string(LikertFeature f) {
  switch (f) {
    case LikertFeature::Fluency: return "fluency";
    case LikertFeature::Coherence: return "coherence";
    case LikertFeature::Relevance: return "relevance";
    case LikertFeature::Likability: return "likability";
    case LikertFeature::Creativity: return "creativity";
  }
  return "fluency";
}

// 1 strongly disagree, 2 disagree, 3 neutral, 4 agree, 5 strongly agree.
struct LikertRating {
  std::string item_id;
  std::string rater_id;
  std::array<int, 5> scores{};  // indexed by LikertFeature

  int score(LikertFeature f) const { return scores[static_cast<std::size_t>(f)]; }
};

inline void check_rating(const LikertRating& r) {
  for (auto f : kLikertFeatures) {
    const int s = r.score(f);
    if (s < 1 || s > 5) {
      throw Error(ErrorCode::OutOfRangeScore, "Likert score must be in 1..5",
                  {{"feature", std::string(to_string(f))}, {"score", s}, {"item_id", r.item_id}});
    }
  }
}

struct BoxStats {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct LikertSummary {
  std::size_t n_ratings = 0;
  std::array<BoxStats, 5> features{};

  const BoxStats& operator[](LikertFeature f) const { return features[static_cast<std::size_t>(f)]; }
};

namespace detail {

inline double median_of_sorted(const std::vector<double>& v, std::size_t from, std::size_t to) {
  const auto n = to - from;
  const auto mid = from + n / 2;
  return n % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
}

}  // namespace detail

/// Boxplot statistics with inclusive-median quartiles: for odd counts the
/// median joins both halves.
inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "no values");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  BoxStats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  s.min = values.front();
  s.max = values.back();
  s.median = detail::median_of_sorted(values, 0, n);
  if (n == 1) {
    s.q1 = s.q3 = values[0];
  } else {
    const auto lower_end = n % 2 ? n / 2 + 1 : n / 2;
    const auto upper_begin = n / 2;
    s.q1 = detail::median_of_sorted(values, 0, lower_end);
    s.q3 = detail::median_of_sorted(values, upper_begin, n);
  }
  return s;
}

inline LikertSummary likert_summary(const std::vector<LikertRating>& ratings) {
  if (ratings.empty()) throw Error(ErrorCode::EmptyRatings, "no ratings to summarize");
  for (const auto& r : ratings) check_rating(r);
  LikertSummary out;
  out.n_ratings = ratings.size();
  for (auto f : kLikertFeatures) {
    std::vector<double> v;
    v.reserve(ratings.size());
    for (const auto& r : ratings) v.push_back(r.score(f));
    out.features[static_cast<std::size_t>(f)] = box_stats(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct MetricReport {
  std::optional<double> perplexity;
  std::map<int, double> bleu;  // n -> percentage, n in {2, 3, 4}
  double rouge_l = 0.0;
  double distinct_3 = 0.0;
  double repetition_3 = 0.0;
  std::size_t n_candidates = 0;
};

/// Tokenizes both sides and computes every automatic metric. Perplexity is
/// pooled over all supplied token log-probabilities.
inline MetricReport metric_report(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
                                  const std::optional<std::vector<std::vector<double>>>& logprobs = std::nullopt) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, "candidate and reference counts differ",
                {{"candidates", candidates.size()}, {"references", references.size()}});
  }
  if (candidates.empty()) throw Error(ErrorCode::EmptyCorpus, "no candidates");
  std::vector<TokenSeq> cand, ref;
  for (const auto& c : candidates) cand.push_back(tokenize(c));
  for (const auto& r : references) ref.push_back(tokenize(r));

  MetricReport out;
  out.n_candidates = candidates.size();
  if (logprobs) {
    std::vector<double> pooled;
    for (const auto& doc : *logprobs) pooled.insert(pooled.end(), doc.begin(), doc.end());
    out.perplexity = perplexity(pooled);
  }
  for (int n : {2, 3, 4}) out.bleu[n] = bleu_n(cand, ref, n);
  out.rouge_l = rouge_l_corpus(cand, ref);
  out.distinct_3 = distinct_n(cand, 3);
  out.repetition_3 = repetition_n(cand, 3);
  return out;
}

/// Aligned two-column table in the fixed row order
/// Perplexity, BLEU-2, BLEU-3, BLEU-4, ROUGE-L, Distinct 3-gram, Repetition 3-gram.
inline std::vector<std::pair<std::string, std::string>> report_rows(const MetricReport& r) {
  return {
      {"Perplexity", r.perplexity ? format_fixed(*r.perplexity) : "-"},
      {"BLEU-2 (%)", format_fixed(r.bleu.at(2))},
      {"BLEU-3 (%)", format_fixed(r.bleu.at(3))},
      {"BLEU-4 (%)", format_fixed(r.bleu.at(4))},
      {"ROUGE-L (%)", format_fixed(r.rouge_l)},
      {"Distinct 3-gram (%)", format_fixed(r.distinct_3)},
      {"Repetition 3-gram (%)", format_fixed(r.repetition_3)},
  };
}

inline std::string render_report(const MetricReport& r) {
  const auto rows = report_rows(r);
  std::size_t w = 0;
  for (const auto& [k, v] : rows) w = std::max(w, k.size());
  std::string out;
  for (const auto& [k, v] : rows) {
    out += k;
    out.append(w - k.size() + 2, ' ');
    out += v;
    out.push_back('\n');
  }
  return out;
}

}  // namespace kurosawa
