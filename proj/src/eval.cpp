#include "dgt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "dgt/error.hpp"
#include "dgt/text_io.hpp"

using nlohmann::json;

namespace dgt {

namespace {

constexpr std::size_t kMaxOrder = 4;

// Length-prefixed so that distinct n-grams never share a key.
std::string ngram_key(const TokenSeq& seq, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t i = start; i < start + n; ++i) {
    key += std::to_string(seq[i].size());
    key += ':';
    key += seq[i];
  }
  return key;
}

std::unordered_map<std::string, std::size_t> count_ngrams(const TokenSeq& seq, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[ngram_key(seq, i, n)];
  return counts;
}

struct SegmentStats {
  std::array<std::size_t, kMaxOrder> matches{};
  std::array<std::size_t, kMaxOrder> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

SegmentStats segment_stats(const TokenSeq& hyp, const TokenSeq& ref) {
  SegmentStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const auto h = count_ngrams(hyp, n);
    const auto r = count_ngrams(ref, n);
    s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
    for (const auto& [gram, count] : h) {
      auto it = r.find(gram);
      if (it != r.end()) s.matches[n - 1] += std::min(count, it->second);
    }
  }
  return s;
}

}  // namespace

BleuReport corpus_bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references) {
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("BLEU needs one reference per candidate (" +
                                std::to_string(candidates.size()) + " vs " +
                                std::to_string(references.size()) + ")");
  }
  BleuReport r;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const SegmentStats s = segment_stats(candidates[i], references[i]);
    r.candidate_len += s.hyp_len;
    r.reference_len += s.ref_len;
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
      r.matches[n] += s.matches[n];
      r.totals[n] += s.totals[n];
    }
  }

  // Exponential smoothing: each zero-match order doubles the divisor. An order
  // with no candidate n-grams at all stops precision computation; the
  // remaining precisions stay 0 and the score is 0.
  double smooth = 1.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (r.totals[n] == 0) break;
    if (r.matches[n] == 0) {
      smooth *= 2.0;
      r.precisions[n] = 1.0 / (smooth * static_cast<double>(r.totals[n]));
    } else {
      r.precisions[n] = static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    }
  }

  if (r.candidate_len < r.reference_len) {
    r.brevity_penalty =
        r.candidate_len == 0
            ? 0.0
            : std::exp(1.0 - static_cast<double>(r.reference_len) /
                                 static_cast<double>(r.candidate_len));
  } else {
    r.brevity_penalty = 1.0;
  }

  const bool any_zero =
      std::any_of(r.precisions.begin(), r.precisions.end(), [](double p) { return p <= 0.0; });
  if (any_zero) {
    r.score = 0.0;
  } else {
    double log_sum = 0.0;
    for (double p : r.precisions) log_sum += std::log(p);
    r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / kMaxOrder);
  }
  return r;
}

BleuReport corpus_bleu(std::span<const Document> candidates, std::span<const Document> references) {
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("BLEU needs one reference document per candidate (" +
                                std::to_string(candidates.size()) + " vs " +
                                std::to_string(references.size()) + ")");
  }
  std::vector<TokenSeq> c;
  std::vector<TokenSeq> r;
  c.reserve(candidates.size());
  r.reserve(references.size());
  for (const auto& d : candidates) c.push_back(d.flatten());
  for (const auto& d : references) r.push_back(d.flatten());
  return corpus_bleu(std::span<const TokenSeq>(c), std::span<const TokenSeq>(r));
}

json BleuReport::to_json() const {
  return json{{"score", score},
              {"precisions", precisions},
              {"matches", matches},
              {"totals", totals},
              {"brevity_penalty", brevity_penalty},
              {"candidate_len", candidate_len},
              {"reference_len", reference_len},
              {"signature", signature}};
}

std::string BleuReport::summary_line() const {
  char buf[256];
  const double ratio =
      reference_len == 0 ? 0.0 : static_cast<double>(candidate_len) / reference_len;
  std::snprintf(buf, sizeof buf,
                " = %.2f %.1f/%.1f/%.1f/%.1f (BP = %.3f ratio = %.3f hyp_len = %zu ref_len = %zu)",
                score, 100 * precisions[0], 100 * precisions[1], 100 * precisions[2],
                100 * precisions[3], brevity_penalty, ratio, candidate_len, reference_len);
  return signature + buf;
}

// ---------------------------------------------------------------------------

RewriteRule::RewriteRule(std::string p, std::string r)
    : pattern(std::move(p)), replacement(std::move(r)), compiled(pattern, std::regex::ECMAScript) {}

std::vector<RewriteRule> default_output_fixes() {
  std::vector<RewriteRule> rules;
  rules.emplace_back(R"((\d+)-of-(\d+))", "$1 - of - $2");
  rules.emplace_back(R"((\d+)-(\d+))", "$1 - $2");
  return rules;
}

std::vector<RewriteRule> load_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rule file '" + path + "'");
  std::vector<RewriteRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected pattern<TAB>replacement");
    }
    try {
      rules.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    } catch (const std::regex_error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": bad pattern: " + e.what());
    }
  }
  return rules;
}

TokenSeq apply_output_fixes(const TokenSeq& text, std::span<const RewriteRule> rules) {
  TokenSeq out;
  out.reserve(text.size());
  for (const auto& tok : text) {
    bool rewritten = false;
    for (const auto& rule : rules) {
      std::smatch m;
      if (std::regex_match(tok, m, rule.compiled)) {
        append(out, split_tokens(m.format(rule.replacement)));
        rewritten = true;
        break;
      }
    }
    if (!rewritten) out.push_back(tok);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string GameKey::to_string() const {
  return date.iso() + " " + home_name + " vs " + visitor_name;
}

GameKey game_key(const GameRecord& g) {
  return GameKey{g.date, g.home.full_name(), g.visitor.full_name()};
}

OverlapReport find_overlap(std::span<const GameRecord> train, std::span<const GameRecord> test) {
  std::set<GameKey> train_keys;
  for (const auto& g : train) train_keys.insert(game_key(g));
  std::set<GameKey> test_keys;
  for (const auto& g : test) test_keys.insert(game_key(g));

  OverlapReport r;
  r.train_games = train.size();
  r.test_games = test.size();
  std::set_intersection(train_keys.begin(), train_keys.end(), test_keys.begin(), test_keys.end(),
                        std::back_inserter(r.keys));
  const std::set<GameKey> shared(r.keys.begin(), r.keys.end());
  for (const auto& g : test) r.test_matches += shared.count(game_key(g));
  for (const auto& g : train) r.train_matches += shared.count(game_key(g));
  return r;
}

FilterOverlapResult filter_overlap(std::span<const GameRecord> train,
                                   std::span<const GameRecord> exclude) {
  std::set<GameKey> drop;
  for (const auto& g : exclude) drop.insert(game_key(g));
  FilterOverlapResult r;
  for (const auto& g : train) {
    if (drop.count(game_key(g))) {
      ++r.removed;
    } else {
      r.kept.push_back(g);
    }
  }
  return r;
}

OverlapBleuResult overlap_reference_bleu(std::span<const GameRecord> train,
                                         std::span<const GameRecord> test,
                                         std::span<const GameKey> overlap,
                                         std::span<const RewriteRule> fixes) {
  OverlapBleuResult result;
  auto first_story = [&](std::span<const GameRecord> games, const GameKey& key,
                         const char* which) -> const GameRecord* {
    const GameRecord* found = nullptr;
    std::size_t n = 0;
    for (const auto& g : games) {
      if (game_key(g) == key) {
        if (!found) found = &g;
        ++n;
      }
    }
    if (n > 1) {
      result.warnings.push_back(std::string(which) + " has " + std::to_string(n) +
                                " stories for " + key.to_string() + "; using '" +
                                found->game_id + "'");
    }
    return found;
  };

  std::vector<TokenSeq> candidates;
  std::vector<TokenSeq> references;
  for (const auto& key : overlap) {
    const GameRecord* cand = first_story(train, key, "train");
    const GameRecord* ref = first_story(test, key, "test");
    if (!cand || !ref) {
      result.warnings.push_back("no story pair for " + key.to_string());
      continue;
    }
    candidates.push_back(fixes.empty() ? cand->summary : apply_output_fixes(cand->summary, fixes));
    references.push_back(ref->summary);
  }
  result.pairs = candidates.size();
  result.report = corpus_bleu(std::span<const TokenSeq>(candidates),
                              std::span<const TokenSeq>(references));
  return result;
}

}  // namespace dgt
