#pragma once

#include <array>
#include <cstddef>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgt/civil_date.hpp"
#include "dgt/corpus.hpp"
#include "dgt/model.hpp"
#include "dgt/tokens.hpp"

namespace dgt {

inline constexpr std::string_view kBleuSignature =
    "BLEU+case.mixed+numrefs.1+smooth.exp+tok.none+version.1.3.1";

struct BleuReport {
  double score = 0.0;                   // percentage, 0..100
  std::array<double, 4> precisions{};   // ratios, 0..1, after smoothing
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 0.0;
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;
  std::string signature{kBleuSignature};

  nlohmann::json to_json() const;
  /// `<signature> = 59.46 75.0/66.7/50.0/50.0 (BP = 1.000 ratio = 1.000 hyp_len = 4 ref_len = 4)`
  std::string summary_line() const;
};

/// Corpus BLEU, one segment per document. Case-sensitive, tokens taken
/// verbatim, clipping per segment, exponential smoothing of zero-match orders.
/// Throws std::invalid_argument on a length mismatch.
BleuReport corpus_bleu(std::span<const Document> candidates, std::span<const Document> references);
BleuReport corpus_bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references);

struct RewriteRule {
  std::string pattern;      // ECMAScript regex, must match the whole token
  std::string replacement;  // $1-style groups; may expand to several tokens
  std::regex compiled;

  RewriteRule(std::string pattern, std::string replacement);
};

/// `1-of-3` -> `1 - of - 3` and `12-10` -> `12 - 10`.
std::vector<RewriteRule> default_output_fixes();
/// One rule per line, `pattern<TAB>replacement`; blank lines and `#` comments skipped.
std::vector<RewriteRule> load_rules(const std::string& path);

/// Per token, the first rule that fully matches rewrites it; one pass.
TokenSeq apply_output_fixes(const TokenSeq& text, std::span<const RewriteRule> rules);

struct GameKey {
  CivilDate date;
  std::string home_name;
  std::string visitor_name;

  auto operator<=>(const GameKey&) const = default;
  bool operator==(const GameKey&) const = default;
  std::string to_string() const;
};

GameKey game_key(const GameRecord& game);

struct OverlapReport {
  std::vector<GameKey> keys;          // sorted, unique
  std::size_t test_games = 0;
  std::size_t test_matches = 0;       // test games (with multiplicity) whose key is in train
  std::size_t train_games = 0;
  std::size_t train_matches = 0;
};

OverlapReport find_overlap(std::span<const GameRecord> train, std::span<const GameRecord> test);

struct FilterOverlapResult {
  std::vector<GameRecord> kept;
  std::size_t removed = 0;
};

FilterOverlapResult filter_overlap(std::span<const GameRecord> train,
                                   std::span<const GameRecord> exclude);

struct OverlapBleuResult {
  BleuReport report;
  std::size_t pairs = 0;
  std::vector<std::string> warnings;
};

/// Scores train stories (candidates) against test stories (references) of the
/// overlapping games. With several stories per key the first in input order wins.
OverlapBleuResult overlap_reference_bleu(std::span<const GameRecord> train,
                                         std::span<const GameRecord> test,
                                         std::span<const GameKey> overlap,
                                         std::span<const RewriteRule> fixes = {});

}  // namespace dgt
