#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dgt/tokens.hpp"

namespace dgt {

/// U+2581, prefixed to the first symbol of every word.
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81";

struct Merge {
  std::string left;
  std::string right;

  std::string joined() const { return left + right; }
  bool operator==(const Merge&) const = default;
};

/// Pair-merge subword model: ordered merges, post-merge symbol frequencies and
/// the apply-time vocabulary threshold.
///
/// Words are split into units (one code point each; a literal backslash or
/// U+2581 becomes a two-byte escape unit) and the first unit of a word carries
/// kWordMarker. Merges never cross word boundaries.
class BpeModel {
 public:
  /// Throws std::invalid_argument on duplicate merges or a merge whose side is
  /// neither a unit nor the output of an earlier merge.
  BpeModel(std::vector<Merge> merges, std::map<std::string, std::uint64_t> vocab,
           std::uint64_t threshold);

  const std::vector<Merge>& merges() const { return merges_; }
  const std::map<std::string, std::uint64_t>& vocab() const { return vocab_; }
  std::uint64_t threshold() const { return threshold_; }
  BpeModel with_threshold(std::uint64_t threshold) const;

  std::optional<std::size_t> rank(std::string_view left, std::string_view right) const;
  std::uint64_t frequency(std::string_view symbol) const;
  /// The merge that first produced `symbol`, if any.
  const Merge* components(std::string_view symbol) const;

  /// Line format: header `#dgt-bpe v1 threshold=T merges=M vocab=V`, M lines
  /// `left right`, then V lines `symbol count` sorted by count desc, symbol asc.
  void save(std::ostream& out) const;
  static BpeModel load(std::istream& in);

  bool operator==(const BpeModel& other) const {
    return merges_ == other.merges_ && vocab_ == other.vocab_ && threshold_ == other.threshold_;
  }

 private:
  std::vector<Merge> merges_;
  std::map<std::string, std::uint64_t> vocab_;
  std::uint64_t threshold_;
  std::unordered_map<std::string, std::size_t> rank_;  // key: left + '\n' + right
  std::unordered_map<std::string, std::size_t> producer_;
};

struct BpeLearnOptions {
  std::size_t n_merges = 32000;
  std::uint64_t threshold = 100;
  std::uint64_t min_frequency = 2;  // stop once the best pair is rarer than this
};

/// Learns merges over every non-special token in `corpus`. Most frequent
/// adjacent pair first; ties go to the lexicographically smallest (left, right).
/// Throws std::invalid_argument when the corpus has no learnable token.
BpeModel learn_bpe(const std::vector<TokenSeq>& corpus, const BpeLearnOptions& options = {});

/// Segments every non-special token. Special tokens pass through untouched.
TokenSeq apply_bpe(const BpeModel& model, const TokenSeq& seq);

/// Splits one word; exposed for tests and for length measurement.
std::vector<std::string> segment_word(const BpeModel& model, std::string_view word);

/// Exact inverse of apply_bpe.
TokenSeq detok_bpe(const TokenSeq& seq);

/// Units of a word with the marker on the first one (the learner's view).
std::vector<std::string> word_units(std::string_view word);

/// True when `symbol` is one unit, optionally preceded by the marker.
bool is_single_unit(std::string_view symbol);

}  // namespace dgt
