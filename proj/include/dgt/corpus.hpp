#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dgt/tokens.hpp"

namespace dgt {

class BpeModel;

struct Document {
  std::string doc_id;
  std::vector<TokenSeq> sentences;
  std::optional<std::string> corpus_tag;

  TokenSeq flatten() const;
  std::size_t token_count() const;

  bool operator==(const Document&) const = default;
};

struct ParallelPair {
  TokenSeq source;
  TokenSeq target;

  bool operator==(const ParallelPair&) const = default;
};

struct FilterOptions {
  std::size_t max_len = 175;
  double max_ratio = 1.5;
  /// 0-based line numbers an external language identifier accepted; absent keeps all.
  std::optional<std::set<std::size_t>> keep_lines;
};

struct FilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t removed_langid = 0;
  std::size_t removed_empty = 0;
  std::size_t removed_length = 0;
  std::size_t removed_ratio = 0;
};

struct FilterResult {
  std::vector<ParallelPair> pairs;
  FilterReport report;
};

/// Rules apply in order: keep-list, empty side, max length, length ratio. Each
/// removed pair is counted under the first rule it fails.
FilterResult filter_pairs(std::span<const ParallelPair> pairs, const FilterOptions& options = {});

using SubwordCounter = std::function<std::size_t(const TokenSeq&)>;

struct SplitPiece {
  Document doc;
  std::size_t subwords = 0;
  bool oversized = false;  // a single sentence longer than the limit
};

/// Greedy packing at sentence boundaries. Pieces are named `<id>#<k>` unless
/// the document fits whole, in which case it is returned unchanged.
std::vector<SplitPiece> split_document(const Document& doc, std::size_t max_subwords,
                                       const SubwordCounter& count);
std::vector<SplitPiece> split_document(const Document& doc, std::size_t max_subwords,
                                       const BpeModel& model);

struct PseudoDocOptions {
  std::size_t min_len = 3;
  std::size_t max_len = 30;
  bool shuffle = true;
  std::string id_prefix = "pseudo";
};

/// Partitions the (shuffled) sentences into consecutive runs of uniform random
/// length; the final run takes whatever is left.
std::vector<Document> make_pseudo_documents(std::vector<TokenSeq> sentences, std::uint64_t seed,
                                            const PseudoDocOptions& options = {});

std::size_t sentence_count(std::span<const Document> docs);

/// Originals followed by random spans of consecutive sentences until the total
/// sentence count reaches factor x the original count. Throws on factor < 1.
std::vector<Document> upsample_by_spans(std::span<const Document> docs, int factor,
                                        std::uint64_t seed);

/// Corpus tags that tag_corpus recognizes (and replaces) at sequence start.
class CorpusTagRegistry {
 public:
  CorpusTagRegistry();  // built-in corpus names

  /// Throws std::invalid_argument unless `tag` is a special token.
  void add(const std::string& tag);
  bool contains(std::string_view tag) const;
  const std::set<std::string, std::less<>>& tags() const { return tags_; }

 private:
  std::set<std::string, std::less<>> tags_;
};

/// Prepends `tag`, replacing a registered tag already at the front.
std::vector<TokenSeq> tag_corpus(std::vector<TokenSeq> seqs, const std::string& tag,
                                 const CorpusTagRegistry& registry);
TokenSeq tag_sequence(TokenSeq seq, const std::string& tag, const CorpusTagRegistry& registry);

/// Flattened text tokens followed by metadata tokens, no separator.
TokenSeq build_mtnlg_source(const Document& text, const TokenSeq& metadata);

inline constexpr std::string_view kMaskToken = "<MASK>";

struct MaskOptions {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::string doc_id;
};

/// Replaces each maskable token with <MASK> with probability `rate`. Special
/// tokens and members of `protected_tokens` are never masked. The draw stream
/// is keyed by (seed, epoch, doc_id).
TokenSeq mask_tokens(const TokenSeq& seq, const MaskOptions& options,
                     const std::set<std::string, std::less<>>& protected_tokens = {});

/// Masks only the text part of an MT+NLG source and appends the metadata.
TokenSeq build_masked_mtnlg_source(const Document& text, const TokenSeq& metadata,
                                   const MaskOptions& options);

struct EpochShardPlan {
  std::size_t n_shards = 0;
  std::vector<std::size_t> assignment;  // shard index per document

  std::vector<std::size_t> members(std::size_t shard) const;
  std::vector<std::size_t> sizes() const;
};

/// Shuffles document indices under `seed` and deals them round-robin.
EpochShardPlan shard_for_epochs(std::size_t n_docs, std::size_t n_shards, std::uint64_t seed);
inline EpochShardPlan shard_for_epochs(std::span<const Document> docs, std::size_t n_shards,
                                       std::uint64_t seed) {
  return shard_for_epochs(docs.size(), n_shards, seed);
}

}  // namespace dgt
