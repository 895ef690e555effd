#include "dgt/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "dgt/rng.hpp"
#include "dgt/subword.hpp"

namespace dgt {

TokenSeq Document::flatten() const {
  TokenSeq out;
  out.reserve(token_count());
  for (const auto& s : sentences) append(out, s);
  return out;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::size_t sentence_count(std::span<const Document> docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.sentences.size();
  return n;
}

// ---------------------------------------------------------------------------

FilterResult filter_pairs(std::span<const ParallelPair> pairs, const FilterOptions& opt) {
  FilterResult result;
  result.report.input = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const std::size_t ls = p.source.size();
    const std::size_t lt = p.target.size();
    if (opt.keep_lines && opt.keep_lines->count(i) == 0) {
      ++result.report.removed_langid;
    } else if (ls == 0 || lt == 0) {
      ++result.report.removed_empty;
    } else if (ls > opt.max_len || lt > opt.max_len) {
      ++result.report.removed_length;
    } else if (static_cast<double>(std::max(ls, lt)) >
               opt.max_ratio * static_cast<double>(std::min(ls, lt))) {
      ++result.report.removed_ratio;
    } else {
      result.pairs.push_back(p);
    }
  }
  result.report.kept = result.pairs.size();
  return result;
}

// ---------------------------------------------------------------------------

std::vector<SplitPiece> split_document(const Document& doc, std::size_t max_subwords,
                                       const SubwordCounter& count) {
  std::vector<std::size_t> lengths;
  lengths.reserve(doc.sentences.size());
  std::size_t total = 0;
  for (const auto& s : doc.sentences) {
    lengths.push_back(count(s));
    total += lengths.back();
  }
  if (total <= max_subwords) {
    return {SplitPiece{doc, total, false}};
  }

  std::vector<SplitPiece> out;
  SplitPiece current;
  auto flush = [&] {
    if (current.doc.sentences.empty()) return;
    current.doc.doc_id = doc.doc_id + "#" + std::to_string(out.size());
    current.doc.corpus_tag = doc.corpus_tag;
    current.oversized = current.subwords > max_subwords;
    out.push_back(std::move(current));
    current = SplitPiece{};
  };
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (!current.doc.sentences.empty() && current.subwords + lengths[i] > max_subwords) flush();
    current.doc.sentences.push_back(doc.sentences[i]);
    current.subwords += lengths[i];
  }
  flush();
  return out;
}

std::vector<SplitPiece> split_document(const Document& doc, std::size_t max_subwords,
                                       const BpeModel& model) {
  return split_document(doc, max_subwords,
                        [&](const TokenSeq& s) { return apply_bpe(model, s).size(); });
}

// ---------------------------------------------------------------------------

std::vector<Document> make_pseudo_documents(std::vector<TokenSeq> sentences, std::uint64_t seed,
                                            const PseudoDocOptions& opt) {
  if (opt.min_len == 0 || opt.min_len > opt.max_len) {
    throw std::invalid_argument("pseudo-document length range must satisfy 1 <= min <= max");
  }
  Rng rng(derive_seed(seed, {fnv1a64("pseudo-documents")}));
  if (opt.shuffle) rng.shuffle(sentences);

  std::vector<Document> out;
  std::size_t pos = 0;
  while (pos < sentences.size()) {
    const std::size_t len = std::min<std::size_t>(rng.between(opt.min_len, opt.max_len),
                                                  sentences.size() - pos);
    Document d;
    d.doc_id = opt.id_prefix + "-" + std::to_string(out.size());
    d.sentences.assign(std::make_move_iterator(sentences.begin() + static_cast<long>(pos)),
                       std::make_move_iterator(sentences.begin() + static_cast<long>(pos + len)));
    out.push_back(std::move(d));
    pos += len;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Document> upsample_by_spans(std::span<const Document> docs, int factor,
                                        std::uint64_t seed) {
  if (factor < 1) throw std::invalid_argument("upsampling factor must be >= 1");
  std::vector<Document> out(docs.begin(), docs.end());
  const std::size_t original = sentence_count(docs);
  const std::size_t target = original * static_cast<std::size_t>(factor);
  std::size_t total = original;

  std::vector<std::size_t> usable;  // documents with at least one sentence
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].sentences.empty()) usable.push_back(i);
  }
  Rng rng(derive_seed(seed, {fnv1a64("upsample")}));
  std::size_t spans = 0;
  while (total < target) {
    const Document& src = docs[usable[rng.below(usable.size())]];
    const std::size_t n = src.sentences.size();
    const std::size_t len = rng.between(1, n);
    const std::size_t start = rng.below(n - len + 1);
    Document d;
    d.doc_id = src.doc_id + "@span" + std::to_string(spans++);
    d.corpus_tag = src.corpus_tag;
    d.sentences.assign(src.sentences.begin() + static_cast<long>(start),
                       src.sentences.begin() + static_cast<long>(start + len));
    total += len;
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------

CorpusTagRegistry::CorpusTagRegistry()
    : tags_{"<BT>",        "<COMMONCRAWL>", "<DGT>",     "<EUROPARL>", "<NEWSCOMMENTARY>",
            "<NEWSCRAWL>", "<PARACRAWL>",   "<RAPID>",   "<ROTOWIRE>", "<WIKITITLES>",
            "<WMT>",       "<WMTDOC>"} {}

void CorpusTagRegistry::add(const std::string& tag) {
  if (!is_special_token(tag)) {
    throw std::invalid_argument("corpus tag must look like <NAME>, got '" + tag + "'");
  }
  tags_.insert(tag);
}

bool CorpusTagRegistry::contains(std::string_view tag) const { return tags_.count(tag) > 0; }

TokenSeq tag_sequence(TokenSeq seq, const std::string& tag, const CorpusTagRegistry& registry) {
  if (tag.empty()) throw std::invalid_argument("empty corpus tag");
  if (!registry.contains(tag)) throw std::invalid_argument("unregistered corpus tag '" + tag + "'");
  if (!seq.empty() && registry.contains(seq.front())) {
    seq.front() = tag;
  } else {
    seq.insert(seq.begin(), tag);
  }
  return seq;
}

std::vector<TokenSeq> tag_corpus(std::vector<TokenSeq> seqs, const std::string& tag,
                                 const CorpusTagRegistry& registry) {
  for (auto& s : seqs) s = tag_sequence(std::move(s), tag, registry);
  return seqs;
}

// ---------------------------------------------------------------------------

TokenSeq build_mtnlg_source(const Document& text, const TokenSeq& metadata) {
  TokenSeq out = text.flatten();
  append(out, metadata);
  return out;
}

TokenSeq mask_tokens(const TokenSeq& seq, const MaskOptions& opt,
                     const std::set<std::string, std::less<>>& protected_tokens) {
  if (!(opt.rate >= 0.0 && opt.rate <= 1.0)) {
    throw std::invalid_argument("mask rate must be within [0, 1]");
  }
  TokenSeq out = seq;
  if (opt.rate == 0.0) return out;
  Rng rng(derive_seed(opt.seed, {opt.epoch, fnv1a64(opt.doc_id)}));
  for (auto& tok : out) {
    if (is_special_token(tok) || protected_tokens.count(tok) > 0) continue;
    // One draw per maskable token keeps the stream aligned across rates.
    if (rng.bernoulli(opt.rate)) tok = kMaskToken;
  }
  return out;
}

TokenSeq build_masked_mtnlg_source(const Document& text, const TokenSeq& metadata,
                                   const MaskOptions& opt) {
  TokenSeq out = mask_tokens(text.flatten(), opt);
  append(out, metadata);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> EpochShardPlan::members(std::size_t shard) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == shard) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> EpochShardPlan::sizes() const {
  std::vector<std::size_t> out(n_shards, 0);
  for (auto s : assignment) ++out[s];
  return out;
}

EpochShardPlan shard_for_epochs(std::size_t n_docs, std::size_t n_shards, std::uint64_t seed) {
  if (n_shards == 0) throw std::invalid_argument("number of shards must be >= 1");
  std::vector<std::size_t> order(n_docs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {fnv1a64("epoch-shards")}));
  rng.shuffle(order);
  EpochShardPlan plan;
  plan.n_shards = n_shards;
  plan.assignment.assign(n_docs, 0);
  for (std::size_t i = 0; i < n_docs; ++i) plan.assignment[order[i]] = i % n_shards;
  return plan;
}

}  // namespace dgt
