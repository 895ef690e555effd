#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "dgt/corpus.hpp"
#include "dgt/subword.hpp"
#include "dgt/text_io.hpp"

using namespace dgt;

namespace {

std::vector<TokenSeq> synthetic_sentences(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<TokenSeq> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSeq s;
    const std::size_t len = 1 + gen() % 40;
    for (std::size_t k = 0; k < len; ++k) s.push_back("w" + std::to_string(gen() % 500));
    out.push_back(std::move(s));
  }
  return out;
}

Document doc_of(std::string id, std::vector<TokenSeq> sentences) {
  return Document{std::move(id), std::move(sentences), std::nullopt};
}

}  // namespace

TEST(Filter, RulesInOrder) {
  const TokenSeq a3{"a", "b", "c"};
  const TokenSeq a4{"a", "b", "c", "d"};
  const TokenSeq a5{"a", "b", "c", "d", "e"};
  std::vector<ParallelPair> pairs{
      {a3, a4},          // kept: 4 <= 1.5 * 3
      {a3, a5},          // ratio 5/3
      {{}, a3},          // empty
      {TokenSeq(176, "x"), TokenSeq(176, "y")},  // too long
      {a4, a4},          // dropped by keep-list
  };
  FilterOptions opt;
  opt.keep_lines = std::set<std::size_t>{0, 1, 2, 3};
  const FilterResult r = filter_pairs(pairs, opt);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0], pairs[0]);
  EXPECT_EQ(r.report.input, 5u);
  EXPECT_EQ(r.report.kept, 1u);
  EXPECT_EQ(r.report.removed_ratio, 1u);
  EXPECT_EQ(r.report.removed_empty, 1u);
  EXPECT_EQ(r.report.removed_length, 1u);
  EXPECT_EQ(r.report.removed_langid, 1u);
}

TEST(Filter, BoundariesAreInclusive) {
  const FilterResult r = filter_pairs(std::vector<ParallelPair>{
      {TokenSeq(175, "x"), TokenSeq(175, "y")}, {TokenSeq(2, "x"), TokenSeq(3, "y")}});
  EXPECT_EQ(r.report.kept, 2u);
}

TEST(Split, BoundAndRoundTrip) {
  const auto sentences = synthetic_sentences(300, 1);
  const Document d = doc_of("d", sentences);
  const SubwordCounter count = [](const TokenSeq& s) { return s.size() * 2; };
  const auto pieces = split_document(d, 100, count);
  ASSERT_GT(pieces.size(), 1u);
  TokenSeq joined;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& p = pieces[k];
    EXPECT_EQ(p.doc.doc_id, "d#" + std::to_string(k));
    EXPECT_TRUE(p.subwords <= 100 || (p.oversized && p.doc.sentences.size() == 1));
    append(joined, p.doc.flatten());
  }
  EXPECT_EQ(joined, d.flatten());
}

TEST(Split, OversizedSingletonIsFlagged) {
  const Document d = doc_of("d", {TokenSeq(5, "a"), TokenSeq(50, "b"), TokenSeq(5, "c")});
  const auto pieces = split_document(d, 10, [](const TokenSeq& s) { return s.size(); });
  ASSERT_EQ(pieces.size(), 3u);
  EXPECT_FALSE(pieces[0].oversized);
  EXPECT_TRUE(pieces[1].oversized);
  EXPECT_FALSE(pieces[2].oversized);
}

TEST(Split, FittingDocumentUnchanged) {
  const Document d = doc_of("keep", {{"a", "b"}, {"c"}});
  const auto pieces = split_document(d, 10, [](const TokenSeq& s) { return s.size(); });
  ASSERT_EQ(pieces.size(), 1u);
  EXPECT_EQ(pieces[0].doc, d);
}

TEST(PseudoDocuments, PartitionWithBoundedLengths) {
  const auto sentences = synthetic_sentences(1000, 2);
  const auto docs = make_pseudo_documents(sentences, 17);
  std::size_t total = 0;
  std::multiset<TokenSeq> seen;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::size_t n = docs[i].sentences.size();
    if (i + 1 < docs.size()) {
      EXPECT_GE(n, 3u);
      EXPECT_LE(n, 30u);
    }
    total += n;
    seen.insert(docs[i].sentences.begin(), docs[i].sentences.end());
  }
  EXPECT_EQ(total, sentences.size());
  EXPECT_EQ(seen, std::multiset<TokenSeq>(sentences.begin(), sentences.end()));
  EXPECT_EQ(make_pseudo_documents(sentences, 17), docs);
  EXPECT_NE(make_pseudo_documents(sentences, 18), docs);
}

TEST(Upsample, SentenceCountInRange) {
  std::vector<Document> docs;
  const auto sentences = synthetic_sentences(500, 3);
  for (std::size_t i = 0; i < 50; ++i) {
    docs.push_back(doc_of("d" + std::to_string(i), {sentences.begin() + 10 * i, sentences.begin() + 10 * i + 10}));
  }
  const std::size_t n = sentence_count(docs);
  const auto up = upsample_by_spans(docs, 8, 4);
  const std::size_t total = sentence_count(up);
  EXPECT_GE(total, 8 * n);
  EXPECT_LT(total, 8 * n + 10);
  for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(up[i], docs[i]);
  EXPECT_EQ(upsample_by_spans(docs, 8, 4), up);
  EXPECT_EQ(sentence_count(upsample_by_spans(docs, 1, 4)), n);
  EXPECT_THROW(upsample_by_spans(docs, 0, 4), std::invalid_argument);
}

TEST(Upsample, SpansAreContiguous) {
  const Document d = doc_of("d", {{"1"}, {"2"}, {"3"}, {"4"}, {"5"}});
  for (const auto& s : upsample_by_spans(std::vector<Document>{d}, 8, 1)) {
    for (std::size_t k = 1; k < s.sentences.size(); ++k) {
      EXPECT_EQ(std::stoi(s.sentences[k][0]), std::stoi(s.sentences[k - 1][0]) + 1);
    }
  }
}

TEST(Tags, PrependAndReplace) {
  CorpusTagRegistry reg;
  EXPECT_EQ(tag_sequence({"a"}, "<BT>", reg), (TokenSeq{"<BT>", "a"}));
  EXPECT_EQ(tag_sequence({"<BT>", "a"}, "<DGT>", reg), (TokenSeq{"<DGT>", "a"}));
  EXPECT_EQ(tag_sequence({"<PTS>", "a"}, "<DGT>", reg), (TokenSeq{"<DGT>", "<PTS>", "a"}));
  EXPECT_THROW(tag_sequence({"a"}, "<NEW>", reg), std::exception);
  EXPECT_THROW(reg.add("plain"), std::invalid_argument);
  reg.add("<NEW>");
  EXPECT_EQ(tag_corpus({{"a"}, {}}, "<NEW>", reg), (std::vector<TokenSeq>{{"<NEW>", "a"}, {"<NEW>"}}));
}

TEST(Mask, RateAndDeterminism) {
  TokenSeq seq;
  for (int i = 0; i < 10000; ++i) seq.push_back(i % 10 == 0 ? "<PTS>" : "t" + std::to_string(i));
  const MaskOptions opt{0.2, 42, 0, "doc"};
  const TokenSeq masked = mask_tokens(seq, opt);
  std::size_t maskable = 0, hits = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] == "<PTS>") {
      EXPECT_EQ(masked[i], "<PTS>");
      continue;
    }
    ++maskable;
    hits += masked[i] == kMaskToken;
  }
  EXPECT_NEAR(static_cast<double>(hits) / maskable, 0.2, 0.02);
  EXPECT_EQ(mask_tokens(seq, opt), masked);
  EXPECT_NE(mask_tokens(seq, {0.2, 42, 1, "doc"}), masked);
  EXPECT_EQ(mask_tokens(seq, {0.0, 42, 0, "doc"}), seq);
  EXPECT_THROW(mask_tokens(seq, {1.5, 42, 0, "doc"}), std::invalid_argument);
}

TEST(Mask, MetadataNeverMasked) {
  const Document text = doc_of("d", {{"a", "b", "c"}});
  const TokenSeq meta{"<PTS>", "38", "Westbrook"};
  const TokenSeq out = build_masked_mtnlg_source(text, meta, {1.0, 1, 0, "d"});
  EXPECT_EQ(out, (TokenSeq{"<MASK>", "<MASK>", "<MASK>", "<PTS>", "38", "Westbrook"}));
  EXPECT_EQ(build_mtnlg_source(text, meta), (TokenSeq{"a", "b", "c", "<PTS>", "38", "Westbrook"}));
}

TEST(Shards, ExactPartition) {
  const auto plan = shard_for_epochs(1003, 20, 9);
  std::vector<int> hit(1003, 0);
  for (std::size_t k = 0; k < 20; ++k) {
    for (auto i : plan.members(k)) ++hit[i];
  }
  for (int h : hit) EXPECT_EQ(h, 1);
  for (auto s : plan.sizes()) {
    EXPECT_GE(s, 50u);
    EXPECT_LE(s, 51u);
  }
  EXPECT_EQ(shard_for_epochs(1003, 20, 9).assignment, plan.assignment);
  EXPECT_THROW(shard_for_epochs(10, 0, 9), std::invalid_argument);
}

TEST(TextIo, DocumentsRoundTrip) {
  const std::vector<Document> docs{doc_of("0", {{"a", "b"}, {"c"}}), doc_of("1", {{"d"}})};
  EXPECT_EQ(parse_documents(format_documents(docs)), docs);
  EXPECT_EQ(format_flat_documents(docs), "a b c\nd\n");
}
