#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "dgt/casing.hpp"
#include "dgt/subword.hpp"
#include "dgt/tokens.hpp"

using namespace dgt;

namespace {

std::vector<TokenSeq> small_corpus() {
  return {split_tokens("low lower lowest newer newest wider"),
          split_tokens("low low lower newest newest widest"),
          split_tokens("the lowest newer wider low")};
}

TokenSeq random_sequence(std::mt19937_64& gen) {
  static const std::vector<std::string> units{"a", "b", "e", "n", "w", "l", "o", "ä", "\\", "_",
                                              "<", ">", "\xE2\x96\x81", "1"};
  static const std::vector<std::string> specials{"<PTS>", "<PLAYER>", "<T>", "<U>", "<BT>"};
  TokenSeq seq;
  const int len = static_cast<int>(gen() % 15);
  for (int i = 0; i < len; ++i) {
    if (gen() % 5 == 0) {
      seq.push_back(specials[gen() % specials.size()]);
      continue;
    }
    std::string tok;
    const int n = 1 + static_cast<int>(gen() % 7);
    for (int k = 0; k < n; ++k) tok += units[gen() % units.size()];
    seq.push_back(tok);
  }
  return seq;
}

}  // namespace

TEST(Bpe, FirstMergeIsMostFrequentPair) {
  std::map<std::pair<std::string, std::string>, int> pairs;
  for (const auto& line : small_corpus()) {
    for (const auto& word : line) {
      const auto u = word_units(word);
      for (std::size_t i = 0; i + 1 < u.size(); ++i) ++pairs[{u[i], u[i + 1]}];
    }
  }
  // std::map iterates in (left, right) order, so the first maximum is the tie winner.
  auto best = pairs.begin();
  for (auto it = pairs.begin(); it != pairs.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  const BpeModel model = learn_bpe(small_corpus(), {1, 0, 2});
  ASSERT_EQ(model.merges().size(), 1u);
  EXPECT_EQ(model.merges()[0].left, best->first.first);
  EXPECT_EQ(model.merges()[0].right, best->first.second);
}

TEST(Bpe, SaveLoadRoundTrip) {
  const BpeModel model = learn_bpe(small_corpus(), {20, 2, 2});
  std::stringstream ss;
  model.save(ss);
  EXPECT_EQ(BpeModel::load(ss), model);
}

TEST(Bpe, LoadRejectsGarbage) {
  std::stringstream bad("not a model\n");
  EXPECT_THROW(BpeModel::load(bad), std::exception);
}

TEST(Bpe, SpecialTokensPassThrough) {
  const BpeModel model = learn_bpe(small_corpus(), {50, 0, 2});
  const TokenSeq seq = split_tokens("<PLAYER> lowest <PTS> 38");
  const TokenSeq out = apply_bpe(model, seq);
  EXPECT_EQ(out.front(), "<PLAYER>");
  EXPECT_NE(std::find(out.begin(), out.end(), "<PTS>"), out.end());
  EXPECT_EQ(detok_bpe(out), seq);
}

TEST(Bpe, EscapesAmbiguousUnits) {
  const TokenSeq seq{"a\\b", "x\xE2\x96\x81y", "\xE2\x96\x81", "<P>x", "a<PTS>"};
  const BpeModel model = learn_bpe({seq, seq, seq}, {100, 0, 2});
  EXPECT_EQ(detok_bpe(apply_bpe(model, seq)), seq);
}

TEST(Bpe, DetokApplyIdentity) {
  std::mt19937_64 gen(5);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 400; ++i) corpus.push_back(random_sequence(gen));
  const BpeModel model = learn_bpe(corpus, {300, 3, 2});
  for (std::uint64_t threshold : {0, 3, 50}) {
    const BpeModel m = model.with_threshold(threshold);
    for (int i = 0; i < 500; ++i) {
      const TokenSeq seq = random_sequence(gen);
      ASSERT_EQ(detok_bpe(apply_bpe(m, seq)), seq);
    }
  }
}

TEST(Bpe, ThresholdProperty) {
  std::mt19937_64 gen(9);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 400; ++i) corpus.push_back(random_sequence(gen));
  for (std::uint64_t threshold : {2, 10, 40}) {
    const BpeModel model = learn_bpe(corpus, {400, threshold, 2});
    for (int i = 0; i < 300; ++i) {
      for (const auto& piece : apply_bpe(model, random_sequence(gen))) {
        if (is_special_token(piece)) continue;
        ASSERT_TRUE(is_single_unit(piece) || model.frequency(piece) >= threshold)
            << piece << " freq " << model.frequency(piece);
      }
    }
  }
}

TEST(Bpe, WordUnits) {
  EXPECT_EQ(word_units("ab"), (std::vector<std::string>{"\xE2\x96\x81" "a", "b"}));
  EXPECT_EQ(word_units("\\\xE2\x96\x81"), (std::vector<std::string>{"\xE2\x96\x81\\\\", "\\_"}));
  EXPECT_TRUE(is_single_unit("\xE2\x96\x81\xC3\xA4"));
  EXPECT_FALSE(is_single_unit("ab"));
}

TEST(Bpe, CasingThenBpeRoundTrip) {
  const std::vector<TokenSeq> corpus{split_tokens("Die Thunder gewannen gegen die Grizzlies"),
                                     split_tokens("NBA Spiel in Memphis")};
  std::vector<TokenSeq> cased;
  for (const auto& s : corpus) cased.push_back(apply_inline_casing(s));
  const BpeModel model = learn_bpe(cased, {100, 0, 1});
  for (const auto& s : corpus) {
    EXPECT_EQ(revert_inline_casing(detok_bpe(apply_bpe(model, apply_inline_casing(s)))), s);
  }
}

TEST(Bpe, EmptyCorpusThrows) {
  EXPECT_THROW(learn_bpe({{"<PTS>"}}), std::invalid_argument);
}
