#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "dgt/error.hpp"
#include "dgt/linearize.hpp"
#include "dgt/text_io.hpp"
#include "test_util.hpp"

using namespace dgt;
using nlohmann::json;

namespace {

LinearizationConfig german() {
  LinearizationConfig cfg;
  cfg.label_language = Language::DE;
  return cfg;
}

TokenSeq golden() { return read_lines(test::data_path("table2_golden_de.txt")).at(0); }

TokenSeq linearize_main(const LinearizationConfig& cfg) {
  const auto games = test::table2_games();
  return linearize_game(games[0], ScheduleIndex::build(games), cfg);
}

std::size_t count(const TokenSeq& seq, const std::string& tok) {
  return static_cast<std::size_t>(std::count(seq.begin(), seq.end(), tok));
}

}  // namespace

TEST(Linearize, GermanGolden) { EXPECT_EQ(linearize_main(german()), golden()); }

TEST(Linearize, EnglishLabelsDifferOnlyInLabelSlots) {
  const TokenSeq en = linearize_main(LinearizationConfig{});
  const TokenSeq de = golden();
  ASSERT_EQ(en.size(), de.size());
  EXPECT_EQ(en[1], "Friday");
  EXPECT_EQ(en[2], "February");
  EXPECT_EQ(localize_labels(en, Language::DE), de);
  EXPECT_EQ(localize_labels(de, Language::EN), en);
}

TEST(Linearize, PercentFormatting) {
  EXPECT_EQ(format_percent(38, 80), 48);
  EXPECT_EQ(format_percent(25, 33), 76);
  EXPECT_EQ(format_percent(13, 26), 50);
  EXPECT_EQ(format_percent(6, 7), 86);
  EXPECT_EQ(format_percent(14, 24), 58);
  EXPECT_EQ(format_percent(17, 17), 100);
  EXPECT_EQ(format_percent(0, 0), 0);
  EXPECT_EQ(format_percent(1, 8), 13);  // 12.5 rounds up
  EXPECT_EQ(format_percent(3, 8), 38);  // 37.5 rounds up
}

TEST(Linearize, PercentMatchesRealRounding) {
  for (int att = 1; att <= 60; ++att) {
    for (int made = 0; made <= att; ++made) {
      const double exact = 100.0 * made / att;
      const int lo = static_cast<int>(exact);
      const int expected = exact - lo >= 0.5 - 1e-12 ? lo + 1 : lo;
      ASSERT_EQ(format_percent(made, att), expected) << made << "/" << att;
    }
  }
}

TEST(Linearize, SortBreaksTiesByRebounds) {
  const auto game = test::table2_games()[0];
  const auto top = select_players(game.home_players, 3, true, std::nullopt);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].name, "Russell Westbrook");
  EXPECT_EQ(top[1].name, "Steven Adams");
  EXPECT_EQ(top[2].name, "Joffrey Lauvergne");
}

TEST(Linearize, ShuffleIsSeededPermutation) {
  const auto game = test::table2_games()[0];
  const auto a = select_players(game.home_players, std::nullopt, false, 7);
  const auto b = select_players(game.home_players, std::nullopt, false, 7);
  EXPECT_EQ(a, b);
  auto names = [](std::vector<PlayerLine> v) {
    std::vector<std::string> out;
    for (auto& p : v) out.push_back(p.name);
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(names(a), names(game.home_players));
}

TEST(Linearize, PlayerCount) {
  for (int n : {0, 1, 3, 5, 7, 8}) {
    LinearizationConfig cfg;
    cfg.n_players = n;
    const auto seq = linearize_main(cfg);
    // Thunder have 7 players, Grizzlies 8.
    EXPECT_EQ(count(seq, "<PLAYER>"), static_cast<std::size_t>(std::min(n, 7) + std::min(n, 8)));
  }
  LinearizationConfig all;
  all.n_players.reset();
  EXPECT_EQ(count(linearize_main(all), "<PLAYER>"), 15u);
}

TEST(Linearize, AblationsRemoveTheirFields) {
  LinearizationConfig cfg;
  cfg.include_next_game = false;
  EXPECT_EQ(count(linearize_main(cfg), "<NEXT>"), 0u);

  cfg = {};
  cfg.include_weekday = false;
  auto seq = linearize_main(cfg);
  EXPECT_EQ(count(seq, "Friday"), 0u);
  EXPECT_EQ(count(seq, "Sunday"), 0u);

  cfg = {};
  cfg.include_position = false;
  EXPECT_EQ(count(linearize_main(cfg), "<POS>"), 0u);

  cfg = {};
  cfg.include_team_sums = false;
  seq = linearize_main(cfg);
  EXPECT_EQ(count(seq, "47"), 0u);
  EXPECT_EQ(count(seq, "<TO>"), 0u);
}

TEST(Linearize, MinimalTagsKeepStructure) {
  LinearizationConfig cfg;
  cfg.tag_mode = TagMode::Minimal;
  const auto seq = linearize_main(cfg);
  EXPECT_EQ(count(seq, "<PTS>"), 0u);
  EXPECT_EQ(count(seq, "<FG>"), 0u);
  EXPECT_EQ(count(seq, "<POS>"), 0u);
  EXPECT_EQ(count(seq, "<PLAYER>"), 6u);
  EXPECT_EQ(count(seq, "<NEXT>"), 2u);
  EXPECT_EQ(seq.front(), "<DATE>");
  EXPECT_EQ(localize_labels(localize_labels(seq, Language::DE), Language::EN), seq);
}

TEST(Linearize, DeterministicUnderShuffle) {
  LinearizationConfig cfg;
  cfg.sort_players = false;
  cfg.shuffle_seed = 3;
  cfg.n_players.reset();
  EXPECT_EQ(linearize_main(cfg), linearize_main(cfg));
}

TEST(LinearizeConfig, JsonRoundTrip) {
  for (const auto& kind : {SweepKind::NPlayerSweep, SweepKind::Table6Ablations}) {
    for (const auto& nc : sweep_configs(kind)) {
      const json j = nc.config;
      EXPECT_EQ(j.get<LinearizationConfig>(), nc.config) << nc.name;
    }
  }
}

TEST(LinearizeConfig, StrictParsing) {
  EXPECT_THROW(json::parse(R"({"n_players": 3, "colour": 1})").get<LinearizationConfig>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"tag_mode": "loud"})").get<LinearizationConfig>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"n_players": -2})").get<LinearizationConfig>(), ConfigError);
  const auto c = json::parse(R"({"n_players": null, "label_language": "de"})").get<LinearizationConfig>();
  EXPECT_FALSE(c.n_players);
  EXPECT_EQ(c.label_language, Language::DE);
}

TEST(LinearizeConfig, Sweeps) {
  const auto players = sweep_configs(SweepKind::NPlayerSweep);
  ASSERT_EQ(players.size(), 10u);
  EXPECT_EQ(players.front().config.n_players, 0);
  EXPECT_FALSE(players.back().config.n_players);

  const auto ablations = sweep_configs(SweepKind::Table6Ablations);
  ASSERT_EQ(ablations.size(), 10u);
  std::set<std::string> names;
  for (const auto& nc : ablations) names.insert(nc.name);
  EXPECT_EQ(names.size(), ablations.size());
  EXPECT_EQ(ablations.front().config, LinearizationConfig{});
}

TEST(LocalizeLabels, UnknownLabelThrows) {
  TokenSeq seq = golden();
  seq[1] = "Someday";
  EXPECT_THROW(localize_labels(seq, Language::EN), Error);
}

TEST(Labels, Tables) {
  EXPECT_EQ(weekday_label(Weekday::Friday, Language::DE), "Freitag");
  EXPECT_EQ(month_label(3, Language::DE), "M\xC3\xA4rz");
  EXPECT_EQ(position_label(Position::Bench, Language::DE), "Bank");
  EXPECT_EQ(position_label(Position::Bench, Language::EN), "Bench");
}
