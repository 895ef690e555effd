#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgt/model.hpp"
#include "dgt/tokens.hpp"

namespace dgt {

enum class TagMode { Full, Minimal };
enum class Language { EN, DE };

struct LinearizationConfig {
  std::optional<int> n_players = 3;  // absent: every player; 0: no player blocks
  bool sort_players = true;
  bool include_next_game = true;
  bool include_weekday = true;
  bool include_position = true;
  bool include_team_sums = true;
  TagMode tag_mode = TagMode::Full;
  Language label_language = Language::EN;
  std::optional<std::uint64_t> shuffle_seed;  // read only when sort_players is off

  void validate() const;

  bool operator==(const LinearizationConfig&) const = default;
};

void to_json(nlohmann::json& j, const LinearizationConfig& cfg);
/// Missing fields keep their defaults; unknown fields and bad types throw ConfigError.
void from_json(const nlohmann::json& j, LinearizationConfig& cfg);

std::vector<PlayerLine> select_players(std::span<const PlayerLine> players, std::optional<int> n,
                                       bool sort, std::optional<std::uint64_t> seed);

/// round(100 * made / att), halves rounded up; 0 when att is 0.
int format_percent(int made, int att);

TokenSeq encode_player(const PlayerLine& player, const LinearizationConfig& cfg);
TokenSeq encode_team(const TeamLine& team, const TeamAggregates& agg, bool won,
                     const std::optional<NextGameInfo>& next, const LinearizationConfig& cfg);
TokenSeq encode_date(const CivilDate& date, const LinearizationConfig& cfg);

/// Date block, home team, visitor team, then winner's and loser's player groups.
TokenSeq linearize_game(const GameRecord& game, const ScheduleIndex& index,
                        const LinearizationConfig& cfg);

/// Rewrites weekday, month and position words into `lang`. Throws Error when a
/// label slot holds a word that is in neither label table.
TokenSeq localize_labels(const TokenSeq& seq, Language lang);

std::string weekday_label(Weekday day, Language lang);
std::string month_label(int month, Language lang);
std::string position_label(Position pos, Language lang);

enum class SweepKind { NPlayerSweep, Table6Ablations };

struct NamedConfig {
  std::string name;
  LinearizationConfig config;
};

std::vector<NamedConfig> sweep_configs(SweepKind kind);

}  // namespace dgt
