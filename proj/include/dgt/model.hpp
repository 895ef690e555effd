#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dgt/civil_date.hpp"
#include "dgt/tokens.hpp"

namespace dgt {

enum class Position { Guard, Forward, Center, Bench };

enum class Side { Home, Visitor };

inline Side opposite(Side s) { return s == Side::Home ? Side::Visitor : Side::Home; }

struct PlayerLine {
  std::string name;
  Position position = Position::Bench;
  int pts = 0;
  int reb = 0;
  int ast = 0;
  int stl = 0;
  int blk = 0;
  int pf = 0;
  int to = 0;  // parsed and summed into team turnovers, never emitted per player
  int fg_made = 0;
  int fg_att = 0;
  int fg3_made = 0;
  int fg3_att = 0;
  int ft_made = 0;
  int ft_att = 0;

  bool operator==(const PlayerLine&) const = default;
};

struct TeamLine {
  std::string name;  // "Thunder"
  std::string city;  // "Oklahoma City"
  int points = 0;
  int wins = 0;
  int losses = 0;
  std::optional<int> turnovers;  // team-line TOV when the source file has one

  /// "Oklahoma City Thunder"
  std::string full_name() const;

  bool operator==(const TeamLine&) const = default;
};

struct TeamAggregates {
  int reb = 0;
  int ast = 0;
  int to = 0;
  int fg_made = 0;
  int fg_att = 0;
  int fg3_made = 0;
  int fg3_att = 0;
  int ft_made = 0;
  int ft_att = 0;

  bool operator==(const TeamAggregates&) const = default;
};

struct GameRecord {
  std::string game_id;
  CivilDate date{2000, 1, 1};
  TeamLine home;
  TeamLine visitor;
  std::vector<PlayerLine> home_players;  // roster order
  std::vector<PlayerLine> visitor_players;
  TokenSeq summary;  // reference story, empty when the file has none

  const TeamLine& team(Side s) const { return s == Side::Home ? home : visitor; }
  const std::vector<PlayerLine>& players(Side s) const {
    return s == Side::Home ? home_players : visitor_players;
  }
  Side winner() const { return home.points > visitor.points ? Side::Home : Side::Visitor; }

  bool operator==(const GameRecord&) const = default;
};

/// Checks every GameRecord/TeamLine/PlayerLine invariant; throws ValidationError.
void validate_game(const GameRecord& game);

/// Parses one game object in the public box-score layout (or the ISO-dated
/// variant written by to_json). `default_id` is used when there is no "game_id".
GameRecord parse_game_json(std::string_view raw, const std::string& default_id);
GameRecord parse_game_object(const nlohmann::json& obj, const std::string& default_id);

/// Serializes in the same layout parse_game_object reads.
nlohmann::json game_to_json(const GameRecord& game);

/// A file holds either one JSON array of games or one game object per line.
/// Games without an id are named `<path>:<index>`.
std::vector<GameRecord> load_games(const std::string& path);
std::vector<GameRecord> parse_games(std::string_view content, const std::string& source_name);

TeamAggregates aggregate_team_stats(const GameRecord& game, Side side);

struct ScheduleEntry {
  CivilDate date;
  std::string game_id;
  Side role;  // this team's venue role
  std::string opponent;

  bool operator==(const ScheduleEntry&) const = default;
};

struct NextGameInfo {
  CivilDate date;
  std::string opponent_name;
  Side opponent_role;

  bool operator==(const NextGameInfo&) const = default;
};

/// Team full name -> that team's games, strictly increasing by date.
class ScheduleIndex {
 public:
  ScheduleIndex() = default;

  /// Throws Error when one team has two different games on the same date.
  /// The same fixture seen twice (any ids) is kept once, under the smallest id.
  static ScheduleIndex build(std::span<const GameRecord> games);

  const std::vector<ScheduleEntry>* games_of(std::string_view team) const;
  std::size_t team_count() const { return by_team_.size(); }
  const std::map<std::string, std::vector<ScheduleEntry>, std::less<>>& teams() const {
    return by_team_;
  }

  bool operator==(const ScheduleIndex&) const = default;

 private:
  std::map<std::string, std::vector<ScheduleEntry>, std::less<>> by_team_;
};

/// The team's first game strictly after `after`; absent for unknown teams.
std::optional<NextGameInfo> next_game(const ScheduleIndex& index, std::string_view team,
                                      const CivilDate& after);

}  // namespace dgt
