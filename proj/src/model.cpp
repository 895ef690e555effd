#include "dgt/model.hpp"

#include <algorithm>
#include <charconv>

#include "dgt/error.hpp"
#include "dgt/text_io.hpp"

using nlohmann::json;

namespace dgt {

std::string TeamLine::full_name() const {
  if (city.empty()) return name;
  if (name.empty()) return city;
  return city + " " + name;
}

namespace {

void check_count(const std::string& id, const std::string& field, int value) {
  if (value < 0) throw ValidationError(id, field, "negative count " + std::to_string(value));
}

void check_le(const std::string& id, const std::string& where, const char* lhs, int a,
              const char* rhs, int b) {
  if (a > b) {
    throw ValidationError(id, where + "." + lhs,
                          std::string(lhs) + " > " + rhs + " (" + std::to_string(a) + " > " +
                              std::to_string(b) + ")");
  }
}

void validate_player(const std::string& id, const std::string& where, const PlayerLine& p) {
  if (p.name.empty()) throw ValidationError(id, where + ".name", "empty player name");
  const std::pair<const char*, int> counts[] = {
      {"pts", p.pts},         {"reb", p.reb},         {"ast", p.ast},
      {"stl", p.stl},         {"blk", p.blk},         {"pf", p.pf},
      {"to", p.to},           {"fg_made", p.fg_made}, {"fg_att", p.fg_att},
      {"fg3_made", p.fg3_made}, {"fg3_att", p.fg3_att}, {"ft_made", p.ft_made},
      {"ft_att", p.ft_att}};
  for (const auto& [name, value] : counts) check_count(id, where + "." + name, value);
  check_le(id, where, "fg_made", p.fg_made, "fg_att", p.fg_att);
  check_le(id, where, "fg3_made", p.fg3_made, "fg3_att", p.fg3_att);
  check_le(id, where, "ft_made", p.ft_made, "ft_att", p.ft_att);
  check_le(id, where, "fg3_made", p.fg3_made, "fg_made", p.fg_made);
  check_le(id, where, "fg3_att", p.fg3_att, "fg_att", p.fg_att);
}

void validate_team(const std::string& id, const std::string& where, const TeamLine& t) {
  if (t.name.empty() && t.city.empty()) throw ValidationError(id, where + ".name", "missing");
  check_count(id, where + ".points", t.points);
  check_count(id, where + ".wins", t.wins);
  check_count(id, where + ".losses", t.losses);
  if (t.turnovers) check_count(id, where + ".turnovers", *t.turnovers);
}

}  // namespace

void validate_game(const GameRecord& g) {
  validate_team(g.game_id, "home", g.home);
  validate_team(g.game_id, "visitor", g.visitor);
  if (g.home.points == g.visitor.points) {
    throw ValidationError(g.game_id, "points",
                          "tied score " + std::to_string(g.home.points) + "-" +
                              std::to_string(g.visitor.points));
  }
  if (g.home_players.empty()) throw ValidationError(g.game_id, "home_players", "no player lines");
  if (g.visitor_players.empty()) {
    throw ValidationError(g.game_id, "visitor_players", "no player lines");
  }
  for (std::size_t i = 0; i < g.home_players.size(); ++i) {
    validate_player(g.game_id, "home_players[" + std::to_string(i) + "]", g.home_players[i]);
  }
  for (std::size_t i = 0; i < g.visitor_players.size(); ++i) {
    validate_player(g.game_id, "visitor_players[" + std::to_string(i) + "]",
                    g.visitor_players[i]);
  }
}

// ---------------------------------------------------------------------------
// JSON reading

namespace {

struct Reader {
  const std::string& id;

  // Box-score values are strings ("38", "N/A", "") or integers.
  int number(const json& v, const std::string& field) const {
    if (v.is_null()) return 0;
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d != static_cast<int>(d)) throw ValidationError(id, field, "non-integer count");
      return static_cast<int>(d);
    }
    if (!v.is_string()) throw ValidationError(id, field, "expected a number");
    const auto& s = v.get_ref<const std::string&>();
    if (s.empty() || s == "N/A" || s == "NA") return 0;
    int out = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ValidationError(id, field, "not a number: '" + s + "'");
    }
    return out;
  }

  std::string text(const json& v, const std::string& field) const {
    if (v.is_null()) return {};
    if (!v.is_string()) throw ValidationError(id, field, "expected a string");
    return v.get<std::string>();
  }

  const json* member(const json& obj, const char* key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  const json& object(const json& obj, const char* key) const {
    const json* v = member(obj, key);
    if (!v) throw ValidationError(id, key, "missing");
    if (!v->is_object()) throw ValidationError(id, key, "expected an object");
    return *v;
  }
};

Position parse_position(const Reader& r, const json* v, const std::string& field) {
  if (!v || v->is_null()) return Position::Bench;
  const std::string s = r.text(*v, field);
  if (s.empty() || s == "N/A") return Position::Bench;
  if (s == "G") return Position::Guard;
  if (s == "F") return Position::Forward;
  if (s == "C") return Position::Center;
  throw ValidationError(r.id, field, "unknown start position '" + s + "'");
}

const char* position_code(Position p) {
  switch (p) {
    case Position::Guard: return "G";
    case Position::Forward: return "F";
    case Position::Center: return "C";
    case Position::Bench: return "";
  }
  return "";
}

TeamLine parse_team(const Reader& r, const json& game, const char* prefix, const char* line_key) {
  const json& line = r.object(game, line_key);
  TeamLine t;
  const std::string p(prefix);
  if (const json* v = r.member(game, (p + "_name").c_str())) t.name = r.text(*v, p + "_name");
  if (const json* v = r.member(game, (p + "_city").c_str())) t.city = r.text(*v, p + "_city");
  if (t.name.empty()) {
    if (const json* v = r.member(line, "TEAM-NAME")) t.name = r.text(*v, "TEAM-NAME");
  }
  if (t.city.empty()) {
    if (const json* v = r.member(line, "TEAM-CITY")) t.city = r.text(*v, "TEAM-CITY");
  }
  const std::string where = std::string(line_key) + ".";
  auto count = [&](const char* key) -> int {
    const json* v = r.member(line, key);
    return v ? r.number(*v, where + key) : 0;
  };
  t.points = count("TEAM-PTS");
  t.wins = count("TEAM-WINS");
  t.losses = count("TEAM-LOSSES");
  if (const json* v = r.member(line, "TEAM-TOV"); v && !v->is_null()) {
    t.turnovers = r.number(*v, where + "TEAM-TOV");
  }
  return t;
}

struct RawPlayer {
  PlayerLine line;
  std::string team_city;
  std::string team_name;
  bool starter = false;
};

std::vector<RawPlayer> parse_box_score(const Reader& r, const json& box) {
  const json* names = r.member(box, "PLAYER_NAME");
  if (!names || !names->is_object()) {
    throw ValidationError(r.id, "box_score.PLAYER_NAME", "missing or not an object");
  }
  std::vector<std::pair<long, std::string>> keys;
  for (auto it = names->begin(); it != names->end(); ++it) {
    long idx = 0;
    const std::string& k = it.key();
    auto [p, ec] = std::from_chars(k.data(), k.data() + k.size(), idx);
    if (ec != std::errc() || p != k.data() + k.size()) {
      throw ValidationError(r.id, "box_score.PLAYER_NAME", "non-numeric player key '" + k + "'");
    }
    keys.emplace_back(idx, k);
  }
  std::sort(keys.begin(), keys.end());

  auto cell = [&](const char* stat, const std::string& key) -> const json* {
    const json* col = r.member(box, stat);
    if (!col || !col->is_object()) return nullptr;
    return r.member(*col, key.c_str());
  };

  std::vector<RawPlayer> out;
  for (const auto& [idx, key] : keys) {
    RawPlayer rp;
    const std::string where = "box_score[" + key + "]";
    rp.line.name = r.text(*cell("PLAYER_NAME", key), where + ".PLAYER_NAME");
    auto num = [&](const char* stat) {
      const json* v = cell(stat, key);
      return v ? r.number(*v, where + "." + stat) : 0;
    };
    rp.line.pts = num("PTS");
    rp.line.reb = num("REB");
    rp.line.ast = num("AST");
    rp.line.stl = num("STL");
    rp.line.blk = num("BLK");
    rp.line.pf = num("PF");
    rp.line.to = num("TO");
    rp.line.fg_made = num("FGM");
    rp.line.fg_att = num("FGA");
    rp.line.fg3_made = num("FG3M");
    rp.line.fg3_att = num("FG3A");
    rp.line.ft_made = num("FTM");
    rp.line.ft_att = num("FTA");
    rp.line.position = parse_position(r, cell("START_POSITION", key), where + ".START_POSITION");
    rp.starter = rp.line.position != Position::Bench;
    if (const json* v = cell("TEAM_CITY", key)) rp.team_city = r.text(*v, where + ".TEAM_CITY");
    if (const json* v = cell("TEAM_NAME", key)) rp.team_name = r.text(*v, where + ".TEAM_NAME");
    out.push_back(std::move(rp));
  }
  return out;
}

// Same-city games carry no per-player team name in the public files. Box
// scores list the visiting roster first, each roster starting with its
// starters, so the home roster begins at the first starter after a bench player.
void split_same_city(const Reader& r, std::vector<RawPlayer>& players, GameRecord& g) {
  std::size_t boundary = 0;
  for (std::size_t i = 1; i < players.size(); ++i) {
    if (players[i].starter && !players[i - 1].starter) {
      boundary = i;
      break;
    }
  }
  if (boundary == 0) {
    throw ValidationError(r.id, "box_score.TEAM_CITY",
                          "both teams are from '" + g.home.city +
                              "' and the rosters cannot be separated");
  }
  for (std::size_t i = 0; i < players.size(); ++i) {
    (i < boundary ? g.visitor_players : g.home_players).push_back(std::move(players[i].line));
  }
}

}  // namespace

GameRecord parse_game_object(const json& obj, const std::string& default_id) {
  std::string id = default_id;
  if (obj.is_object()) {
    if (auto it = obj.find("game_id"); it != obj.end() && it->is_string()) {
      id = it->get<std::string>();
    }
  }
  const Reader r{id};
  if (!obj.is_object()) throw ValidationError(id, "$", "expected a JSON object per game");

  GameRecord g;
  g.game_id = id;

  const json* date = r.member(obj, "date");
  if (!date) date = r.member(obj, "day");
  if (!date) throw ValidationError(id, "date", "missing (expected 'date' or 'day')");
  try {
    g.date = CivilDate::parse(r.text(*date, "date"));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(id, "date", e.what());
  }

  g.home = parse_team(r, obj, "home", "home_line");
  g.visitor = parse_team(r, obj, "vis", "vis_line");

  auto players = parse_box_score(r, r.object(obj, "box_score"));
  const bool have_names = std::all_of(players.begin(), players.end(),
                                      [](const RawPlayer& p) { return !p.team_name.empty(); });
  if (have_names) {
    for (auto& p : players) {
      auto matches = [&](const TeamLine& t) {
        return p.team_name == t.name || p.team_name == t.full_name();
      };
      if (matches(g.home)) {
        g.home_players.push_back(std::move(p.line));
      } else if (matches(g.visitor)) {
        g.visitor_players.push_back(std::move(p.line));
      } else {
        throw ValidationError(id, "box_score.TEAM_NAME",
                              "player '" + p.line.name + "' belongs to neither team");
      }
    }
  } else if (g.home.city == g.visitor.city) {
    split_same_city(r, players, g);
  } else {
    for (auto& p : players) {
      if (p.team_city == g.home.city) {
        g.home_players.push_back(std::move(p.line));
      } else if (p.team_city == g.visitor.city) {
        g.visitor_players.push_back(std::move(p.line));
      } else {
        throw ValidationError(id, "box_score.TEAM_CITY",
                              "player '" + p.line.name + "' has city '" + p.team_city +
                                  "', matching neither team");
      }
    }
  }

  if (const json* s = r.member(obj, "summary")) {
    if (s->is_string()) {
      g.summary = split_tokens(s->get<std::string>());
    } else if (s->is_array()) {
      for (const auto& t : *s) {
        // Tokens in the public files never contain spaces; be lenient anyway.
        append(g.summary, split_tokens(r.text(t, "summary")));
      }
    } else if (!s->is_null()) {
      throw ValidationError(id, "summary", "expected a string or a token list");
    }
  }

  validate_game(g);
  return g;
}

GameRecord parse_game_json(std::string_view raw, const std::string& default_id) {
  json obj;
  try {
    obj = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in '" + default_id + "': " + e.what(), e.byte);
  }
  return parse_game_object(obj, default_id);
}

json game_to_json(const GameRecord& g) {
  json out;
  out["game_id"] = g.game_id;
  out["date"] = g.date.iso();
  out["home_name"] = g.home.name;
  out["home_city"] = g.home.city;
  out["vis_name"] = g.visitor.name;
  out["vis_city"] = g.visitor.city;
  auto line = [](const TeamLine& t) {
    json l;
    l["TEAM-NAME"] = t.name;
    l["TEAM-CITY"] = t.city;
    l["TEAM-PTS"] = std::to_string(t.points);
    l["TEAM-WINS"] = std::to_string(t.wins);
    l["TEAM-LOSSES"] = std::to_string(t.losses);
    if (t.turnovers) l["TEAM-TOV"] = std::to_string(*t.turnovers);
    return l;
  };
  out["home_line"] = line(g.home);
  out["vis_line"] = line(g.visitor);

  json box = json::object();
  std::size_t idx = 0;
  auto put = [&](const std::vector<PlayerLine>& players, const TeamLine& team) {
    for (const auto& p : players) {
      const std::string k = std::to_string(idx++);
      box["PLAYER_NAME"][k] = p.name;
      box["START_POSITION"][k] = position_code(p.position);
      box["TEAM_CITY"][k] = team.city;
      box["TEAM_NAME"][k] = team.name;
      box["PTS"][k] = std::to_string(p.pts);
      box["REB"][k] = std::to_string(p.reb);
      box["AST"][k] = std::to_string(p.ast);
      box["STL"][k] = std::to_string(p.stl);
      box["BLK"][k] = std::to_string(p.blk);
      box["PF"][k] = std::to_string(p.pf);
      box["TO"][k] = std::to_string(p.to);
      box["FGM"][k] = std::to_string(p.fg_made);
      box["FGA"][k] = std::to_string(p.fg_att);
      box["FG3M"][k] = std::to_string(p.fg3_made);
      box["FG3A"][k] = std::to_string(p.fg3_att);
      box["FTM"][k] = std::to_string(p.ft_made);
      box["FTA"][k] = std::to_string(p.ft_att);
    }
  };
  put(g.visitor_players, g.visitor);
  put(g.home_players, g.home);
  out["box_score"] = std::move(box);
  out["summary"] = g.summary;
  return out;
}

std::vector<GameRecord> parse_games(std::string_view content, const std::string& source) {
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
  const auto first = content.find_first_not_of(" \t\r\n");
  std::vector<GameRecord> games;
  if (first == std::string_view::npos) return games;

  if (content[first] == '[') {
    json arr;
    try {
      arr = json::parse(content);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed JSON in '" + source + "': " + e.what(), e.byte);
    }
    games.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      games.push_back(parse_game_object(arr[i], source + ":" + std::to_string(i)));
    }
    return games;
  }

  // One object per line.
  std::size_t pos = 0;
  std::size_t index = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      const std::string id = source + ":" + std::to_string(index++);
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in '" + id + "': " + e.what(), pos + e.byte);
      }
      games.push_back(parse_game_object(obj, id));
    }
    pos = end + 1;
  }
  return games;
}

std::vector<GameRecord> load_games(const std::string& path) {
  return parse_games(read_file(path), path);
}

TeamAggregates aggregate_team_stats(const GameRecord& game, Side side) {
  TeamAggregates a;
  int player_to = 0;
  for (const auto& p : game.players(side)) {
    a.reb += p.reb;
    a.ast += p.ast;
    player_to += p.to;
    a.fg_made += p.fg_made;
    a.fg_att += p.fg_att;
    a.fg3_made += p.fg3_made;
    a.fg3_att += p.fg3_att;
    a.ft_made += p.ft_made;
    a.ft_att += p.ft_att;
  }
  a.to = game.team(side).turnovers.value_or(player_to);
  return a;
}

// ---------------------------------------------------------------------------
// Schedule

ScheduleIndex ScheduleIndex::build(std::span<const GameRecord> games) {
  ScheduleIndex index;
  for (const auto& g : games) {
    const std::string home = g.home.full_name();
    const std::string vis = g.visitor.full_name();
    index.by_team_[home].push_back({g.date, g.game_id, Side::Home, vis});
    index.by_team_[vis].push_back({g.date, g.game_id, Side::Visitor, home});
  }
  for (auto& [team, entries] : index.by_team_) {
    std::sort(entries.begin(), entries.end(), [](const ScheduleEntry& a, const ScheduleEntry& b) {
      return std::tie(a.date, a.role, a.opponent, a.game_id) <
             std::tie(b.date, b.role, b.opponent, b.game_id);
    });
    std::vector<ScheduleEntry> unique;
    for (auto& e : entries) {
      if (!unique.empty() && unique.back().date == e.date) {
        if (unique.back().role == e.role && unique.back().opponent == e.opponent) continue;
        throw Error("ambiguous schedule for '" + team + "' on " + e.date.iso() +
                    ": games '" + unique.back().game_id + "' and '" + e.game_id + "'");
      }
      unique.push_back(std::move(e));
    }
    entries = std::move(unique);
  }
  return index;
}

const std::vector<ScheduleEntry>* ScheduleIndex::games_of(std::string_view team) const {
  auto it = by_team_.find(team);
  return it == by_team_.end() ? nullptr : &it->second;
}

std::optional<NextGameInfo> next_game(const ScheduleIndex& index, std::string_view team,
                                      const CivilDate& after) {
  const auto* entries = index.games_of(team);
  if (!entries) return std::nullopt;
  auto it = std::upper_bound(entries->begin(), entries->end(), after,
                             [](const CivilDate& d, const ScheduleEntry& e) { return d < e.date; });
  if (it == entries->end()) return std::nullopt;
  return NextGameInfo{it->date, it->opponent, opposite(it->role)};
}

}  // namespace dgt
