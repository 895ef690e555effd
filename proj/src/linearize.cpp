#include "dgt/linearize.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "dgt/error.hpp"
#include "dgt/rng.hpp"

using nlohmann::json;

namespace dgt {

void LinearizationConfig::validate() const {
  if (n_players && *n_players < 0) {
    throw ConfigError("n_players", "must be >= 0 or null, got " + std::to_string(*n_players));
  }
}

void to_json(json& j, const LinearizationConfig& c) {
  j = json{
      {"n_players", c.n_players ? json(*c.n_players) : json(nullptr)},
      {"sort_players", c.sort_players},
      {"include_next_game", c.include_next_game},
      {"include_weekday", c.include_weekday},
      {"include_position", c.include_position},
      {"include_team_sums", c.include_team_sums},
      {"tag_mode", c.tag_mode == TagMode::Full ? "full" : "minimal"},
      {"label_language", c.label_language == Language::EN ? "en" : "de"},
      {"shuffle_seed", c.shuffle_seed ? json(*c.shuffle_seed) : json(nullptr)},
  };
}

void from_json(const json& j, LinearizationConfig& c) {
  if (!j.is_object()) throw ConfigError("$", "linearization config must be an object");
  c = LinearizationConfig{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    auto flag = [&](bool& dst) {
      if (!v.is_boolean()) throw ConfigError(k, "expected true/false");
      dst = v.get<bool>();
    };
    if (k == "n_players") {
      if (v.is_null()) {
        c.n_players.reset();
      } else if (v.is_number_integer()) {
        c.n_players = v.get<int>();
      } else {
        throw ConfigError(k, "expected an integer or null");
      }
    } else if (k == "sort_players") {
      flag(c.sort_players);
    } else if (k == "include_next_game") {
      flag(c.include_next_game);
    } else if (k == "include_weekday") {
      flag(c.include_weekday);
    } else if (k == "include_position") {
      flag(c.include_position);
    } else if (k == "include_team_sums") {
      flag(c.include_team_sums);
    } else if (k == "tag_mode") {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "full") {
        c.tag_mode = TagMode::Full;
      } else if (s == "minimal") {
        c.tag_mode = TagMode::Minimal;
      } else {
        throw ConfigError(k, "expected \"full\" or \"minimal\"");
      }
    } else if (k == "label_language") {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "en") {
        c.label_language = Language::EN;
      } else if (s == "de") {
        c.label_language = Language::DE;
      } else {
        throw ConfigError(k, "expected \"en\" or \"de\"");
      }
    } else if (k == "shuffle_seed") {
      if (v.is_null()) {
        c.shuffle_seed.reset();
      } else if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
        c.shuffle_seed = v.get<std::uint64_t>();
      } else {
        throw ConfigError(k, "expected a non-negative integer or null");
      }
    } else {
      throw ConfigError(k, "unknown field");
    }
  }
  c.validate();
}

// ---------------------------------------------------------------------------

std::vector<PlayerLine> select_players(std::span<const PlayerLine> players, std::optional<int> n,
                                       bool sort, std::optional<std::uint64_t> seed) {
  std::vector<PlayerLine> out(players.begin(), players.end());
  if (sort) {
    std::stable_sort(out.begin(), out.end(), [](const PlayerLine& a, const PlayerLine& b) {
      return std::tie(a.pts, a.reb, a.ast) > std::tie(b.pts, b.reb, b.ast);
    });
  } else {
    Rng rng(seed.value_or(0));
    rng.shuffle(out);
  }
  if (n && static_cast<std::size_t>(std::max(*n, 0)) < out.size()) {
    out.resize(static_cast<std::size_t>(std::max(*n, 0)));
  }
  return out;
}

int format_percent(int made, int att) {
  if (att <= 0) return 0;
  // floor(100 * made / att + 1/2) in integers
  const long long num = 200LL * made + att;
  return static_cast<int>(num / (2LL * att));
}

namespace {

constexpr std::array<const char*, 7> kWeekdaysEn = {"Monday", "Tuesday",  "Wednesday", "Thursday",
                                                    "Friday", "Saturday", "Sunday"};
constexpr std::array<const char*, 7> kWeekdaysDe = {"Montag",  "Dienstag", "Mittwoch", "Donnerstag",
                                                    "Freitag", "Samstag",  "Sonntag"};
constexpr std::array<const char*, 12> kMonthsEn = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};
constexpr std::array<const char*, 12> kMonthsDe = {
    "Januar", "Februar", "M\xC3\xA4rz", "April",   "Mai",      "Juni",
    "Juli",   "August",  "September",   "Oktober", "November", "Dezember"};
constexpr std::array<const char*, 4> kPositionsEn = {"Guard", "Forward", "Center", "Bench"};
constexpr std::array<const char*, 4> kPositionsDe = {"Guard", "Forward", "Center", "Bank"};

void push_tag(TokenSeq& out, const char* tag, const LinearizationConfig& cfg) {
  if (cfg.tag_mode == TagMode::Full) out.emplace_back(tag);
}

void push_name(TokenSeq& out, const std::string& name) { append(out, split_tokens(name)); }

void push_compound(TokenSeq& out, const char* tag, int made, int att,
                   const LinearizationConfig& cfg) {
  push_tag(out, tag, cfg);
  out.push_back(std::to_string(made));
  out.push_back(std::to_string(att));
  out.push_back(std::to_string(format_percent(made, att)));
}

void push_date_words(TokenSeq& out, const CivilDate& d, const LinearizationConfig& cfg) {
  if (cfg.include_weekday) out.push_back(weekday_label(d.weekday(), cfg.label_language));
  out.push_back(month_label(d.month(), cfg.label_language));
  out.push_back(std::to_string(d.year()));
}

}  // namespace

std::string weekday_label(Weekday day, Language lang) {
  const auto i = static_cast<std::size_t>(day);
  return lang == Language::EN ? kWeekdaysEn[i] : kWeekdaysDe[i];
}

std::string month_label(int month, Language lang) {
  const auto i = static_cast<std::size_t>(month - 1);
  return lang == Language::EN ? kMonthsEn.at(i) : kMonthsDe.at(i);
}

std::string position_label(Position pos, Language lang) {
  const auto i = static_cast<std::size_t>(pos);
  return lang == Language::EN ? kPositionsEn[i] : kPositionsDe[i];
}

TokenSeq encode_player(const PlayerLine& p, const LinearizationConfig& cfg) {
  TokenSeq out{"<PLAYER>"};
  push_name(out, p.name);
  const bool full = cfg.tag_mode == TagMode::Full;
  const std::pair<const char*, int> scalars[] = {{"<PTS>", p.pts}, {"<REB>", p.reb},
                                                 {"<AST>", p.ast}, {"<STL>", p.stl},
                                                 {"<BLK>", p.blk}, {"<PF>", p.pf}};
  for (const auto& [tag, value] : scalars) {
    if (full && value == 0) continue;
    push_tag(out, tag, cfg);
    out.push_back(std::to_string(value));
  }
  const std::tuple<const char*, int, int> compounds[] = {{"<FG>", p.fg_made, p.fg_att},
                                                         {"<FG3>", p.fg3_made, p.fg3_att},
                                                         {"<FT>", p.ft_made, p.ft_att}};
  for (const auto& [tag, made, att] : compounds) {
    if (full && made == 0 && att == 0) continue;
    push_compound(out, tag, made, att, cfg);
  }
  if (cfg.include_position) {
    push_tag(out, "<POS>", cfg);
    out.push_back(position_label(p.position, cfg.label_language));
  }
  return out;
}

TokenSeq encode_team(const TeamLine& t, const TeamAggregates& agg, bool won,
                     const std::optional<NextGameInfo>& next, const LinearizationConfig& cfg) {
  TokenSeq out{won ? "<WINNER>" : "<LOSER>"};
  push_name(out, t.full_name());
  const std::pair<const char*, int> head[] = {
      {"<PTS>", t.points}, {"<WINS>", t.wins}, {"<LOSSES>", t.losses}};
  for (const auto& [tag, value] : head) {
    push_tag(out, tag, cfg);
    out.push_back(std::to_string(value));
  }
  if (cfg.include_team_sums) {
    const std::pair<const char*, int> sums[] = {
        {"<REB>", agg.reb}, {"<AST>", agg.ast}, {"<TO>", agg.to}};
    for (const auto& [tag, value] : sums) {
      push_tag(out, tag, cfg);
      out.push_back(std::to_string(value));
    }
    push_compound(out, "<FG>", agg.fg_made, agg.fg_att, cfg);
    push_compound(out, "<FG3>", agg.fg3_made, agg.fg3_att, cfg);
    push_compound(out, "<FT>", agg.ft_made, agg.ft_att, cfg);
  }
  if (cfg.include_next_game && next) {
    out.emplace_back("<NEXT>");
    push_date_words(out, next->date, cfg);
    out.emplace_back(next->opponent_role == Side::Home ? "<HOME>" : "<VIS>");
    push_name(out, next->opponent_name);
  }
  return out;
}

TokenSeq encode_date(const CivilDate& date, const LinearizationConfig& cfg) {
  TokenSeq out{"<DATE>"};
  push_date_words(out, date, cfg);
  return out;
}

TokenSeq linearize_game(const GameRecord& g, const ScheduleIndex& index,
                        const LinearizationConfig& cfg) {
  cfg.validate();
  validate_game(g);

  TokenSeq out = encode_date(g.date, cfg);
  const Side winner = g.winner();
  for (Side side : {Side::Home, Side::Visitor}) {
    const TeamLine& team = g.team(side);
    std::optional<NextGameInfo> next;
    if (cfg.include_next_game) next = next_game(index, team.full_name(), g.date);
    append(out, encode_team(team, aggregate_team_stats(g, side), side == winner, next, cfg));
  }

  if (cfg.n_players && *cfg.n_players == 0) return out;

  // Each game gets its own shuffle stream so that one seed does not impose
  // the same permutation pattern on every roster.
  std::optional<std::uint64_t> seed;
  if (!cfg.sort_players) {
    const std::string key =
        g.date.iso() + "\n" + g.home.full_name() + "\n" + g.visitor.full_name();
    seed = derive_seed(cfg.shuffle_seed.value_or(0), {fnv1a64(key)});
  }
  for (Side side : {winner, opposite(winner)}) {
    out.emplace_back(side == winner ? "<WINNER>" : "<LOSER>");
    std::optional<std::uint64_t> side_seed;
    if (seed) side_seed = derive_seed(*seed, {static_cast<std::uint64_t>(side)});
    for (const auto& p : select_players(g.players(side), cfg.n_players, cfg.sort_players,
                                        side_seed)) {
      append(out, encode_player(p, cfg));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

enum class SlotKind { DateWord, Position };

template <std::size_t N>
std::optional<std::size_t> find_label(const std::array<const char*, N>& table,
                                      const std::string& word) {
  for (std::size_t i = 0; i < N; ++i) {
    if (word == table[i]) return i;
  }
  return std::nullopt;
}

std::string translate(const std::string& word, SlotKind kind, Language lang) {
  if (kind == SlotKind::Position) {
    auto i = find_label(kPositionsEn, word);
    if (!i) i = find_label(kPositionsDe, word);
    if (!i) throw Error("unknown position label '" + word + "'");
    return lang == Language::EN ? kPositionsEn[*i] : kPositionsDe[*i];
  }
  if (auto i = find_label(kWeekdaysEn, word)) return lang == Language::EN ? word : kWeekdaysDe[*i];
  if (auto i = find_label(kWeekdaysDe, word)) return lang == Language::DE ? word : kWeekdaysEn[*i];
  if (auto i = find_label(kMonthsEn, word)) return lang == Language::EN ? word : kMonthsDe[*i];
  if (auto i = find_label(kMonthsDe, word)) return lang == Language::DE ? word : kMonthsEn[*i];
  throw Error("unknown date label '" + word + "'");
}

bool is_stat_tag(const std::string& t) {
  static const std::array<const char*, 10> kTags = {"<PTS>", "<REB>", "<AST>", "<STL>", "<BLK>",
                                                    "<PF>",  "<FG>",  "<FG3>", "<FT>",  "<POS>"};
  return std::any_of(kTags.begin(), kTags.end(), [&](const char* k) { return t == k; });
}

bool ends_player_block(const std::string& t) {
  return t == "<PLAYER>" || t == "<WINNER>" || t == "<LOSER>";
}

}  // namespace

TokenSeq localize_labels(const TokenSeq& seq, Language lang) {
  TokenSeq out = seq;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string& t = out[i];
    if (t == "<DATE>" || t == "<NEXT>") {
      // optional weekday, month, then the year
      std::size_t j = i + 1;
      for (; j < out.size() && j <= i + 2 && !is_number_token(out[j]); ++j) {
        out[j] = translate(out[j], SlotKind::DateWord, lang);
      }
      if (j == i + 1) throw Error("missing month after " + t);
      i = j - 1;
    } else if (t == "<POS>") {
      if (i + 1 >= out.size()) throw Error("missing label after <POS>");
      out[i + 1] = translate(out[i + 1], SlotKind::Position, lang);
      ++i;
    } else if (t == "<PLAYER>") {
      // Blocks without stat tags but with numbers come from minimal tag mode;
      // there the position, if any, is the last token of the block.
      std::size_t end = i + 1;
      bool tagged = false;
      bool numbers = false;
      while (end < out.size() && !ends_player_block(out[end])) {
        tagged = tagged || is_stat_tag(out[end]);
        numbers = numbers || is_number_token(out[end]);
        ++end;
      }
      if (!tagged && numbers && !is_number_token(out[end - 1])) {
        out[end - 1] = translate(out[end - 1], SlotKind::Position, lang);
      }
    }
  }
  return out;
}

std::vector<NamedConfig> sweep_configs(SweepKind kind) {
  const LinearizationConfig base;  // 3 best players, sorted, everything on, full tags
  std::vector<NamedConfig> out;
  if (kind == SweepKind::NPlayerSweep) {
    for (int n = 0; n <= 8; ++n) {
      LinearizationConfig c = base;
      c.n_players = n;
      out.push_back({"players_" + std::to_string(n), c});
    }
    LinearizationConfig all = base;
    all.n_players.reset();
    out.push_back({"players_all", all});
    return out;
  }

  auto with = [&](auto edit) {
    LinearizationConfig c = base;
    edit(c);
    return c;
  };
  out.push_back({"Baseline (3 players, sorted)", base});
  out.push_back({"No player", with([](auto& c) { c.n_players = 0; })});
  out.push_back({"All players, sorted", with([](auto& c) { c.n_players.reset(); })});
  out.push_back({"All players, shuffled", with([](auto& c) {
                   c.n_players.reset();
                   c.sort_players = false;
                   c.shuffle_seed = 0;
                 })});
  out.push_back({"(1) No next game", with([](auto& c) { c.include_next_game = false; })});
  out.push_back({"(2) No week day", with([](auto& c) { c.include_weekday = false; })});
  out.push_back({"(3) No player position", with([](auto& c) { c.include_position = false; })});
  out.push_back({"(4) No team-level sums", with([](auto& c) { c.include_team_sums = false; })});
  out.push_back({"(5) Remove most tags", with([](auto& c) { c.tag_mode = TagMode::Minimal; })});
  out.push_back({"(1) to (5)", with([](auto& c) {
                   c.include_next_game = false;
                   c.include_weekday = false;
                   c.include_position = false;
                   c.include_team_sums = false;
                   c.tag_mode = TagMode::Minimal;
                 })});
  return out;
}

}  // namespace dgt
