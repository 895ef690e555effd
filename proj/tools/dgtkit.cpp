#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgt/casing.hpp"
#include "dgt/corpus.hpp"
#include "dgt/error.hpp"
#include "dgt/eval.hpp"
#include "dgt/linearize.hpp"
#include "dgt/model.hpp"
#include "dgt/pipeline.hpp"
#include "dgt/subword.hpp"
#include "dgt/text_io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace dgt;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string out_dir;
  std::size_t jobs = 1;
  CLI::Option* jobs_opt = nullptr;
};

// Randomized operations refuse to run without an explicit seed.
std::uint64_t need_seed(const Globals& g, const std::string& what) {
  if (g.seed_opt->count() == 0) throw ConfigError("--seed", what + " needs an explicit seed");
  return g.seed;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content << std::flush;
  } else {
    write_file_atomic(path, content);
  }
}

fs::path in_out_dir(const Globals& g, const std::string& name) {
  if (g.out_dir.empty()) throw ConfigError("--out-dir", "required for this command");
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

std::vector<GameRecord> load_all(const std::vector<std::string>& files) {
  std::vector<GameRecord> out;
  for (const auto& f : files) {
    auto games = load_games(f);
    out.insert(out.end(), std::make_move_iterator(games.begin()),
               std::make_move_iterator(games.end()));
  }
  return out;
}

std::vector<RewriteRule> rules_for(const std::string& fixes) {
  if (fixes == "none") return {};
  if (fixes == "default") return default_output_fixes();
  return load_rules(fixes);
}

BpeModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return BpeModel::load(in);
}

struct LinearizeArgs {
  std::vector<std::string> games;
  std::vector<std::string> schedule;
  std::string config;
  std::string n_players;
  std::string lang;
  bool minimal = false;
  bool shuffle = false;
  std::string out;
  std::string ids;
};

LinearizationConfig linearize_config(const LinearizeArgs& a, const Globals& g) {
  LinearizationConfig cfg;
  if (!a.config.empty()) {
    try {
      cfg = json::parse(read_file(a.config)).get<LinearizationConfig>();
    } catch (const json::exception& e) {
      throw ConfigError(a.config, e.what());
    }
  }
  if (a.n_players == "all") {
    cfg.n_players.reset();
  } else if (!a.n_players.empty()) {
    cfg.n_players = std::stoi(a.n_players);
  }
  if (a.lang == "de") cfg.label_language = Language::DE;
  if (a.lang == "en") cfg.label_language = Language::EN;
  if (a.minimal) cfg.tag_mode = TagMode::Minimal;
  if (a.shuffle) cfg.sort_players = false;
  if (!cfg.sort_players && !cfg.shuffle_seed) cfg.shuffle_seed = need_seed(g, "player shuffling");
  cfg.validate();
  return cfg;
}

// "(1) No next game" -> "1_no_next_game"
std::string file_stem(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::vector<TokenSeq> linearize_all(const std::vector<GameRecord>& games,
                                    const ScheduleIndex& index, const LinearizationConfig& cfg) {
  std::vector<TokenSeq> lines;
  lines.reserve(games.size());
  for (const auto& game : games) lines.push_back(linearize_game(game, index, cfg));
  return lines;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dgtkit: box-score linearization, corpus building and evaluation"};
  app.require_subcommand(1);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for every randomized operation");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  g.jobs_opt = app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::function<int()> action;

  // parse
  {
    auto* cmd = app.add_subcommand("parse", "Validate game files and print them as JSON lines");
    static std::vector<std::string> files;
    static std::string out;
    cmd->add_option("files", files, "Game files (JSON array or JSON lines)")->required();
    cmd->add_option("-o,--out", out, "Output file (default stdout)");
    cmd->callback([&] {
      action = [] {
        std::string text;
        for (const auto& game : load_all(files)) text += game_to_json(game).dump() + "\n";
        write_output(out, text);
        return 0;
      };
    });
  }

  // linearize
  static LinearizeArgs lin;
  auto add_linearize_options = [](CLI::App* cmd, LinearizeArgs& a) {
    cmd->add_option("-g,--games", a.games, "Game files to linearize")->required();
    cmd->add_option("--schedule", a.schedule, "Game files for next-game lookup (default --games)");
    cmd->add_option("-c,--config", a.config, "Linearization config JSON");
    cmd->add_option("-n,--n-players", a.n_players, "Players per team, or 'all'");
    cmd->add_option("--lang", a.lang, "Label language")->check(CLI::IsMember({"en", "de"}));
    cmd->add_flag("--minimal", a.minimal, "Minimal tag mode");
    cmd->add_flag("--shuffle", a.shuffle, "Shuffle players instead of sorting");
  };
  {
    auto* cmd = app.add_subcommand("linearize", "Linearize games, one line per game");
    add_linearize_options(cmd, lin);
    cmd->add_option("-o,--out", lin.out, "Output file (default stdout)");
    cmd->add_option("--ids", lin.ids, "Write the game id of each line here");
    cmd->callback([&] {
      action = [&] {
        const auto cfg = linearize_config(lin, g);
        const auto games = load_all(lin.games);
        const auto index = ScheduleIndex::build(lin.schedule.empty() ? games : load_all(lin.schedule));
        write_output(lin.out, format_lines(linearize_all(games, index, cfg)));
        if (!lin.ids.empty()) {
          std::vector<TokenSeq> ids;
          for (const auto& game : games) ids.push_back({game.game_id});
          write_file_atomic(lin.ids, format_lines(ids));
        }
        return 0;
      };
    });
  }

  // sweep
  {
    auto* cmd = app.add_subcommand("sweep", "Linearize games under every config of a sweep");
    static LinearizeArgs a;
    static std::string kind = "players";
    cmd->add_option("-g,--games", a.games, "Game files")->required();
    cmd->add_option("--schedule", a.schedule, "Game files for next-game lookup");
    cmd->add_option("--kind", kind, "players or ablations")
        ->check(CLI::IsMember({"players", "ablations"}));
    cmd->callback([&] {
      action = [&] {
        const auto games = load_all(a.games);
        const auto index = ScheduleIndex::build(a.schedule.empty() ? games : load_all(a.schedule));
        json configs = json::array();
        for (const auto& nc : sweep_configs(kind == "players" ? SweepKind::NPlayerSweep
                                                              : SweepKind::Table6Ablations)) {
          const std::string file = file_stem(nc.name) + ".txt";
          write_file_atomic(in_out_dir(g, file), format_lines(linearize_all(games, index, nc.config)));
          configs.push_back({{"name", nc.name}, {"config", nc.config}, {"file", file}});
        }
        write_file_atomic(in_out_dir(g, "sweep.json"), configs.dump(2) + "\n");
        return 0;
      };
    });
  }

  // build-corpus
  {
    auto* cmd = app.add_subcommand("build-corpus", "Corpus construction operations");
    cmd->require_subcommand(1);

    auto* filter = cmd->add_subcommand("filter", "Filter a parallel corpus");
    static std::string src, tgt, keep;
    static FilterOptions fopt;
    filter->add_option("--source", src)->required()->check(CLI::ExistingFile);
    filter->add_option("--target", tgt)->required()->check(CLI::ExistingFile);
    filter->add_option("--keep-lines", keep, "0-based line numbers to keep, one per line")
        ->check(CLI::ExistingFile);
    filter->add_option("--max-len", fopt.max_len);
    filter->add_option("--max-ratio", fopt.max_ratio);
    filter->callback([&] {
      action = [&] {
        const auto s = read_lines(src);
        const auto t = read_lines(tgt);
        if (s.size() != t.size()) throw Error("source and target line counts differ");
        std::vector<ParallelPair> pairs;
        for (std::size_t i = 0; i < s.size(); ++i) pairs.push_back({s[i], t[i]});
        if (!keep.empty()) {
          std::set<std::size_t> lines;
          for (const auto& l : read_lines(keep)) {
            if (!l.empty()) lines.insert(std::stoull(l.front()));
          }
          fopt.keep_lines = std::move(lines);
        }
        const auto r = filter_pairs(pairs, fopt);
        std::vector<TokenSeq> ks, kt;
        for (const auto& p : r.pairs) {
          ks.push_back(p.source);
          kt.push_back(p.target);
        }
        write_file_atomic(in_out_dir(g, "filtered.src"), format_lines(ks));
        write_file_atomic(in_out_dir(g, "filtered.tgt"), format_lines(kt));
        std::cerr << "kept " << r.report.kept << "/" << r.report.input << " (langid "
                  << r.report.removed_langid << ", empty " << r.report.removed_empty << ", length "
                  << r.report.removed_length << ", ratio " << r.report.removed_ratio << ")\n";
        return 0;
      };
    });

    auto* split = cmd->add_subcommand("split", "Split documents at sentence boundaries");
    static std::string split_in, split_model, split_out;
    static std::size_t max_subwords = 1100;
    static bool split_no_casing = false;
    split->add_option("-i,--input", split_in, "Doc-level file")->required()->check(CLI::ExistingFile);
    split->add_option("-m,--model", split_model, "BPE model")->required()->check(CLI::ExistingFile);
    split->add_option("--max-subwords", max_subwords);
    split->add_flag("--no-casing", split_no_casing, "Count without inline casing tags");
    split->add_option("-o,--out", split_out);
    split->callback([&] {
      action = [&] {
        const auto model = load_model(split_model);
        const SubwordCounter count = [&](const TokenSeq& s) {
          return apply_bpe(model, split_no_casing ? s : apply_inline_casing(s)).size();
        };
        std::vector<Document> docs;
        std::size_t oversized = 0;
        for (const auto& d : read_documents(split_in)) {
          for (auto& p : split_document(d, max_subwords, count)) {
            oversized += p.oversized ? 1 : 0;
            docs.push_back(std::move(p.doc));
          }
        }
        if (oversized) std::cerr << oversized << " oversized single-sentence pieces\n";
        write_output(split_out, format_documents(docs));
        return 0;
      };
    });

    auto* pseudo = cmd->add_subcommand("pseudo-docs", "Group sentences into pseudo-documents");
    static std::string pseudo_in, pseudo_out;
    static PseudoDocOptions popt;
    pseudo->add_option("-i,--input", pseudo_in, "One sentence per line")->required()->check(CLI::ExistingFile);
    pseudo->add_option("--min-len", popt.min_len);
    pseudo->add_option("--max-len", popt.max_len);
    pseudo->add_option("-o,--out", pseudo_out);
    pseudo->callback([&] {
      action = [&] {
        const auto seed = need_seed(g, "pseudo-docs");
        std::vector<TokenSeq> sentences;
        for (auto& s : read_lines(pseudo_in)) {
          if (!s.empty()) sentences.push_back(std::move(s));
        }
        write_output(pseudo_out, format_documents(make_pseudo_documents(std::move(sentences), seed, popt)));
        return 0;
      };
    });

    auto* up = cmd->add_subcommand("upsample", "Append random document spans");
    static std::string up_in, up_out;
    static int factor = 8;
    up->add_option("-i,--input", up_in, "Doc-level file")->required()->check(CLI::ExistingFile);
    up->add_option("--factor", factor)->check(CLI::PositiveNumber);
    up->add_option("-o,--out", up_out);
    up->callback([&] {
      action = [&] {
        const auto seed = need_seed(g, "upsample");
        write_output(up_out, format_documents(upsample_by_spans(read_documents(up_in), factor, seed)));
        return 0;
      };
    });

    auto* tag = cmd->add_subcommand("tag", "Prepend a corpus tag to every line");
    static std::string tag_in, tag_out, tag_name;
    static std::vector<std::string> extra_tags;
    tag->add_option("-i,--input", tag_in)->required()->check(CLI::ExistingFile);
    tag->add_option("-t,--tag", tag_name)->required();
    tag->add_option("--known", extra_tags, "Extra tags to replace when already present");
    tag->add_option("-o,--out", tag_out);
    tag->callback([&] {
      action = [&] {
        CorpusTagRegistry registry;
        for (const auto& t : extra_tags) registry.add(t);
        if (!is_special_token(tag_name)) throw ConfigError("--tag", "must look like <NAME>");
        registry.add(tag_name);
        write_output(tag_out, format_lines(tag_corpus(read_lines(tag_in), tag_name, registry)));
        return 0;
      };
    });

    auto* mtnlg = cmd->add_subcommand("mtnlg", "Append metadata to each document");
    static std::string texts, metadata, mtnlg_out;
    mtnlg->add_option("--texts", texts, "Doc-level file")->required()->check(CLI::ExistingFile);
    mtnlg->add_option("--metadata", metadata, "Linearized games, one per line")
        ->required()->check(CLI::ExistingFile);
    mtnlg->add_option("-o,--out", mtnlg_out);
    mtnlg->callback([&] {
      action = [&] {
        const auto docs = read_documents(texts);
        const auto meta = read_lines(metadata);
        if (docs.size() != meta.size()) throw Error("document and metadata counts differ");
        std::vector<TokenSeq> lines;
        for (std::size_t i = 0; i < docs.size(); ++i) lines.push_back(build_mtnlg_source(docs[i], meta[i]));
        write_output(mtnlg_out, format_lines(lines));
        return 0;
      };
    });
  }

  // learn-bpe
  {
    auto* cmd = app.add_subcommand("learn-bpe", "Learn BPE merges");
    static std::vector<std::string> inputs;
    static std::string out;
    static BpeLearnOptions opt;
    static bool no_casing = false;
    cmd->add_option("-i,--input", inputs, "Tokenized text files")->required()->check(CLI::ExistingFile);
    cmd->add_option("--merges", opt.n_merges);
    cmd->add_option("--threshold", opt.threshold);
    cmd->add_option("--min-frequency", opt.min_frequency);
    cmd->add_flag("--no-casing", no_casing, "Learn on the text as is");
    cmd->add_option("-o,--out", out)->required();
    cmd->callback([&] {
      action = [&] {
        std::vector<TokenSeq> corpus;
        for (const auto& f : inputs) {
          for (auto& line : read_lines(f)) corpus.push_back(no_casing ? std::move(line) : apply_inline_casing(line));
        }
        std::ostringstream ss;
        learn_bpe(corpus, opt).save(ss);
        write_file_atomic(out, ss.str());
        return 0;
      };
    });
  }

  // apply-bpe
  {
    auto* cmd = app.add_subcommand("apply-bpe", "Segment text, or undo segmentation with --detok");
    static std::string model_path, in, out;
    static bool no_casing = false, detok = false;
    static std::optional<std::uint64_t> threshold;
    cmd->add_option("-m,--model", model_path)->check(CLI::ExistingFile);
    cmd->add_option("-i,--input", in)->required()->check(CLI::ExistingFile);
    cmd->add_option("--threshold", threshold, "Override the model's vocabulary threshold");
    cmd->add_flag("--no-casing", no_casing);
    cmd->add_flag("--detok", detok);
    cmd->add_option("-o,--out", out);
    cmd->callback([&] {
      action = [&] {
        auto lines = read_lines(in);
        if (detok) {
          for (auto& l : lines) l = no_casing ? detok_bpe(l) : revert_inline_casing(detok_bpe(l));
        } else {
          if (model_path.empty()) throw ConfigError("--model", "required unless --detok");
          auto model = load_model(model_path);
          if (threshold) model = model.with_threshold(*threshold);
          for (auto& l : lines) l = apply_bpe(model, no_casing ? l : apply_inline_casing(l));
        }
        write_output(out, format_lines(lines));
        return 0;
      };
    });
  }

  // mask
  {
    auto* cmd = app.add_subcommand("mask", "Mask the text part of MT+NLG sources");
    static std::string texts, metadata, ids, out;
    static double rate = 0.2;
    static std::vector<std::uint64_t> epochs{0};
    cmd->add_option("--texts", texts, "Doc-level file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--metadata", metadata, "Linearized games (omit to mask the text only)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--ids", ids, "Stream key per document (default document ordinal)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--rate", rate)->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--epoch", epochs, "Epoch numbers; one output per epoch");
    cmd->add_option("-o,--out", out, "Output file; with several epochs, a prefix");
    cmd->callback([&] {
      action = [&] {
        const auto seed = need_seed(g, "mask");
        const auto docs = read_documents(texts);
        std::vector<TokenSeq> meta(docs.size());
        if (!metadata.empty()) {
          meta = read_lines(metadata);
          if (meta.size() != docs.size()) throw Error("document and metadata counts differ");
        }
        std::vector<std::string> keys;
        if (!ids.empty()) {
          for (const auto& l : read_lines(ids)) keys.push_back(l.empty() ? "" : l.front());
          if (keys.size() != docs.size()) throw Error("document and id counts differ");
        } else {
          for (const auto& d : docs) keys.push_back(d.doc_id);
        }
        for (auto epoch : epochs) {
          std::vector<TokenSeq> lines;
          for (std::size_t i = 0; i < docs.size(); ++i) {
            lines.push_back(build_masked_mtnlg_source(docs[i], meta[i], {rate, seed, epoch, keys[i]}));
          }
          const bool many = epochs.size() > 1;
          write_output(many ? out + ".epoch" + std::to_string(epoch) : out, format_lines(lines));
        }
        return 0;
      };
    });
  }

  // shard
  {
    auto* cmd = app.add_subcommand("shard", "Partition documents into one shard per epoch");
    static std::string in;
    static std::size_t shards = 20;
    cmd->add_option("-i,--input", in, "Doc-level file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--shards", shards)->check(CLI::PositiveNumber);
    cmd->callback([&] {
      action = [&] {
        const auto seed = need_seed(g, "shard");
        const auto docs = read_documents(in);
        const auto plan = shard_for_epochs(docs.size(), shards, seed);
        for (std::size_t k = 0; k < shards; ++k) {
          std::vector<Document> part;
          for (auto i : plan.members(k)) part.push_back(docs[i]);
          write_file_atomic(in_out_dir(g, "shard." + std::to_string(k) + ".txt"), format_documents(part));
        }
        return 0;
      };
    });
  }

  // bleu
  {
    auto* cmd = app.add_subcommand("bleu", "Doc-level corpus BLEU");
    static std::string hyp, ref, fixes = "none";
    static bool as_json = false;
    cmd->add_option("--hyp", hyp, "Doc-level hypothesis file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--ref", ref, "Doc-level reference file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--fixes", fixes, "none, default or a rule file");
    cmd->add_flag("--json", as_json);
    cmd->callback([&] {
      action = [&] {
        const auto rules = rules_for(fixes);
        auto h = read_documents(hyp);
        for (auto& d : h) {
          for (auto& s : d.sentences) s = apply_output_fixes(s, rules);
        }
        const auto r = corpus_bleu(h, read_documents(ref));
        std::cout << (as_json ? r.to_json().dump(2) : r.summary_line()) << "\n";
        return 0;
      };
    });
  }

  // overlap
  {
    auto* cmd = app.add_subcommand("overlap", "Games shared between two sets, matched by date and teams");
    static std::vector<std::string> train, test;
    static bool bleu = false;
    static std::string fixes = "none";
    cmd->add_option("--train", train)->required()->check(CLI::ExistingFile);
    cmd->add_option("--test", test)->required()->check(CLI::ExistingFile);
    cmd->add_flag("--bleu", bleu, "Score train stories against test stories of shared games");
    cmd->add_option("--fixes", fixes, "none, default or a rule file");
    cmd->callback([&] {
      action = [&] {
        const auto tr = load_all(train);
        const auto te = load_all(test);
        const auto r = find_overlap(tr, te);
        json j{{"test_games", r.test_games},
               {"test_matches", r.test_matches},
               {"train_games", r.train_games},
               {"train_matches", r.train_matches},
               {"keys", r.keys.size()}};
        if (bleu) {
          const auto rules = rules_for(fixes);
          const auto b = overlap_reference_bleu(tr, te, r.keys, rules);
          for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
          j["bleu"] = b.report.to_json();
          j["bleu_pairs"] = b.pairs;
        }
        std::cout << j.dump(2) << "\n";
        return 0;
      };
    });
  }

  // run
  {
    auto* cmd = app.add_subcommand("run", "Run a pipeline config");
    static std::string config;
    cmd->add_option("config", config, "Pipeline config JSON")->required();
    cmd->callback([&] {
      action = [&] {
        PipelineConfig cfg;
        try {
          cfg = parse_pipeline_config(json::parse(read_file(config)));
        } catch (const json::exception& e) {
          throw ConfigError("$", e.what());
        }
        if (g.seed_opt->count()) cfg.seed = g.seed;
        if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
        if (g.jobs_opt->count()) cfg.jobs = g.jobs;
        const auto r = run_pipeline(cfg, fs::path(config).parent_path());
        if (r.exit_code != kExitOk) {
          std::cerr << "error: " << r.message << "\n";
          return r.exit_code;
        }
        std::cerr << "wrote " << r.manifest["files"].size() << " files and manifest.json\n";
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
}
