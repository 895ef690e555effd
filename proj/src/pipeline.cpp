#include "dgt/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "dgt/casing.hpp"
#include "dgt/corpus.hpp"
#include "dgt/error.hpp"
#include "dgt/eval.hpp"
#include "dgt/model.hpp"
#include "dgt/subword.hpp"
#include "dgt/text_io.hpp"
#include "parallel.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace dgt {

// ---------------------------------------------------------------------------
// Config reading

namespace {

class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where(), "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (!v) throw ConfigError(at(key), "required");
    return *v;
  }

  std::string string(const std::string& key) {
    const json& v = require(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> opt_string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<std::string> strings(const std::string& key, bool required) {
    const json* v = get(key);
    if (!v) {
      if (required) throw ConfigError(at(key), "required");
      return {};
    }
    if (v->is_string()) return {v->get<std::string>()};
    if (!v->is_array()) throw ConfigError(at(key), "expected a list of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) {
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a string");
      }
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  std::optional<std::uint64_t> opt_u64(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<long long>() >= 0) return v->get<std::uint64_t>();
    throw ConfigError(at(key), "expected a non-negative integer");
  }

  template <class T>
  void number(const std::string& key, T& dst) {
    if (auto v = opt_u64(key)) dst = static_cast<T>(*v);
  }

  void real(const std::string& key, double& dst) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    dst = v->get<double>();
  }

  void flag(const std::string& key, bool& dst) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true/false");
    dst = v->get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }
  }

  std::string where() const { return path_.empty() ? "$" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::optional<UpsampleSpec> read_upsample(Fields& parent, const std::string& key) {
  const json* v = parent.get(key);
  if (!v) return std::nullopt;
  Fields f(*v, parent.at(key));
  UpsampleSpec u;
  if (auto factor = f.opt_u64("factor")) u.factor = static_cast<int>(*factor);
  u.seed = f.opt_u64("seed");
  f.finish();
  if (u.factor < 1) throw ConfigError(f.at("factor"), "must be >= 1");
  return u;
}

template <class T, class Fn>
std::optional<T> read_stage(Fields& root, const std::string& key, Fn fn) {
  const json* v = root.get(key);
  if (!v) return std::nullopt;
  Fields f(*v, key);
  T stage = fn(f);
  f.finish();
  return stage;
}

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }
json opt(const std::optional<std::uint64_t>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

PipelineConfig parse_pipeline_config(const json& j) {
  Fields root(j, "");
  PipelineConfig cfg;
  cfg.out_dir = root.opt_string("out_dir").value_or("");
  cfg.seed = root.opt_u64("seed");
  root.number("jobs", cfg.jobs);

  cfg.filter = read_stage<FilterStage>(root, "filter", [](Fields& f) {
    FilterStage s;
    s.source = f.string("source");
    s.target = f.string("target");
    s.keep_lines = f.opt_string("keep_lines");
    f.number("max_len", s.max_len);
    f.real("max_ratio", s.max_ratio);
    if (s.max_ratio < 1.0) throw ConfigError(f.at("max_ratio"), "must be >= 1");
    return s;
  });

  cfg.linearize = read_stage<LinearizeStage>(root, "linearize", [](Fields& f) {
    LinearizeStage s;
    s.games = f.strings("games", true);
    s.schedule_games = f.strings("schedule_games", false);
    s.exclude_games = f.strings("exclude_games", false);
    if (const json* c = f.get("config")) {
      try {
        s.config = c->get<LinearizationConfig>();
      } catch (const ConfigError& e) {
        const std::string prefix = "config " + e.path() + ": ";
        std::string detail = e.what();
        if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
        const std::string sub = e.path() == "$" ? "" : "." + e.path();
        throw ConfigError(f.at("config") + sub, detail);
      }
    }
    s.tag = f.opt_string("tag");
    return s;
  });

  cfg.subword = read_stage<SubwordStage>(root, "subword", [](Fields& f) {
    SubwordStage s;
    s.model = f.opt_string("model");
    if (const json* l = f.get("learn")) {
      Fields lf(*l, f.at("learn"));
      SubwordLearnSpec spec;
      spec.inputs = lf.strings("inputs", true);
      lf.number("merges", spec.merges);
      lf.number("threshold", spec.threshold);
      lf.number("min_frequency", spec.min_frequency);
      lf.finish();
      s.learn = std::move(spec);
    }
    f.flag("inline_casing", s.inline_casing);
    return s;
  });

  cfg.documents = read_stage<DocumentsStage>(root, "documents", [](Fields& f) {
    DocumentsStage s;
    s.inputs = f.strings("inputs", true);
    f.number("max_subwords", s.max_subwords);
    s.tag = f.opt_string("tag");
    s.upsample = read_upsample(f, "upsample");
    return s;
  });

  cfg.pseudo_documents = read_stage<PseudoDocumentsStage>(root, "pseudo_documents", [](Fields& f) {
    PseudoDocumentsStage s;
    s.input = f.string("input");
    s.seed = f.opt_u64("seed");
    f.number("min_len", s.min_len);
    f.number("max_len", s.max_len);
    s.tag = f.opt_string("tag");
    if (s.min_len == 0 || s.min_len > s.max_len) {
      throw ConfigError(f.at("min_len"), "need 1 <= min_len <= max_len");
    }
    return s;
  });

  cfg.mtnlg = read_stage<MtnlgStage>(root, "mtnlg", [](Fields& f) {
    MtnlgStage s;
    s.texts = f.string("texts");
    f.number("epochs", s.epochs);
    f.real("mask_rate", s.mask_rate);
    s.seed = f.opt_u64("seed");
    s.tag = f.opt_string("tag");
    if (!(s.mask_rate >= 0.0 && s.mask_rate <= 1.0)) {
      throw ConfigError(f.at("mask_rate"), "must be within [0, 1]");
    }
    if (s.epochs == 0) throw ConfigError(f.at("epochs"), "must be >= 1");
    return s;
  });

  cfg.shard = read_stage<ShardStage>(root, "shard", [](Fields& f) {
    ShardStage s;
    s.input = f.string("input");
    f.number("shards", s.shards);
    s.seed = f.opt_u64("seed");
    if (s.shards == 0) throw ConfigError(f.at("shards"), "must be >= 1");
    return s;
  });

  cfg.eval = read_stage<EvalStage>(root, "eval", [](Fields& f) {
    EvalStage s;
    s.hypothesis = f.string("hypothesis");
    s.reference = f.string("reference");
    if (auto fixes = f.opt_string("fixes")) s.fixes = *fixes;
    return s;
  });

  root.finish();
  return cfg;
}

json pipeline_config_to_json(const PipelineConfig& c) {
  json j;
  j["out_dir"] = c.out_dir;
  j["seed"] = opt(c.seed);
  j["jobs"] = c.jobs;
  if (c.filter) {
    j["filter"] = {{"source", c.filter->source},   {"target", c.filter->target},
                   {"keep_lines", opt(c.filter->keep_lines)},
                   {"max_len", c.filter->max_len}, {"max_ratio", c.filter->max_ratio}};
  }
  if (c.linearize) {
    j["linearize"] = {{"games", c.linearize->games},
                      {"schedule_games", c.linearize->schedule_games},
                      {"exclude_games", c.linearize->exclude_games},
                      {"config", c.linearize->config},
                      {"tag", opt(c.linearize->tag)}};
  }
  if (c.subword) {
    json s{{"model", opt(c.subword->model)}, {"inline_casing", c.subword->inline_casing}};
    if (c.subword->learn) {
      s["learn"] = {{"inputs", c.subword->learn->inputs},
                    {"merges", c.subword->learn->merges},
                    {"threshold", c.subword->learn->threshold},
                    {"min_frequency", c.subword->learn->min_frequency}};
    }
    j["subword"] = std::move(s);
  }
  if (c.documents) {
    json d{{"inputs", c.documents->inputs},
           {"max_subwords", c.documents->max_subwords},
           {"tag", opt(c.documents->tag)}};
    if (c.documents->upsample) {
      d["upsample"] = {{"factor", c.documents->upsample->factor},
                       {"seed", opt(c.documents->upsample->seed)}};
    }
    j["documents"] = std::move(d);
  }
  if (c.pseudo_documents) {
    j["pseudo_documents"] = {{"input", c.pseudo_documents->input},
                             {"seed", opt(c.pseudo_documents->seed)},
                             {"min_len", c.pseudo_documents->min_len},
                             {"max_len", c.pseudo_documents->max_len},
                             {"tag", opt(c.pseudo_documents->tag)}};
  }
  if (c.mtnlg) {
    j["mtnlg"] = {{"texts", c.mtnlg->texts},
                  {"epochs", c.mtnlg->epochs},
                  {"mask_rate", c.mtnlg->mask_rate},
                  {"seed", opt(c.mtnlg->seed)},
                  {"tag", opt(c.mtnlg->tag)}};
  }
  if (c.shard) {
    j["shard"] = {
        {"input", c.shard->input}, {"shards", c.shard->shards}, {"seed", opt(c.shard->seed)}};
  }
  if (c.eval) {
    j["eval"] = {{"hypothesis", c.eval->hypothesis},
                 {"reference", c.eval->reference},
                 {"fixes", c.eval->fixes}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void require_file(const fs::path& base, const std::string& p, const std::string& field) {
  if (!fs::is_regular_file(resolve(base, p))) {
    throw ConfigError(field, "file not found: '" + p + "'");
  }
}

void require_files(const fs::path& base, const std::vector<std::string>& ps,
                   const std::string& field) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    require_file(base, ps[i], field + "[" + std::to_string(i) + "]");
  }
}

void require_seed(std::optional<std::uint64_t>& seed, const std::optional<std::uint64_t>& fallback,
                  const std::string& field) {
  if (!seed) seed = fallback;
  if (!seed) throw ConfigError(field, "randomized operation needs an explicit seed");
}

void check_tag(const std::optional<std::string>& tag, const std::string& field) {
  if (tag && !is_special_token(*tag)) throw ConfigError(field, "corpus tag must look like <NAME>");
}

}  // namespace

PipelineConfig resolve_pipeline_config(PipelineConfig c, const fs::path& base) {
  if (c.out_dir.empty()) throw ConfigError("out_dir", "required");
  if (c.jobs == 0) c.jobs = 1;
  if (c.filter) {
    require_file(base, c.filter->source, "filter.source");
    require_file(base, c.filter->target, "filter.target");
    if (c.filter->keep_lines) require_file(base, *c.filter->keep_lines, "filter.keep_lines");
  }
  if (c.linearize) {
    require_files(base, c.linearize->games, "linearize.games");
    require_files(base, c.linearize->schedule_games, "linearize.schedule_games");
    require_files(base, c.linearize->exclude_games, "linearize.exclude_games");
    check_tag(c.linearize->tag, "linearize.tag");
    auto& lc = c.linearize->config;
    if (!lc.sort_players) require_seed(lc.shuffle_seed, c.seed, "linearize.config.shuffle_seed");
  }
  if (c.subword) {
    if (c.subword->model.has_value() == c.subword->learn.has_value()) {
      throw ConfigError("subword", "give exactly one of 'model' or 'learn'");
    }
    if (c.subword->model) require_file(base, *c.subword->model, "subword.model");
    if (c.subword->learn) require_files(base, c.subword->learn->inputs, "subword.learn.inputs");
  }
  if (c.documents) {
    require_files(base, c.documents->inputs, "documents.inputs");
    check_tag(c.documents->tag, "documents.tag");
    if (!c.subword) throw ConfigError("documents", "splitting needs a subword stage");
    if (c.documents->upsample) require_seed(c.documents->upsample->seed, c.seed, "documents.upsample.seed");
  }
  if (c.pseudo_documents) {
    require_file(base, c.pseudo_documents->input, "pseudo_documents.input");
    check_tag(c.pseudo_documents->tag, "pseudo_documents.tag");
    require_seed(c.pseudo_documents->seed, c.seed, "pseudo_documents.seed");
  }
  if (c.mtnlg) {
    require_file(base, c.mtnlg->texts, "mtnlg.texts");
    check_tag(c.mtnlg->tag, "mtnlg.tag");
    if (!c.linearize) throw ConfigError("mtnlg", "needs a linearize stage for the metadata");
    if (c.mtnlg->mask_rate > 0.0) require_seed(c.mtnlg->seed, c.seed, "mtnlg.seed");
  }
  if (c.shard) {
    require_file(base, c.shard->input, "shard.input");
    require_seed(c.shard->seed, c.seed, "shard.seed");
  }
  if (c.eval) {
    require_file(base, c.eval->hypothesis, "eval.hypothesis");
    require_file(base, c.eval->reference, "eval.reference");
    if (c.eval->fixes != "none" && c.eval->fixes != "default") {
      require_file(base, c.eval->fixes, "eval.fixes");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Training manifest

namespace {

std::vector<std::string> matching(const std::vector<std::string>& produced,
                                  std::initializer_list<std::string_view> prefixes,
                                  std::string_view suffix = ".src.txt") {
  std::vector<std::string> out;
  for (const auto& p : produced) {
    for (auto prefix : prefixes) {
      if (p.rfind(prefix, 0) == 0 && p.size() >= suffix.size() &&
          p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

}  // namespace

json emit_training_manifest(const PipelineConfig& c, const std::vector<std::string>& produced) {
  const bool mt_data = c.filter || c.documents || c.pseudo_documents || c.shard;
  const auto parallel = matching(produced, {"filtered."}, "");
  const auto shards = matching(produced, {"shard."}, ".txt");
  const auto doc_level = matching(produced, {"documents", "pseudo_documents"});
  const auto metadata = matching(produced, {"metadata"});
  const auto mtnlg = matching(produced, {"mtnlg."});

  json stages = json::array();
  if (mt_data) {
    stages.push_back({{"step", 1},
                      {"name", "sentence-level MT"},
                      {"data", parallel},
                      {"max_epochs", 20},
                      {"early_stopping", "newstest2014 perplexity"}});
    stages.push_back({{"step", 2},
                      {"name", "back-translation"},
                      {"data", json::array()},
                      {"external", true},
                      {"notes", "News-crawl back-translated by sampling with the step 1 model; "
                                "not produced by this toolkit"}});
    json step3{{"step", 3},
               {"name", "sentence-level MT with back-translation"},
               {"data", parallel},
               {"epoch_files", shards},
               {"max_epochs", 20},
               {"early_stopping", "newstest2014 perplexity"}};
    if (!shards.empty()) {
      step3["notes"] = "epoch k reads back-translation shard k; close to oversampling the "
                       "non-BT data " + std::to_string(shards.size()) +
                       " times and training a single epoch";
    }
    stages.push_back(std::move(step3));
    stages.push_back({{"step", 4},
                      {"name", "document-level fine-tuning"},
                      {"data", doc_level},
                      {"max_epochs", 5},
                      {"early_stopping", "DGT-valid perplexity (doc-level)"},
                      {"notes", "no sentence separator or document boundary tags"}});
  }

  json final_step{{"step", 5},
                  {"epochs", 100},
                  {"bleu_eval_every", 10},
                  {"perplexity_eval_every", 1},
                  {"checkpoint_selection", "highest DGT-valid BLEU, also scoring the best-perplexity checkpoint"},
                  {"optimizer", {{"name", "adam"}, {"lr", 0.00005}, {"schedule", "fixed"},
                                 {"max_tokens", 1500}, {"gpus", 1}, {"update_freq", 1}}}};
  if (!mtnlg.empty()) {
    final_step["name"] = "MT+NLG fine-tuning";
    final_step["variant"] = "mt+nlg";
    final_step["data"] = mtnlg;
    final_step["epoch_files"] = mtnlg;
  } else if (c.linearize) {
    final_step["name"] = "NLG fine-tuning";
    final_step["variant"] = "nlg";
    final_step["data"] = metadata.empty() ? matching(produced, {"metadata.txt"}, "") : metadata;
  } else {
    final_step["name"] = "MT fine-tuning";
    final_step["variant"] = "mt";
    final_step["data"] = doc_level;
  }
  stages.push_back(std::move(final_step));

  return json{{"architecture", "transformer_big"},
              {"pretraining_optimizer",
               {{"name", "adam"}, {"lr", 0.0005}, {"schedule", "inverse_sqrt"}, {"warmup", true},
                {"dropout", 0.1}, {"label_smoothing", 0.1}, {"max_tokens", 3500},
                {"update_freq", 10}, {"gpus", 8}, {"fp16", true}, {"shared_embeddings", true}}},
              {"stages", std::move(stages)},
              {"executed", false}};
}

// ---------------------------------------------------------------------------
// Running

namespace {

class Outputs {
 public:
  explicit Outputs(fs::path staging) : staging_(std::move(staging)) {}

  void emit(const std::string& stage, const std::string& rel, const std::string& content,
            json params = json::object()) {
    write_file_atomic(staging_ / rel, content);
    params["path"] = rel;
    params["stage"] = stage;
    params["bytes"] = content.size();
    params["fnv1a64"] = fnv1a64_hex(content);
    files_.push_back(std::move(params));
    produced_.push_back(rel);
  }

  const json& files() const { return files_; }
  const std::vector<std::string>& produced() const { return produced_; }

 private:
  fs::path staging_;
  json files_ = json::array();
  std::vector<std::string> produced_;
};

// Casing, subword segmentation and corpus tag, in that order.
class SourcePrep {
 public:
  SourcePrep(const std::optional<BpeModel>& model, bool casing, const CorpusTagRegistry& registry)
      : model_(model), casing_(casing), registry_(registry) {}

  TokenSeq segment(const TokenSeq& seq) const {
    TokenSeq s = casing_ ? apply_inline_casing(seq) : seq;
    return model_ ? apply_bpe(*model_, s) : s;
  }

  TokenSeq operator()(const TokenSeq& seq, const std::optional<std::string>& tag) const {
    TokenSeq s = segment(seq);
    return tag ? tag_sequence(std::move(s), *tag, registry_) : s;
  }

  bool active() const { return model_.has_value() || casing_; }

 private:
  const std::optional<BpeModel>& model_;
  bool casing_;
  const CorpusTagRegistry& registry_;
};

std::vector<GameRecord> load_all(const fs::path& base, const std::vector<std::string>& files) {
  std::vector<GameRecord> out;
  for (const auto& f : files) {
    auto games = parse_games(read_file(resolve(base, f)), f);
    out.insert(out.end(), std::make_move_iterator(games.begin()),
               std::make_move_iterator(games.end()));
  }
  return out;
}

std::set<std::size_t> read_keep_lines(const fs::path& path) {
  std::set<std::size_t> keep;
  std::size_t line_no = 0;
  for (const auto& toks : read_lines(path)) {
    ++line_no;
    if (toks.empty()) continue;
    std::size_t v = 0;
    const auto& t = toks.front();
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || toks.size() != 1) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected a line number");
    }
    keep.insert(v);
  }
  return keep;
}

std::string pad2(std::size_t k) { return (k < 10 ? "0" : "") + std::to_string(k); }

}  // namespace

RunResult run_pipeline(const PipelineConfig& input, const fs::path& base) {
  PipelineConfig c;
  try {
    c = resolve_pipeline_config(input, base);
  } catch (const ConfigError& e) {
    return {kExitConfigError, e.what(), nullptr};
  }

  const fs::path out_dir = resolve(base, c.out_dir);
  const fs::path staging = out_dir / ".staging";
  std::string stage = "setup";
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
    Outputs out(staging);

    CorpusTagRegistry registry;
    if (c.linearize && c.linearize->tag) registry.add(*c.linearize->tag);
    if (c.documents && c.documents->tag) registry.add(*c.documents->tag);
    if (c.pseudo_documents && c.pseudo_documents->tag) registry.add(*c.pseudo_documents->tag);
    if (c.mtnlg && c.mtnlg->tag) registry.add(*c.mtnlg->tag);

    if (c.filter) {
      stage = "filter";
      const auto src = read_lines(resolve(base, c.filter->source));
      const auto tgt = read_lines(resolve(base, c.filter->target));
      if (src.size() != tgt.size()) {
        throw Error("source has " + std::to_string(src.size()) + " lines, target " +
                    std::to_string(tgt.size()));
      }
      std::vector<ParallelPair> pairs;
      pairs.reserve(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) pairs.push_back({src[i], tgt[i]});
      FilterOptions opt;
      opt.max_len = c.filter->max_len;
      opt.max_ratio = c.filter->max_ratio;
      if (c.filter->keep_lines) opt.keep_lines = read_keep_lines(resolve(base, *c.filter->keep_lines));
      const FilterResult r = filter_pairs(pairs, opt);
      std::vector<TokenSeq> kept_src, kept_tgt;
      for (const auto& p : r.pairs) {
        kept_src.push_back(p.source);
        kept_tgt.push_back(p.target);
      }
      const json report{{"input", r.report.input},
                        {"kept", r.report.kept},
                        {"removed_langid", r.report.removed_langid},
                        {"removed_empty", r.report.removed_empty},
                        {"removed_length", r.report.removed_length},
                        {"removed_ratio", r.report.removed_ratio}};
      const json params{{"max_len", opt.max_len}, {"max_ratio", opt.max_ratio}, {"report", report}};
      out.emit(stage, "filtered.src", format_lines(kept_src), params);
      out.emit(stage, "filtered.tgt", format_lines(kept_tgt), params);
    }

    std::vector<TokenSeq> metadata;
    std::vector<std::string> metadata_ids;
    if (c.linearize) {
      stage = "linearize";
      const auto& L = *c.linearize;
      auto games = load_all(base, L.games);
      const auto schedule_games = L.schedule_games.empty() ? games : load_all(base, L.schedule_games);
      std::size_t excluded = 0;
      if (!L.exclude_games.empty()) {
        const auto exclude = load_all(base, L.exclude_games);
        auto filtered = filter_overlap(games, exclude);
        excluded = filtered.removed;
        games = std::move(filtered.kept);
      }
      const ScheduleIndex index = ScheduleIndex::build(schedule_games);
      metadata = parallel_map<TokenSeq>(games.size(), c.jobs, [&](std::size_t i) {
        return linearize_game(games[i], index, L.config);
      });
      for (const auto& g : games) metadata_ids.push_back(g.game_id);
      json params{{"config", L.config}, {"games", games.size()}, {"excluded", excluded}};
      out.emit(stage, "metadata.txt", format_lines(metadata), params);
      std::vector<TokenSeq> ids;
      for (const auto& id : metadata_ids) ids.push_back({id});
      out.emit(stage, "metadata.ids.txt", format_lines(ids), params);
    }

    std::optional<BpeModel> model;
    bool casing = false;
    if (c.subword) {
      stage = "subword";
      casing = c.subword->inline_casing;
      if (c.subword->model) {
        std::ifstream in(resolve(base, *c.subword->model));
        model = BpeModel::load(in);
      } else {
        const auto& spec = *c.subword->learn;
        std::vector<TokenSeq> corpus;
        for (const auto& f : spec.inputs) {
          for (auto& line : read_lines(resolve(base, f))) {
            corpus.push_back(casing ? apply_inline_casing(line) : std::move(line));
          }
        }
        BpeLearnOptions opt;
        opt.n_merges = spec.merges;
        opt.threshold = spec.threshold;
        opt.min_frequency = spec.min_frequency;
        model = learn_bpe(corpus, opt);
        std::ostringstream ss;
        model->save(ss);
        out.emit(stage, "bpe.model", ss.str(),
                 {{"merges", spec.merges}, {"threshold", spec.threshold},
                  {"learned_merges", model->merges().size()}});
      }
    }
    const SourcePrep prep(model, casing, registry);

    if (c.linearize && (prep.active() || c.linearize->tag)) {
      stage = "linearize";
      auto lines = parallel_map<TokenSeq>(metadata.size(), c.jobs, [&](std::size_t i) {
        return prep(metadata[i], c.linearize->tag);
      });
      out.emit(stage, "metadata.src.txt", format_lines(lines), {{"tag", opt(c.linearize->tag)}});
    }

    auto emit_docs = [&](const std::string& name, const std::vector<Document>& docs,
                         const std::optional<std::string>& tag, json params) {
      out.emit(stage, name + ".txt", format_documents(docs), params);
      auto flat = parallel_map<TokenSeq>(docs.size(), c.jobs, [&](std::size_t i) {
        return prep(docs[i].flatten(), tag);
      });
      params["tag"] = opt(tag);
      out.emit(stage, name + ".src.txt", format_lines(flat), params);
    };

    if (c.documents) {
      stage = "documents";
      const auto& D = *c.documents;
      std::vector<Document> docs;
      std::size_t oversized = 0;
      std::size_t inputs = 0;
      const SubwordCounter count = [&](const TokenSeq& s) { return prep.segment(s).size(); };
      for (std::size_t f = 0; f < D.inputs.size(); ++f) {
        for (auto& d : read_documents(resolve(base, D.inputs[f]))) {
          ++inputs;
          d.doc_id = std::to_string(f) + ":" + d.doc_id;
          for (auto& piece : split_document(d, D.max_subwords, count)) {
            oversized += piece.oversized ? 1 : 0;
            docs.push_back(std::move(piece.doc));
          }
        }
      }
      const std::size_t after_split = docs.size();
      json params{{"max_subwords", D.max_subwords},
                  {"input_documents", inputs},
                  {"split_documents", after_split},
                  {"oversized_sentences", oversized}};
      if (D.upsample) {
        docs = upsample_by_spans(docs, D.upsample->factor, *D.upsample->seed);
        params["upsample_factor"] = D.upsample->factor;
        params["seed"] = *D.upsample->seed;
      }
      params["output_documents"] = docs.size();
      emit_docs("documents", docs, D.tag, params);
    }

    if (c.pseudo_documents) {
      stage = "pseudo_documents";
      const auto& P = *c.pseudo_documents;
      std::vector<TokenSeq> sentences;
      for (auto& s : read_lines(resolve(base, P.input))) {
        if (!s.empty()) sentences.push_back(std::move(s));
      }
      PseudoDocOptions opt;
      opt.min_len = P.min_len;
      opt.max_len = P.max_len;
      const auto docs = make_pseudo_documents(std::move(sentences), *P.seed, opt);
      emit_docs("pseudo_documents", docs, P.tag,
                {{"seed", *P.seed}, {"min_len", P.min_len}, {"max_len", P.max_len},
                 {"documents", docs.size()}});
    }

    if (c.mtnlg) {
      stage = "mtnlg";
      const auto& M = *c.mtnlg;
      const auto texts = read_documents(resolve(base, M.texts));
      if (texts.size() != metadata.size()) {
        throw Error("texts file has " + std::to_string(texts.size()) + " documents but " +
                    std::to_string(metadata.size()) + " games were linearized");
      }
      for (std::size_t epoch = 0; epoch < M.epochs; ++epoch) {
        auto lines = parallel_map<TokenSeq>(texts.size(), c.jobs, [&](std::size_t i) {
          MaskOptions mask{M.mask_rate, M.seed.value_or(0), epoch, metadata_ids[i]};
          return prep(build_masked_mtnlg_source(texts[i], metadata[i], mask), M.tag);
        });
        out.emit(stage, "mtnlg.epoch" + pad2(epoch) + ".src.txt", format_lines(lines),
                 {{"epoch", epoch}, {"mask_rate", M.mask_rate}, {"seed", opt(M.seed)},
                  {"tag", opt(M.tag)}});
      }
    }

    if (c.shard) {
      stage = "shard";
      const auto& S = *c.shard;
      const auto docs = read_documents(resolve(base, S.input));
      const auto plan = shard_for_epochs(docs.size(), S.shards, *S.seed);
      for (std::size_t k = 0; k < S.shards; ++k) {
        std::vector<Document> part;
        for (auto i : plan.members(k)) part.push_back(docs[i]);
        out.emit(stage, "shard." + pad2(k) + ".txt", format_documents(part),
                 {{"epoch", k}, {"shards", S.shards}, {"seed", *S.seed}, {"documents", part.size()}});
      }
    }

    if (c.eval) {
      stage = "eval";
      const auto& E = *c.eval;
      auto hyp = read_documents(resolve(base, E.hypothesis));
      const auto ref = read_documents(resolve(base, E.reference));
      std::vector<RewriteRule> rules;
      if (E.fixes == "default") {
        rules = default_output_fixes();
      } else if (E.fixes != "none") {
        rules = load_rules(resolve(base, E.fixes).string());
      }
      for (auto& d : hyp) {
        for (auto& s : d.sentences) s = apply_output_fixes(s, rules);
      }
      const BleuReport r = corpus_bleu(hyp, ref);
      json report = r.to_json();
      report["summary"] = r.summary_line();
      out.emit(stage, "bleu.json", report.dump(2) + "\n", {{"fixes", E.fixes}});
    }

    stage = "commit";
    for (const auto& rel : out.produced()) {
      const fs::path dst = out_dir / rel;
      fs::create_directories(dst.parent_path());
      fs::rename(staging / rel, dst);
    }
    fs::remove_all(staging);

    json manifest{{"format", "dgt-run-manifest v1"},
                  {"config", pipeline_config_to_json(c)},
                  {"files", out.files()},
                  {"training", emit_training_manifest(c, out.produced())}};
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return {kExitOk, {}, std::move(manifest)};
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    return {kExitStageFailure, "stage '" + stage + "' failed: " + e.what(), nullptr};
  }
}

}  // namespace dgt
