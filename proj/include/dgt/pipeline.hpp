#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgt/linearize.hpp"

namespace dgt {

struct LinearizeStage {
  std::vector<std::string> games;
  std::vector<std::string> schedule_games;  // empty: schedule from `games`
  std::vector<std::string> exclude_games;   // games dropped by (date, home, visitor)
  LinearizationConfig config;
  std::optional<std::string> tag;
};

struct FilterStage {
  std::string source;
  std::string target;
  std::optional<std::string> keep_lines;  // one 0-based line number per line
  std::size_t max_len = 175;
  double max_ratio = 1.5;
};

struct SubwordLearnSpec {
  std::vector<std::string> inputs;
  std::size_t merges = 32000;
  std::uint64_t threshold = 100;
  std::uint64_t min_frequency = 2;
};

struct SubwordStage {
  std::optional<std::string> model;  // exactly one of model / learn
  std::optional<SubwordLearnSpec> learn;
  bool inline_casing = true;
};

struct UpsampleSpec {
  int factor = 8;
  std::optional<std::uint64_t> seed;
};

struct DocumentsStage {
  std::vector<std::string> inputs;
  std::size_t max_subwords = 1100;
  std::optional<std::string> tag;
  std::optional<UpsampleSpec> upsample;
};

struct PseudoDocumentsStage {
  std::string input;  // one sentence per line
  std::optional<std::uint64_t> seed;
  std::size_t min_len = 3;
  std::size_t max_len = 30;
  std::optional<std::string> tag;
};

struct MtnlgStage {
  std::string texts;  // doc-level file, one document per game in linearize order
  std::size_t epochs = 1;
  double mask_rate = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tag;
};

struct ShardStage {
  std::string input;  // doc-level file
  std::size_t shards = 20;
  std::optional<std::uint64_t> seed;
};

struct EvalStage {
  std::string hypothesis;  // doc-level files
  std::string reference;
  std::string fixes = "none";  // "none", "default" or a rule file
};

struct PipelineConfig {
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // default for stages that give none
  std::size_t jobs = 1;

  std::optional<FilterStage> filter;
  std::optional<LinearizeStage> linearize;
  std::optional<SubwordStage> subword;
  std::optional<DocumentsStage> documents;
  std::optional<PseudoDocumentsStage> pseudo_documents;
  std::optional<MtnlgStage> mtnlg;
  std::optional<ShardStage> shard;
  std::optional<EvalStage> eval;
};

/// Strict: unknown fields and wrong types throw ConfigError with the field path.
PipelineConfig parse_pipeline_config(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

/// Fills stage seeds from the top-level seed, then checks every invariant:
/// referenced files exist (relative paths resolve against `base_dir`), every
/// randomized operation has a seed, stage prerequisites are present.
PipelineConfig resolve_pipeline_config(PipelineConfig cfg, const std::filesystem::path& base_dir);

/// Descriptive five-step training schedule over the files this run produced.
nlohmann::json emit_training_manifest(const PipelineConfig& cfg,
                                      const std::vector<std::string>& produced);

enum ExitCode : int { kExitOk = 0, kExitStageFailure = 1, kExitConfigError = 2 };

struct RunResult {
  int exit_code = kExitOk;
  std::string message;       // failing stage or config path on error
  nlohmann::json manifest;   // null unless the run succeeded
};

/// Validates, runs the configured stages in dependency order into a staging
/// directory, and moves the outputs into `out_dir` only when every stage
/// succeeded. `manifest.json` is written last.
RunResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& base_dir);

}  // namespace dgt
