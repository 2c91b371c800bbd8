#ifndef PREREQ_CLI_HPP
#define PREREQ_CLI_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include "prereq/eval.hpp"
#include "prereq/plda.hpp"
#include "prereq/siamese.hpp"

namespace prereq {

// Raised on bad usage or config validation failures (exit code 1, before any
// artifact is written). Runtime failures use std::runtime_error (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::string dataset = "dataset";
  std::string documents_path;
  std::string playlists_path;
  std::string edges_path;
  std::string concepts_path;
  std::string labeled_pairs_path;
  std::string stopwords_path;
  std::string output_dir = "out";

  std::string vocab_mode = "full-ngram";  // or "concept-restricted"
  int ngram_max = 3;
  int min_doc_freq = 1;
  int edge_budget = 0;  // 0 = use all document edges
  bool all_pairs = false;

  PldaHyper plda;
  TrainConfig siamese;
  SplitSpec eval;
  uint64_t seed = 0;

  VocabMode mode() const;
};

// Flat JSON file; unknown keys rejected. Does not touch the filesystem
// beyond reading the file itself.
PipelineConfig load_config(const std::string& path);

// Checks input paths for the given command and creates the output directory.
// Throws ConfigError without writing partial artifacts.
void validate_config(const PipelineConfig& config, const std::string& command);

// Exit status of every command: 0 on success.
int cmd_prep(const PipelineConfig& config);
int cmd_fit_plda(const PipelineConfig& config);
int cmd_train(const PipelineConfig& config);
int cmd_predict(const PipelineConfig& config, const std::string& pairs_path);
int cmd_eval(const PipelineConfig& config, Method method);

}  // namespace prereq

#endif
