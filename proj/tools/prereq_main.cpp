#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "prereq/cli.hpp"
#include "prereq/log.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  long long seed = -1;
  int edge_budget = -1;
  bool all_pairs = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config JSON")->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--edge-budget", opts.edge_budget,
                  "subsample the document edges to this count before fitting");
  cmd->add_flag("--all-pairs", opts.all_pairs,
                "use every ordered document pair as a link observation");
}

prereq::PipelineConfig make_config(const CommonOptions& opts) {
  prereq::PipelineConfig config = prereq::load_config(opts.config_path);
  if (opts.seed >= 0) {
    config.seed = static_cast<uint64_t>(opts.seed);
    config.plda.seed = prereq::splitmix64(config.seed ^ 0x706c6461ULL);
    config.siamese.seed = prereq::splitmix64(config.seed ^ 0x7369616dULL);
    config.eval.seed = prereq::splitmix64(config.seed ^ 0x6576616cULL);
  }
  if (opts.edge_budget >= 0) config.edge_budget = opts.edge_budget;
  if (opts.all_pairs) config.all_pairs = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prereq: concept prerequisite learning pipeline"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string method = "prereq";
  std::string pairs_path;

  CLI::App* prep = app.add_subcommand("prep", "build corpus artifacts");
  add_common(prep, opts);
  CLI::App* fit = app.add_subcommand("fit-plda", "fit the pairwise-link LDA model");
  add_common(fit, opts);
  CLI::App* train = app.add_subcommand("train", "train the pair classifier");
  add_common(train, opts);
  CLI::App* predict = app.add_subcommand("predict", "score concept pairs");
  add_common(predict, opts);
  predict->add_option("pairs", pairs_path, "TSV of source<TAB>target rows")->required();
  CLI::App* eval = app.add_subcommand("eval", "run the evaluation protocol");
  add_common(eval, opts);
  eval->add_option("--method", method, "prereq|freq|pairwise-lda");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const prereq::PipelineConfig config = make_config(opts);
    if (prep->parsed()) return prereq::cmd_prep(config);
    if (fit->parsed()) return prereq::cmd_fit_plda(config);
    if (train->parsed()) return prereq::cmd_train(config);
    if (predict->parsed()) return prereq::cmd_predict(config, pairs_path);
    if (eval->parsed()) return prereq::cmd_eval(config, prereq::parse_method(method));
  } catch (const prereq::ConfigError& e) {
    prereq::log_error(e.what());
    return 1;
  } catch (const std::exception& e) {
    prereq::log_error(e.what());
    return 2;
  }
  return 1;
}
