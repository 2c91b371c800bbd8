#include "prereq/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "prereq/baselines.hpp"
#include "prereq/corpus.hpp"
#include "prereq/io.hpp"
#include "prereq/log.hpp"

namespace prereq {

namespace fs = std::filesystem;
using nlohmann::json;

VocabMode PipelineConfig::mode() const {
  if (vocab_mode == "full-ngram") return VocabMode::FullNgram;
  if (vocab_mode == "concept-restricted") return VocabMode::ConceptRestricted;
  throw ConfigError("vocab_mode must be full-ngram or concept-restricted, got '" +
                    vocab_mode + "'");
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }

  static const std::set<std::string> known = {
      "dataset", "documents_path", "playlists_path", "edges_path", "concepts_path",
      "labeled_pairs_path", "stopwords_path", "output_dir", "vocab_mode", "ngram_max",
      "min_doc_freq", "edge_budget", "all_pairs", "seed",
      "plda_k", "plda_alpha", "plda_max_em_iters", "plda_elbo_rel_tol",
      "plda_nonedge_ratio", "plda_eta_smoothing", "plda_beta_floor", "plda_init_jitter",
      "siamese_learning_rate", "siamese_batch_size", "siamese_iterations",
      "siamese_hidden1", "siamese_hidden2",
      "eval_train_fraction", "eval_n_splits", "eval_negative_factor"};
  for (const auto& [key, value] : obj.items())
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");

  PipelineConfig c;
  c.dataset = obj.value("dataset", c.dataset);
  c.documents_path = obj.value("documents_path", c.documents_path);
  c.playlists_path = obj.value("playlists_path", c.playlists_path);
  c.edges_path = obj.value("edges_path", c.edges_path);
  c.concepts_path = obj.value("concepts_path", c.concepts_path);
  c.labeled_pairs_path = obj.value("labeled_pairs_path", c.labeled_pairs_path);
  c.stopwords_path = obj.value("stopwords_path", c.stopwords_path);
  c.output_dir = obj.value("output_dir", c.output_dir);
  c.vocab_mode = obj.value("vocab_mode", c.vocab_mode);
  c.ngram_max = obj.value("ngram_max", c.ngram_max);
  c.min_doc_freq = obj.value("min_doc_freq", c.min_doc_freq);
  c.edge_budget = obj.value("edge_budget", c.edge_budget);
  c.all_pairs = obj.value("all_pairs", c.all_pairs);
  c.seed = obj.value("seed", c.seed);

  c.plda.k = obj.value("plda_k", c.plda.k);
  c.plda.alpha = obj.value("plda_alpha", c.plda.alpha);
  c.plda.max_em_iters = obj.value("plda_max_em_iters", c.plda.max_em_iters);
  c.plda.elbo_rel_tol = obj.value("plda_elbo_rel_tol", c.plda.elbo_rel_tol);
  c.plda.nonedge_ratio = obj.value("plda_nonedge_ratio", c.plda.nonedge_ratio);
  c.plda.eta_smoothing = obj.value("plda_eta_smoothing", c.plda.eta_smoothing);
  c.plda.beta_floor = obj.value("plda_beta_floor", c.plda.beta_floor);
  c.plda.init_jitter = obj.value("plda_init_jitter", c.plda.init_jitter);

  c.siamese.learning_rate = obj.value("siamese_learning_rate", c.siamese.learning_rate);
  c.siamese.batch_size = obj.value("siamese_batch_size", c.siamese.batch_size);
  c.siamese.iterations = obj.value("siamese_iterations", c.siamese.iterations);
  c.siamese.hidden1 = obj.value("siamese_hidden1", c.siamese.hidden1);
  c.siamese.hidden2 = obj.value("siamese_hidden2", c.siamese.hidden2);

  c.eval.train_fraction = obj.value("eval_train_fraction", c.eval.train_fraction);
  c.eval.n_splits = obj.value("eval_n_splits", c.eval.n_splits);
  c.eval.negative_factor = obj.value("eval_negative_factor", c.eval.negative_factor);

  // stage seeds derive from the master seed
  c.plda.seed = splitmix64(c.seed ^ 0x706c6461ULL);
  c.siamese.seed = splitmix64(c.seed ^ 0x7369616dULL);
  c.eval.seed = splitmix64(c.seed ^ 0x6576616cULL);
  return c;
}

namespace {

void require_readable(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path not configured");
  if (!fs::exists(path)) throw ConfigError(what + " path does not exist: " + path);
}

std::string artifact(const PipelineConfig& config, const std::string& name) {
  return (fs::path(config.output_dir) / name).string();
}

void require_artifact(const PipelineConfig& config, const std::string& name) {
  if (!fs::exists(artifact(config, name)))
    throw ConfigError("missing artifact '" + name + "' in " + config.output_dir +
                      " (run prep first)");
}

// Advisory lock so two commands do not write one output directory at once.
struct DirLock {
  explicit DirLock(const std::string& dir) : path_(fs::path(dir) / ".prereq.lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (f == nullptr)
      throw ConfigError("output directory is locked (remove " + path_.string() +
                        " if no other prereq process is running)");
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

StopwordSet stopwords_for(const PipelineConfig& config) {
  if (config.stopwords_path.empty()) {
    log_info("no stopword file configured, proceeding without stopword removal");
    return {};
  }
  return load_stopwords(config.stopwords_path);
}

std::vector<std::pair<int, int>> budgeted_edges(const PipelineConfig& config,
                                                std::vector<std::pair<int, int>> edges) {
  if (config.edge_budget <= 0 || static_cast<size_t>(config.edge_budget) >= edges.size())
    return edges;
  Rng rng(splitmix64(config.seed ^ 0x65646765ULL));
  rng.shuffle(edges);
  edges.resize(config.edge_budget);
  return edges;
}

}  // namespace

void validate_config(const PipelineConfig& config, const std::string& command) {
  config.mode();  // throws on bad value
  if (config.ngram_max < 1 || config.ngram_max > 3)
    throw ConfigError("ngram_max must be in {1,2,3}");
  if (config.min_doc_freq < 1) throw ConfigError("min_doc_freq must be >= 1");
  if (config.edge_budget < 0) throw ConfigError("edge_budget must be >= 0");

  if (command == "prep") {
    require_readable(config.documents_path, "documents");
    if (config.edges_path.empty() && config.playlists_path.empty())
      throw ConfigError("prep needs edges_path or playlists_path");
    if (!config.edges_path.empty()) require_readable(config.edges_path, "edges");
    if (!config.playlists_path.empty()) require_readable(config.playlists_path, "playlists");
    require_readable(config.concepts_path, "concepts");
    if (!config.stopwords_path.empty()) require_readable(config.stopwords_path, "stopwords");
  } else if (command == "fit-plda") {
    require_artifact(config, "vocabulary.json");
    require_artifact(config, "bows.jsonl");
    require_artifact(config, "document_graph.tsv");
  } else if (command == "train") {
    require_artifact(config, "model.json");
    require_artifact(config, "concept_map.tsv");
    require_readable(config.labeled_pairs_path, "labeled_pairs");
  } else if (command == "predict") {
    require_artifact(config, "model.json");
    require_artifact(config, "concept_map.tsv");
    require_artifact(config, "siamese.json");
  } else if (command == "eval") {
    require_artifact(config, "concept_map.tsv");
    require_readable(config.labeled_pairs_path, "labeled_pairs");
    require_artifact(config, "vocabulary.json");
    require_artifact(config, "bows.jsonl");
    require_artifact(config, "document_graph.tsv");
    if (config.edge_budget <= 0) require_artifact(config, "model.json");
  }

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + config.output_dir);
}

int cmd_prep(const PipelineConfig& config) {
  validate_config(config, "prep");
  DirLock lock(config.output_dir);

  const auto docs = read_documents_jsonl(config.documents_path);
  if (docs.empty()) throw std::runtime_error("prep: no documents admitted");
  const auto concept_phrases = read_concepts(config.concepts_path);

  TokenizerConfig tok;
  tok.n_max = config.ngram_max;
  tok.stopwords = stopwords_for(config);

  const Vocabulary vocab = build_vocabulary(docs, config.mode(), concept_phrases, tok,
                                            config.min_doc_freq);
  const ConceptSpace space = match_concepts(concept_phrases, vocab);

  std::vector<BowDocument> bows;
  std::unordered_set<std::string> admitted;
  int dropped = 0;
  for (const auto& doc : docs) {
    BowDocument bow = vectorize(doc, vocab, tok);
    if (bow.empty()) {
      ++dropped;
      continue;
    }
    admitted.insert(bow.doc_id);
    bows.push_back(std::move(bow));
  }
  if (bows.empty()) throw std::runtime_error("prep: no documents admitted");
  if (dropped > 0)
    log_info("prep: dropped " + std::to_string(dropped) + " empty documents");

  DocumentGraph graph;
  if (!config.edges_path.empty()) {
    for (const auto& [s, t] : read_edges_tsv(config.edges_path).edges)
      if (admitted.count(s) && admitted.count(t)) graph.add_edge(s, t);
  }
  if (!config.playlists_path.empty()) {
    const auto playlists = read_playlists_jsonl(config.playlists_path);
    for (const auto& [s, t] : playlist_to_edges(playlists).edges)
      if (admitted.count(s) && admitted.count(t)) graph.add_edge(s, t);
  }

  int labeled_count = 0;
  if (!config.labeled_pairs_path.empty() && fs::exists(config.labeled_pairs_path)) {
    for (const auto& p : read_labeled_pairs_tsv(config.labeled_pairs_path))
      if (p.label == 1) ++labeled_count;
  }

  write_vocabulary_json(artifact(config, "vocabulary.json"), vocab);
  write_bows_jsonl(artifact(config, "bows.jsonl"), bows);
  write_edges_tsv(artifact(config, "document_graph.tsv"), graph);
  write_concept_map_tsv(artifact(config, "concept_map.tsv"), space);

  // |D| |E_D| |E_C| |C|
  std::printf("%zu %zu %d %d\n", bows.size(), graph.size(), labeled_count,
              space.mapped_count());
  log_info("prep: vocabulary size " + std::to_string(vocab.size()) + ", " +
           std::to_string(space.mapped_count()) + " of " +
           std::to_string(space.size()) + " concepts mapped");
  return 0;
}

int cmd_fit_plda(const PipelineConfig& config) {
  validate_config(config, "fit-plda");
  DirLock lock(config.output_dir);

  const Vocabulary vocab = read_vocabulary_json(artifact(config, "vocabulary.json"));
  const auto bows = read_bows_jsonl(artifact(config, "bows.jsonl"));
  const DocumentGraph graph = read_edges_tsv(artifact(config, "document_graph.tsv"));

  const PldaCorpus corpus = make_plda_corpus(bows, vocab.size());
  const auto edges = budgeted_edges(config, index_edges(corpus, graph));

  const FitResult result = fit(corpus, edges, config.plda, config.all_pairs);
  write_plda_model_json(artifact(config, "model.json"), result.model, vocab.terms,
                        config.plda);
  write_fit_report_csv(artifact(config, "fit_report.csv"), result.report);

  std::printf("fit-plda: %d iterations, final elbo %.6f, %s\n", result.report.iterations,
              result.report.elbo_trace.back(),
              result.report.converged ? "converged" : "max iterations reached");
  return 0;
}

namespace {

// Pairs touching concepts without vectors cannot be scored or trained on.
std::vector<LabeledConceptPair> usable_pairs(const std::vector<LabeledConceptPair>& pairs,
                                             const ConceptVectorTable& table,
                                             const char* stage) {
  std::vector<LabeledConceptPair> usable;
  int skipped = 0;
  for (const auto& p : pairs) {
    if (table.has(p.source) && table.has(p.target))
      usable.push_back(p);
    else
      ++skipped;
  }
  if (skipped > 0)
    log_info(std::string(stage) + ": skipped " + std::to_string(skipped) +
             " pairs with unmapped concepts");
  return usable;
}

}  // namespace

int cmd_train(const PipelineConfig& config) {
  validate_config(config, "train");
  DirLock lock(config.output_dir);

  const LoadedPldaModel loaded = read_plda_model_json(artifact(config, "model.json"));
  const ConceptSpace space = read_concept_map_tsv(artifact(config, "concept_map.tsv"));
  const ConceptVectorTable table = concept_vectors(loaded.model, space);

  auto pairs = usable_pairs(read_labeled_pairs_tsv(config.labeled_pairs_path), table,
                            "train");
  if (pairs.empty()) throw std::runtime_error("train: no usable labeled pairs");

  const bool has_negatives =
      std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 0; });
  if (!has_negatives) {
    const auto negatives =
        sample_negatives(pairs, table.concepts, config.eval.negative_factor,
                         splitmix64(config.seed ^ 0x6e656773ULL));
    log_info("train: sampled " + std::to_string(negatives.size()) +
             " negatives (input had only positives)");
    pairs.insert(pairs.end(), negatives.begin(), negatives.end());
  }

  const TrainResult result = train(pairs, table, config.siamese);
  write_siamese_json(artifact(config, "siamese.json"), result.params);
  write_loss_trace_csv(artifact(config, "loss_trace.csv"), result.loss_trace);

  std::printf("train: %zu pairs, final batch loss %.6f\n", pairs.size(),
              result.loss_trace.back());
  return 0;
}

int cmd_predict(const PipelineConfig& config, const std::string& pairs_path) {
  validate_config(config, "predict");
  require_readable(pairs_path, "pairs");
  DirLock lock(config.output_dir);

  const LoadedPldaModel loaded = read_plda_model_json(artifact(config, "model.json"));
  const ConceptSpace space = read_concept_map_tsv(artifact(config, "concept_map.tsv"));
  const ConceptVectorTable table = concept_vectors(loaded.model, space);
  const SiameseParams params = read_siamese_json(artifact(config, "siamese.json"));

  const auto pairs = read_pairs_tsv(pairs_path);
  std::vector<ScoredPair> scores;
  int errors = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& [source, target] = pairs[i];
    const std::string row = pairs_path + ":" + std::to_string(i + 1);
    if (source == target) {
      log_error(row + ": self-pair '" + source + "' rejected");
      ++errors;
      continue;
    }
    if (!table.has(source) || !table.has(target)) {
      log_error(row + ": unknown concept '" + (table.has(source) ? target : source) + "'");
      ++errors;
      continue;
    }
    const double* xs = table.get(source);
    const double* xt = table.get(target);
    scores.push_back({source, target,
                      score(params, std::span<const double>(xs, table.k()),
                            std::span<const double>(xt, table.k()))});
  }

  write_scores_tsv(artifact(config, "scores.tsv"), scores);
  std::printf("predict: scored %zu pairs, %d rejected\n", scores.size(), errors);
  return errors == 0 ? 0 : 1;
}

int cmd_eval(const PipelineConfig& config, Method method) {
  validate_config(config, "eval");
  DirLock lock(config.output_dir);

  const Vocabulary vocab = read_vocabulary_json(artifact(config, "vocabulary.json"));
  const auto bows = read_bows_jsonl(artifact(config, "bows.jsonl"));
  const DocumentGraph graph = read_edges_tsv(artifact(config, "document_graph.tsv"));
  const ConceptSpace space = read_concept_map_tsv(artifact(config, "concept_map.tsv"));

  const PldaCorpus corpus = make_plda_corpus(bows, vocab.size());
  const auto edges = budgeted_edges(config, index_edges(corpus, graph));

  // Refit under an edge budget; otherwise reuse the persisted model.
  PldaModel model;
  if (config.edge_budget > 0) {
    log_info("eval: refitting plda with edge budget " + std::to_string(edges.size()));
    model = fit(corpus, edges, config.plda, config.all_pairs).model;
  } else {
    model = read_plda_model_json(artifact(config, "model.json")).model;
  }

  const ConceptVectorTable table = concept_vectors(model, space);
  std::vector<LabeledConceptPair> positives;
  for (const auto& p :
       usable_pairs(read_labeled_pairs_tsv(config.labeled_pairs_path), table, "eval"))
    if (p.label == 1) positives.push_back(p);
  if (positives.size() < 2) throw std::runtime_error("eval: need at least 2 positive pairs");

  // freq scores need bows indexed the same way as the edge list
  std::vector<BowDocument> corpus_bows;
  corpus_bows.reserve(corpus.num_docs());
  {
    std::unordered_map<std::string, const BowDocument*> by_id;
    for (const auto& bow : bows) by_id[bow.doc_id] = &bow;
    for (const auto& id : corpus.doc_ids) corpus_bows.push_back(*by_id.at(id));
  }

  ExperimentInputs inputs;
  inputs.vectors = &table;
  inputs.model = &model;
  inputs.concept_space = &space;
  inputs.bows = &corpus_bows;
  inputs.doc_edges = &edges;
  inputs.concept_ids = table.concepts;
  inputs.dataset = config.dataset;
  inputs.siamese = config.siamese;

  const EvalReport report = run_experiment(inputs, positives, method, config.eval);
  const std::string stem = "eval_" + method_name(method);
  write_eval_report_json(artifact(config, stem + ".json"), report);
  write_eval_report_csv(artifact(config, stem + ".csv"), report);

  std::printf("eval %s on %s: mean P %.4f R %.4f F %.4f P@50 %.4f P@100 %.4f\n",
              report.method.c_str(), report.dataset.c_str(), report.mean.precision,
              report.mean.recall, report.mean.f_score, report.mean.p_at_50,
              report.mean.p_at_100);
  return 0;
}

}  // namespace prereq
