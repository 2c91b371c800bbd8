#ifndef PREREQ_IO_HPP
#define PREREQ_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "prereq/corpus.hpp"
#include "prereq/eval.hpp"
#include "prereq/plda.hpp"
#include "prereq/siamese.hpp"

namespace prereq {

// One JSON object per line: {"id": str, "text": str}. Malformed lines are
// reported with their line number.
std::vector<RawDocument> read_documents_jsonl(const std::string& path);

// One JSON object per line: {"playlist_id": str, "video_ids": [str]}.
std::vector<Playlist> read_playlists_jsonl(const std::string& path);

// TSV source<TAB>target, no header.
DocumentGraph read_edges_tsv(const std::string& path);
void write_edges_tsv(const std::string& path, const DocumentGraph& graph);

// One phrase per line.
std::vector<std::string> read_concepts(const std::string& path);

// TSV source<TAB>target<TAB>label(0|1).
std::vector<LabeledConceptPair> read_labeled_pairs_tsv(const std::string& path);
void write_labeled_pairs_tsv(const std::string& path,
                             const std::vector<LabeledConceptPair>& pairs);

// TSV source<TAB>target (scoring input without labels).
std::vector<std::pair<std::string, std::string>> read_pairs_tsv(const std::string& path);

void write_scores_tsv(const std::string& path, const std::vector<ScoredPair>& scores);

// Corpus artifacts persisted between pipeline stages.
void write_vocabulary_json(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocabulary_json(const std::string& path);
void write_bows_jsonl(const std::string& path, const std::vector<BowDocument>& bows);
std::vector<BowDocument> read_bows_jsonl(const std::string& path);
void write_concept_map_tsv(const std::string& path, const ConceptSpace& space);
ConceptSpace read_concept_map_tsv(const std::string& path);

// Model file: {"k", "vocab", "log_beta", "eta", "hyper", "format_version": 1}
// with round-trip float precision.
void write_plda_model_json(const std::string& path, const PldaModel& model,
                           const std::vector<std::string>& vocab_terms,
                           const PldaHyper& hyper);
struct LoadedPldaModel {
  PldaModel model;
  std::vector<std::string> vocab_terms;
  PldaHyper hyper;
};
LoadedPldaModel read_plda_model_json(const std::string& path);

// {"k","h","n","w1","b1","w2","b2","w","b","format_version":1}
void write_siamese_json(const std::string& path, const SiameseParams& params);
SiameseParams read_siamese_json(const std::string& path);

// CSV iter,elbo,delta_rel
void write_fit_report_csv(const std::string& path, const FitReport& report);
// CSV iter,loss
void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace);

void write_eval_report_json(const std::string& path, const EvalReport& report);
// One row per split plus a mean row.
void write_eval_report_csv(const std::string& path, const EvalReport& report);

}  // namespace prereq

#endif
