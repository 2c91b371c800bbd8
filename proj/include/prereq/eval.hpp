#ifndef PREREQ_EVAL_HPP
#define PREREQ_EVAL_HPP

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prereq/baselines.hpp"
#include "prereq/corpus.hpp"
#include "prereq/plda.hpp"
#include "prereq/siamese.hpp"

namespace prereq {

struct SplitSpec {
  double train_fraction = 0.6;
  int n_splits = 5;
  double negative_factor = 1.5;
  // Fraction of each split's training positives actually used (training-size
  // sweeps); 1.0 = all of them.
  double train_positive_fraction = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<LabeledConceptPair> train_pos;
  std::vector<LabeledConceptPair> test_pos;
};

// Seeded disjoint train/test partitions of the positive pairs; train size is
// the fraction rounded to nearest. Each split shuffles with its own derived
// seed.
std::vector<Split> split_pairs(const std::vector<LabeledConceptPair>& positives,
                               const SplitSpec& spec);

// All reversed positives plus uniformly sampled ordered pairs (avoiding
// positives, reversals and duplicates) until ceil(factor * |positives|);
// returns fewer with a warning when the concept space is too small.
std::vector<LabeledConceptPair> sample_negatives(
    const std::vector<LabeledConceptPair>& positives,
    const std::vector<std::string>& concept_ids, double factor, uint64_t seed);

using PairKey = std::pair<std::string, std::string>;

// Fraction of the top K of `ranked` (already sorted descending, lexicographic
// tie-break) present in truth. K must be positive and within the list.
double precision_at_k(const std::vector<ScoredPair>& ranked,
                      const std::set<PairKey>& truth, int k);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

// predicted and truth are parallel 0/1 vectors.
Prf prf(const std::vector<int>& predicted, const std::vector<int>& truth);

enum class Method { Prereq, Freq, PairwiseLda };

std::string method_name(Method method);
Method parse_method(const std::string& name);

struct SplitMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double p_at_50 = 0.0;
  double p_at_100 = 0.0;
};

struct EvalReport {
  std::string dataset;
  std::string method;
  // Candidate pool used for ranking metrics: test positives plus their
  // sampled negatives.
  std::string pool = "test positives + sampled negatives";
  uint64_t config_hash = 0;
  std::vector<SplitMetrics> splits;
  SplitMetrics mean;
};

// Everything a method needs to score concept pairs.
struct ExperimentInputs {
  const ConceptVectorTable* vectors = nullptr;        // prereq, pairwise-lda
  const PldaModel* model = nullptr;                   // pairwise-lda
  const ConceptSpace* concept_space = nullptr;        // freq
  const std::vector<BowDocument>* bows = nullptr;     // freq (indexed)
  const std::vector<std::pair<int, int>>* doc_edges = nullptr;  // freq
  std::vector<std::string> concept_ids;               // negative sampling pool
  std::string dataset;
  TrainConfig siamese;
};

// Per split: sample negatives, train the pair classifier when the method is
// prereq, score the test pool, compute prf at threshold 0.5 and
// precision@{50,100} (clamped to the pool size), then average per-split
// metrics. F is averaged per split, not recomputed from mean P/R.
EvalReport run_experiment(const ExperimentInputs& inputs,
                          const std::vector<LabeledConceptPair>& positives,
                          Method method, const SplitSpec& spec);

}  // namespace prereq

#endif
