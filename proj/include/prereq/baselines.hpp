#ifndef PREREQ_BASELINES_HPP
#define PREREQ_BASELINES_HPP

#include <string>
#include <utility>
#include <vector>

#include "prereq/corpus.hpp"
#include "prereq/math.hpp"
#include "prereq/plda.hpp"

namespace prereq {

struct ScoredPair {
  std::string source;
  std::string target;
  double score = 0.0;
};

// Number of document edges (d, d') where the source concept occurs in d and
// the target concept occurs in d' (occurrence = bag-of-words count >= 1).
// bows is indexed by document, edges by document index.
int freq_score(int source_vocab_id, int target_vocab_id,
               const std::vector<BowDocument>& bows,
               const std::vector<std::pair<int, int>>& edges);

// Bilinear score v_s^T eta v_t over exponentiated, max-normalized beta
// columns; classification applies a 0.5 threshold to the raw score.
double plda_score(const Matrix& eta, const double* v_s, const double* v_t);

// Descending by score, ties broken by lexicographic (source, target).
void sort_scored_pairs(std::vector<ScoredPair>& pairs);

}  // namespace prereq

#endif
