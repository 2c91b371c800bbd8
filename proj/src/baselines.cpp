#include "prereq/baselines.hpp"

#include <algorithm>

namespace prereq {

int freq_score(int source_vocab_id, int target_vocab_id,
               const std::vector<BowDocument>& bows,
               const std::vector<std::pair<int, int>>& edges) {
  int count = 0;
  for (const auto& [d, dprime] : edges) {
    if (bows[d].has_term(source_vocab_id) && bows[dprime].has_term(target_vocab_id))
      ++count;
  }
  return count;
}

double plda_score(const Matrix& eta, const double* v_s, const double* v_t) {
  const int k = eta.rows;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    if (v_s[i] == 0.0) continue;
    const double* row = eta.row(i);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += row[j] * v_t[j];
    total += v_s[i] * acc;
  }
  return total;
}

void sort_scored_pairs(std::vector<ScoredPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  });
}

}  // namespace prereq
