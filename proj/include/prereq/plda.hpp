#ifndef PREREQ_PLDA_HPP
#define PREREQ_PLDA_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prereq/corpus.hpp"
#include "prereq/math.hpp"

namespace prereq {

struct PldaHyper {
  int k = 100;
  double alpha = 0.01;
  int max_em_iters = 100;
  // EM sits on a near-symmetric plateau for the first sweeps after a jittered
  // uniform init; the convergence test only applies after min_em_iters.
  int min_em_iters = 20;
  double elbo_rel_tol = 1e-4;
  double nonedge_ratio = 5.0;
  double eta_smoothing = 1e-2;
  double beta_floor = 1e-12;
  double init_jitter = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

// Topic-word distributions (log space) and the asymmetric topic-link matrix.
struct PldaModel {
  int k = 0;
  int vocab_size = 0;
  Matrix log_beta;  // K x |V|
  Matrix eta;       // K x K, every entry strictly inside (0,1)
};

struct LinkObservation {
  int source = 0;
  int target = 0;
  int e = 0;  // observed Bernoulli value
};

// Indexed bag-of-words corpus consumed by inference.
struct PldaCorpus {
  struct Doc {
    std::vector<int> term_ids;
    std::vector<double> term_counts;
    double total = 0.0;
  };
  std::vector<std::string> doc_ids;
  std::vector<Doc> docs;
  int vocab_size = 0;

  int num_docs() const { return static_cast<int>(docs.size()); }
  int doc_index(const std::string& id) const;
};

// Drops documents with empty bag-of-words; edges touching dropped documents
// are dropped with them.
PldaCorpus make_plda_corpus(const std::vector<BowDocument>& bows, int vocab_size);
std::vector<std::pair<int, int>> index_edges(const PldaCorpus& corpus,
                                             const DocumentGraph& graph);

struct VariationalState {
  Matrix gamma;                   // D x K Dirichlet parameters
  std::vector<Matrix> phi;        // per doc: distinct-terms x K simplex rows
  Matrix lambda_src, lambda_tgt;  // per link observation: K simplex rows
};

// Uniformly sampled ordered non-edge pairs, e=0, until ceil(ratio*|edges|)
// unique ones are drawn; returns all non-edges with a warning if the pool is
// exhausted first.
std::vector<LinkObservation> sample_nonedges(int n_docs,
                                             const std::vector<std::pair<int, int>>& edges,
                                             double ratio, uint64_t seed);

// edges as e=1 observations followed by the supplied non-edges.
std::vector<LinkObservation> make_observations(const std::vector<std::pair<int, int>>& edges,
                                               std::vector<LinkObservation> nonedges);

// Every ordered pair (i,j), i != j: e=1 for edges, e=0 otherwise.
std::vector<LinkObservation> all_pair_observations(int n_docs,
                                                   const std::vector<std::pair<int, int>>& edges);

std::pair<PldaModel, VariationalState> init_model(const PldaHyper& hyper,
                                                  const PldaCorpus& corpus,
                                                  const std::vector<LinkObservation>& links);

// One full coordinate-ascent sweep: phi rows, then link lambda rows, then
// gamma. Throws on any non-finite value, naming the doc or link.
void e_step(const PldaModel& model, const PldaCorpus& corpus,
            const std::vector<LinkObservation>& links, VariationalState& state,
            double alpha);

void m_step(const VariationalState& state, const PldaCorpus& corpus,
            const std::vector<LinkObservation>& links, const PldaHyper& hyper,
            PldaModel& model);

// Evidence lower bound E_q[log p(w,e,z,theta | alpha,beta,eta)] - E_q[log q].
double elbo(const PldaModel& model, const VariationalState& state,
            const PldaCorpus& corpus, const std::vector<LinkObservation>& links,
            const PldaHyper& hyper);

struct FitReport {
  std::vector<double> elbo_trace;
  std::vector<double> delta_rel;  // parallel to elbo_trace, first entry 0
  int iterations = 0;
  bool converged = false;
};

struct FitResult {
  PldaModel model;
  FitReport report;
};

// Alternates e_step/m_step until the relative ELBO improvement drops below
// elbo_rel_tol or max_em_iters is reached.
FitResult fit_observations(const PldaCorpus& corpus,
                           const std::vector<LinkObservation>& links,
                           const PldaHyper& hyper);

// Builds observations from the edge list (e=1) plus sampled non-edges at
// hyper.nonedge_ratio, or the exact all-pairs plate when all_pairs is set.
FitResult fit(const PldaCorpus& corpus, const std::vector<std::pair<int, int>>& edges,
              const PldaHyper& hyper, bool all_pairs = false);

// Per-concept K-vector: exponentiated beta column divided by its maximum.
struct ConceptVectorTable {
  std::vector<std::string> concepts;
  Matrix vectors;  // n x K
  std::unordered_map<std::string, int> index;

  bool has(const std::string& concept_name) const { return index.count(concept_name) > 0; }
  const double* get(const std::string& concept_name) const;
  int k() const { return vectors.cols; }
};

// Vectors for every mapped concept in the space; throws if none are mapped.
ConceptVectorTable concept_vectors(const PldaModel& model, const ConceptSpace& space);

}  // namespace prereq

#endif
