#ifndef PREREQ_SIAMESE_HPP
#define PREREQ_SIAMESE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "prereq/corpus.hpp"
#include "prereq/math.hpp"
#include "prereq/plda.hpp"

namespace prereq {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 128;
  int iterations = 3500;
  int hidden1 = 64;  // H, first FC layer width
  int hidden2 = 32;  // N, branch output width
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;

  void validate() const;
};

// Weights of one branch (shared by both inputs) plus the difference head.
// A branch computes v = W2^T relu(W1^T x + b1) + b2; the head computes
// f = W^T (v1 - v2) + b.
struct SiameseParams {
  int k = 0, h = 0, n = 0;
  Matrix w1;               // K x H
  std::vector<double> b1;  // H
  Matrix w2;               // H x N
  std::vector<double> b2;  // N
  Matrix w;                // N x 2
  std::vector<double> b;   // 2

  static SiameseParams zeros(int k, int h, int n);
};

// Same tensor shapes as SiameseParams; used for gradients and Adam moments.
using ParamGrads = SiameseParams;

struct AdamState {
  SiameseParams m, v;
  long t = 0;

  static AdamState zeros(int k, int h, int n);
};

struct PairExample {
  std::vector<double> x1, x2;
  int y = 0;
};

std::vector<double> branch_forward(const SiameseParams& params, std::span<const double> x);

std::array<double, 2> pair_logits(const SiameseParams& params, std::span<const double> x1,
                                  std::span<const double> x2);

// Softmax cross-entropy of the pair logits against y, max-subtracted.
double loss(const SiameseParams& params, std::span<const double> x1,
            std::span<const double> x2, int y);

// Mean loss over the batch plus analytic gradients; tied branch weights
// accumulate contributions from both inputs (the x2 path negated through the
// difference head).
double loss_and_grads(const SiameseParams& params, const std::vector<PairExample>& batch,
                      ParamGrads& grads);

void adam_step(SiameseParams& params, const ParamGrads& grads, AdamState& state,
               const TrainConfig& config);

struct TrainResult {
  SiameseParams params;
  std::vector<double> loss_trace;
};

// Seeded Glorot-uniform init, then `iterations` Adam steps over shuffled
// mini-batches with epoch reshuffle. Pairs must all resolve in the table.
TrainResult train(const std::vector<LabeledConceptPair>& pairs,
                  const ConceptVectorTable& vectors, const TrainConfig& config);

// P(x_s is a prerequisite of x_t) = softmax(pair_logits)[1].
double score(const SiameseParams& params, std::span<const double> x_s,
             std::span<const double> x_t);

// Decision rule for precision/recall: ties at 0.5 go to label 0.
inline int classify(double score_value) { return score_value > 0.5 ? 1 : 0; }

}  // namespace prereq

#endif
