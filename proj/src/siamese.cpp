#include "prereq/siamese.hpp"

#include <cmath>
#include <stdexcept>

#include "prereq/log.hpp"

namespace prereq {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::runtime_error("siamese: learning_rate must be > 0");
  if (batch_size < 1) throw std::runtime_error("siamese: batch_size must be >= 1");
  if (iterations < 1) throw std::runtime_error("siamese: iterations must be >= 1");
  if (hidden1 < 1 || hidden2 < 1) throw std::runtime_error("siamese: hidden dims must be >= 1");
}

SiameseParams SiameseParams::zeros(int k, int h, int n) {
  SiameseParams p;
  p.k = k;
  p.h = h;
  p.n = n;
  p.w1 = Matrix(k, h);
  p.b1.assign(h, 0.0);
  p.w2 = Matrix(h, n);
  p.b2.assign(n, 0.0);
  p.w = Matrix(n, 2);
  p.b.assign(2, 0.0);
  return p;
}

AdamState AdamState::zeros(int k, int h, int n) {
  AdamState s;
  s.m = SiameseParams::zeros(k, h, n);
  s.v = SiameseParams::zeros(k, h, n);
  s.t = 0;
  return s;
}

namespace {

struct BranchActivations {
  std::vector<double> pre1;  // W1^T x + b1, before relu
  std::vector<double> h1;    // relu(pre1)
  std::vector<double> v;     // W2^T h1 + b2
};

BranchActivations branch_run(const SiameseParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.k)
    throw std::runtime_error("siamese: input length does not match K");
  BranchActivations act;
  act.pre1.assign(p.h, 0.0);
  for (int i = 0; i < p.k; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = p.w1.row(i);
    for (int j = 0; j < p.h; ++j) act.pre1[j] += xi * row[j];
  }
  for (int j = 0; j < p.h; ++j) act.pre1[j] += p.b1[j];
  act.h1.resize(p.h);
  for (int j = 0; j < p.h; ++j) act.h1[j] = act.pre1[j] > 0.0 ? act.pre1[j] : 0.0;
  act.v.assign(p.n, 0.0);
  for (int j = 0; j < p.h; ++j) {
    const double hj = act.h1[j];
    if (hj == 0.0) continue;
    const double* row = p.w2.row(j);
    for (int m = 0; m < p.n; ++m) act.v[m] += hj * row[m];
  }
  for (int m = 0; m < p.n; ++m) act.v[m] += p.b2[m];
  return act;
}

// dL/dv flows back through one branch; tied weights accumulate in-place.
void branch_backward(const SiameseParams& p, std::span<const double> x,
                     const BranchActivations& act, const std::vector<double>& dv,
                     ParamGrads& g) {
  std::vector<double> dh1(p.h, 0.0);
  for (int j = 0; j < p.h; ++j) {
    const double hj = act.h1[j];
    double* grow = g.w2.row(j);
    const double* wrow = p.w2.row(j);
    double acc = 0.0;
    for (int m = 0; m < p.n; ++m) {
      grow[m] += hj * dv[m];
      acc += wrow[m] * dv[m];
    }
    dh1[j] = acc;
  }
  for (int m = 0; m < p.n; ++m) g.b2[m] += dv[m];

  for (int j = 0; j < p.h; ++j) {
    const double da = act.pre1[j] > 0.0 ? dh1[j] : 0.0;
    dh1[j] = da;
    g.b1[j] += da;
  }
  for (int i = 0; i < p.k; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* grow = g.w1.row(i);
    for (int j = 0; j < p.h; ++j) grow[j] += xi * dh1[j];
  }
}

std::array<double, 2> softmax2(const std::array<double, 2>& f) {
  const double m = std::max(f[0], f[1]);
  const double e0 = std::exp(f[0] - m);
  const double e1 = std::exp(f[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

}  // namespace

std::vector<double> branch_forward(const SiameseParams& params, std::span<const double> x) {
  return branch_run(params, x).v;
}

std::array<double, 2> pair_logits(const SiameseParams& params, std::span<const double> x1,
                                  std::span<const double> x2) {
  const auto v1 = branch_forward(params, x1);
  const auto v2 = branch_forward(params, x2);
  std::array<double, 2> f = {params.b[0], params.b[1]};
  for (int m = 0; m < params.n; ++m) {
    const double d = v1[m] - v2[m];
    f[0] += params.w(m, 0) * d;
    f[1] += params.w(m, 1) * d;
  }
  return f;
}

double loss(const SiameseParams& params, std::span<const double> x1,
            std::span<const double> x2, int y) {
  if (y != 0 && y != 1) throw std::runtime_error("siamese: label must be 0 or 1");
  const auto f = pair_logits(params, x1, x2);
  const double m = std::max(f[0], f[1]);
  const double log_z = m + std::log(std::exp(f[0] - m) + std::exp(f[1] - m));
  return log_z - f[y];
}

double loss_and_grads(const SiameseParams& params, const std::vector<PairExample>& batch,
                      ParamGrads& grads) {
  if (batch.empty()) throw std::runtime_error("siamese: empty batch");
  grads = SiameseParams::zeros(params.k, params.h, params.n);
  double total_loss = 0.0;

  for (const auto& ex : batch) {
    if (ex.y != 0 && ex.y != 1) throw std::runtime_error("siamese: label must be 0 or 1");
    const auto act1 = branch_run(params, ex.x1);
    const auto act2 = branch_run(params, ex.x2);
    std::array<double, 2> f = {params.b[0], params.b[1]};
    for (int m = 0; m < params.n; ++m) {
      const double d = act1.v[m] - act2.v[m];
      f[0] += params.w(m, 0) * d;
      f[1] += params.w(m, 1) * d;
    }
    const double mx = std::max(f[0], f[1]);
    const double log_z = mx + std::log(std::exp(f[0] - mx) + std::exp(f[1] - mx));
    total_loss += log_z - f[ex.y];

    const auto p = softmax2(f);
    std::array<double, 2> df = {p[0] - (ex.y == 0 ? 1.0 : 0.0),
                                p[1] - (ex.y == 1 ? 1.0 : 0.0)};
    grads.b[0] += df[0];
    grads.b[1] += df[1];
    std::vector<double> dd(params.n);
    for (int m = 0; m < params.n; ++m) {
      const double d = act1.v[m] - act2.v[m];
      grads.w(m, 0) += d * df[0];
      grads.w(m, 1) += d * df[1];
      dd[m] = params.w(m, 0) * df[0] + params.w(m, 1) * df[1];
    }
    branch_backward(params, ex.x1, act1, dd, grads);
    for (int m = 0; m < params.n; ++m) dd[m] = -dd[m];
    branch_backward(params, ex.x2, act2, dd, grads);
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& x : grads.w1.data) x *= inv;
  for (auto& x : grads.b1) x *= inv;
  for (auto& x : grads.w2.data) x *= inv;
  for (auto& x : grads.b2) x *= inv;
  for (auto& x : grads.w.data) x *= inv;
  for (auto& x : grads.b) x *= inv;
  return total_loss * inv;
}

namespace {

void adam_update(std::vector<double>& theta, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v, double lr, double b1,
                 double b2, double eps, double bc1, double bc2) {
  for (size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void adam_step(SiameseParams& params, const ParamGrads& grads, AdamState& state,
               const TrainConfig& config) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.t));
  adam_update(params.w1.data, grads.w1.data, state.m.w1.data, state.v.w1.data,
              config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
              bc1, bc2);
  adam_update(params.b1, grads.b1, state.m.b1, state.v.b1, config.learning_rate,
              config.adam_beta1, config.adam_beta2, config.adam_eps, bc1, bc2);
  adam_update(params.w2.data, grads.w2.data, state.m.w2.data, state.v.w2.data,
              config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
              bc1, bc2);
  adam_update(params.b2, grads.b2, state.m.b2, state.v.b2, config.learning_rate,
              config.adam_beta1, config.adam_beta2, config.adam_eps, bc1, bc2);
  adam_update(params.w.data, grads.w.data, state.m.w.data, state.v.w.data,
              config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
              bc1, bc2);
  adam_update(params.b, grads.b, state.m.b, state.v.b, config.learning_rate,
              config.adam_beta1, config.adam_beta2, config.adam_eps, bc1, bc2);
}

namespace {

void glorot_init(Matrix& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / (w.rows + w.cols));
  for (auto& x : w.data) x = rng.uniform(-bound, bound);
}

}  // namespace

TrainResult train(const std::vector<LabeledConceptPair>& pairs,
                  const ConceptVectorTable& vectors, const TrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw std::runtime_error("siamese train: empty training set");

  std::vector<PairExample> examples;
  examples.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const double* xs = vectors.get(pair.source);
    const double* xt = vectors.get(pair.target);
    PairExample ex;
    ex.x1.assign(xs, xs + vectors.k());
    ex.x2.assign(xt, xt + vectors.k());
    ex.y = pair.label;
    examples.push_back(std::move(ex));
  }

  const int k = vectors.k();
  SiameseParams params = SiameseParams::zeros(k, config.hidden1, config.hidden2);
  Rng rng(config.seed);
  glorot_init(params.w1, rng);
  glorot_init(params.w2, rng);
  glorot_init(params.w, rng);

  AdamState adam = AdamState::zeros(k, config.hidden1, config.hidden2);
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cursor = 0;

  TrainResult result;
  result.loss_trace.reserve(config.iterations);
  ParamGrads grads;
  std::vector<PairExample> batch;
  const size_t batch_size = std::min<size_t>(config.batch_size, examples.size());

  for (int iter = 0; iter < config.iterations; ++iter) {
    if (cursor + batch_size > order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    batch.clear();
    for (size_t i = 0; i < batch_size; ++i) batch.push_back(examples[order[cursor + i]]);
    cursor += batch_size;

    const double batch_loss = loss_and_grads(params, batch, grads);
    adam_step(params, grads, adam, config);
    result.loss_trace.push_back(batch_loss);
  }

  result.params = std::move(params);
  return result;
}

double score(const SiameseParams& params, std::span<const double> x_s,
             std::span<const double> x_t) {
  const auto f = pair_logits(params, x_s, x_t);
  return softmax2(f)[1];
}

}  // namespace prereq
