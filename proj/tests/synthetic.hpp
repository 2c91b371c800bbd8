// Test-only helpers: planted-model generators, an independent plain-LDA
// implementation used as the dual-route oracle, and topic alignment.
#ifndef PREREQ_TESTS_SYNTHETIC_HPP
#define PREREQ_TESTS_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "prereq/corpus.hpp"
#include "prereq/math.hpp"
#include "prereq/plda.hpp"

namespace synth {

using prereq::Matrix;
using prereq::Rng;

inline int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  double u = rng.u01();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

inline double sample_normal(Rng& rng) {
  double u1 = rng.u01();
  while (u1 <= 0.0) u1 = rng.u01();
  const double u2 = rng.u01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang; the alpha < 1 boost uses Gamma(alpha+1) * U^(1/alpha).
inline double sample_gamma(double alpha, Rng& rng) {
  if (alpha < 1.0) {
    const double u = std::max(rng.u01(), 1e-300);
    return sample_gamma(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = sample_normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.u01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline std::vector<double> sample_dirichlet(const std::vector<double>& alpha, Rng& rng) {
  std::vector<double> x(alpha.size());
  double sum = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) {
    x[i] = sample_gamma(alpha[i], rng);
    sum += x[i];
  }
  for (auto& v : x) v /= sum;
  return x;
}

// ---------------------------------------------------------------------------
// Planted pairwise-link model
// ---------------------------------------------------------------------------

struct PlantedModel {
  int k = 0;
  int vocab = 0;
  Matrix beta;  // K x V, rows sum to 1
  Matrix eta;   // K x K
};

// Each topic owns a block of vocab / k words carrying (1 - spread) of its
// mass; the remaining mass is uniform over the other words. Lower spread =
// more peaked topics.
inline PlantedModel make_planted_model(int k, int vocab, double spread, const Matrix& eta) {
  PlantedModel planted;
  planted.k = k;
  planted.vocab = vocab;
  planted.eta = eta;
  planted.beta = Matrix(k, vocab);
  const int block = vocab / k;
  for (int topic = 0; topic < k; ++topic) {
    const int lo = topic * block;
    const int hi = (topic == k - 1) ? vocab : lo + block;
    const int in_block = hi - lo;
    for (int v = 0; v < vocab; ++v) {
      const bool inside = v >= lo && v < hi;
      planted.beta(topic, v) = inside ? (1.0 - spread) / in_block
                                      : spread / (vocab - in_block);
    }
  }
  return planted;
}

inline Matrix background_eta(int k, double value) { return Matrix(k, k, value); }

struct SampledCorpus {
  prereq::PldaCorpus corpus;
  std::vector<std::vector<double>> theta;  // per doc
  std::vector<int> main_topic;             // argmax of theta
};

// Documents drawn from the generative process: theta ~ Dir(alpha_doc), each
// token z ~ theta, w ~ beta_z.
inline SampledCorpus sample_corpus(const PlantedModel& planted, int n_docs,
                                   int tokens_per_doc, double alpha_doc, Rng& rng) {
  SampledCorpus out;
  out.corpus.vocab_size = planted.vocab;
  std::vector<double> alpha(planted.k, alpha_doc);
  std::vector<double> beta_row(planted.vocab);
  for (int d = 0; d < n_docs; ++d) {
    const auto theta = sample_dirichlet(alpha, rng);
    std::map<int, int> counts;
    for (int t = 0; t < tokens_per_doc; ++t) {
      const int z = sample_categorical(theta, rng);
      for (int v = 0; v < planted.vocab; ++v) beta_row[v] = planted.beta(z, v);
      const int w = sample_categorical(beta_row, rng);
      ++counts[w];
    }
    prereq::PldaCorpus::Doc doc;
    for (const auto& [v, c] : counts) {
      doc.term_ids.push_back(v);
      doc.term_counts.push_back(c);
      doc.total += c;
    }
    out.corpus.doc_ids.push_back("doc" + std::to_string(d));
    out.corpus.docs.push_back(std::move(doc));
    out.main_topic.push_back(static_cast<int>(
        std::max_element(theta.begin(), theta.end()) - theta.begin()));
    out.theta.push_back(theta);
  }
  return out;
}

// Documents with a fixed dominant topic: theta = (1-mix) e_main + mix/K.
inline SampledCorpus sample_assigned_corpus(const PlantedModel& planted, int n_docs,
                                            int tokens_per_doc, double mix, Rng& rng) {
  SampledCorpus out;
  out.corpus.vocab_size = planted.vocab;
  std::vector<double> beta_row(planted.vocab);
  for (int d = 0; d < n_docs; ++d) {
    const int main = d % planted.k;
    std::vector<double> theta(planted.k, mix / planted.k);
    theta[main] += 1.0 - mix;
    std::map<int, int> counts;
    for (int t = 0; t < tokens_per_doc; ++t) {
      const int z = sample_categorical(theta, rng);
      for (int v = 0; v < planted.vocab; ++v) beta_row[v] = planted.beta(z, v);
      const int w = sample_categorical(beta_row, rng);
      ++counts[w];
    }
    prereq::PldaCorpus::Doc doc;
    for (const auto& [v, c] : counts) {
      doc.term_ids.push_back(v);
      doc.term_counts.push_back(c);
      doc.total += c;
    }
    out.corpus.doc_ids.push_back("doc" + std::to_string(d));
    out.corpus.docs.push_back(std::move(doc));
    out.main_topic.push_back(main);
    out.theta.push_back(std::move(theta));
  }
  return out;
}

// Link observations from the process: pick distinct ordered pairs, draw
// z from each endpoint's theta and e ~ Bernoulli(eta_{z,z'}).
inline std::vector<prereq::LinkObservation> sample_links(const PlantedModel& planted,
                                                         const SampledCorpus& docs,
                                                         int n_pairs, Rng& rng) {
  const int n_docs = docs.corpus.num_docs();
  std::vector<std::pair<int, int>> pairs;
  for (int s = 0; s < n_docs; ++s)
    for (int t = 0; t < n_docs; ++t)
      if (s != t) pairs.emplace_back(s, t);
  rng.shuffle(pairs);
  if (static_cast<size_t>(n_pairs) < pairs.size()) pairs.resize(n_pairs);

  std::vector<prereq::LinkObservation> obs;
  obs.reserve(pairs.size());
  for (const auto& [s, t] : pairs) {
    const int zs = sample_categorical(docs.theta[s], rng);
    const int zt = sample_categorical(docs.theta[t], rng);
    const int e = rng.u01() < planted.eta(zs, zt) ? 1 : 0;
    obs.push_back({s, t, e});
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Topic alignment: greedy maximum-correlation matching on beta rows.
// Returns perm s.t. fitted topic perm[i] corresponds to planted topic i.
// ---------------------------------------------------------------------------

inline double pearson(const double* a, const double* b, int n) {
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (int i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  const double denom = std::sqrt(va * vb);
  return denom > 0.0 ? cov / denom : 0.0;
}

inline std::vector<int> align_topics(const Matrix& fitted_beta, const Matrix& planted_beta) {
  const int k = planted_beta.rows;
  Matrix corr(k, k);
  std::vector<double> fitted_row(fitted_beta.cols);
  for (int f = 0; f < k; ++f) {
    for (int v = 0; v < fitted_beta.cols; ++v) fitted_row[v] = fitted_beta(f, v);
    for (int p = 0; p < k; ++p)
      corr(f, p) = pearson(fitted_row.data(), planted_beta.row(p), fitted_beta.cols);
  }
  std::vector<int> perm(k, -1);
  std::vector<bool> used_f(k, false), used_p(k, false);
  for (int round = 0; round < k; ++round) {
    double best = -2.0;
    int bf = -1, bp = -1;
    for (int f = 0; f < k; ++f) {
      if (used_f[f]) continue;
      for (int p = 0; p < k; ++p) {
        if (used_p[p]) continue;
        if (corr(f, p) > best) {
          best = corr(f, p);
          bf = f;
          bp = p;
        }
      }
    }
    perm[bp] = bf;
    used_f[bf] = true;
    used_p[bp] = true;
  }
  return perm;
}

// exp(log_beta) as a dense matrix
inline Matrix beta_from_model(const prereq::PldaModel& model) {
  Matrix beta(model.k, model.vocab_size);
  for (int i = 0; i < model.k; ++i)
    for (int j = 0; j < model.vocab_size; ++j) beta(i, j) = std::exp(model.log_beta(i, j));
  return beta;
}

// ---------------------------------------------------------------------------
// Independent plain-LDA path (no link machinery anywhere). Oracle for the
// empty-link degeneration check; mirrors the same variational family.
// ---------------------------------------------------------------------------

struct PlainLdaResult {
  Matrix log_beta;
  std::vector<double> elbo_trace;
};

inline PlainLdaResult fit_plain_lda(const prereq::PldaCorpus& corpus,
                                    const prereq::PldaHyper& hyper) {
  const int k = hyper.k;
  const int v = corpus.vocab_size;
  const int n_docs = corpus.num_docs();

  Rng rng(hyper.seed);
  Matrix log_beta(k, v);
  for (int i = 0; i < k; ++i) {
    double sum = 0.0;
    for (int j = 0; j < v; ++j) {
      log_beta(i, j) = 1.0 + hyper.init_jitter * rng.u01();
      sum += log_beta(i, j);
    }
    for (int j = 0; j < v; ++j) log_beta(i, j) = std::log(log_beta(i, j) / sum);
  }

  Matrix gamma(n_docs, k);
  for (int d = 0; d < n_docs; ++d)
    for (int i = 0; i < k; ++i) gamma(d, i) = hyper.alpha + corpus.docs[d].total / k;
  std::vector<Matrix> phi;
  for (int d = 0; d < n_docs; ++d)
    phi.emplace_back(static_cast<int>(corpus.docs[d].term_ids.size()), k, 1.0 / k);

  PlainLdaResult result;
  double prev = 0.0;
  for (int iter = 0; iter < hyper.max_em_iters; ++iter) {
    // e-step
    Matrix dig(n_docs, k);
    for (int d = 0; d < n_docs; ++d)
      for (int i = 0; i < k; ++i) dig(d, i) = prereq::digamma(gamma(d, i));
    std::vector<double> work(k);
    for (int d = 0; d < n_docs; ++d) {
      const auto& doc = corpus.docs[d];
      for (size_t t = 0; t < doc.term_ids.size(); ++t) {
        for (int i = 0; i < k; ++i) work[i] = dig(d, i) + log_beta(i, doc.term_ids[t]);
        prereq::softmax_inplace(work.data(), k);
        std::copy(work.begin(), work.end(), phi[d].row(static_cast<int>(t)));
      }
    }
    for (int d = 0; d < n_docs; ++d) {
      for (int i = 0; i < k; ++i) gamma(d, i) = hyper.alpha;
      const auto& doc = corpus.docs[d];
      for (size_t t = 0; t < doc.term_ids.size(); ++t) {
        const double c = doc.term_counts[t];
        const double* row = phi[d].row(static_cast<int>(t));
        for (int i = 0; i < k; ++i) gamma(d, i) += c * row[i];
      }
    }

    // m-step
    Matrix acc(k, v, 0.0);
    for (int d = 0; d < n_docs; ++d) {
      const auto& doc = corpus.docs[d];
      for (size_t t = 0; t < doc.term_ids.size(); ++t) {
        const double c = doc.term_counts[t];
        const double* row = phi[d].row(static_cast<int>(t));
        for (int i = 0; i < k; ++i) acc(i, doc.term_ids[t]) += c * row[i];
      }
    }
    for (int i = 0; i < k; ++i) {
      double sum = 0.0;
      for (int j = 0; j < v; ++j) sum += acc(i, j);
      if (sum <= 0.0) {
        for (int j = 0; j < v; ++j) acc(i, j) = 1.0 / v;
        sum = 1.0;
      }
      double floored_sum = 0.0;
      for (int j = 0; j < v; ++j) {
        acc(i, j) = std::max(acc(i, j) / sum, hyper.beta_floor);
        floored_sum += acc(i, j);
      }
      for (int j = 0; j < v; ++j) log_beta(i, j) = std::log(acc(i, j) / floored_sum);
    }

    // elbo
    double bound = 0.0;
    const double lga = std::lgamma(k * hyper.alpha) - k * std::lgamma(hyper.alpha);
    for (int d = 0; d < n_docs; ++d) {
      double gsum = 0.0;
      for (int i = 0; i < k; ++i) gsum += gamma(d, i);
      const double dig_sum = prereq::digamma(gsum);
      bound += lga - std::lgamma(gsum);
      std::vector<double> elog(k);
      for (int i = 0; i < k; ++i) {
        elog[i] = prereq::digamma(gamma(d, i)) - dig_sum;
        bound += (hyper.alpha - gamma(d, i)) * elog[i] + std::lgamma(gamma(d, i));
      }
      const auto& doc = corpus.docs[d];
      for (size_t t = 0; t < doc.term_ids.size(); ++t) {
        const double c = doc.term_counts[t];
        const double* row = phi[d].row(static_cast<int>(t));
        double term = 0.0;
        for (int i = 0; i < k; ++i) {
          if (row[i] <= 0.0) continue;
          term += row[i] * (elog[i] + log_beta(i, doc.term_ids[t]) - std::log(row[i]));
        }
        bound += c * term;
      }
    }
    result.elbo_trace.push_back(bound);
    if (iter > 0 &&
        std::abs((bound - prev) / std::max(std::abs(prev), 1e-12)) < hyper.elbo_rel_tol)
      break;
    prev = bound;
  }
  result.log_beta = std::move(log_beta);
  return result;
}

// ---------------------------------------------------------------------------
// Random (non-planted) corpora and graphs for property tests.
// ---------------------------------------------------------------------------

inline prereq::PldaCorpus random_corpus(int n_docs, int vocab, int max_terms_per_doc,
                                        Rng& rng) {
  prereq::PldaCorpus corpus;
  corpus.vocab_size = vocab;
  for (int d = 0; d < n_docs; ++d) {
    const int n_terms = 1 + static_cast<int>(rng.uniform_int(max_terms_per_doc));
    std::map<int, int> counts;
    for (int t = 0; t < n_terms; ++t)
      ++counts[static_cast<int>(rng.uniform_int(vocab))];
    prereq::PldaCorpus::Doc doc;
    for (const auto& [v, c] : counts) {
      doc.term_ids.push_back(v);
      doc.term_counts.push_back(c);
      doc.total += c;
    }
    corpus.doc_ids.push_back("doc" + std::to_string(d));
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

inline std::vector<std::pair<int, int>> random_edges(int n_docs, int n_edges, Rng& rng) {
  std::vector<std::pair<int, int>> all;
  for (int s = 0; s < n_docs; ++s)
    for (int t = 0; t < n_docs; ++t)
      if (s != t) all.emplace_back(s, t);
  rng.shuffle(all);
  if (static_cast<size_t>(n_edges) < all.size()) all.resize(n_edges);
  return all;
}

}  // namespace synth

#endif
