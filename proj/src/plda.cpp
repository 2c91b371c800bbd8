#include "prereq/plda.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "prereq/log.hpp"

namespace prereq {

void PldaHyper::validate() const {
  if (k < 2) throw std::runtime_error("plda: K must be >= 2");
  if (alpha <= 0.0) throw std::runtime_error("plda: alpha must be > 0");
  if (nonedge_ratio < 0.0) throw std::runtime_error("plda: nonedge_ratio must be >= 0");
  if (eta_smoothing <= 0.0) throw std::runtime_error("plda: eta_smoothing must be > 0");
  if (max_em_iters < 1) throw std::runtime_error("plda: max_em_iters must be >= 1");
}

int PldaCorpus::doc_index(const std::string& id) const {
  for (int d = 0; d < num_docs(); ++d)
    if (doc_ids[d] == id) return d;
  return -1;
}

PldaCorpus make_plda_corpus(const std::vector<BowDocument>& bows, int vocab_size) {
  PldaCorpus corpus;
  corpus.vocab_size = vocab_size;
  for (const auto& bow : bows) {
    if (bow.empty()) {
      log_info("plda corpus: dropping empty document '" + bow.doc_id + "'");
      continue;
    }
    PldaCorpus::Doc doc;
    for (const auto& [term, count] : bow.counts) {
      if (term < 0 || term >= vocab_size)
        throw std::runtime_error("plda corpus: document '" + bow.doc_id + "' has term id " +
                                 std::to_string(term) + " outside the vocabulary");
      if (count < 1)
        throw std::runtime_error("plda corpus: document '" + bow.doc_id +
                                 "' has a non-positive count");
      doc.term_ids.push_back(term);
      doc.term_counts.push_back(static_cast<double>(count));
      doc.total += count;
    }
    corpus.doc_ids.push_back(bow.doc_id);
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

std::vector<std::pair<int, int>> index_edges(const PldaCorpus& corpus,
                                             const DocumentGraph& graph) {
  std::unordered_map<std::string, int> pos;
  for (int d = 0; d < corpus.num_docs(); ++d) pos[corpus.doc_ids[d]] = d;
  std::vector<std::pair<int, int>> edges;
  for (const auto& [src, tgt] : graph.edges) {
    auto a = pos.find(src);
    auto b = pos.find(tgt);
    if (a == pos.end() || b == pos.end()) {
      log_info("plda corpus: dropping edge " + src + " -> " + tgt +
               " (endpoint not in corpus)");
      continue;
    }
    edges.emplace_back(a->second, b->second);
  }
  return edges;
}

namespace {

uint64_t encode_pair(int n_docs, int src, int tgt) {
  return static_cast<uint64_t>(src) * static_cast<uint64_t>(n_docs) +
         static_cast<uint64_t>(tgt);
}

}  // namespace

std::vector<LinkObservation> sample_nonedges(int n_docs,
                                             const std::vector<std::pair<int, int>>& edges,
                                             double ratio, uint64_t seed) {
  if (ratio < 0.0) throw std::runtime_error("sample_nonedges: ratio must be >= 0");
  std::vector<LinkObservation> nonedges;
  uint64_t target = static_cast<uint64_t>(
      std::ceil(ratio * static_cast<double>(edges.size())));
  if (target == 0 || n_docs < 2) return nonedges;

  std::unordered_set<uint64_t> taken;
  for (const auto& [s, t] : edges) taken.insert(encode_pair(n_docs, s, t));
  uint64_t candidates =
      static_cast<uint64_t>(n_docs) * (n_docs - 1) - static_cast<uint64_t>(taken.size());

  Rng rng(seed);
  if (target >= candidates) {
    if (target > candidates)
      log_info("sample_nonedges: only " + std::to_string(candidates) +
               " non-edges exist, returning all of them");
    for (int s = 0; s < n_docs; ++s)
      for (int t = 0; t < n_docs; ++t)
        if (s != t && !taken.count(encode_pair(n_docs, s, t)))
          nonedges.push_back({s, t, 0});
    return nonedges;
  }

  if (target * 4 >= candidates) {
    // dense request: enumerate and take a seeded partial shuffle
    std::vector<std::pair<int, int>> pool;
    pool.reserve(candidates);
    for (int s = 0; s < n_docs; ++s)
      for (int t = 0; t < n_docs; ++t)
        if (s != t && !taken.count(encode_pair(n_docs, s, t))) pool.emplace_back(s, t);
    rng.shuffle(pool);
    for (uint64_t i = 0; i < target; ++i) nonedges.push_back({pool[i].first, pool[i].second, 0});
    return nonedges;
  }

  while (nonedges.size() < target) {
    int s = static_cast<int>(rng.uniform_int(n_docs));
    int t = static_cast<int>(rng.uniform_int(n_docs));
    if (s == t) continue;
    uint64_t key = encode_pair(n_docs, s, t);
    if (taken.count(key)) continue;
    taken.insert(key);
    nonedges.push_back({s, t, 0});
  }
  return nonedges;
}

std::vector<LinkObservation> make_observations(const std::vector<std::pair<int, int>>& edges,
                                               std::vector<LinkObservation> nonedges) {
  std::vector<LinkObservation> obs;
  obs.reserve(edges.size() + nonedges.size());
  for (const auto& [s, t] : edges) obs.push_back({s, t, 1});
  for (const auto& ne : nonedges) obs.push_back(ne);
  return obs;
}

std::vector<LinkObservation> all_pair_observations(int n_docs,
                                                   const std::vector<std::pair<int, int>>& edges) {
  std::unordered_set<uint64_t> edge_set;
  for (const auto& [s, t] : edges) edge_set.insert(encode_pair(n_docs, s, t));
  std::vector<LinkObservation> obs;
  obs.reserve(static_cast<size_t>(n_docs) * (n_docs - 1));
  for (int s = 0; s < n_docs; ++s)
    for (int t = 0; t < n_docs; ++t)
      if (s != t) obs.push_back({s, t, edge_set.count(encode_pair(n_docs, s, t)) ? 1 : 0});
  return obs;
}

std::pair<PldaModel, VariationalState> init_model(const PldaHyper& hyper,
                                                  const PldaCorpus& corpus,
                                                  const std::vector<LinkObservation>& links) {
  hyper.validate();
  if (corpus.num_docs() == 0) throw std::runtime_error("init_model: empty corpus");
  const int k = hyper.k;
  const int v = corpus.vocab_size;
  const int n_docs = corpus.num_docs();
  const int n_links = static_cast<int>(links.size());

  Rng rng(hyper.seed);
  PldaModel model;
  model.k = k;
  model.vocab_size = v;
  model.log_beta = Matrix(k, v);
  for (int i = 0; i < k; ++i) {
    double* row = model.log_beta.row(i);
    double sum = 0.0;
    for (int j = 0; j < v; ++j) {
      row[j] = 1.0 + hyper.init_jitter * rng.u01();
      sum += row[j];
    }
    for (int j = 0; j < v; ++j) row[j] = std::log(row[j] / sum);
  }
  model.eta = Matrix(k, k, 0.5);

  VariationalState state;
  state.gamma = Matrix(n_docs, k);
  for (int d = 0; d < n_docs; ++d)
    for (int i = 0; i < k; ++i)
      state.gamma(d, i) = hyper.alpha + corpus.docs[d].total / k;
  state.phi.reserve(n_docs);
  for (int d = 0; d < n_docs; ++d)
    state.phi.emplace_back(static_cast<int>(corpus.docs[d].term_ids.size()), k, 1.0 / k);
  state.lambda_src = Matrix(n_links, k, 1.0 / k);
  state.lambda_tgt = Matrix(n_links, k, 1.0 / k);
  return {std::move(model), std::move(state)};
}

namespace {

bool row_finite(const double* row, int n) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(row[i])) return false;
  return true;
}

void check_row_finite(const double* row, int n, const std::string& what) {
  if (!row_finite(row, n))
    throw std::runtime_error("plda: non-finite value in " + what);
}

}  // namespace

void e_step(const PldaModel& model, const PldaCorpus& corpus,
            const std::vector<LinkObservation>& links, VariationalState& state,
            double alpha) {
  const int k = model.k;
  const int n_docs = corpus.num_docs();

  // digamma(gamma) is frozen for the whole sweep
  Matrix dig(n_docs, k);
  for (int d = 0; d < n_docs; ++d)
    for (int i = 0; i < k; ++i) dig(d, i) = digamma(state.gamma(d, i));

  // phi pass
  std::vector<double> work(k);
  for (int d = 0; d < n_docs; ++d) {
    const auto& doc = corpus.docs[d];
    Matrix& phi = state.phi[d];
    for (size_t t = 0; t < doc.term_ids.size(); ++t) {
      const int v = doc.term_ids[t];
      for (int i = 0; i < k; ++i) work[i] = dig(d, i) + model.log_beta(i, v);
      softmax_inplace(work.data(), k);
      if (!row_finite(work.data(), k))
        throw std::runtime_error("plda: non-finite phi of doc '" + corpus.doc_ids[d] + "'");
      std::copy(work.begin(), work.end(), phi.row(static_cast<int>(t)));
    }
  }

  // lambda pass
  if (!links.empty()) {
    Matrix log_eta(k, k), log_neta(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        log_eta(i, j) = std::log(model.eta(i, j));
        log_neta(i, j) = std::log1p(-model.eta(i, j));
      }
    for (size_t l = 0; l < links.size(); ++l) {
      const auto& link = links[l];
      const Matrix& log_e = link.e ? log_eta : log_neta;
      double* lam_s = state.lambda_src.row(static_cast<int>(l));
      double* lam_t = state.lambda_tgt.row(static_cast<int>(l));
      for (int i = 0; i < k; ++i) {
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += lam_t[j] * log_e(i, j);
        work[i] = dig(link.source, i) + acc;
      }
      softmax_inplace(work.data(), k);
      if (!row_finite(work.data(), k))
        throw std::runtime_error("plda: non-finite lambda_src of link " +
                                 corpus.doc_ids[link.source] + " -> " +
                                 corpus.doc_ids[link.target]);
      std::copy(work.begin(), work.end(), lam_s);

      for (int j = 0; j < k; ++j) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc += lam_s[i] * log_e(i, j);
        work[j] = dig(link.target, j) + acc;
      }
      softmax_inplace(work.data(), k);
      if (!row_finite(work.data(), k))
        throw std::runtime_error("plda: non-finite lambda_tgt of link " +
                                 corpus.doc_ids[link.source] + " -> " +
                                 corpus.doc_ids[link.target]);
      std::copy(work.begin(), work.end(), lam_t);
    }
  }

  // gamma pass
  for (int d = 0; d < n_docs; ++d)
    for (int i = 0; i < k; ++i) state.gamma(d, i) = alpha;
  for (int d = 0; d < n_docs; ++d) {
    const auto& doc = corpus.docs[d];
    const Matrix& phi = state.phi[d];
    for (size_t t = 0; t < doc.term_ids.size(); ++t) {
      const double c = doc.term_counts[t];
      const double* row = phi.row(static_cast<int>(t));
      for (int i = 0; i < k; ++i) state.gamma(d, i) += c * row[i];
    }
  }
  for (size_t l = 0; l < links.size(); ++l) {
    const auto& link = links[l];
    const double* lam_s = state.lambda_src.row(static_cast<int>(l));
    const double* lam_t = state.lambda_tgt.row(static_cast<int>(l));
    for (int i = 0; i < k; ++i) {
      state.gamma(link.source, i) += lam_s[i];
      state.gamma(link.target, i) += lam_t[i];
    }
  }
  for (int d = 0; d < n_docs; ++d)
    check_row_finite(state.gamma.row(d), k, "gamma of doc '" + corpus.doc_ids[d] + "'");
}

void m_step(const VariationalState& state, const PldaCorpus& corpus,
            const std::vector<LinkObservation>& links, const PldaHyper& hyper,
            PldaModel& model) {
  const int k = model.k;
  const int v = model.vocab_size;

  Matrix acc(k, v, 0.0);
  for (int d = 0; d < corpus.num_docs(); ++d) {
    const auto& doc = corpus.docs[d];
    const Matrix& phi = state.phi[d];
    for (size_t t = 0; t < doc.term_ids.size(); ++t) {
      const double c = doc.term_counts[t];
      const double* row = phi.row(static_cast<int>(t));
      const int term = doc.term_ids[t];
      for (int i = 0; i < k; ++i) acc(i, term) += c * row[i];
    }
  }
  for (int i = 0; i < k; ++i) {
    double* row = acc.row(i);
    double sum = 0.0;
    for (int j = 0; j < v; ++j) sum += row[j];
    if (sum <= 0.0) {
      log_info("m_step: topic " + std::to_string(i) + " has zero expected count, keeping uniform");
      for (int j = 0; j < v; ++j) row[j] = 1.0 / v;
      sum = 1.0;
    }
    double floored_sum = 0.0;
    for (int j = 0; j < v; ++j) {
      row[j] = std::max(row[j] / sum, hyper.beta_floor);
      floored_sum += row[j];
    }
    for (int j = 0; j < v; ++j) model.log_beta(i, j) = std::log(row[j] / floored_sum);
  }

  const double s = hyper.eta_smoothing;
  Matrix num(k, k, 0.0), den(k, k, 0.0);
  for (size_t l = 0; l < links.size(); ++l) {
    const auto& link = links[l];
    const double* lam_s = state.lambda_src.row(static_cast<int>(l));
    const double* lam_t = state.lambda_tgt.row(static_cast<int>(l));
    for (int i = 0; i < k; ++i) {
      if (lam_s[i] == 0.0) continue;
      for (int j = 0; j < k; ++j) {
        const double w = lam_s[i] * lam_t[j];
        den(i, j) += w;
        if (link.e) num(i, j) += w;
      }
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      model.eta(i, j) = (num(i, j) + s) / (den(i, j) + 2.0 * s);
}

double elbo(const PldaModel& model, const VariationalState& state,
            const PldaCorpus& corpus, const std::vector<LinkObservation>& links,
            const PldaHyper& hyper) {
  const int k = model.k;
  const int n_docs = corpus.num_docs();
  const double alpha = hyper.alpha;
  const double lgamma_alpha_sum = std::lgamma(k * alpha) - k * std::lgamma(alpha);

  // E[log theta_dk] = digamma(gamma_dk) - digamma(sum_gamma_d)
  Matrix elog_theta(n_docs, k);
  double bound = 0.0;
  for (int d = 0; d < n_docs; ++d) {
    double gsum = 0.0;
    for (int i = 0; i < k; ++i) gsum += state.gamma(d, i);
    const double dig_sum = digamma(gsum);
    bound += lgamma_alpha_sum - std::lgamma(gsum);
    for (int i = 0; i < k; ++i) {
      const double g = state.gamma(d, i);
      const double el = digamma(g) - dig_sum;
      elog_theta(d, i) = el;
      bound += (alpha - g) * el + std::lgamma(g);
    }
  }

  for (int d = 0; d < n_docs; ++d) {
    const auto& doc = corpus.docs[d];
    const Matrix& phi = state.phi[d];
    for (size_t t = 0; t < doc.term_ids.size(); ++t) {
      const double c = doc.term_counts[t];
      const int v = doc.term_ids[t];
      const double* row = phi.row(static_cast<int>(t));
      double term = 0.0;
      for (int i = 0; i < k; ++i) {
        if (row[i] <= 0.0) continue;
        term += row[i] * (elog_theta(d, i) + model.log_beta(i, v) - std::log(row[i]));
      }
      bound += c * term;
    }
  }

  if (!links.empty()) {
    Matrix log_eta(k, k), log_neta(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        log_eta(i, j) = std::log(model.eta(i, j));
        log_neta(i, j) = std::log1p(-model.eta(i, j));
      }
    for (size_t l = 0; l < links.size(); ++l) {
      const auto& link = links[l];
      const Matrix& log_e = link.e ? log_eta : log_neta;
      const double* lam_s = state.lambda_src.row(static_cast<int>(l));
      const double* lam_t = state.lambda_tgt.row(static_cast<int>(l));
      for (int i = 0; i < k; ++i) {
        if (lam_s[i] <= 0.0) continue;
        bound += lam_s[i] * (elog_theta(link.source, i) - std::log(lam_s[i]));
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += lam_t[j] * log_e(i, j);
        bound += lam_s[i] * acc;
      }
      for (int j = 0; j < k; ++j) {
        if (lam_t[j] <= 0.0) continue;
        bound += lam_t[j] * (elog_theta(link.target, j) - std::log(lam_t[j]));
      }
    }
  }

  if (!std::isfinite(bound)) throw std::runtime_error("plda: non-finite ELBO");
  return bound;
}

FitResult fit_observations(const PldaCorpus& corpus,
                           const std::vector<LinkObservation>& links,
                           const PldaHyper& hyper) {
  auto [model, state] = init_model(hyper, corpus, links);
  FitReport report;
  double prev = 0.0;
  for (int iter = 0; iter < hyper.max_em_iters; ++iter) {
    e_step(model, corpus, links, state, hyper.alpha);
    m_step(state, corpus, links, hyper, model);
    const double bound = elbo(model, state, corpus, links, hyper);
    // coordinate ascent must not lose ground
    if (iter > 0 && bound < prev - 1e-8 * std::abs(prev))
      throw std::runtime_error("plda: ELBO decreased at iteration " + std::to_string(iter) +
                               " from " + std::to_string(prev) + " to " +
                               std::to_string(bound));
    double delta = 0.0;
    if (iter > 0) delta = (bound - prev) / std::max(std::abs(prev), 1e-12);
    report.elbo_trace.push_back(bound);
    report.delta_rel.push_back(delta);
    report.iterations = iter + 1;
    log_debug("plda em iter " + std::to_string(iter) + " elbo " + std::to_string(bound));
    if (iter + 1 >= hyper.min_em_iters && iter > 0 && std::abs(delta) < hyper.elbo_rel_tol) {
      report.converged = true;
      break;
    }
    prev = bound;
  }
  return {std::move(model), std::move(report)};
}

FitResult fit(const PldaCorpus& corpus, const std::vector<std::pair<int, int>>& edges,
              const PldaHyper& hyper, bool all_pairs) {
  std::vector<LinkObservation> obs;
  if (all_pairs) {
    obs = all_pair_observations(corpus.num_docs(), edges);
  } else {
    obs = make_observations(
        edges, sample_nonedges(corpus.num_docs(), edges, hyper.nonedge_ratio,
                               splitmix64(hyper.seed ^ 0x6e6f6e65ULL)));
  }
  return fit_observations(corpus, obs, hyper);
}

const double* ConceptVectorTable::get(const std::string& concept_name) const {
  auto it = index.find(concept_name);
  if (it == index.end())
    throw std::runtime_error("concept_vectors: no vector for concept '" + concept_name + "'");
  return vectors.row(it->second);
}

ConceptVectorTable concept_vectors(const PldaModel& model, const ConceptSpace& space) {
  ConceptVectorTable table;
  std::vector<std::string> unmapped;
  for (int c = 0; c < space.size(); ++c)
    if (space.vocab_id[c] < 0) unmapped.push_back(space.concepts[c]);
  if (space.mapped_count() == 0)
    throw std::runtime_error("concept_vectors: no mapped concepts in the space");
  if (!unmapped.empty()) {
    std::string names;
    for (const auto& u : unmapped) names += (names.empty() ? "" : ", ") + u;
    log_info("concept_vectors: skipping " + std::to_string(unmapped.size()) +
             " unmapped concepts: " + names);
  }

  table.vectors = Matrix(space.mapped_count(), model.k);
  int row = 0;
  for (int c = 0; c < space.size(); ++c) {
    const int v = space.vocab_id[c];
    if (v < 0) continue;
    if (v >= model.vocab_size)
      throw std::runtime_error("concept_vectors: vocab id out of range for concept '" +
                               space.concepts[c] + "'");
    double* out = table.vectors.row(row);
    double max_val = 0.0;
    for (int i = 0; i < model.k; ++i) {
      out[i] = std::exp(model.log_beta(i, v));
      max_val = std::max(max_val, out[i]);
    }
    for (int i = 0; i < model.k; ++i) out[i] /= max_val;
    table.index[space.concepts[c]] = row;
    table.concepts.push_back(space.concepts[c]);
    ++row;
  }
  return table;
}

}  // namespace prereq
