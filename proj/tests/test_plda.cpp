#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "prereq/plda.hpp"
#include "synthetic.hpp"

using namespace prereq;

namespace {

PldaCorpus tiny_corpus(const std::vector<std::map<int, int>>& doc_counts, int vocab) {
  PldaCorpus corpus;
  corpus.vocab_size = vocab;
  for (size_t d = 0; d < doc_counts.size(); ++d) {
    PldaCorpus::Doc doc;
    for (const auto& [v, c] : doc_counts[d]) {
      doc.term_ids.push_back(v);
      doc.term_counts.push_back(c);
      doc.total += c;
    }
    corpus.doc_ids.push_back("doc" + std::to_string(d));
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

// state with explicit gamma and uniform phi/lambda rows
VariationalState uniform_state(const PldaCorpus& corpus, int k, size_t n_links,
                               double gamma_fill) {
  VariationalState state;
  state.gamma = Matrix(corpus.num_docs(), k, gamma_fill);
  for (const auto& doc : corpus.docs)
    state.phi.emplace_back(static_cast<int>(doc.term_ids.size()), k, 1.0 / k);
  state.lambda_src = Matrix(static_cast<int>(n_links), k, 1.0 / k);
  state.lambda_tgt = Matrix(static_cast<int>(n_links), k, 1.0 / k);
  return state;
}

void check_state_invariants(const VariationalState& state, double alpha) {
  for (const auto& phi : state.phi)
    for (int t = 0; t < phi.rows; ++t) {
      double sum = 0.0;
      for (int i = 0; i < phi.cols; ++i) {
        CHECK(phi(t, i) >= 0.0);
        sum += phi(t, i);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  for (const Matrix* lam : {&state.lambda_src, &state.lambda_tgt})
    for (int l = 0; l < lam->rows; ++l) {
      double sum = 0.0;
      for (int i = 0; i < lam->cols; ++i) {
        CHECK((*lam)(l, i) >= 0.0);
        sum += (*lam)(l, i);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  for (int d = 0; d < state.gamma.rows; ++d)
    for (int i = 0; i < state.gamma.cols; ++i) CHECK(state.gamma(d, i) >= alpha);
}

}  // namespace

TEST_CASE("sample_nonedges") {
  SUBCASE("ratio zero yields nothing") {
    CHECK(sample_nonedges(3, {{0, 1}}, 0.0, 42).empty());
  }
  SUBCASE("exhaustion returns all non-edges") {
    const auto nonedges = sample_nonedges(2, {{0, 1}}, 10.0, 42);
    REQUIRE(nonedges.size() == 1);
    CHECK(nonedges[0].source == 1);
    CHECK(nonedges[0].target == 0);
    CHECK(nonedges[0].e == 0);
  }
  SUBCASE("count is ceil(ratio * edges)") {
    const std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {2, 3}};
    const auto nonedges = sample_nonedges(10, edges, 2.5, 42);
    CHECK(nonedges.size() == 8);  // ceil(7.5)
  }
  SUBCASE("861 edges over 654 docs at ratio 5 give 4305") {
    std::set<std::pair<int, int>> edge_set;
    for (int i = 0; static_cast<int>(edge_set.size()) < 861; ++i) {
      const int s = i % 654, t = (i * 37 + 13) % 654;
      if (s != t) edge_set.insert({s, t});
    }
    const std::vector<std::pair<int, int>> edges(edge_set.begin(), edge_set.end());
    CHECK(sample_nonedges(654, edges, 5.0, 3).size() == 4305);
  }
  SUBCASE("no collisions with edges, self-loops or duplicates") {
    const std::vector<std::pair<int, int>> edges = {{0, 1}, {2, 0}, {3, 4}};
    const auto nonedges = sample_nonedges(6, edges, 5.0, 7);
    std::set<std::pair<int, int>> seen;
    const std::set<std::pair<int, int>> edge_set(edges.begin(), edges.end());
    for (const auto& ne : nonedges) {
      CHECK(ne.source != ne.target);
      CHECK(edge_set.count({ne.source, ne.target}) == 0);
      CHECK(seen.insert({ne.source, ne.target}).second);
    }
  }
  SUBCASE("deterministic given seed") {
    const std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}};
    const auto a = sample_nonedges(20, edges, 3.0, 99);
    const auto b = sample_nonedges(20, edges, 3.0, 99);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].source == b[i].source);
      CHECK(a[i].target == b[i].target);
    }
  }
}

TEST_CASE("init_model") {
  const PldaCorpus corpus = tiny_corpus({{{0, 2}, {1, 1}}, {{1, 3}}}, 2);
  PldaHyper hyper;
  hyper.k = 2;
  hyper.alpha = 0.5;
  hyper.seed = 5;

  SUBCASE("no jitter gives uniform beta") {
    PldaHyper h = hyper;
    h.init_jitter = 0.0;
    const auto [model, state] = init_model(h, corpus, {});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(std::exp(model.log_beta(i, j)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(model.eta(0, 0) == 0.5);
    CHECK(model.eta(1, 0) == 0.5);
    // gamma = alpha + N_d / K
    CHECK(state.gamma(0, 0) == doctest::Approx(0.5 + 3.0 / 2));
    CHECK(state.gamma(1, 1) == doctest::Approx(0.5 + 3.0 / 2));
  }
  SUBCASE("invariants hold and init is deterministic") {
    const std::vector<LinkObservation> links = {{0, 1, 1}};
    const auto [model_a, state_a] = init_model(hyper, corpus, links);
    const auto [model_b, state_b] = init_model(hyper, corpus, links);
    CHECK(model_a.log_beta.data == model_b.log_beta.data);
    CHECK(model_a.eta.data == model_b.eta.data);
    check_state_invariants(state_a, hyper.alpha);
    for (int i = 0; i < 2; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 2; ++j) sum += std::exp(model_a.log_beta(i, j));
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("e_step single-topic degeneracy") {
  // K=1: every simplex row is [1], gamma = alpha + N_d + degree(d)
  const PldaCorpus corpus = tiny_corpus({{{0, 2}}, {{1, 3}}, {{0, 1}, {1, 1}}}, 2);
  const std::vector<LinkObservation> links = {{0, 1, 1}, {2, 0, 0}};
  const double alpha = 0.3;

  PldaModel model;
  model.k = 1;
  model.vocab_size = 2;
  model.log_beta = Matrix(1, 2, std::log(0.5));
  model.eta = Matrix(1, 1, 0.5);
  VariationalState state = uniform_state(corpus, 1, links.size(), 1.0);

  e_step(model, corpus, links, state, alpha);
  CHECK(state.phi[0](0, 0) == 1.0);
  CHECK(state.lambda_src(0, 0) == 1.0);
  CHECK(state.lambda_tgt(1, 0) == 1.0);
  // doc0: N=2, out-link + in-link(from link 1 as target)
  CHECK(state.gamma(0, 0) == doctest::Approx(alpha + 2.0 + 2.0));
  CHECK(state.gamma(1, 0) == doctest::Approx(alpha + 3.0 + 1.0));
  CHECK(state.gamma(2, 0) == doctest::Approx(alpha + 2.0 + 1.0));
}

TEST_CASE("e_step symmetric fixed point") {
  // uniform beta rows, eta = 0.5, equal gamma: phi stays uniform
  const PldaCorpus corpus = tiny_corpus({{{0, 1}, {2, 2}}, {{1, 2}}}, 3);
  const std::vector<LinkObservation> links = {{0, 1, 1}};
  PldaModel model;
  model.k = 2;
  model.vocab_size = 3;
  model.log_beta = Matrix(2, 3, std::log(1.0 / 3));
  model.eta = Matrix(2, 2, 0.5);
  VariationalState state = uniform_state(corpus, 2, links.size(), 2.0);

  e_step(model, corpus, links, state, 0.1);
  for (const auto& phi : state.phi)
    for (int t = 0; t < phi.rows; ++t)
      for (int i = 0; i < 2; ++i) CHECK(phi(t, i) == doctest::Approx(0.5).epsilon(1e-12));
  for (int i = 0; i < 2; ++i) {
    CHECK(state.lambda_src(0, i) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(state.lambda_tgt(0, i) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("e_step phi proportional to beta column when gammas equal") {
  const PldaCorpus corpus = tiny_corpus({{{0, 1}}}, 1);
  PldaModel model;
  model.k = 2;
  model.vocab_size = 1;
  model.log_beta = Matrix(2, 1);
  model.log_beta(0, 0) = std::log(0.8);
  model.log_beta(1, 0) = std::log(0.2);
  model.eta = Matrix(2, 2, 0.5);
  VariationalState state = uniform_state(corpus, 2, 0, 1.0);

  e_step(model, corpus, {}, state, 0.1);
  CHECK(state.phi[0](0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(state.phi[0](0, 1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("e_step keeps state invariants on random input") {
  synth::Rng rng(13);
  const PldaCorpus corpus = synth::random_corpus(12, 15, 8, rng);
  const auto edges = synth::random_edges(12, 10, rng);
  PldaHyper hyper;
  hyper.k = 4;
  hyper.alpha = 0.2;
  hyper.seed = 3;
  const auto obs = make_observations(edges, sample_nonedges(12, edges, 2.0, 8));
  auto [model, state] = init_model(hyper, corpus, obs);
  for (int sweep = 0; sweep < 3; ++sweep) {
    e_step(model, corpus, obs, state, hyper.alpha);
    check_state_invariants(state, hyper.alpha);
    m_step(state, corpus, obs, hyper, model);
  }
}

TEST_CASE("m_step eta") {
  const PldaCorpus corpus = tiny_corpus({{{0, 1}}, {{1, 1}}}, 2);

  SUBCASE("no links leaves eta at one half") {
    PldaHyper hyper;
    hyper.k = 2;
    hyper.eta_smoothing = 1.0;
    PldaModel model;
    model.k = 2;
    model.vocab_size = 2;
    model.log_beta = Matrix(2, 2, std::log(0.5));
    model.eta = Matrix(2, 2, 0.9);
    VariationalState state = uniform_state(corpus, 2, 0, 1.0);
    m_step(state, corpus, {}, hyper, model);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(model.eta(i, j) == doctest::Approx(0.5));
  }

  SUBCASE("two deterministic links with opposite labels") {
    // K=1, lambda = [1]: eta_00 = (1 + s) / (2 + 2s) = 1.01/2.02 = 0.5
    PldaHyper hyper;
    hyper.k = 1;
    hyper.eta_smoothing = 0.01;
    PldaModel model;
    model.k = 1;
    model.vocab_size = 2;
    model.log_beta = Matrix(1, 2, std::log(0.5));
    model.eta = Matrix(1, 1, 0.5);
    const std::vector<LinkObservation> links = {{0, 1, 1}, {1, 0, 0}};
    VariationalState state = uniform_state(corpus, 1, links.size(), 1.0);
    m_step(state, corpus, links, hyper, model);
    CHECK(model.eta(0, 0) == doctest::Approx(1.01 / 2.02).epsilon(1e-12));
  }

  SUBCASE("single positive link with s -> 0 approaches 1") {
    PldaHyper hyper;
    hyper.k = 1;
    hyper.eta_smoothing = 1e-9;
    PldaModel model;
    model.k = 1;
    model.vocab_size = 2;
    model.log_beta = Matrix(1, 2, std::log(0.5));
    model.eta = Matrix(1, 1, 0.5);
    const std::vector<LinkObservation> links = {{0, 1, 1}};
    VariationalState state = uniform_state(corpus, 1, links.size(), 1.0);
    m_step(state, corpus, links, hyper, model);
    CHECK(model.eta(0, 0) > 0.999);
    CHECK(model.eta(0, 0) < 1.0);
  }
}

TEST_CASE("m_step beta invariants") {
  synth::Rng rng(17);
  const PldaCorpus corpus = synth::random_corpus(8, 10, 6, rng);
  PldaHyper hyper;
  hyper.k = 3;
  hyper.seed = 1;
  auto [model, state] = init_model(hyper, corpus, {});
  e_step(model, corpus, {}, state, hyper.alpha);
  m_step(state, corpus, {}, hyper, model);
  for (int i = 0; i < model.k; ++i) {
    double sum = 0.0;
    for (int j = 0; j < model.vocab_size; ++j) {
      sum += std::exp(model.log_beta(i, j));
      CHECK(std::isfinite(model.log_beta(i, j)));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (const double e : model.eta.data) {
    CHECK(e > 0.0);
    CHECK(e < 1.0);
  }
}

TEST_CASE("elbo equals exact log-likelihood in the single-topic model") {
  const PldaCorpus corpus = tiny_corpus({{{0, 2}, {1, 1}}, {{1, 4}}}, 2);
  const std::vector<LinkObservation> links = {{0, 1, 1}, {1, 0, 0}};
  PldaHyper hyper;
  hyper.k = 1;
  hyper.alpha = 0.7;

  PldaModel model;
  model.k = 1;
  model.vocab_size = 2;
  model.log_beta = Matrix(1, 2);
  model.log_beta(0, 0) = std::log(0.3);
  model.log_beta(0, 1) = std::log(0.7);
  model.eta = Matrix(1, 1, 0.6);
  VariationalState state = uniform_state(corpus, 1, links.size(), 1.0);
  e_step(model, corpus, links, state, hyper.alpha);

  // hand oracle: sum_d sum_w c log beta_w + e log eta + (1-e) log(1-eta)
  double expected = 2 * std::log(0.3) + 1 * std::log(0.7) + 4 * std::log(0.7);
  expected += std::log(0.6) + std::log(0.4);
  CHECK(elbo(model, state, corpus, links, hyper) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("elbo matches plain lda with empty links") {
  synth::Rng rng(23);
  const PldaCorpus corpus = synth::random_corpus(10, 12, 8, rng);
  PldaHyper hyper;
  hyper.k = 3;
  hyper.seed = 9;
  hyper.max_em_iters = 10;
  hyper.elbo_rel_tol = 0.0;

  const FitResult linked = fit_observations(corpus, {}, hyper);
  const synth::PlainLdaResult plain = synth::fit_plain_lda(corpus, hyper);
  REQUIRE(linked.report.elbo_trace.size() == plain.elbo_trace.size());
  for (size_t i = 0; i < plain.elbo_trace.size(); ++i)
    CHECK(linked.report.elbo_trace[i] ==
          doctest::Approx(plain.elbo_trace[i]).epsilon(1e-12));
}

TEST_CASE("elbo is non-decreasing over em sweeps") {
  synth::Rng rng(31);
  const PldaCorpus corpus = synth::random_corpus(10, 12, 8, rng);
  const auto edges = synth::random_edges(10, 12, rng);
  PldaHyper hyper;
  hyper.k = 3;
  hyper.seed = 2;
  hyper.max_em_iters = 15;
  hyper.elbo_rel_tol = 0.0;

  const FitResult result = fit(corpus, edges, hyper);
  const auto& trace = result.report.elbo_trace;
  REQUIRE(trace.size() >= 2);
  for (size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] >= trace[i - 1] - 1e-8 * std::abs(trace[i - 1]));
}

TEST_CASE("fit is deterministic") {
  synth::Rng rng(37);
  const PldaCorpus corpus = synth::random_corpus(8, 10, 6, rng);
  const auto edges = synth::random_edges(8, 6, rng);
  PldaHyper hyper;
  hyper.k = 3;
  hyper.seed = 44;
  hyper.max_em_iters = 8;

  const FitResult a = fit(corpus, edges, hyper);
  const FitResult b = fit(corpus, edges, hyper);
  CHECK(a.model.log_beta.data == b.model.log_beta.data);
  CHECK(a.model.eta.data == b.model.eta.data);
}

TEST_CASE("empty link set degenerates to plain lda") {
  synth::Rng rng(41);
  const PldaCorpus corpus = synth::random_corpus(15, 20, 10, rng);
  PldaHyper hyper;
  hyper.k = 4;
  hyper.seed = 77;
  hyper.max_em_iters = 30;
  hyper.elbo_rel_tol = 0.0;

  const FitResult linked = fit_observations(corpus, {}, hyper);
  const synth::PlainLdaResult plain = synth::fit_plain_lda(corpus, hyper);
  for (size_t i = 0; i < linked.model.log_beta.data.size(); ++i)
    CHECK(linked.model.log_beta.data[i] ==
          doctest::Approx(plain.log_beta.data[i]).epsilon(1e-9));
  // eta untouched by data
  for (const double e : linked.model.eta.data) CHECK(e == 0.5);
}

TEST_CASE("fitted eta recovers planted directionality") {
  // links planted from topic-0-heavy docs to topic-1-heavy docs
  synth::Rng rng(53);
  Matrix eta(2, 2, 0.2);
  eta(0, 1) = 0.9;
  eta(1, 0) = 0.1;
  const synth::PlantedModel planted = synth::make_planted_model(2, 10, 0.1, eta);
  const synth::SampledCorpus docs = synth::sample_assigned_corpus(planted, 20, 60, 0.2, rng);
  const auto links = synth::sample_links(planted, docs, 200, rng);

  PldaHyper hyper;
  hyper.k = 2;
  hyper.alpha = 0.1;
  hyper.seed = 4;
  hyper.max_em_iters = 60;
  hyper.elbo_rel_tol = 1e-5;
  const FitResult result = fit_observations(docs.corpus, links, hyper);

  const auto perm = synth::align_topics(synth::beta_from_model(result.model), planted.beta);
  const double eta_ab = result.model.eta(perm[0], perm[1]);
  const double eta_ba = result.model.eta(perm[1], perm[0]);
  CHECK(eta_ab > eta_ba);
}

TEST_CASE("concept_vectors") {
  PldaModel model;
  model.k = 2;
  model.vocab_size = 3;
  model.log_beta = Matrix(2, 3);
  // column 0 exp values (0.2, 0.4); column 1 uniform; column 2 arbitrary
  model.log_beta(0, 0) = std::log(0.2);
  model.log_beta(1, 0) = std::log(0.4);
  model.log_beta(0, 1) = std::log(0.3);
  model.log_beta(1, 1) = std::log(0.3);
  model.log_beta(0, 2) = std::log(0.5);
  model.log_beta(1, 2) = std::log(0.3);
  model.eta = Matrix(2, 2, 0.5);

  ConceptSpace space;
  space.concepts = {"a", "b", "missing"};
  space.vocab_id = {0, 1, -1};

  const ConceptVectorTable table = concept_vectors(model, space);
  REQUIRE(table.concepts == std::vector<std::string>{"a", "b"});
  const double* va = table.get("a");
  CHECK(va[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(va[1] == 1.0);  // max element is exactly one
  const double* vb = table.get("b");
  CHECK(vb[0] == 1.0);
  CHECK(vb[1] == 1.0);
  CHECK_THROWS_AS(table.get("missing"), std::runtime_error);

  ConceptSpace empty;
  empty.concepts = {"x"};
  empty.vocab_id = {-1};
  CHECK_THROWS(concept_vectors(model, empty));
}

TEST_CASE("concept_vectors max one and min positive on fitted model") {
  synth::Rng rng(61);
  const PldaCorpus corpus = synth::random_corpus(10, 8, 6, rng);
  PldaHyper hyper;
  hyper.k = 3;
  hyper.seed = 15;
  hyper.max_em_iters = 5;
  const FitResult result = fit(corpus, {}, hyper);
  ConceptSpace space;
  for (int v = 0; v < 8; ++v) {
    space.concepts.push_back("t" + std::to_string(v));
    space.vocab_id.push_back(v);
  }
  const ConceptVectorTable table = concept_vectors(result.model, space);
  for (int c = 0; c < table.vectors.rows; ++c) {
    double max_val = 0.0;
    for (int i = 0; i < table.vectors.cols; ++i) {
      CHECK(table.vectors(c, i) > 0.0);
      max_val = std::max(max_val, table.vectors(c, i));
    }
    CHECK(max_val == 1.0);
  }
}

TEST_CASE("make_plda_corpus validates term ids and drops empty docs") {
  BowDocument good;
  good.doc_id = "ok";
  good.counts[1] = 2;
  BowDocument empty;
  empty.doc_id = "empty";
  const PldaCorpus corpus = make_plda_corpus({good, empty}, 3);
  CHECK(corpus.num_docs() == 1);
  CHECK(corpus.doc_ids[0] == "ok");

  BowDocument bad;
  bad.doc_id = "bad";
  bad.counts[7] = 1;
  CHECK_THROWS(make_plda_corpus({bad}, 3));
}

TEST_CASE("all_pair_observations covers the plate") {
  const auto obs = all_pair_observations(3, {{0, 1}});
  CHECK(obs.size() == 6);
  int positives = 0;
  for (const auto& o : obs) {
    CHECK(o.source != o.target);
    positives += o.e;
  }
  CHECK(positives == 1);
}
