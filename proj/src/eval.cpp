#include "prereq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "prereq/log.hpp"

namespace prereq {

void SplitSpec::validate() const {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::runtime_error("eval: train_fraction must be in (0,1)");
  if (n_splits < 1) throw std::runtime_error("eval: n_splits must be >= 1");
  if (negative_factor < 1.0)
    throw std::runtime_error("eval: negative_factor must be >= 1 (reversed positives)");
  if (train_positive_fraction <= 0.0 || train_positive_fraction > 1.0)
    throw std::runtime_error("eval: train_positive_fraction must be in (0,1]");
}

namespace {

std::string pair_token(const std::string& source, const std::string& target) {
  return source + "\t" + target;
}

uint64_t split_seed(const SplitSpec& spec, int split_index) {
  return splitmix64(spec.seed + static_cast<uint64_t>(split_index) + 1);
}

}  // namespace

std::vector<Split> split_pairs(const std::vector<LabeledConceptPair>& positives,
                               const SplitSpec& spec) {
  spec.validate();
  if (positives.size() < 2)
    throw std::runtime_error("split_pairs: need at least 2 positive pairs");
  for (const auto& p : positives)
    if (p.label != 1) throw std::runtime_error("split_pairs: all inputs must have label 1");

  const size_t n = positives.size();
  size_t n_train = static_cast<size_t>(std::floor(spec.train_fraction * n + 0.5));
  n_train = std::clamp<size_t>(n_train, 1, n - 1);

  std::vector<Split> splits;
  splits.reserve(spec.n_splits);
  for (int s = 0; s < spec.n_splits; ++s) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(split_seed(spec, s));
    rng.shuffle(order);
    Split split;
    for (size_t i = 0; i < n; ++i) {
      if (i < n_train)
        split.train_pos.push_back(positives[order[i]]);
      else
        split.test_pos.push_back(positives[order[i]]);
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

std::vector<LabeledConceptPair> sample_negatives(
    const std::vector<LabeledConceptPair>& positives,
    const std::vector<std::string>& concept_ids, double factor, uint64_t seed) {
  if (factor < 1.0) throw std::runtime_error("sample_negatives: factor must be >= 1");
  if (positives.empty()) return {};

  const size_t target = static_cast<size_t>(std::ceil(factor * positives.size()));
  std::unordered_set<std::string> blocked;  // positives + already-chosen negatives
  for (const auto& p : positives) blocked.insert(pair_token(p.source, p.target));

  std::vector<LabeledConceptPair> negatives;
  negatives.reserve(target);
  for (const auto& p : positives) {
    const std::string token = pair_token(p.target, p.source);
    if (blocked.count(token)) continue;  // reversal collides with a positive or a twin
    blocked.insert(token);
    negatives.push_back({p.target, p.source, 0});
  }

  const size_t n_ids = concept_ids.size();
  const uint64_t space = n_ids < 2 ? 0 : static_cast<uint64_t>(n_ids) * (n_ids - 1);
  Rng rng(seed);
  uint64_t attempts = 0;
  const uint64_t max_attempts = 200 * target + 1000;
  while (negatives.size() < target && space > 0) {
    if (attempts++ > max_attempts) break;
    const auto si = rng.uniform_int(n_ids);
    const auto ti = rng.uniform_int(n_ids);
    if (si == ti) continue;
    const std::string& s = concept_ids[si];
    const std::string& t = concept_ids[ti];
    const std::string token = pair_token(s, t);
    if (blocked.count(token)) continue;
    blocked.insert(token);
    negatives.push_back({s, t, 0});
  }

  if (negatives.size() < target) {
    // rejection sampling exhausted; enumerate whatever remains
    for (size_t i = 0; i < n_ids && negatives.size() < target; ++i) {
      for (size_t j = 0; j < n_ids && negatives.size() < target; ++j) {
        if (i == j) continue;
        const std::string token = pair_token(concept_ids[i], concept_ids[j]);
        if (blocked.count(token)) continue;
        blocked.insert(token);
        negatives.push_back({concept_ids[i], concept_ids[j], 0});
      }
    }
    if (negatives.size() < target)
      log_info("sample_negatives: concept space exhausted at " +
               std::to_string(negatives.size()) + " of " + std::to_string(target) +
               " requested negatives");
  }
  return negatives;
}

double precision_at_k(const std::vector<ScoredPair>& ranked,
                      const std::set<PairKey>& truth, int k) {
  if (k <= 0) throw std::runtime_error("precision_at_k: K must be positive");
  if (static_cast<size_t>(k) > ranked.size())
    throw std::runtime_error("precision_at_k: K exceeds the ranked list size");
  int hits = 0;
  for (int i = 0; i < k; ++i)
    if (truth.count({ranked[i].source, ranked[i].target})) ++hits;
  return static_cast<double>(hits) / k;
}

Prf prf(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.empty()) throw std::runtime_error("prf: empty prediction set");
  if (predicted.size() != truth.size())
    throw std::runtime_error("prf: predicted/truth size mismatch");
  int tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    if (predicted[i] == 1 && truth[i] == 0) ++fp;
    if (predicted[i] == 0 && truth[i] == 1) ++fn;
  }
  Prf out;
  out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  out.f_score = (out.precision + out.recall) > 0.0
                    ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                    : 0.0;
  return out;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::Prereq: return "prereq";
    case Method::Freq: return "freq";
    case Method::PairwiseLda: return "pairwise-lda";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "prereq") return Method::Prereq;
  if (name == "freq") return Method::Freq;
  if (name == "pairwise-lda") return Method::PairwiseLda;
  throw std::runtime_error("unknown method: " + name +
                           " (expected prereq|freq|pairwise-lda)");
}

namespace {

uint64_t hash_mix(uint64_t h, uint64_t v) { return splitmix64(h ^ v); }

uint64_t experiment_hash(const ExperimentInputs& inputs, Method method,
                         const SplitSpec& spec) {
  uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (char c : inputs.dataset) h = hash_mix(h, static_cast<uint64_t>(c));
  h = hash_mix(h, static_cast<uint64_t>(method));
  h = hash_mix(h, static_cast<uint64_t>(spec.n_splits));
  h = hash_mix(h, static_cast<uint64_t>(spec.seed));
  h = hash_mix(h, static_cast<uint64_t>(spec.train_fraction * 1e6));
  h = hash_mix(h, static_cast<uint64_t>(spec.negative_factor * 1e6));
  h = hash_mix(h, static_cast<uint64_t>(spec.train_positive_fraction * 1e6));
  return h;
}

struct ConceptIdLookup {
  std::unordered_map<std::string, int> vocab_of;

  explicit ConceptIdLookup(const ConceptSpace& space) {
    for (int c = 0; c < space.size(); ++c)
      if (space.vocab_id[c] >= 0) vocab_of[space.concepts[c]] = space.vocab_id[c];
  }
  int get(const std::string& concept_name) const {
    auto it = vocab_of.find(concept_name);
    if (it == vocab_of.end())
      throw std::runtime_error("freq_score: concept '" + concept_name + "' not mapped");
    return it->second;
  }
};

}  // namespace

EvalReport run_experiment(const ExperimentInputs& inputs,
                          const std::vector<LabeledConceptPair>& positives,
                          Method method, const SplitSpec& spec) {
  spec.validate();
  if (inputs.concept_ids.empty())
    throw std::runtime_error("run_experiment: empty concept id pool");
  if (method == Method::Prereq || method == Method::PairwiseLda) {
    if (inputs.vectors == nullptr)
      throw std::runtime_error("run_experiment: concept vectors required");
  }
  if (method == Method::PairwiseLda && inputs.model == nullptr)
    throw std::runtime_error("run_experiment: plda model required");
  if (method == Method::Freq &&
      (inputs.concept_space == nullptr || inputs.bows == nullptr || inputs.doc_edges == nullptr))
    throw std::runtime_error("run_experiment: freq needs concept space, bows and edges");

  EvalReport report;
  report.dataset = inputs.dataset;
  report.method = method_name(method);
  report.config_hash = experiment_hash(inputs, method, spec);

  const auto splits = split_pairs(positives, spec);
  for (int s = 0; s < spec.n_splits; ++s) {
    const uint64_t seed_s = split_seed(spec, s);
    std::vector<LabeledConceptPair> train_pos = splits[s].train_pos;
    if (spec.train_positive_fraction < 1.0) {
      Rng rng(splitmix64(seed_s ^ 0x66726163ULL));
      rng.shuffle(train_pos);
      const size_t keep = std::max<size_t>(
          1, static_cast<size_t>(
                 std::floor(spec.train_positive_fraction * train_pos.size() + 0.5)));
      train_pos.resize(std::min(keep, train_pos.size()));
    }
    const auto train_neg = sample_negatives(train_pos, inputs.concept_ids,
                                            spec.negative_factor,
                                            splitmix64(seed_s ^ 0x74726e67ULL));
    const auto test_neg = sample_negatives(splits[s].test_pos, inputs.concept_ids,
                                           spec.negative_factor,
                                           splitmix64(seed_s ^ 0x74657374ULL));

    // method-specific scorer over the test pool
    std::unique_ptr<ConceptIdLookup> freq_lookup;
    if (method == Method::Freq)
      freq_lookup = std::make_unique<ConceptIdLookup>(*inputs.concept_space);
    SiameseParams trained;
    if (method == Method::Prereq) {
      std::vector<LabeledConceptPair> train_set = train_pos;
      train_set.insert(train_set.end(), train_neg.begin(), train_neg.end());
      TrainConfig config = inputs.siamese;
      config.seed = splitmix64(seed_s ^ 0x7369616dULL);
      trained = train(train_set, *inputs.vectors, config).params;
    }

    std::vector<LabeledConceptPair> pool = splits[s].test_pos;
    pool.insert(pool.end(), test_neg.begin(), test_neg.end());

    std::vector<ScoredPair> scored;
    scored.reserve(pool.size());
    std::vector<int> predicted, truth;
    for (const auto& pair : pool) {
      double value = 0.0;
      switch (method) {
        case Method::Prereq: {
          const double* xs = inputs.vectors->get(pair.source);
          const double* xt = inputs.vectors->get(pair.target);
          value = score(trained, std::span<const double>(xs, inputs.vectors->k()),
                        std::span<const double>(xt, inputs.vectors->k()));
          break;
        }
        case Method::Freq: {
          value = freq_score(freq_lookup->get(pair.source), freq_lookup->get(pair.target),
                             *inputs.bows, *inputs.doc_edges);
          break;
        }
        case Method::PairwiseLda: {
          value = plda_score(inputs.model->eta, inputs.vectors->get(pair.source),
                             inputs.vectors->get(pair.target));
          break;
        }
      }
      scored.push_back({pair.source, pair.target, value});
      predicted.push_back(value > 0.5 ? 1 : 0);
      truth.push_back(pair.label);
    }

    SplitMetrics metrics;
    const Prf scores = prf(predicted, truth);
    metrics.precision = scores.precision;
    metrics.recall = scores.recall;
    metrics.f_score = scores.f_score;

    sort_scored_pairs(scored);
    std::set<PairKey> truth_set;
    for (const auto& p : splits[s].test_pos) truth_set.insert({p.source, p.target});
    const int pool_size = static_cast<int>(scored.size());
    metrics.p_at_50 = precision_at_k(scored, truth_set, std::min(50, pool_size));
    metrics.p_at_100 = precision_at_k(scored, truth_set, std::min(100, pool_size));
    report.splits.push_back(metrics);
  }

  for (const auto& m : report.splits) {
    report.mean.precision += m.precision;
    report.mean.recall += m.recall;
    report.mean.f_score += m.f_score;
    report.mean.p_at_50 += m.p_at_50;
    report.mean.p_at_100 += m.p_at_100;
  }
  const double inv = 1.0 / report.splits.size();
  report.mean.precision *= inv;
  report.mean.recall *= inv;
  report.mean.f_score *= inv;
  report.mean.p_at_50 *= inv;
  report.mean.p_at_100 *= inv;
  return report;
}

}  // namespace prereq
