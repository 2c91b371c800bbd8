#include "prereq/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "prereq/log.hpp"

namespace prereq {

int ConceptSpace::mapped_count() const {
  int n = 0;
  for (int id : vocab_id)
    if (id >= 0) ++n;
  return n;
}

std::vector<std::string> ConceptSpace::mapped_concepts() const {
  std::vector<std::string> out;
  for (size_t i = 0; i < concepts.size(); ++i)
    if (vocab_id[i] >= 0) out.push_back(concepts[i]);
  return out;
}

int BowDocument::total() const {
  int n = 0;
  for (const auto& [id, c] : counts) n += c;
  return n;
}

bool DocumentGraph::add_edge(const std::string& source, const std::string& target) {
  if (source == target) return false;
  std::string key = source + "\t" + target;
  if (edge_set_.count(key)) return false;
  edge_set_.insert(key);
  edges.emplace_back(source, target);
  return true;
}

namespace {

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::string join_gram(const std::vector<std::string>& tokens, size_t start, size_t n) {
  std::string gram = tokens[start];
  for (size_t i = 1; i < n; ++i) {
    gram.push_back(' ');
    gram += tokens[start + i];
  }
  return gram;
}

}  // namespace

std::vector<std::string> tokenize_ngrams(const std::string& text, int n_max,
                                         const StopwordSet& stopwords) {
  if (n_max < 1 || n_max > 3) throw std::runtime_error("tokenize_ngrams: n_max must be in {1,2,3}");
  std::vector<std::string> tokens = split_tokens(text);
  std::vector<std::string> grams;
  for (int n = 1; n <= n_max; ++n) {
    if (tokens.size() < static_cast<size_t>(n)) break;
    for (size_t start = 0; start + n <= tokens.size(); ++start) {
      if (n == 1) {
        if (stopwords.count(tokens[start])) continue;
      } else {
        // boundary-only stopword filtering
        if (stopwords.count(tokens[start]) || stopwords.count(tokens[start + n - 1])) continue;
      }
      grams.push_back(join_gram(tokens, start, n));
    }
  }
  return grams;
}

std::string normalize_phrase(const std::string& phrase) {
  std::vector<std::string> tokens = split_tokens(phrase);
  if (tokens.empty()) return "";
  return join_gram(tokens, 0, tokens.size());
}

Vocabulary build_vocabulary(const std::vector<RawDocument>& docs, VocabMode mode,
                            const std::vector<std::string>& concepts,
                            const TokenizerConfig& tok, int min_doc_freq) {
  if (docs.empty()) throw std::runtime_error("build_vocabulary: empty document list");

  Vocabulary vocab;
  vocab.mode = mode;

  // document frequency per n-gram
  std::unordered_map<std::string, int> doc_freq;
  for (const auto& doc : docs) {
    std::vector<std::string> grams = tokenize_ngrams(doc.text, tok.n_max, tok.stopwords);
    std::unordered_set<std::string> seen(grams.begin(), grams.end());
    for (const auto& g : seen) ++doc_freq[g];
  }

  if (mode == VocabMode::FullNgram) {
    std::vector<std::string> terms;
    for (const auto& [gram, df] : doc_freq)
      if (df >= min_doc_freq) terms.push_back(gram);
    std::sort(terms.begin(), terms.end());
    vocab.terms = std::move(terms);
  } else {
    std::unordered_set<std::string> admitted;
    std::vector<std::string> terms;
    for (const auto& phrase : concepts) {
      std::string norm = normalize_phrase(phrase);
      if (norm.empty() || admitted.count(norm)) continue;
      auto it = doc_freq.find(norm);
      if (it != doc_freq.end() && it->second >= min_doc_freq) {
        admitted.insert(norm);
        terms.push_back(norm);
      }
    }
    if (terms.empty()) throw std::runtime_error("build_vocabulary: no concept occurs in corpus");
    std::sort(terms.begin(), terms.end());
    vocab.terms = std::move(terms);
  }

  for (size_t i = 0; i < vocab.terms.size(); ++i)
    vocab.index[vocab.terms[i]] = static_cast<int>(i);
  return vocab;
}

BowDocument vectorize(const RawDocument& doc, const Vocabulary& vocab,
                      const TokenizerConfig& tok) {
  BowDocument bow;
  bow.doc_id = doc.id;
  for (const auto& gram : tokenize_ngrams(doc.text, tok.n_max, tok.stopwords)) {
    int id = vocab.id_of(gram);
    if (id >= 0) ++bow.counts[id];
  }
  if (bow.counts.empty())
    log_info("vectorize: document '" + doc.id + "' has no in-vocabulary terms, excluded from training");
  return bow;
}

DocumentGraph playlist_to_edges(const std::vector<Playlist>& playlists) {
  DocumentGraph graph;
  for (const auto& pl : playlists) {
    const auto& v = pl.video_ids;
    for (size_t i = 0; i < v.size(); ++i)
      for (size_t j = i + 1; j < v.size(); ++j) graph.add_edge(v[i], v[j]);
  }
  return graph;
}

namespace {

// Irregular forms plus words the suffix rules would otherwise corrupt.
const std::unordered_map<std::string, std::string>& lemma_exceptions() {
  static const std::unordered_map<std::string, std::string> table = {
      {"matrices", "matrix"},   {"vertices", "vertex"}, {"indices", "index"},
      {"analyses", "analysis"}, {"theses", "thesis"},   {"hypotheses", "hypothesis"},
      {"axes", "axis"},         {"bases", "basis"},     {"series", "series"},
      {"species", "species"},   {"analysis", "analysis"}, {"basis", "basis"},
      {"bias", "bias"},         {"gas", "gas"},         {"data", "data"},
      {"media", "media"},       {"criteria", "criterion"},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// collapse doubled final consonant left by -ing/-ed stripping
std::string undouble(std::string stem) {
  size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1])) stem.pop_back();
  return stem;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

namespace {

std::string strip_suffix_once(const std::string& token) {
  auto it = lemma_exceptions().find(token);
  if (it != lemma_exceptions().end()) return it->second;

  size_t n = token.size();
  if (ends_with(token, "ies") && n > 4) return token.substr(0, n - 3) + "y";
  if (ends_with(token, "sses")) return token.substr(0, n - 2);
  if (ends_with(token, "es") && n > 4) {
    const std::string stem = token.substr(0, n - 2);
    if (ends_with(stem, "x") || ends_with(stem, "z") || ends_with(stem, "s") ||
        ends_with(stem, "ch") || ends_with(stem, "sh"))
      return stem;
  }
  if (ends_with(token, "s") && n > 3 && !ends_with(token, "ss") && !ends_with(token, "us") &&
      !ends_with(token, "is"))
    return token.substr(0, n - 1);
  if (ends_with(token, "ing") && n >= 6) return undouble(token.substr(0, n - 3));
  if (ends_with(token, "ied") && n > 4) return token.substr(0, n - 3) + "y";
  if (ends_with(token, "ed") && n >= 5) return undouble(token.substr(0, n - 2));
  return token;
}

}  // namespace

std::string lemmatize_token(const std::string& token) {
  // Iterate to a fixpoint so forms like "strings" and "string" reduce to the
  // same lemma regardless of how many suffixes each carries.
  std::string cur = token;
  for (int round = 0; round < 3; ++round) {
    std::string next = strip_suffix_once(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

std::string lemmatize_phrase(const std::string& phrase) {
  std::istringstream in(phrase);
  std::string token, out;
  while (in >> token) {
    if (!out.empty()) out.push_back(' ');
    out += lemmatize_token(token);
  }
  return out;
}

ConceptSpace match_concepts(const std::vector<std::string>& concepts,
                            const Vocabulary& vocab) {
  // lemma form -> smallest vocab id
  std::unordered_map<std::string, int> lemma_index;
  for (int v = 0; v < vocab.size(); ++v) {
    std::string lemma = lemmatize_phrase(vocab.terms[v]);
    auto it = lemma_index.find(lemma);
    if (it == lemma_index.end() || v < it->second) lemma_index[lemma] = v;
  }

  ConceptSpace space;
  std::unordered_set<std::string> seen;
  for (const auto& phrase : concepts) {
    std::string norm = normalize_phrase(phrase);
    if (norm.empty()) continue;
    if (seen.count(norm)) {
      log_info("match_concepts: duplicate concept '" + norm + "' collapsed");
      continue;
    }
    seen.insert(norm);

    int id = vocab.id_of(norm);
    if (id < 0) {
      auto it = lemma_index.find(lemmatize_phrase(norm));
      if (it != lemma_index.end()) id = it->second;
    }
    space.concepts.push_back(norm);
    space.vocab_id.push_back(id);
  }
  return space;
}

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path);
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    std::string norm = normalize_phrase(line);
    if (!norm.empty()) words.insert(norm);
  }
  return words;
}

}  // namespace prereq
