#ifndef PREREQ_CORPUS_HPP
#define PREREQ_CORPUS_HPP

#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace prereq {

struct RawDocument {
  std::string id;
  std::string text;
};

struct Playlist {
  std::string playlist_id;
  std::vector<std::string> video_ids;
};

using StopwordSet = std::unordered_set<std::string>;

// Tokenization settings shared by vocabulary construction and vectorization.
struct TokenizerConfig {
  int n_max = 3;
  StopwordSet stopwords;
};

enum class VocabMode { FullNgram, ConceptRestricted };

struct Vocabulary {
  VocabMode mode = VocabMode::FullNgram;
  std::vector<std::string> terms;
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(terms.size()); }
  bool contains(const std::string& term) const { return index.count(term) > 0; }
  // -1 when absent.
  int id_of(const std::string& term) const {
    auto it = index.find(term);
    return it == index.end() ? -1 : it->second;
  }
};

struct ConceptSpace {
  std::vector<std::string> concepts;
  std::vector<int> vocab_id;  // parallel to concepts, -1 = unmapped

  int size() const { return static_cast<int>(concepts.size()); }
  int mapped_count() const;
  std::vector<std::string> mapped_concepts() const;
};

struct BowDocument {
  std::string doc_id;
  std::map<int, int> counts;  // vocab id -> count, ordered for determinism

  int total() const;
  bool empty() const { return counts.empty(); }
  bool has_term(int vocab_id) const { return counts.count(vocab_id) > 0; }
};

// Ordered document-id edges, deduplicated, no self-loops.
struct DocumentGraph {
  std::vector<std::pair<std::string, std::string>> edges;

  // Ignores self-loops and duplicates; returns true if the edge was added.
  bool add_edge(const std::string& source, const std::string& target);
  bool has_edge(const std::string& source, const std::string& target) const {
    return edge_set_.count(source + "\t" + target) > 0;
  }
  size_t size() const { return edges.size(); }

 private:
  std::unordered_set<std::string> edge_set_;
};

struct LabeledConceptPair {
  std::string source;
  std::string target;
  int label = 0;  // 1 = prerequisite, 0 = not
};

// Lowercases, splits on [^a-z0-9], emits all contiguous 1..n_max-grams in
// n-major order. Stopword unigrams are dropped; multi-grams are dropped when
// either boundary token is a stopword (interior stopwords allowed).
std::vector<std::string> tokenize_ngrams(const std::string& text, int n_max,
                                         const StopwordSet& stopwords);

// Normalizes a phrase the same way document text is tokenized: lowercase,
// non-alphanumeric runs collapse to single spaces.
std::string normalize_phrase(const std::string& phrase);

// Full-ngram mode: union of n-grams over docs with at least min_doc_freq
// document frequency. Concept-restricted mode: only concept phrases that
// occur in the corpus are admitted (throws if none do).
Vocabulary build_vocabulary(const std::vector<RawDocument>& docs, VocabMode mode,
                            const std::vector<std::string>& concepts,
                            const TokenizerConfig& tok, int min_doc_freq = 1);

// Counts in-vocabulary n-grams; out-of-vocabulary grams are ignored. A doc
// with zero in-vocab terms yields empty counts (caller excludes it from
// training).
BowDocument vectorize(const RawDocument& doc, const Vocabulary& vocab,
                      const TokenizerConfig& tok);

// Every playlist item is a prerequisite of all later items in the same
// playlist; the union over playlists is deduplicated.
DocumentGraph playlist_to_edges(const std::vector<Playlist>& playlists);

// Rule-based lemmatizer: plural -s/-es/-ies and -ing/-ed stripping with a
// small exception table. Applied identically to concepts and vocabulary.
std::string lemmatize_token(const std::string& token);
std::string lemmatize_phrase(const std::string& phrase);

// Token-wise lemmatized exact match of concepts against vocabulary terms.
// Raw matches win over lemma matches; unmatched concepts stay flagged with
// vocab_id -1. Duplicate concepts collapse to one entry with a warning.
ConceptSpace match_concepts(const std::vector<std::string>& concepts,
                            const Vocabulary& vocab);

StopwordSet load_stopwords(const std::string& path);

}  // namespace prereq

#endif
