#include "prereq/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace prereq {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

[[noreturn]] void line_error(const std::string& path, size_t line_no, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// tolerates CRLF input
void chomp(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

std::vector<std::string> split_tsv(std::string line) {
  chomp(line);
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) fields.push_back(field);
  return fields;
}

Matrix matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty())
    throw std::runtime_error("malformed matrix in " + what);
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows; ++i) {
    const auto& row = rows[i];
    if (static_cast<int>(row.size()) != m.cols)
      throw std::runtime_error("ragged matrix in " + what);
    for (int j = 0; j < m.cols; ++j) m(i, j) = row[j].get<double>();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<RawDocument> read_documents_jsonl(const std::string& path) {
  auto in = open_input(path);
  std::vector<RawDocument> docs;
  std::unordered_set<std::string> ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      line_error(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.contains("id") || !obj["id"].is_string())
      line_error(path, line_no, "missing string field 'id'");
    if (!obj.contains("text") || !obj["text"].is_string())
      line_error(path, line_no, "missing string field 'text'");
    RawDocument doc{obj["id"].get<std::string>(), obj["text"].get<std::string>()};
    if (doc.text.find_first_not_of(" \t\r\n") == std::string::npos)
      line_error(path, line_no, "document '" + doc.id + "' has empty text");
    if (!ids.insert(doc.id).second)
      line_error(path, line_no, "duplicate document id '" + doc.id + "'");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Playlist> read_playlists_jsonl(const std::string& path) {
  auto in = open_input(path);
  std::vector<Playlist> playlists;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      line_error(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.contains("playlist_id") || !obj["playlist_id"].is_string())
      line_error(path, line_no, "missing string field 'playlist_id'");
    if (!obj.contains("video_ids") || !obj["video_ids"].is_array())
      line_error(path, line_no, "missing array field 'video_ids'");
    Playlist pl;
    pl.playlist_id = obj["playlist_id"].get<std::string>();
    std::unordered_set<std::string> seen;
    for (const auto& v : obj["video_ids"]) {
      if (!v.is_string()) line_error(path, line_no, "video_ids must be strings");
      std::string id = v.get<std::string>();
      if (!seen.insert(id).second)
        line_error(path, line_no, "duplicate video '" + id + "' in playlist");
      pl.video_ids.push_back(std::move(id));
    }
    playlists.push_back(std::move(pl));
  }
  return playlists;
}

DocumentGraph read_edges_tsv(const std::string& path) {
  auto in = open_input(path);
  DocumentGraph graph;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() != 2) line_error(path, line_no, "expected source<TAB>target");
    graph.add_edge(fields[0], fields[1]);
  }
  return graph;
}

void write_edges_tsv(const std::string& path, const DocumentGraph& graph) {
  auto out = open_output(path);
  for (const auto& [s, t] : graph.edges) out << s << '\t' << t << '\n';
}

std::vector<std::string> read_concepts(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> concepts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    concepts.push_back(line);
  }
  return concepts;
}

std::vector<LabeledConceptPair> read_labeled_pairs_tsv(const std::string& path) {
  auto in = open_input(path);
  std::vector<LabeledConceptPair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() != 3) line_error(path, line_no, "expected source<TAB>target<TAB>label");
    if (fields[2] != "0" && fields[2] != "1")
      line_error(path, line_no, "label must be 0 or 1, got '" + fields[2] + "'");
    if (fields[0] == fields[1])
      line_error(path, line_no, "self-pair '" + fields[0] + "' not allowed");
    pairs.push_back({fields[0], fields[1], fields[2] == "1" ? 1 : 0});
  }
  return pairs;
}

void write_labeled_pairs_tsv(const std::string& path,
                             const std::vector<LabeledConceptPair>& pairs) {
  auto out = open_output(path);
  for (const auto& p : pairs) out << p.source << '\t' << p.target << '\t' << p.label << '\n';
}

std::vector<std::pair<std::string, std::string>> read_pairs_tsv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() < 2) line_error(path, line_no, "expected source<TAB>target");
    pairs.emplace_back(fields[0], fields[1]);
  }
  return pairs;
}

void write_scores_tsv(const std::string& path, const std::vector<ScoredPair>& scores) {
  auto out = open_output(path);
  for (const auto& s : scores)
    out << s.source << '\t' << s.target << '\t' << format_double(s.score) << '\n';
}

void write_vocabulary_json(const std::string& path, const Vocabulary& vocab) {
  json obj;
  obj["format_version"] = 1;
  obj["mode"] = vocab.mode == VocabMode::FullNgram ? "full-ngram" : "concept-restricted";
  obj["terms"] = vocab.terms;
  open_output(path) << obj.dump() << '\n';
}

Vocabulary read_vocabulary_json(const std::string& path) {
  json obj = json::parse(open_input(path));
  Vocabulary vocab;
  const std::string mode = obj.at("mode").get<std::string>();
  vocab.mode = mode == "concept-restricted" ? VocabMode::ConceptRestricted : VocabMode::FullNgram;
  vocab.terms = obj.at("terms").get<std::vector<std::string>>();
  for (size_t i = 0; i < vocab.terms.size(); ++i)
    vocab.index[vocab.terms[i]] = static_cast<int>(i);
  return vocab;
}

void write_bows_jsonl(const std::string& path, const std::vector<BowDocument>& bows) {
  auto out = open_output(path);
  for (const auto& bow : bows) {
    json obj;
    obj["doc_id"] = bow.doc_id;
    json ids = json::array(), counts = json::array();
    for (const auto& [id, c] : bow.counts) {
      ids.push_back(id);
      counts.push_back(c);
    }
    obj["term_ids"] = std::move(ids);
    obj["counts"] = std::move(counts);
    out << obj.dump() << '\n';
  }
}

std::vector<BowDocument> read_bows_jsonl(const std::string& path) {
  auto in = open_input(path);
  std::vector<BowDocument> bows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      line_error(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    BowDocument bow;
    bow.doc_id = obj.at("doc_id").get<std::string>();
    const auto& ids = obj.at("term_ids");
    const auto& counts = obj.at("counts");
    if (ids.size() != counts.size()) line_error(path, line_no, "term_ids/counts mismatch");
    for (size_t i = 0; i < ids.size(); ++i)
      bow.counts[ids[i].get<int>()] = counts[i].get<int>();
    bows.push_back(std::move(bow));
  }
  return bows;
}

void write_concept_map_tsv(const std::string& path, const ConceptSpace& space) {
  auto out = open_output(path);
  for (int c = 0; c < space.size(); ++c)
    out << space.concepts[c] << '\t' << space.vocab_id[c] << '\n';
}

ConceptSpace read_concept_map_tsv(const std::string& path) {
  auto in = open_input(path);
  ConceptSpace space;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    auto fields = split_tsv(line);
    if (fields.size() != 2) line_error(path, line_no, "expected concept<TAB>vocab_id");
    space.concepts.push_back(fields[0]);
    space.vocab_id.push_back(std::stoi(fields[1]));
  }
  return space;
}

namespace {

json hyper_to_json(const PldaHyper& hyper) {
  json obj;
  obj["k"] = hyper.k;
  obj["alpha"] = hyper.alpha;
  obj["max_em_iters"] = hyper.max_em_iters;
  obj["elbo_rel_tol"] = hyper.elbo_rel_tol;
  obj["nonedge_ratio"] = hyper.nonedge_ratio;
  obj["eta_smoothing"] = hyper.eta_smoothing;
  obj["beta_floor"] = hyper.beta_floor;
  obj["init_jitter"] = hyper.init_jitter;
  obj["seed"] = hyper.seed;
  return obj;
}

PldaHyper hyper_from_json(const json& obj) {
  PldaHyper hyper;
  hyper.k = obj.value("k", hyper.k);
  hyper.alpha = obj.value("alpha", hyper.alpha);
  hyper.max_em_iters = obj.value("max_em_iters", hyper.max_em_iters);
  hyper.elbo_rel_tol = obj.value("elbo_rel_tol", hyper.elbo_rel_tol);
  hyper.nonedge_ratio = obj.value("nonedge_ratio", hyper.nonedge_ratio);
  hyper.eta_smoothing = obj.value("eta_smoothing", hyper.eta_smoothing);
  hyper.beta_floor = obj.value("beta_floor", hyper.beta_floor);
  hyper.init_jitter = obj.value("init_jitter", hyper.init_jitter);
  hyper.seed = obj.value("seed", hyper.seed);
  return hyper;
}

}  // namespace

void write_plda_model_json(const std::string& path, const PldaModel& model,
                           const std::vector<std::string>& vocab_terms,
                           const PldaHyper& hyper) {
  json obj;
  obj["format_version"] = 1;
  obj["k"] = model.k;
  obj["vocab"] = vocab_terms;
  obj["log_beta"] = matrix_to_json(model.log_beta);
  obj["eta"] = matrix_to_json(model.eta);
  obj["hyper"] = hyper_to_json(hyper);
  open_output(path) << obj.dump() << '\n';
}

LoadedPldaModel read_plda_model_json(const std::string& path) {
  json obj = json::parse(open_input(path));
  LoadedPldaModel loaded;
  loaded.model.k = obj.at("k").get<int>();
  loaded.vocab_terms = obj.at("vocab").get<std::vector<std::string>>();
  loaded.model.log_beta = matrix_from_json(obj.at("log_beta"), path + " log_beta");
  loaded.model.eta = matrix_from_json(obj.at("eta"), path + " eta");
  loaded.model.vocab_size = loaded.model.log_beta.cols;
  loaded.hyper = hyper_from_json(obj.value("hyper", json::object()));
  if (loaded.model.log_beta.rows != loaded.model.k || loaded.model.eta.rows != loaded.model.k ||
      loaded.model.eta.cols != loaded.model.k)
    throw std::runtime_error(path + ": inconsistent model dimensions");
  return loaded;
}

void write_siamese_json(const std::string& path, const SiameseParams& params) {
  json obj;
  obj["format_version"] = 1;
  obj["k"] = params.k;
  obj["h"] = params.h;
  obj["n"] = params.n;
  obj["w1"] = matrix_to_json(params.w1);
  obj["b1"] = params.b1;
  obj["w2"] = matrix_to_json(params.w2);
  obj["b2"] = params.b2;
  obj["w"] = matrix_to_json(params.w);
  obj["b"] = params.b;
  open_output(path) << obj.dump() << '\n';
}

SiameseParams read_siamese_json(const std::string& path) {
  json obj = json::parse(open_input(path));
  SiameseParams params;
  params.k = obj.at("k").get<int>();
  params.h = obj.at("h").get<int>();
  params.n = obj.at("n").get<int>();
  params.w1 = matrix_from_json(obj.at("w1"), path + " w1");
  params.b1 = obj.at("b1").get<std::vector<double>>();
  params.w2 = matrix_from_json(obj.at("w2"), path + " w2");
  params.b2 = obj.at("b2").get<std::vector<double>>();
  params.w = matrix_from_json(obj.at("w"), path + " w");
  params.b = obj.at("b").get<std::vector<double>>();
  if (params.w1.rows != params.k || params.w1.cols != params.h ||
      params.w2.rows != params.h || params.w2.cols != params.n ||
      params.w.rows != params.n || params.w.cols != 2 ||
      static_cast<int>(params.b1.size()) != params.h ||
      static_cast<int>(params.b2.size()) != params.n || params.b.size() != 2)
    throw std::runtime_error(path + ": inconsistent parameter shapes");
  return params;
}

void write_fit_report_csv(const std::string& path, const FitReport& report) {
  auto out = open_output(path);
  out << "iter,elbo,delta_rel\n";
  for (size_t i = 0; i < report.elbo_trace.size(); ++i)
    out << i << ',' << format_double(report.elbo_trace[i]) << ','
        << format_double(report.delta_rel[i]) << '\n';
}

void write_loss_trace_csv(const std::string& path, const std::vector<double>& trace) {
  auto out = open_output(path);
  out << "iter,loss\n";
  for (size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << format_double(trace[i]) << '\n';
}

namespace {

json metrics_to_json(const SplitMetrics& m) {
  json obj;
  obj["precision"] = m.precision;
  obj["recall"] = m.recall;
  obj["f_score"] = m.f_score;
  obj["p_at_50"] = m.p_at_50;
  obj["p_at_100"] = m.p_at_100;
  return obj;
}

}  // namespace

void write_eval_report_json(const std::string& path, const EvalReport& report) {
  json obj;
  obj["format_version"] = 1;
  obj["dataset"] = report.dataset;
  obj["method"] = report.method;
  obj["pool"] = report.pool;
  obj["config_hash"] = report.config_hash;
  json splits = json::array();
  for (const auto& m : report.splits) splits.push_back(metrics_to_json(m));
  obj["splits"] = std::move(splits);
  obj["mean"] = metrics_to_json(report.mean);
  open_output(path) << obj.dump(2) << '\n';
}

void write_eval_report_csv(const std::string& path, const EvalReport& report) {
  auto out = open_output(path);
  out << "split,precision,recall,f_score,p_at_50,p_at_100\n";
  auto row = [&](const std::string& name, const SplitMetrics& m) {
    out << name << ',' << format_double(m.precision) << ',' << format_double(m.recall)
        << ',' << format_double(m.f_score) << ',' << format_double(m.p_at_50) << ','
        << format_double(m.p_at_100) << '\n';
  };
  for (size_t i = 0; i < report.splits.size(); ++i)
    row(std::to_string(i), report.splits[i]);
  row("mean", report.mean);
}

}  // namespace prereq
