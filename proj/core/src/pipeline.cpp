#include "hinclus/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "hinclus/errors.hpp"
#include "hinclus/filters.hpp"
#include "hinclus/text.hpp"
#include <json.hpp>

namespace hinclus {

using nlohmann::json;

OptimizerConfig PipelineConfig::optimizer(int resolved_k_docs) const {
  OptimizerConfig oc;
  oc.k_docs = resolved_k_docs;
  oc.k_words = k_words;
  oc.k_entities = k_entities;
  oc.max_iter = max_iter;
  oc.max_delta = max_delta;
  oc.icm_max_sweeps = icm_max_sweeps;
  oc.seed = seed;
  oc.epsilon = epsilon;
  oc.w_must = w_must;
  oc.w_cannot = w_cannot;
  return oc;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed config " + path.string() + ": " + e.what());
  }
  PipelineConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j[key].is_null()) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  std::string corpus, kb, workdir;
  get("corpus", corpus);
  get("kb", kb);
  get("workdir", workdir);
  if (!corpus.empty()) c.corpus = corpus;
  if (!kb.empty()) c.kb = kb;
  if (!workdir.empty()) c.workdir = workdir;
  get("filter", c.filter);
  get("filter_threshold", c.filter_threshold);
  get("cbsf_k", c.cbsf_k);
  get("cbsf_evidence", c.cbsf_evidence);
  get("kd", c.k_docs);
  get("kw", c.k_words);
  get("ke", c.k_entities);
  get("max_iter", c.max_iter);
  get("max_delta", c.max_delta);
  get("icm_max_sweeps", c.icm_max_sweeps);
  get("seed", c.seed);
  get("epsilon", c.epsilon);
  if (j.contains("w_must") && !j["w_must"].is_null()) c.w_must = j["w_must"].get<double>();
  if (j.contains("w_cannot") && !j["w_cannot"].is_null())
    c.w_cannot = j["w_cannot"].get<double>();
  get("constraints", c.constraints);
  get("min_word_df", c.min_word_df);
  get("remove_stopwords", c.remove_stopwords);
  if (j.contains("synth") && j["synth"].is_object()) {
    const json& s = j["synth"];
    auto gs = [&](const char* key, auto& field) {
      if (s.contains(key) && !s[key].is_null())
        field = s[key].get<std::decay_t<decltype(field)>>();
    };
    gs("blocks", c.synth.blocks);
    gs("docs_per_block", c.synth.docs_per_block);
    gs("words_per_block", c.synth.words_per_block);
    gs("entities_per_block", c.synth.entities_per_block);
    gs("noise", c.synth.noise);
    gs("seed", c.synth.seed);
    gs("words_per_doc", c.synth.words_per_doc);
    gs("mention_pairs_per_doc", c.synth.mention_pairs_per_doc);
  }
  return c;
}

int thread_budget() {
  const char* env = std::getenv("HINCLUS_THREADS");
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (env == nullptr || *env == '\0') return hw;
  int n = std::atoi(env);
  return n <= 0 ? hw : n;
}

namespace {

std::string candidates_str(const Mention& m) {
  std::string s;
  for (size_t i = 0; i < m.candidates.size(); ++i) {
    if (i) s += ',';
    s += m.candidates[i].top + ":" + m.candidates[i].sub;
  }
  return s;
}

// Runs fn(i) for i in [0, n) across the thread budget; fn writes only to
// slot i of its output, so results are committed in input order.
void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(thread_budget(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void write_raw_mentions_tsv(std::span<const Mention> mentions,
                            const KnowledgeBase& kb,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write raw mentions file: " + path.string());
  for (const Mention& m : mentions)
    out << m.doc_id << '\t' << m.begin << '\t' << m.end << '\t'
        << kb.entity_ids[static_cast<size_t>(m.entity)] << '\t' << candidates_str(m)
        << '\n';
}

std::vector<Mention> read_raw_mentions_tsv(const std::filesystem::path& path,
                                           const KnowledgeBase& kb) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open raw mentions file: " + path.string());
  std::vector<Mention> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string doc, begin, end, entity, cands;
    if (!std::getline(ss, doc, '\t') || !std::getline(ss, begin, '\t') ||
        !std::getline(ss, end, '\t') || !std::getline(ss, entity, '\t') ||
        !std::getline(ss, cands, '\t'))
      throw ParseError("raw mentions file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected 5 columns");
    Mention m;
    m.doc_id = doc;
    m.begin = std::stoi(begin);
    m.end = std::stoi(end);
    m.entity = kb.find_entity(entity);
    if (m.entity < 0)
      throw IntegrityError("raw mentions file references unknown entity \"" + entity +
                           "\"");
    std::stringstream cs(cands);
    std::string pair;
    while (std::getline(cs, pair, ',')) {
      auto colon = pair.find(':');
      if (colon == std::string::npos)
        throw ParseError("raw mentions file " + path.string() + " line " +
                         std::to_string(lineno) + ": bad candidate \"" + pair + "\"");
      m.candidates.push_back({pair.substr(0, colon), pair.substr(colon + 1)});
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_assignments_tsv(const ClusterState& state, const Hin& hin,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write assignments file: " + path.string());
  for (size_t i = 0; i < hin.doc_ids.size(); ++i)
    out << "doc\t" << i << '\t' << hin.doc_ids[i] << '\t' << state.labels_doc[i]
        << '\n';
  for (size_t i = 0; i < hin.words.size(); ++i)
    out << "word\t" << i << '\t' << hin.words[i] << '\t' << state.labels_word[i]
        << '\n';
  for (size_t t = 0; t < hin.type_names.size(); ++t)
    for (size_t i = 0; i < hin.entity_names[t].size(); ++i)
      out << hin.type_names[t] << '\t' << i << '\t' << hin.entity_names[t][i] << '\t'
          << state.labels_ent[t][i] << '\n';
}

std::pair<std::vector<int>, int> read_doc_assignments_tsv(
    const std::filesystem::path& path, const Hin& hin) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open assignments file: " + path.string());
  std::vector<int> labels(hin.doc_ids.size(), -1);
  int k = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, index, name, cluster;
    if (!std::getline(ss, kind, '\t') || !std::getline(ss, index, '\t') ||
        !std::getline(ss, name, '\t') || !std::getline(ss, cluster, '\t'))
      throw ParseError("assignments file " + path.string() + " line " +
                       std::to_string(lineno) + ": expected 4 columns");
    if (kind != "doc") continue;
    int idx = std::stoi(index);
    if (idx < 0 || idx >= hin.num_docs())
      throw IntegrityError("assignments file references unknown document index " +
                           index);
    labels[static_cast<size_t>(idx)] = std::stoi(cluster);
    k = std::max(k, labels[static_cast<size_t>(idx)] + 1);
  }
  for (int l : labels)
    if (l < 0)
      throw IntegrityError("assignments file " + path.string() +
                           " does not cover every document");
  return {labels, k};
}

RunResult read_trace_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed trace " + path.string() + ": " + e.what());
  }
  RunResult r;
  r.trace = j.at("objective").get<std::vector<double>>();
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  return r;
}

namespace {

std::vector<TypedMention> apply_filter(const PipelineConfig& config,
                                       std::span<const Mention> mentions,
                                       const KnowledgeBase& kb) {
  if (config.filter == "fbsf") return fbsf(mentions, kb, config.filter_threshold);
  if (config.filter == "dfbsf") return dfbsf(mentions, kb, config.filter_threshold);
  if (config.filter == "cbsf") {
    CbsfOptions opts;
    opts.k = config.cbsf_k;
    opts.seed = config.seed;
    if (config.cbsf_evidence == "deterministic")
      opts.evidence = CbsfEvidence::deterministic;
    else if (config.cbsf_evidence == "doc_freq")
      opts.evidence = CbsfEvidence::doc_freq;
    else if (config.cbsf_evidence == "corpus_doc_freq")
      opts.evidence = CbsfEvidence::corpus_doc_freq;
    else
      throw std::invalid_argument("unknown cbsf evidence mode: " + config.cbsf_evidence);
    return cbsf(mentions, kb, opts);
  }
  throw std::invalid_argument("unknown filter: " + config.filter);
}

int resolve_k_docs(const PipelineConfig& config, const Hin& hin) {
  if (config.k_docs > 0) return config.k_docs;
  if (hin.has_truth()) return static_cast<int>(hin.truth_classes.size());
  throw std::invalid_argument(
      "kd not set and the corpus carries no labels to infer it from");
}

BuildConfig build_config(const PipelineConfig& config) {
  BuildConfig bc;
  bc.min_word_df = config.min_word_df;
  bc.remove_stopwords = config.remove_stopwords;
  return bc;
}

struct GroundOutput {
  std::vector<Mention> mentions;
  std::vector<RelationMatch> relations;
};

GroundOutput ground_corpus(const std::vector<Document>& corpus,
                           const KnowledgeBase& kb) {
  std::vector<GroundOutput> per_doc(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), [&](int i) {
    auto tokens = tokenize(corpus[static_cast<size_t>(i)].text);
    per_doc[static_cast<size_t>(i)].mentions =
        ground_mentions(tokens, kb, corpus[static_cast<size_t>(i)].id);
    per_doc[static_cast<size_t>(i)].relations =
        extract_relations(per_doc[static_cast<size_t>(i)].mentions, tokens, kb);
  });
  GroundOutput all;
  for (auto& g : per_doc) {
    all.mentions.insert(all.mentions.end(), g.mentions.begin(), g.mentions.end());
    all.relations.insert(all.relations.end(), g.relations.begin(), g.relations.end());
  }
  return all;
}

std::vector<TripleOccurrence> to_occurrences(std::span<const RelationMatch> matches,
                                             const KnowledgeBase& kb) {
  std::vector<TripleOccurrence> out;
  out.reserve(matches.size());
  for (const RelationMatch& m : matches)
    out.push_back({kb.entity_ids[static_cast<size_t>(m.triple.subject)],
                   kb.relations[static_cast<size_t>(m.triple.relation)].id,
                   kb.entity_ids[static_cast<size_t>(m.triple.object)],
                   m.kb_confirmed});
  return out;
}

void write_logic_forms_tsv(std::span<const RelationMatch> matches,
                           const KnowledgeBase& kb,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write logic forms file: " + path.string());
  for (const RelationMatch& m : matches)
    out << m.doc_id << '\t' << m.form.str(kb) << '\t'
        << kb.entity_ids[static_cast<size_t>(m.triple.subject)] << '\t'
        << kb.relations[static_cast<size_t>(m.triple.relation)].id << '\t'
        << kb.entity_ids[static_cast<size_t>(m.triple.object)] << '\t'
        << (m.kb_confirmed ? 1 : 0) << '\n';
}

}  // namespace

namespace stages {

void synth(const PipelineConfig& config) {
  std::filesystem::create_directories(config.workdir);
  SynthParams params = config.synth;
  SynthData data = synth_generate(params);
  save_corpus_jsonl(data.corpus, config.corpus_path());
  save_kb(data.kb, config.kb_path());
}

void ground(const PipelineConfig& config) {
  std::filesystem::create_directories(config.workdir);
  auto corpus = load_corpus_jsonl(config.corpus_path());
  auto kb = load_kb(config.kb_path());
  GroundOutput g = ground_corpus(corpus, kb);
  write_raw_mentions_tsv(g.mentions, kb, config.workdir / "raw_mentions.tsv");
  write_logic_forms_tsv(g.relations, kb, config.workdir / "logic_forms.tsv");
  write_triples_tsv(to_occurrences(g.relations, kb), config.workdir / "triples.tsv");
}

void filter(const PipelineConfig& config) {
  auto kb = load_kb(config.kb_path());
  auto mentions = read_raw_mentions_tsv(config.workdir / "raw_mentions.tsv", kb);
  auto typed = apply_filter(config, mentions, kb);
  write_mentions_tsv(typed, config.workdir / "mentions.tsv");
}

void build(const PipelineConfig& config) {
  auto corpus = load_corpus_jsonl(config.corpus_path());
  auto typed = read_mentions_tsv(config.workdir / "mentions.tsv");
  auto triples = read_triples_tsv(config.workdir / "triples.tsv");
  Hin hin = build_hin(corpus, typed, triples, build_config(config));
  save_hin(hin, config.workdir / "hin");
}

void constrain(const PipelineConfig& config) {
  Hin hin = load_hin(config.workdir / "hin");
  auto typed = read_mentions_tsv(config.workdir / "mentions.tsv");
  ConstraintSet cs = generate_constraints(typed, hin);
  if (config.constraints >= 0)
    cs = sample_constraints(cs, static_cast<std::size_t>(config.constraints),
                            config.seed);
  write_constraints_tsv(cs, config.workdir / "constraints.tsv");
}

void cluster(const PipelineConfig& config) {
  Hin hin = load_hin(config.workdir / "hin");
  ConstraintSet cs = read_constraints_tsv(config.workdir / "constraints.tsv", hin);
  RunResult run = run_chinc(hin, cs, config.optimizer(resolve_k_docs(config, hin)));
  write_assignments_tsv(run.state, hin, config.workdir / "assignments.tsv");
  write_trace_json(run, config.workdir / "trace.json");
}

void evaluate(const PipelineConfig& config) {
  Hin hin = load_hin(config.workdir / "hin");
  auto [labels, k] = read_doc_assignments_tsv(config.workdir / "assignments.tsv", hin);
  RunResult run = read_trace_json(config.workdir / "trace.json");
  run.state.labels_doc = labels;
  run.state.K_d = k;
  EvalReport rep = report(run.state, hin, run, 0);
  write_metrics_json(rep, config.workdir / "metrics.json");
}

}  // namespace stages

void run_pipeline(const PipelineConfig& config) {
  std::filesystem::create_directories(config.workdir);
  auto corpus = load_corpus_jsonl(config.corpus_path());
  auto kb = load_kb(config.kb_path());

  GroundOutput g = ground_corpus(corpus, kb);
  write_raw_mentions_tsv(g.mentions, kb, config.workdir / "raw_mentions.tsv");
  write_logic_forms_tsv(g.relations, kb, config.workdir / "logic_forms.tsv");
  auto triples = to_occurrences(g.relations, kb);
  write_triples_tsv(triples, config.workdir / "triples.tsv");

  auto typed = apply_filter(config, g.mentions, kb);
  write_mentions_tsv(typed, config.workdir / "mentions.tsv");

  Hin hin = build_hin(corpus, typed, triples, build_config(config));
  save_hin(hin, config.workdir / "hin");

  ConstraintSet cs = generate_constraints(typed, hin);
  if (config.constraints >= 0)
    cs = sample_constraints(cs, static_cast<std::size_t>(config.constraints),
                            config.seed);
  write_constraints_tsv(cs, config.workdir / "constraints.tsv");

  auto started = std::chrono::steady_clock::now();
  RunResult run = run_chinc(hin, cs, config.optimizer(resolve_k_docs(config, hin)));
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  write_assignments_tsv(run.state, hin, config.workdir / "assignments.tsv");
  write_trace_json(run, config.workdir / "trace.json");

  if (hin.has_truth()) {
    EvalReport rep = report(run.state, hin, run, elapsed);
    write_metrics_json(rep, config.workdir / "metrics.json");
  }
}

}  // namespace hinclus
