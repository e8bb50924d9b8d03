#include "docgraph/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "docgraph/analysis.hpp"
#include "docgraph/csv.hpp"
#include "docgraph/error.hpp"
#include "docgraph/experiment.hpp"
#include "docgraph/features.hpp"
#include "docgraph/graph_stats.hpp"
#include "docgraph/text.hpp"
#include "docgraph/textembed.hpp"
#include "json.hpp"

namespace docgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---- configuration ----

enum class Type { string, integer, number, boolean, list, object };

struct Key {
  const char* name;
  Type type;
  json fallback;
  const char* help;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k{
      {"corpus", Type::string, "", "corpus file (JSONL, or articles.csv with --format csv-pair)"},
      {"format", Type::string, "jsonl", "corpus format: jsonl | csv-pair"},
      {"edges", Type::string, "", "edges.csv for csv-pair corpora"},
      {"graph", Type::string, "", "src,dst edge list CSV"},
      {"out", Type::string, "", "output file or directory"},
      {"seed", Type::integer, 0, "root random seed"},
      {"jobs", Type::integer, 1, "parallel training runs"},
      {"runs", Type::integer, 10, "runs per configuration"},
      {"epochs", Type::integer, 200, "training epochs"},
      {"lr", Type::number, 0.01, "Adam learning rate"},
      {"log_every", Type::integer, 10, "validation logging interval (epochs)"},
      {"val_frac", Type::number, 0.05, "validation edge fraction"},
      {"test_frac", Type::number, 0.10, "test edge fraction"},
      {"encoder", Type::list, json::array({"gcn"}), "encoders: gcn,sage,gin,gat,agnn,graphunet or all"},
      {"encoders", Type::object, json::object(), "per-encoder hyperparameter overrides (config file only)"},
      {"text", Type::list, json::array({"tfidf"}), "text encodings: tfidf,pvdm,external or all"},
      {"external", Type::string, "", "precomputed document vectors (TSV or EMB1)"},
      {"min_df", Type::integer, 5, "minimum document frequency"},
      {"max_df", Type::number, 0.65, "maximum document frequency fraction"},
      {"max_text_features", Type::integer, 512, "TF-IDF columns kept as features"},
      {"remove_phrases", Type::list, json::array(), "phrases removed before tokenizing"},
      {"topics", Type::integer, 20, "LDA topics"},
      {"alpha", Type::number, nullptr, "LDA document prior (default 50/topics)"},
      {"eta", Type::number, 0.01, "LDA word prior"},
      {"lda_iterations", Type::integer, 500, "Gibbs sweeps"},
      {"burn_in", Type::integer, 200, "Gibbs burn-in sweeps"},
      {"pvdm_dim", Type::integer, 20, "PV-DM vector size"},
      {"pvdm_window", Type::integer, 10, "PV-DM window"},
      {"pvdm_negatives", Type::integer, 5, "PV-DM negative samples"},
      {"pvdm_epochs", Type::integer, 20, "PV-DM epochs"},
      {"top_affiliations", Type::integer, 1000, "affiliation one-hot width before `other`"},
      {"top_authors", Type::integer, 1000, "first-author one-hot width before `other`"},
      {"log_citations", Type::boolean, true, "use log(1+c) citation features"},
      {"horizon", Type::integer, nullptr, "last observed citation year"},
      {"drop", Type::list, json::array(), "feature groups left out of training"},
      {"remove", Type::list,
       json::array({"first-author", "affiliation", "subject-area", "topic-distribution", "year", "citations-1..10",
                    "text-embedding"}),
       "feature groups to ablate (`none` adds the full model)"},
      {"er_reps", Type::integer, 10, "Erdos-Renyi replications"},
      {"exact_threshold", Type::integer, 5000, "exact path lengths up to this giant size"},
      {"sampled_sources", Type::integer, 500, "BFS sources above the threshold"},
      {"embedding", Type::string, "", "embedding file"},
      {"emb_format", Type::string, "tsv", "embedding output format: tsv | binary"},
      {"by", Type::string, "journal", "grouping: journal | field | country | collaboration"},
      {"a", Type::string, "", "positive pivot label"},
      {"b", Type::string, "", "negative pivot label"},
      {"semantic", Type::string, "", "semantic embedding file"},
      {"relational", Type::string, "", "relational embedding file"},
      {"threshold", Type::number, 0.5, "decision threshold on sigmoid scores"},
  };
  return k;
}

const Key& key(const std::string& name) {
  for (const auto& k : keys()) {
    if (name == k.name) return k;
  }
  throw std::logic_error("unregistered key " + name);
}

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

json parse_scalar(const Key& k, const std::string& text) {
  const std::string where = "option " + flag_name(k.name) + ": ";
  try {
    std::size_t used = 0;
    switch (k.type) {
      case Type::integer: {
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Type::number: {
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Type::boolean:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        break;
      default:
        return text;
    }
  } catch (const std::logic_error&) {
  }
  throw ValidationError(where + "invalid value '" + text + "'");
}

void check_type(const Key& k, const json& v) {
  if (v.is_null()) return;
  bool ok = false;
  switch (k.type) {
    case Type::string: ok = v.is_string(); break;
    case Type::integer: ok = v.is_number_integer(); break;
    case Type::number: ok = v.is_number(); break;
    case Type::boolean: ok = v.is_boolean(); break;
    case Type::list: ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }); break;
    case Type::object: ok = v.is_object(); break;
  }
  if (!ok) throw ValidationError(std::string("config key `") + k.name + "` has the wrong type");
}

class Options {
 public:
  Options(CLI::App* app, std::vector<std::string> names) : names_(std::move(names)) {
    app->add_option("--config", config_path_, "JSON config file; flags override it");
    for (const auto& n : names_) {
      const Key& k = key(n);
      if (k.type == Type::object) continue;
      if (k.type == Type::list) {
        app->add_option(flag_name(n), lists_[n], k.help)->delimiter(',');
      } else {
        app->add_option(flag_name(n), scalars_[n], k.help);
      }
    }
    app_ = app;
  }

  // defaults < config file < flags
  json resolve() const {
    json cfg = json::object();
    for (const auto& n : names_) cfg[n] = key(n).fallback;
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw ValidationError("cannot open config " + config_path_);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ValidationError("config " + config_path_ + ": " + e.what());
      }
      if (!file.is_object()) throw ValidationError("config must be a JSON object");
      for (const auto& [name, value] : file.items()) {
        const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return name == k.name; });
        if (it == keys().end()) throw ValidationError("unknown config key `" + name + "`");
        check_type(*it, value);
        cfg[name] = value;
      }
    }
    for (const auto& [n, v] : scalars_) {
      if (app_->count(flag_name(n))) cfg[n] = parse_scalar(key(n), v);
    }
    for (const auto& [n, v] : lists_) {
      if (app_->count(flag_name(n))) cfg[n] = v;
    }
    return cfg;
  }

 private:
  std::vector<std::string> names_;
  std::string config_path_;
  std::map<std::string, std::string> scalars_;
  std::map<std::string, std::vector<std::string>> lists_;
  CLI::App* app_ = nullptr;
};

std::string str(const json& cfg, const char* k) { return cfg.at(k).is_null() ? "" : cfg.at(k).get<std::string>(); }
long long integer(const json& cfg, const char* k) { return cfg.at(k).get<long long>(); }
double number(const json& cfg, const char* k) { return cfg.at(k).get<double>(); }
std::vector<std::string> list(const json& cfg, const char* k) { return cfg.at(k).get<std::vector<std::string>>(); }

std::string require(const json& cfg, const char* k) {
  const std::string v = str(cfg, k);
  if (v.empty()) throw ValidationError(flag_name(k) + " is required");
  return v;
}

std::size_t count(const json& cfg, const char* k) {
  const long long v = integer(cfg, k);
  if (v < 0) throw ValidationError(flag_name(k) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t seed_of(const json& cfg) { return static_cast<std::uint64_t>(integer(cfg, "seed")); }

// ---- shared pipeline ----

struct Context {
  std::ostream& out;
  std::ostream& err;

  void log(const std::string& msg) const { err << "[docgraph] " << msg << '\n'; }
};

Corpus load(const json& cfg) {
  const std::string format = str(cfg, "format");
  CorpusFormat f;
  if (format == "jsonl") {
    f = CorpusFormat::jsonl;
  } else if (format == "csv-pair") {
    f = CorpusFormat::csv_pair;
  } else {
    throw ValidationError("unknown corpus format " + format);
  }
  const std::string edges = str(cfg, "edges");
  return load_corpus(require(cfg, "corpus"), f, edges.empty() ? std::nullopt : std::optional<fs::path>(edges));
}

void write_config_echo(const json& cfg, const std::string& command, const fs::path& path) {
  ordered_json echo;
  echo["command"] = command;
  for (const auto& [k, v] : cfg.items()) echo[k] = v;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << echo.dump(2) << '\n';
}

fs::path echo_path_for(const fs::path& file) { return fs::path(file.string() + ".config.json"); }

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

EmbeddingFormat emb_format(const json& cfg) {
  const std::string f = str(cfg, "emb_format");
  if (f == "tsv") return EmbeddingFormat::tsv;
  if (f == "binary") return EmbeddingFormat::binary;
  throw ValidationError("unknown embedding format " + f);
}

std::vector<std::string> corpus_ids(const Corpus& corpus) {
  std::vector<std::string> ids;
  for (const auto& a : corpus.articles()) ids.push_back(a.id);
  return ids;
}

struct TextPipeline {
  std::vector<TokenList> docs;
  Vocabulary vocab;
};

TextPipeline preprocess_all(const Corpus& corpus, const json& cfg, const Context& ctx) {
  PreprocessConfig pc;
  pc.removal_phrases = list(cfg, "remove_phrases");
  TextPipeline t;
  t.docs = preprocess_corpus(corpus, pc);
  t.vocab = build_vocabulary(t.docs, count(cfg, "min_df"), number(cfg, "max_df"));
  ctx.log("vocabulary: " + std::to_string(t.vocab.size()) + " tokens over " + std::to_string(t.docs.size()) +
          " documents");
  return t;
}

LdaConfig lda_config(const json& cfg) {
  LdaConfig c;
  c.topics = static_cast<int>(integer(cfg, "topics"));
  if (!cfg.at("alpha").is_null()) c.alpha = number(cfg, "alpha");
  c.eta = number(cfg, "eta");
  c.iterations = static_cast<int>(integer(cfg, "lda_iterations"));
  c.burn_in = static_cast<int>(integer(cfg, "burn_in"));
  c.seed = Rng(seed_of(cfg)).substream("lda").seed();
  return c;
}

TopicModel fit_topics(const TextPipeline& t, const json& cfg, const Context& ctx) {
  std::vector<std::string> warnings;
  const TopicModel m = lda_fit(build_dtm(t.docs, t.vocab, Weighting::count), lda_config(cfg), &warnings);
  for (const auto& w : warnings) ctx.log(w);
  return m;
}

PvdmConfig pvdm_config(const json& cfg) {
  PvdmConfig c;
  c.dim = static_cast<int>(integer(cfg, "pvdm_dim"));
  c.window = static_cast<int>(integer(cfg, "pvdm_window"));
  c.negatives = static_cast<int>(integer(cfg, "pvdm_negatives"));
  c.epochs = static_cast<int>(integer(cfg, "pvdm_epochs"));
  c.seed = Rng(seed_of(cfg)).substream("pvdm").seed();
  return c;
}

std::vector<std::string> expand_text(const json& cfg) {
  std::vector<std::string> out;
  for (const auto& t : list(cfg, "text")) {
    if (t == "all") {
      for (const char* e : {"tfidf", "pvdm", "external"}) out.emplace_back(e);
    } else if (t == "tfidf" || t == "pvdm" || t == "external") {
      out.push_back(t);
    } else {
      throw ValidationError("unknown text encoding " + t);
    }
  }
  if (out.empty()) throw ValidationError("no text encoding selected");
  return out;
}

std::vector<gnn::EncoderConfig> expand_encoders(const json& cfg) {
  const json& overrides = cfg.at("encoders");
  std::vector<gnn::EncoderKind> kinds;
  for (const auto& e : list(cfg, "encoder")) {
    if (e == "all") {
      kinds.insert(kinds.end(), std::begin(gnn::all_encoders), std::end(gnn::all_encoders));
    } else {
      kinds.push_back(gnn::encoder_from_name(e));
    }
  }
  if (kinds.empty()) throw ValidationError("no encoder selected");
  std::vector<gnn::EncoderConfig> out;
  for (auto k : kinds) {
    json j = gnn::to_json(gnn::EncoderConfig::defaults(k));
    const std::string name(gnn::to_string(k));
    if (overrides.contains(name)) {
      for (const auto& [key, value] : overrides.at(name).items()) j[key] = value;
    }
    out.push_back(gnn::encoder_config_from_json(j));
  }
  for (const auto& [name, value] : overrides.items()) {
    (void)value;
    gnn::encoder_from_name(name);
  }
  return out;
}

Eigen::MatrixXd text_block(const std::string& encoding, const Corpus& corpus, const TextPipeline& t, const json& cfg,
                           const Context& ctx) {
  if (encoding == "tfidf") {
    return dense_top_columns(build_dtm(t.docs, t.vocab, Weighting::tfidf), count(cfg, "max_text_features"));
  }
  if (encoding == "pvdm") {
    ctx.log("fitting PV-DM document vectors");
    return pvdm_fit(encode_documents(t.docs, t.vocab), t.vocab.size(), pvdm_config(cfg));
  }
  const std::string path = str(cfg, "external");
  if (path.empty()) throw ValidationError("--external is required for the external text encoding");
  return load_external_embeddings(path, corpus_ids(corpus)).values;
}

FeatureConfig feature_config(const json& cfg) {
  FeatureConfig f;
  f.top_affiliations = count(cfg, "top_affiliations");
  f.top_authors = count(cfg, "top_authors");
  f.log_citations = cfg.at("log_citations").get<bool>();
  if (!cfg.at("horizon").is_null()) f.horizon = static_cast<int>(integer(cfg, "horizon"));
  for (const auto& d : list(cfg, "drop")) f.drop.insert(feature_block_from_name(d));
  return f;
}

eval::ExperimentConfig experiment_config(const json& cfg) {
  eval::ExperimentConfig e;
  e.val_frac = number(cfg, "val_frac");
  e.test_frac = number(cfg, "test_frac");
  e.runs = static_cast<int>(integer(cfg, "runs"));
  e.seed = seed_of(cfg);
  e.jobs = static_cast<int>(integer(cfg, "jobs"));
  e.train.epochs = static_cast<int>(integer(cfg, "epochs"));
  e.train.lr = number(cfg, "lr");
  if (e.train.epochs < 0) throw ValidationError("--epochs must be non-negative");
  return e;
}

std::vector<std::string> node_ids(const CitationGraph& g, const Corpus& corpus) {
  std::vector<std::string> ids;
  for (auto idx : g.node_article()) ids.push_back(corpus[idx].id);
  return ids;
}

CitationGraph corpus_graph(const Corpus& corpus, const Context& ctx) {
  auto build = build_citation_graph(corpus);
  ctx.log("citation graph: " + std::to_string(build.graph.num_nodes()) + " nodes, " +
          std::to_string(build.graph.num_edges()) + " links; " + std::to_string(build.excluded.size()) +
          " isolated articles excluded");
  if (build.graph.num_nodes() == 0) throw ValidationError("the corpus has no internal citation links");
  return std::move(build.graph);
}

void write_report_files(const eval::MetricsReport& report, const fs::path& dir) {
  {
    std::ofstream csv(dir / "report.csv");
    eval::write_report_csv(report, csv);
  }
  {
    std::ofstream js(dir / "report.json");
    js << eval::report_to_json(report).dump(2) << '\n';
  }
  std::ofstream txt(dir / "report.txt");
  eval::render_report(report, txt);
}

std::string embedding_extension(EmbeddingFormat f) { return f == EmbeddingFormat::binary ? ".emb" : ".tsv"; }

std::string lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::ostream& open_output(const json& cfg, std::ofstream& file, const Context& ctx) {
  const std::string path = str(cfg, "out");
  if (path.empty()) return ctx.out;
  ensure_parent(path);
  file.open(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  return file;
}

void echo_if_file(const json& cfg, const std::string& command) {
  const std::string path = str(cfg, "out");
  if (!path.empty()) write_config_echo(cfg, command, echo_path_for(path));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---- subcommands ----

void cmd_ingest(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  for (const auto& w : corpus.warnings()) ctx.log("warning: " + w);
  ctx.log(std::to_string(corpus.size()) + " articles, " + std::to_string(corpus.internal_reference_total()) +
          " internal and " + std::to_string(corpus.external_reference_total()) + " external references, " +
          std::to_string(corpus.warnings().size()) + " warnings");
  std::ofstream file;
  write_corpus_jsonl(corpus, open_output(cfg, file, ctx));
  echo_if_file(cfg, "ingest");
}

void cmd_preprocess(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const TextPipeline t = preprocess_all(corpus, cfg, ctx);
  const fs::path dir = require(cfg, "out");
  fs::create_directories(dir);
  std::ofstream tokens(dir / "tokens.jsonl");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ordered_json j;
    j["id"] = corpus[i].id;
    j["tokens"] = t.docs[i];
    tokens << j.dump() << '\n';
  }
  std::ofstream vocab(dir / "vocabulary.tsv");
  for (std::size_t i = 0; i < t.vocab.size(); ++i) vocab << t.vocab.token(i) << '\t' << t.vocab.document_frequency(i) << '\n';
  write_config_echo(cfg, "preprocess", dir / "config.json");
}

void cmd_stats(const json& cfg, const Context& ctx) {
  CitationGraph g;
  if (!str(cfg, "graph").empty()) {
    g = load_edge_csv(str(cfg, "graph")).graph;
  } else {
    g = build_citation_graph(load(cfg)).graph;
  }
  StatsOptions opts;
  opts.exact_threshold = count(cfg, "exact_threshold");
  opts.sampled_sources = count(cfg, "sampled_sources");
  const std::uint64_t seed = seed_of(cfg);
  GraphStats s = graph_stats(g, seed, opts);
  const std::size_t reps = count(cfg, "er_reps");
  if (reps > 0 && s.links > 0) {
    const ErBaseline er = er_baseline(g.num_nodes(), s.links, reps, Rng(seed).substream("er").seed(), opts);
    s.er_clustering = er.clustering;
    s.er_mean_path_length = er.mean_path_length;
  }
  try {
    s.power_law_alpha = fit_power_law(degree_sequence(g), 1.0);
  } catch (const ValidationError& e) {
    ctx.log(std::string("power-law fit skipped: ") + e.what());
  }
  std::ofstream file;
  open_output(cfg, file, ctx) << stats_to_json(s).dump(2) << '\n';
  echo_if_file(cfg, "stats");
}

void cmd_lda(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const TextPipeline t = preprocess_all(corpus, cfg, ctx);
  ctx.log("running " + std::to_string(integer(cfg, "lda_iterations")) + " Gibbs sweeps");
  const TopicModel m = fit_topics(t, cfg, ctx);
  const fs::path out = require(cfg, "out");
  ensure_parent(out);
  export_embedding(lda_doc_topics(m, corpus_ids(corpus)), out, emb_format(cfg));
  std::ofstream topics(out.string() + ".topics.tsv");
  for (Eigen::Index k = 0; k < m.beta.rows(); ++k) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m.beta.cols()));
    for (Eigen::Index w = 0; w < m.beta.cols(); ++w) order[static_cast<std::size_t>(w)] = w;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return m.beta(k, a) > m.beta(k, b); });
    topics << k;
    for (std::size_t i = 0; i < order.size() && i < 10; ++i) topics << '\t' << t.vocab.token(static_cast<std::size_t>(order[i]));
    topics << '\n';
  }
  write_config_echo(cfg, "lda", echo_path_for(out));
}

void cmd_pvdm(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const TextPipeline t = preprocess_all(corpus, cfg, ctx);
  EmbeddingMatrix e{pvdm_fit(encode_documents(t.docs, t.vocab), t.vocab.size(), pvdm_config(cfg)), corpus_ids(corpus),
                    EmbeddingKind::pvdm};
  const fs::path out = require(cfg, "out");
  ensure_parent(out);
  export_embedding(e, out, emb_format(cfg));
  write_config_echo(cfg, "pvdm", echo_path_for(out));
}

struct Prepared {
  Corpus corpus;
  CitationGraph graph;
  TextPipeline text;
  Eigen::MatrixXd theta;
};

Prepared prepare(const json& cfg, bool need_topics, const Context& ctx) {
  Prepared p{load(cfg), {}, {}, {}};
  p.graph = corpus_graph(p.corpus, ctx);
  p.text = preprocess_all(p.corpus, cfg, ctx);
  if (need_topics) {
    ctx.log("fitting LDA topic features");
    p.theta = fit_topics(p.text, cfg, ctx).theta;
  }
  return p;
}

FeatureMatrix node_features(const Prepared& p, const Eigen::MatrixXd& text, FeatureConfig fc, const Context& ctx) {
  std::vector<std::string> warnings;
  const FeatureMatrix all = assemble_features(p.corpus, text, p.theta, fc, &warnings);
  if (!warnings.empty()) ctx.log(std::to_string(warnings.size()) + " citation imputation warnings");
  return all.select_rows(p.graph.node_article());
}

void cmd_train(const json& cfg, const Context& ctx) {
  const FeatureConfig fc = feature_config(cfg);
  const auto encodings = expand_text(cfg);
  const auto encoders = expand_encoders(cfg);
  const eval::ExperimentConfig ec = experiment_config(cfg);
  const fs::path dir = require(cfg, "out");
  const Prepared p = prepare(cfg, !fc.drop.contains(FeatureBlock::topics), ctx);

  std::vector<eval::TextFeatures> features;
  for (const auto& enc : encodings) {
    const FeatureMatrix f = node_features(p, text_block(enc, p.corpus, p.text, cfg, ctx), fc, ctx);
    ctx.log(enc + " features: " + std::to_string(f.cols()) + " columns");
    features.push_back({enc, f.values()});
  }
  ctx.log("training " + std::to_string(encodings.size() * encoders.size()) + " configurations x " +
          std::to_string(ec.runs) + " runs");
  const eval::MetricsReport report = eval::run_matrix(p.graph, features, encoders, ec);

  fs::create_directories(dir / "embeddings");
  const EmbeddingFormat format = emb_format(cfg);
  const auto ids = node_ids(p.graph, p.corpus);
  for (const auto& row : report.rows) {
    if (row.error) ctx.log("failed: " + row.group + "/" + row.model + ": " + *row.error);
    if (row.embedding.size() == 0) continue;
    export_embedding({row.embedding, ids, EmbeddingKind::gnn},
                     dir / "embeddings" / (row.group + "-" + lower(row.model) + embedding_extension(format)), format);
  }
  write_report_files(report, dir);
  eval::render_report(report, ctx.out);
  write_config_echo(cfg, "train", dir / "config.json");
}

void cmd_ablate(const json& cfg, const Context& ctx) {
  const FeatureConfig fc = feature_config(cfg);
  const auto encodings = expand_text(cfg);
  const auto encoders = expand_encoders(cfg);
  if (encodings.size() != 1 || encoders.size() != 1) throw ValidationError("ablate takes one --text and one --encoder");
  std::vector<std::optional<FeatureBlock>> removed;
  for (const auto& r : list(cfg, "remove")) {
    if (r == "none") {
      removed.emplace_back(std::nullopt);
    } else {
      removed.emplace_back(feature_block_from_name(r));
    }
  }
  const eval::ExperimentConfig ec = experiment_config(cfg);
  const fs::path dir = require(cfg, "out");
  const Prepared p = prepare(cfg, !fc.drop.contains(FeatureBlock::topics), ctx);
  const FeatureMatrix f = node_features(p, text_block(encodings[0], p.corpus, p.text, cfg, ctx), fc, ctx);
  std::vector<std::optional<FeatureBlock>> present;
  for (const auto& r : removed) {
    if (r && !f.has(*r)) {
      ctx.log("skipping " + to_string(*r) + ": block not in the feature matrix");
      continue;
    }
    present.push_back(r);
  }
  const eval::MetricsReport report = eval::ablation_run(p.graph, f, encodings[0], encoders[0], present, ec);
  fs::create_directories(dir);
  write_report_files(report, dir);
  eval::render_report(report, ctx.out);
  write_config_echo(cfg, "ablate", dir / "config.json");
}

void cmd_evaluate(const json& cfg, const Context& ctx) {
  CitationGraph g;
  std::vector<std::string> ids;
  if (!str(cfg, "graph").empty()) {
    auto lg = load_edge_csv(str(cfg, "graph"));
    g = std::move(lg.graph);
    ids = std::move(lg.ids);
  } else {
    const Corpus corpus = load(cfg);
    g = corpus_graph(corpus, ctx);
    ids = node_ids(g, corpus);
  }
  const EmbeddingMatrix e = align_embedding(read_embedding(require(cfg, "embedding")), ids);
  const eval::EdgeSplit split =
      eval::split_edges(g, number(cfg, "val_frac"), number(cfg, "test_frac"), eval::run_seed(seed_of(cfg), 0));
  if (split.test.empty()) throw ValidationError("the split has no test edges");
  const eval::LinkScores s = eval::score_links(e.values, split.test, split.test_negatives);
  const Eigen::VectorXd pos = gnn::inner_product_decode(e.values, split.test);
  const Eigen::VectorXd neg = gnn::inner_product_decode(e.values, split.test_negatives);
  std::vector<double> scores(pos.data(), pos.data() + pos.size());
  scores.insert(scores.end(), neg.data(), neg.data() + neg.size());
  std::vector<int> labels(static_cast<std::size_t>(pos.size()), 1);
  labels.resize(scores.size(), 0);
  const eval::Confusion c = eval::confusion_metrics(scores, labels, number(cfg, "threshold"));
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); };
  ordered_json j;
  j["test_positives"] = split.test.size();
  j["test_negatives"] = split.test_negatives.size();
  j["auc"] = s.auc;
  j["ap"] = s.ap;
  j["threshold"] = number(cfg, "threshold");
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["tn"] = c.tn;
  j["precision"] = opt(c.precision);
  j["recall"] = opt(c.recall);
  j["fpr"] = opt(c.fpr);
  std::ofstream file;
  open_output(cfg, file, ctx) << j.dump(2) << '\n';
  echo_if_file(cfg, "evaluate");
}

// Corpus labels for the rows of an embedding.
std::vector<std::string> row_labels(const Corpus& corpus, const std::vector<std::string>& ids, const std::string& by) {
  std::vector<std::string> labels;
  for (const auto& id : ids) {
    const auto idx = corpus.index_of(id);
    if (!idx) throw ValidationError("embedding id " + id + " is not in the corpus");
    const Article& a = corpus[*idx];
    std::string l;
    if (by == "journal") {
      l = a.journal;
    } else if (by == "field") {
      l = a.field;
    } else if (by == "country") {
      l = analysis::country_label(a);
    } else if (by == "collaboration") {
      l = analysis::collaboration_class(a);
    } else {
      throw ValidationError("unknown grouping " + by);
    }
    labels.push_back(l.empty() ? analysis::unknown_label : l);
  }
  return labels;
}

void cmd_similarity(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const EmbeddingMatrix e = read_embedding(require(cfg, "embedding"));
  const auto grouping = analysis::group_by(row_labels(corpus, e.ids, str(cfg, "by")));
  if (grouping.labels.empty()) throw ValidationError("no labeled rows");
  const Eigen::MatrixXd m = analysis::group_mean_cosine(e.values, grouping.members, grouping.members);
  std::ofstream file;
  std::ostream& out = open_output(cfg, file, ctx);
  out << "group,n";
  for (const auto& l : grouping.labels) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t g = 0; g < grouping.labels.size(); ++g) {
    out << csv_field(grouping.labels[g]) << ',' << grouping.members[g].size();
    for (Eigen::Index h = 0; h < m.cols(); ++h) {
      const double v = m(static_cast<Eigen::Index>(g), h);
      out << ',' << (std::isnan(v) ? "" : fmt(v));
    }
    out << '\n';
  }
  echo_if_file(cfg, "analyze similarity");
}

void cmd_frobenius(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const EmbeddingMatrix e = read_embedding(require(cfg, "embedding"));
  std::vector<std::int64_t> citations;
  for (const auto& id : e.ids) {
    const auto idx = corpus.index_of(id);
    if (!idx) throw ValidationError("embedding id " + id + " is not in the corpus");
    citations.push_back(corpus[*idx].total_citations);
  }
  std::ofstream file;
  std::ostream& out = open_output(cfg, file, ctx);
  out << "group,min_citations,max_citations,count,mean_norm\n";
  for (const auto& g : analysis::frobenius_by_citation_group(e.values, citations)) {
    out << g.name << ',' << fmt(g.low) << ',' << fmt(g.high) << ',' << g.count << ','
        << (g.mean_norm ? fmt(*g.mean_norm) : "") << '\n';
  }
  echo_if_file(cfg, "analyze frobenius");
}

void cmd_countries(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const std::string by = cfg.at("by") == "journal" ? "country" : str(cfg, "by");
  std::map<std::string, double> sims[2];
  std::map<std::string, std::int64_t> citations;
  const char* which[2] = {"semantic", "relational"};
  for (int s = 0; s < 2; ++s) {
    const EmbeddingMatrix e = read_embedding(require(cfg, which[s]));
    const auto labels = row_labels(corpus, e.ids, by);
    std::vector<std::string> warnings;
    sims[s] = analysis::mean_similarity_to_others(analysis::aggregate_embedding(e.values, labels), &warnings);
    for (const auto& w : warnings) ctx.log(std::string(which[s]) + ": " + w);
    if (s == 1) {
      for (std::size_t i = 0; i < e.ids.size(); ++i) {
        citations[labels[i]] += corpus[*corpus.index_of(e.ids[i])].total_citations;
      }
    }
  }
  std::ofstream file;
  analysis::write_similarity_scatter_csv(open_output(cfg, file, ctx), sims[0], sims[1], citations);
  echo_if_file(cfg, "analyze countries");
}

void cmd_pivot(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const EmbeddingMatrix e = read_embedding(require(cfg, "embedding"));
  const auto g = analysis::aggregate_embedding(e.values, row_labels(corpus, e.ids, str(cfg, "by")));
  auto proj = analysis::pivot_axis_projection(g, require(cfg, "a"), require(cfg, "b"));
  std::stable_sort(proj.begin(), proj.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  std::ofstream file;
  std::ostream& out = open_output(cfg, file, ctx);
  out << "label,cosine\n";
  for (const auto& [label, c] : proj) out << csv_field(label) << ',' << fmt(c) << '\n';
  echo_if_file(cfg, "analyze pivot");
}

void cmd_topics(const json& cfg, const Context& ctx) {
  const Corpus corpus = load(cfg);
  const EmbeddingMatrix theta = read_embedding(require(cfg, "embedding"));
  const std::string by = cfg.at("by") == "journal" ? "field" : str(cfg, "by");
  const auto imp = topic_relative_importance(theta.values, row_labels(corpus, theta.ids, by));
  std::ofstream file;
  std::ostream& out = open_output(cfg, file, ctx);
  out << "group";
  for (Eigen::Index k = 0; k < imp.values.cols(); ++k) out << ",topic_" << k;
  out << '\n';
  for (std::size_t g = 0; g < imp.groups.size(); ++g) {
    out << csv_field(imp.groups[g]);
    for (Eigen::Index k = 0; k < imp.values.cols(); ++k) out << ',' << fmt(imp.values(static_cast<Eigen::Index>(g), k));
    out << '\n';
  }
  echo_if_file(cfg, "analyze topics");
}

void cmd_export(const json& cfg, const Context&) {
  const EmbeddingMatrix e = read_embedding(require(cfg, "embedding"));
  const fs::path out = require(cfg, "out");
  ensure_parent(out);
  export_embedding(e, out, emb_format(cfg));
}

const std::vector<std::string> corpus_keys{"corpus", "format", "edges"};
const std::vector<std::string> text_keys{"min_df", "max_df", "remove_phrases"};
const std::vector<std::string> lda_keys{"topics", "alpha", "eta", "lda_iterations", "burn_in"};
const std::vector<std::string> pvdm_keys{"pvdm_dim", "pvdm_window", "pvdm_negatives", "pvdm_epochs"};
const std::vector<std::string> train_keys{"encoder", "encoders", "text", "external", "runs", "epochs", "lr",
                                          "val_frac", "test_frac", "jobs", "max_text_features", "top_affiliations",
                                          "top_authors", "log_citations", "horizon", "drop", "emb_format"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

struct Command {
  CLI::App* app;
  std::unique_ptr<Options> options;
  std::function<void(const json&, const Context&)> handler;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic and relational document embeddings for citation corpora", "docgraph"};
  app.require_subcommand(1);
  std::vector<Command> commands;
  auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, std::vector<std::string> names,
                 std::function<void(const json&, const Context&)> handler) {
    CLI::App* sub = parent->add_subcommand(name, help);
    commands.push_back({sub, std::make_unique<Options>(sub, std::move(names)), std::move(handler)});
  };

  add(&app, "ingest", "validate a corpus and write normalized JSONL", join({corpus_keys, {"out"}}), cmd_ingest);
  add(&app, "preprocess", "tokenize the corpus and build the vocabulary", join({corpus_keys, text_keys, {"out"}}),
      cmd_preprocess);
  add(&app, "stats", "network statistics report (JSON)",
      join({corpus_keys, {"graph", "out", "seed", "er_reps", "exact_threshold", "sampled_sources"}}), cmd_stats);
  add(&app, "lda", "fit LDA and export document-topic vectors",
      join({corpus_keys, text_keys, lda_keys, {"seed", "out", "emb_format"}}), cmd_lda);
  add(&app, "pvdm", "fit PV-DM document vectors", join({corpus_keys, text_keys, pvdm_keys, {"seed", "out", "emb_format"}}),
      cmd_pvdm);
  add(&app, "train", "train graph autoencoders over the encoding x encoder grid",
      join({corpus_keys, text_keys, lda_keys, pvdm_keys, train_keys, {"seed", "out"}}), cmd_train);
  add(&app, "ablate", "retrain with one feature group removed at a time",
      join({corpus_keys, text_keys, lda_keys, pvdm_keys, train_keys, {"remove", "seed", "out"}}), cmd_ablate);
  add(&app, "evaluate", "link-prediction metrics of an embedding on the held-out test edges",
      join({corpus_keys, {"graph", "embedding", "val_frac", "test_frac", "seed", "threshold", "out"}}), cmd_evaluate);
  CLI::App* analyze = app.add_subcommand("analyze", "embedding analyses");
  analyze->require_subcommand(1);
  add(analyze, "similarity", "mean cosine within and between groups", join({corpus_keys, {"embedding", "by", "out"}}),
      cmd_similarity);
  add(analyze, "frobenius", "mean embedding norm per citation group", join({corpus_keys, {"embedding", "out"}}),
      cmd_frobenius);
  add(analyze, "countries", "semantic vs relational mean similarity per group",
      join({corpus_keys, {"semantic", "relational", "by", "out"}}), cmd_countries);
  add(analyze, "pivot", "project groups onto the axis between two pivots",
      join({corpus_keys, {"embedding", "by", "a", "b", "out"}}), cmd_pivot);
  add(analyze, "topics", "topic relative importance per group", join({corpus_keys, {"embedding", "by", "out"}}),
      cmd_topics);
  add(&app, "export", "convert an embedding file", {"embedding", "out", "emb_format"}, cmd_export);

  std::vector<std::string> argv_store{"docgraph"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  }

  const Context ctx{out, err};
  try {
    for (auto& c : commands) {
      if (c.app->parsed()) {
        c.handler(c.options->resolve(), ctx);
        return 0;
      }
    }
    err << app.help();
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace docgraph::cli
