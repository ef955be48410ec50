#ifndef ENTYPER_CLI_HPP_
#define ENTYPER_CLI_HPP_

// Command-line driver. Exit codes: 0 success, 1 usage error, 2 input
// validation error, 3 runtime failure.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "entyper/config.hpp"
#include "entyper/context_encoder.hpp"
#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/esa_index.hpp"
#include "entyper/evaluation.hpp"
#include "entyper/surface_prior.hpp"
#include "entyper/type_inference.hpp"
#include "entyper/typedef_dsl.hpp"

namespace entyper::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInvalidInput = 2, kFailure = 3 };

namespace detail {

struct Overrides {
  std::string config;
  std::optional<std::string> corpus, concept_types, typedefs, vectors, query_vectors, index,
      priors, reps, encoder, fallback;
  std::optional<double> lambda, eta_s, eta_c;
  std::optional<std::size_t> ell_esa, ell_elmo, dim;

  RunConfig resolve() const {
    RunConfig cfg;
    std::string path = config;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
    }
    if (!path.empty()) cfg = load_config(path);
    auto set_path = [](std::filesystem::path& dst, const std::optional<std::string>& v) {
      if (v) dst = *v;
    };
    set_path(cfg.corpus, corpus);
    set_path(cfg.concept_types, concept_types);
    set_path(cfg.typedefs, typedefs);
    set_path(cfg.vectors, vectors);
    set_path(cfg.query_vectors, query_vectors);
    set_path(cfg.index, index);
    set_path(cfg.priors, priors);
    set_path(cfg.reps, reps);
    if (encoder) cfg.encoder = *encoder;
    if (fallback) cfg.fallback = *fallback;
    if (lambda) cfg.params.lambda = *lambda;
    if (eta_s) cfg.params.eta_s = *eta_s;
    if (eta_c) cfg.params.eta_c = *eta_c;
    if (ell_esa) cfg.params.ell_esa = *ell_esa;
    if (ell_elmo) cfg.params.ell_elmo = *ell_elmo;
    if (dim) cfg.dim = *dim;
    if (cfg.encoder != "fallback" && cfg.encoder != "vectors") {
      throw ValidationError("encoder must be 'fallback' or 'vectors', got '" + cfg.encoder + "'");
    }
    cfg.params.validate();
    return cfg;
  }
};

inline void add_config_option(CLI::App* app, Overrides& ov) {
  app->add_option("--config", ov.config,
                  std::string("Key/value config file (default: $") + kConfigEnvVar + ")");
}

inline void add_path_option(CLI::App* app, const std::string& flag, std::optional<std::string>& dst,
                            const std::string& help) {
  app->add_option(flag, dst, help);
}

inline void add_encoder_options(CLI::App* app, Overrides& ov) {
  app->add_option("--encoder", ov.encoder, "Sentence encoder: fallback | vectors")
      ->check(CLI::IsMember({"fallback", "vectors"}));
  app->add_option("--vectors", ov.vectors, "Corpus sentence vectors (encoder=vectors)");
  app->add_option("--dim", ov.dim, "Fallback encoder dimension");
}

inline void add_param_options(CLI::App* app, Overrides& ov) {
  app->add_option("--lambda", ov.lambda, "Surface prior threshold (default 0.5)");
  app->add_option("--eta-s", ov.eta_s, "Fine-type ratio, surface branch (default 0.8)");
  app->add_option("--eta-c", ov.eta_c, "Fine-type ratio, context branch (default 0.3)");
  app->add_option("--ell-esa", ov.ell_esa, "Index candidates kept (default 300)");
  app->add_option("--ell-elmo", ov.ell_elmo, "Re-ranked candidates kept (default 20)");
  app->add_option("--fallback", ov.fallback,
                  "Type emitted on empty retrieval; empty string abstains (default: /other if "
                  "defined)");
}

/// Output stream that is either a file or the provided default.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw InputError("cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

inline std::vector<QueryMention> read_query_input(const std::string& path, std::istream& in) {
  if (path.empty() || path == "-") return read_queries(in);
  require_path(path, "query");
  return load_queries(path);
}

inline std::unique_ptr<EncoderBackend> make_encoder(const RunConfig& cfg, bool for_queries) {
  if (cfg.encoder == "fallback") return std::make_unique<FallbackEncoder>(cfg.dim);
  const auto& path = for_queries ? cfg.query_vectors : cfg.vectors;
  require_path(path, for_queries ? "query vectors" : "vectors");
  return std::make_unique<PrecomputedEncoder>(load_vectors(path));
}

inline ConceptTyper load_typer(const RunConfig& cfg, TypeDefinition& defs) {
  require_path(cfg.typedefs, "typedefs");
  require_path(cfg.concept_types, "concept types");
  defs = load_typedefs(cfg.typedefs);
  return ConceptTyper(defs, load_concept_types(cfg.concept_types));
}

/// Maps fn over [0, n) on up to `jobs` threads; results keep input order.
template <typename T, typename F>
std::vector<T> ordered_map(std::size_t n, std::size_t jobs, F&& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(std::max<std::size_t>(jobs, 1));
  auto worker = [&](std::size_t w, std::size_t stride) {
    try {
      for (std::size_t i = w; i < n; i += stride) slots[i] = fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs <= 1 || n < 2) {
    worker(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(worker, w, jobs);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<TypeSet> read_prediction_sets(const std::string& path) {
  require_path(path, "prediction");
  std::vector<TypeSet> out;
  entyper::detail::for_each_line(path, [&](const std::string& line, std::size_t line_no) {
    if (trim_view(line).empty()) return;
    out.push_back(parse_prediction_types(line, line_no));
  });
  return out;
}

inline std::vector<TypeSet> read_gold_sets(const std::string& path) {
  require_path(path, "gold");
  std::vector<TypeSet> out;
  std::size_t i = 0;
  for (auto& q : load_queries(path)) {
    ++i;
    if (q.gold_types.empty()) {
      throw ValidationError("gold record " + std::to_string(i) + " ('" + q.sentence.sentence_id +
                            "') has no gold_types");
    }
    out.push_back(std::move(q.gold_types));
  }
  return out;
}

}  // namespace detail

/// Runs one subcommand. Streams are injectable for tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr, std::istream& in = std::cin) {
  CLI::App app{"Zero-shot entity typing over mention-linked concepts"};
  app.require_subcommand(1);
  detail::Overrides ov;

  std::string out_path, in_path, gold_path, pred_path, per_type_path, stage = "esa";
  std::size_t jobs = 1, max_ell = 300, k = 1;
  bool text = false;

  auto* build_index = app.add_subcommand("build-index", "Build the word->concept index");
  detail::add_config_option(build_index, ov);
  detail::add_path_option(build_index, "--corpus", ov.corpus, "Linked corpus (JSON lines)");
  build_index->add_option("--out", out_path, "Index path (default: config 'index')");

  auto* build_priors_cmd = app.add_subcommand("build-priors", "Build the surface->concept prior table");
  detail::add_config_option(build_priors_cmd, ov);
  detail::add_path_option(build_priors_cmd, "--corpus", ov.corpus, "Linked corpus (JSON lines)");
  build_priors_cmd->add_option("--out", out_path, "Priors TSV (default: config 'priors')");

  auto* build_reps = app.add_subcommand("build-reps", "Build per-concept context centroids");
  detail::add_config_option(build_reps, ov);
  detail::add_path_option(build_reps, "--corpus", ov.corpus, "Linked corpus (JSON lines)");
  detail::add_encoder_options(build_reps, ov);
  build_reps->add_option("--out", out_path, "Representation file (default: config 'reps')");

  auto* type = app.add_subcommand("type", "Type query mentions");
  detail::add_config_option(type, ov);
  detail::add_path_option(type, "--index", ov.index, "Index file");
  detail::add_path_option(type, "--priors", ov.priors, "Priors TSV");
  detail::add_path_option(type, "--reps", ov.reps, "Concept representation file");
  detail::add_path_option(type, "--typedefs", ov.typedefs, "Type definition file");
  detail::add_path_option(type, "--concept-types", ov.concept_types, "Concept type table (TSV)");
  detail::add_path_option(type, "--query-vectors", ov.query_vectors, "Query vectors (encoder=vectors)");
  detail::add_encoder_options(type, ov);
  detail::add_param_options(type, ov);
  type->add_option("--in", in_path, "Query file (JSON lines; default stdin)");
  type->add_option("--out", out_path, "Prediction file (default stdout)");
  type->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 256));

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold types");
  evaluate_cmd->add_option("--gold", gold_path, "Gold file (query format with gold_types)")
      ->required();
  evaluate_cmd->add_option("--pred", pred_path, "Prediction file")->required();
  evaluate_cmd->add_option("--out", out_path, "Report JSON (default stdout)");
  evaluate_cmd->add_flag("--text", text, "Also print an aligned table to stderr");
  evaluate_cmd->add_option("--per-type", per_type_path, "Write a per-type breakdown TSV");

  auto* coverage_cmd = app.add_subcommand("coverage", "Gold-type coverage of top-ell candidates");
  detail::add_config_option(coverage_cmd, ov);
  detail::add_path_option(coverage_cmd, "--index", ov.index, "Index file");
  detail::add_path_option(coverage_cmd, "--reps", ov.reps, "Concept representation file");
  detail::add_path_option(coverage_cmd, "--typedefs", ov.typedefs, "Type definition file");
  detail::add_path_option(coverage_cmd, "--concept-types", ov.concept_types, "Concept type table");
  detail::add_path_option(coverage_cmd, "--query-vectors", ov.query_vectors, "Query vectors");
  detail::add_encoder_options(coverage_cmd, ov);
  detail::add_param_options(coverage_cmd, ov);
  coverage_cmd->add_option("--in", in_path, "Gold file")->required();
  coverage_cmd->add_option("--stage", stage, "esa (retrieval order) | elmo (consistency order)")
      ->check(CLI::IsMember({"esa", "elmo"}));
  coverage_cmd->add_option("--max-ell", max_ell, "Largest ell")->check(CLI::Range(1, 1000000));
  coverage_cmd->add_option("--out", out_path, "Curve TSV (default stdout)");

  auto* baseline = app.add_subcommand("baseline-elmonn", "Nearest-neighbor type baseline");
  detail::add_config_option(baseline, ov);
  detail::add_path_option(baseline, "--corpus", ov.corpus, "Linked corpus (JSON lines)");
  detail::add_path_option(baseline, "--typedefs", ov.typedefs, "Type definition file");
  detail::add_path_option(baseline, "--concept-types", ov.concept_types, "Concept type table");
  detail::add_path_option(baseline, "--query-vectors", ov.query_vectors, "Query vectors");
  detail::add_encoder_options(baseline, ov);
  baseline->add_option("--in", in_path, "Query file (default stdin)");
  baseline->add_option("--out", out_path, "Prediction file (default stdout)");
  baseline->add_option("--k", k, "Types kept from the ranking")->check(CLI::Range(1, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*build_index) {
      auto cfg = ov.resolve();
      require_path(cfg.corpus, "corpus");
      if (out_path.empty()) out_path = cfg.index.string();
      if (out_path.empty()) throw ValidationError("missing index output path (--out)");
      save_esa_index(build_esa_index(load_corpus(cfg.corpus)), out_path);
    } else if (*build_priors_cmd) {
      auto cfg = ov.resolve();
      require_path(cfg.corpus, "corpus");
      if (out_path.empty()) out_path = cfg.priors.string();
      if (out_path.empty()) throw ValidationError("missing priors output path (--out)");
      save_priors(build_priors(load_corpus(cfg.corpus)), out_path);
    } else if (*build_reps) {
      auto cfg = ov.resolve();
      require_path(cfg.corpus, "corpus");
      if (out_path.empty()) out_path = cfg.reps.string();
      if (out_path.empty()) throw ValidationError("missing reps output path (--out)");
      auto encoder = detail::make_encoder(cfg, false);
      save_concept_reps(build_concept_reps(*encoder, load_corpus(cfg.corpus)), out_path);
    } else if (*type) {
      auto cfg = ov.resolve();
      TypeDefinition defs;
      auto typer = detail::load_typer(cfg, defs);
      require_path(cfg.index, "index");
      require_path(cfg.priors, "priors");
      require_path(cfg.reps, "reps");
      auto index = load_esa_index(cfg.index);
      auto priors = load_priors(cfg.priors);
      auto store = load_concept_reps(cfg.reps);
      auto encoder = detail::make_encoder(cfg, true);
      if (store.size() > 0 && store.dim() != encoder->dim()) {
        throw ValidationError("encoder dimension " + std::to_string(encoder->dim()) +
                              " does not match representations (" + std::to_string(store.dim()) +
                              ")");
      }
      auto params = cfg.params;
      params.fallback_target = cfg.fallback ? ascii_lower(*cfg.fallback) : default_fallback_target(defs);
      auto queries = detail::read_query_input(in_path, in);
      TypingResources res{index, *encoder, store, priors, typer};
      const std::size_t workers = encoder->thread_safe() ? jobs : 1;
      auto preds = detail::ordered_map<std::string>(queries.size(), workers, [&](std::size_t i) {
        return to_prediction_line(infer_types(queries[i].sentence, params, res, i));
      });
      detail::Sink sink(out_path, out);
      for (const auto& line : preds) *sink << line << '\n';
    } else if (*evaluate_cmd) {
      auto golds = detail::read_gold_sets(gold_path);
      auto preds = detail::read_prediction_sets(pred_path);
      auto report = evaluate(golds, preds);
      detail::Sink sink(out_path, out);
      *sink << to_json(report).dump(2) << '\n';
      if (text) err << to_text(report);
      if (!per_type_path.empty()) {
        detail::Sink tsv(per_type_path, out);
        *tsv << per_type_tsv(report);
      }
    } else if (*coverage_cmd) {
      auto cfg = ov.resolve();
      TypeDefinition defs;
      auto typer = detail::load_typer(cfg, defs);
      require_path(cfg.index, "index");
      auto index = load_esa_index(cfg.index);
      auto queries = detail::read_query_input(in_path, in);
      std::vector<TypeSet> golds;
      std::vector<std::vector<std::string>> lists;
      std::unique_ptr<EncoderBackend> encoder;
      std::optional<ConceptRepStore> store;
      if (stage == "elmo") {
        require_path(cfg.reps, "reps");
        store = load_concept_reps(cfg.reps);
        encoder = detail::make_encoder(cfg, true);
      }
      for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& q = queries[i];
        if (q.gold_types.empty()) {
          throw ValidationError("query '" + q.sentence.sentence_id + "' has no gold_types");
        }
        golds.push_back(q.gold_types);
        auto esa = esa_candidates(index, q.sentence.tokens,
                                  stage == "esa" ? std::max(max_ell, cfg.params.ell_esa)
                                                 : cfg.params.ell_esa);
        std::vector<std::string> ids;
        if (stage == "esa") {
          for (const auto& sc : esa) ids.push_back(sc.concept_id);
        } else if (!esa.empty()) {
          auto rep = sent_rep(*encoder, q.sentence, i);
          for (const auto& cc : rerank(esa, rep, *store, esa.size()).concepts) {
            ids.push_back(cc.concept_id);
          }
        }
        lists.push_back(std::move(ids));
      }
      detail::Sink sink(out_path, out);
      *sink << "ell\tcoverage\n";
      for (const auto& [ell, cov] : coverage_curve(golds, lists, typer, max_ell)) {
        *sink << ell << '\t' << cov << '\n';
      }
    } else if (*baseline) {
      auto cfg = ov.resolve();
      TypeDefinition defs;
      auto typer = detail::load_typer(cfg, defs);
      require_path(cfg.corpus, "corpus");
      auto corpus = load_corpus(cfg.corpus);
      auto corpus_encoder = detail::make_encoder(cfg, false);
      auto type_reps = build_type_reps(*corpus_encoder, corpus, typer);
      auto query_encoder = detail::make_encoder(cfg, true);
      auto queries = detail::read_query_input(in_path, in);
      detail::Sink sink(out_path, out);
      for (std::size_t i = 0; i < queries.size(); ++i) {
        auto rep = sent_rep(*query_encoder, queries[i].sentence, i);
        *sink << to_prediction_line(elmonn_prediction(rep, type_reps, k)) << '\n';
      }
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace entyper::cli

#endif  // ENTYPER_CLI_HPP_
