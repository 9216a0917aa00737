#include "hinclus/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>

#include "hinclus/errors.hpp"
#include "hinclus/pipeline.hpp"
#include <CLI11.hpp>

namespace hinclus {

namespace {

struct Flags {
  std::string config;
  std::string workdir, corpus, kb;
  std::string filter;
  std::int64_t seed = -1;
  int kd = -1, kw = -1, max_iter = -1;
  std::int64_t constraints = std::numeric_limits<std::int64_t>::min();
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--workdir", f.workdir, "working directory for artifacts");
  cmd->add_option("--corpus", f.corpus, "corpus JSONL path");
  cmd->add_option("--kb", f.kb, "knowledge base JSON path");
  cmd->add_option("--filter", f.filter, "semantic filter: fbsf|dfbsf|cbsf")
      ->check(CLI::IsMember({"fbsf", "dfbsf", "cbsf"}));
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--kd", f.kd, "number of document clusters");
  cmd->add_option("--kw", f.kw, "number of word clusters (default 2*kd)");
  cmd->add_option("--max-iter", f.max_iter, "alternating optimization iterations");
  cmd->add_option("--constraints", f.constraints,
                  "number of sampled constraints (-1 keeps all)");
}

PipelineConfig resolve(const Flags& f) {
  PipelineConfig c;
  if (!f.config.empty()) c = load_pipeline_config(f.config);
  // Flags override the config file.
  if (!f.workdir.empty()) c.workdir = f.workdir;
  if (!f.corpus.empty()) c.corpus = f.corpus;
  if (!f.kb.empty()) c.kb = f.kb;
  if (!f.filter.empty()) c.filter = f.filter;
  if (f.seed >= 0) {
    c.seed = static_cast<std::uint64_t>(f.seed);
    c.synth.seed = static_cast<std::uint64_t>(f.seed);
  }
  if (f.kd >= 0) c.k_docs = f.kd;
  if (f.kw >= 0) c.k_words = f.kw;
  if (f.max_iter >= 0) c.max_iter = f.max_iter;
  if (f.constraints != std::numeric_limits<std::int64_t>::min())
    c.constraints = f.constraints;
  return c;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"hinclus: knowledge-grounded document clustering over "
               "heterogeneous information networks"};
  app.require_subcommand(1);

  Flags f;
  struct Sub {
    const char* name;
    const char* help;
    std::function<void(const PipelineConfig&)> run;
  };
  const std::vector<Sub> subs = {
      {"synth", "generate a planted block-structured corpus and KB",
       [](const PipelineConfig& c) { stages::synth(c); }},
      {"ground", "ground corpus text to KB entities and relations",
       [](const PipelineConfig& c) { stages::ground(c); }},
      {"filter", "select one type per grounded entity",
       [](const PipelineConfig& c) { stages::filter(c); }},
      {"build", "build the heterogeneous information network",
       [](const PipelineConfig& c) { stages::build(c); }},
      {"constrain", "derive must/cannot links from entity sub-types",
       [](const PipelineConfig& c) { stages::constrain(c); }},
      {"cluster", "run the constrained co-clustering optimizer",
       [](const PipelineConfig& c) { stages::cluster(c); }},
      {"eval", "score document assignments against ground truth",
       [](const PipelineConfig& c) { stages::evaluate(c); }},
      {"pipeline", "run every stage end to end",
       [](const PipelineConfig& c) { run_pipeline(c); }},
  };
  for (const Sub& sub : subs) add_common(app.add_subcommand(sub.name, sub.help), f);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (const Sub& sub : subs) {
    if (!app.get_subcommand(sub.name)->parsed()) continue;
    try {
      sub.run(resolve(f));
      return 0;
    } catch (const ParseError& e) {
      std::cerr << "hinclus " << sub.name << ": " << e.what() << "\n";
      return 2;
    } catch (const IntegrityError& e) {
      std::cerr << "hinclus " << sub.name << ": " << e.what() << "\n";
      return 2;
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "hinclus " << sub.name << ": " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "hinclus " << sub.name << ": " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}

}  // namespace hinclus
