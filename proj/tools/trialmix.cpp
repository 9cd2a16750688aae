// Command-line front end: one subcommand per pipeline stage plus `pipeline`
// for the whole chain.

#include "trialmix/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "pipeline config JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory")->required();
  cmd->add_option("--seed", o.seed, "root seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trialmix: MEMD-based EEG trial recombination and evaluation"};
  app.require_subcommand(1);
  Options opts;
  std::optional<trialmix::Stage> stage;

  for (trialmix::Stage s : trialmix::all_stages()) {
    auto* cmd = app.add_subcommand(std::string(trialmix::stage_name(s)), "run the " +
                                                                             std::string(trialmix::stage_name(s)) +
                                                                             " stage");
    add_common(cmd, opts);
    cmd->callback([&stage, s] { stage = s; });
  }
  auto* full = app.add_subcommand("pipeline", "run every configured stage in order");
  add_common(full, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = trialmix::load_pipeline_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    std::filesystem::create_directories(opts.out);
    trialmix::Pipeline pipeline(std::move(cfg), opts.out);
    if (stage) {
      pipeline.run(*stage);
    } else {
      pipeline.run_all();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "trialmix: %s\n", e.what());
    return 1;
  }
  return 0;
}
