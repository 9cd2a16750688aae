#include "helpers.hpp"
#include "trialmix/augment.hpp"
#include "trialmix/dataset_io.hpp"
#include "trialmix/errors.hpp"
#include "trialmix/pipeline.hpp"
#include "trialmix/rng.hpp"
#include "trialmix/selection.hpp"

#include <doctest.h>

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

using namespace trialmix;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.seed = 77;
  cfg.profile.rest = 0.5;
  cfg.profile.cue = 0.5;
  cfg.profile.mi = 1.0;
  cfg.profile.trials_per_class = 6;
  cfg.sift.num_directions = 32;
  cfg.pcts = {0.0, 25.0, 50.0};
  cfg.reps = 3;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every regular file under root, except the
// run summary whose timings vary.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel != "summary.json") files[rel] = slurp(e.path());
  }
  return files;
}

}  // namespace

TEST_CASE("stage names round-trip") {
  for (Stage s : all_stages()) CHECK(parse_stage(stage_name(s)) == s);
  CHECK(all_stages().size() == 8);
  CHECK_THROWS_AS(parse_stage("train"), DomainError);
}

TEST_CASE("config JSON round-trip and hash") {
  const auto cfg = small_config();
  const auto back = pipeline_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
  auto other = cfg;
  other.reps = 4;
  CHECK(config_hash(other) != config_hash(cfg));
  CHECK(stage_seed(cfg, Stage::Augment) == derive_seed(77, "augment"));

  const auto partial = pipeline_config_from_json(R"({"seed": 5, "dataset": "data"})", "/srv");
  CHECK(partial.seed == 5);
  CHECK(partial.reps == 100);
  CHECK(*partial.dataset == fs::path("/srv/data"));
  CHECK_THROWS_AS(pipeline_config_from_json(R"({"reps": 0})"), DomainError);
  CHECK_THROWS_AS(pipeline_config_from_json(R"({"stages": ["simulate", "nope"]})"), DomainError);
  CHECK_THROWS(pipeline_config_from_json("{"));
}

TEST_CASE("full run writes every artifact and is reproducible") {
  const testing::TempDir a("pipe_a"), b("pipe_b");
  const auto cfg = small_config();
  Pipeline(cfg, a.path()).run_all();
  Pipeline(cfg, b.path()).run_all();

  for (const char* f : {"dataset/manifest.json", "decompose/manifest.json", "decompose/trial_1.imf.f64",
                        "tfr/trial_1_C1.pgm", "tfr/trial_1_C1_imf1.pgm", "select/trial_1.json",
                        "augment/pool.json", "augment/plans_pct25.json", "features/test.csv",
                        "features/artificial_pct50.csv", "classify/baseline.csv", "classify/results.csv",
                        "classify/medians.csv", "audit/mad.csv", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(a.path() / f), f);
  }
  for (Stage s : all_stages()) CHECK_FALSE(fs::exists(Pipeline(cfg, a.path()).stage_dir(s) / ".partial"));

  const auto sa = snapshot(a.path());
  const auto sb = snapshot(b.path());
  REQUIRE(sa.size() == sb.size());
  for (const auto& [name, bytes] : sa) CHECK_MESSAGE(sb.at(name) == bytes, name);

  const auto results = read_results_csv(a.path() / "classify" / "results.csv");
  CHECK(results.reports.size() == 3 * 3);
  CHECK(slurp(a.path() / "classify" / "results.csv").rfind("subject,pct,rep,class,error_rate\n", 0) == 0);
}

TEST_CASE("pipeline results match the in-memory experiment") {
  const testing::TempDir dir("pipe_mem");
  const auto cfg = small_config();
  Pipeline(cfg, dir.path()).run_all();

  const TrialDataset data = load_dataset(dir.path() / "dataset");
  const TrialDataset train = data.filter_run(cfg.train_run);
  std::vector<ImfDecomposition> decs;
  std::vector<SelectionReport> reports;
  MorletFilterBank bank(data.fs(), cfg.wavelet);
  for (const auto& t : train.trials()) {
    decs.push_back(memd(t.signal, cfg.sift, t.trial_id));
    reports.push_back(select_relevant_imfs(decs.back(), bank));
  }
  const AugmentationPool pool(train, decs, reports);
  ExperimentConfig ec;
  ec.pcts = cfg.pcts;
  ec.reps = cfg.reps;
  ec.base_seed = stage_seed(cfg, Stage::Augment);
  const auto result = substitution_experiment(pool, data.filter_run(cfg.test_run), ec, bank);
  CHECK(results_csv(result) == slurp(dir.path() / "classify" / "results.csv"));
  CHECK(medians_csv(result) == slurp(dir.path() / "classify" / "medians.csv"));
}

TEST_CASE("a single stage rerun from cached inputs reproduces its outputs") {
  const testing::TempDir dir("pipe_rerun");
  const auto cfg = small_config();
  Pipeline p(cfg, dir.path());
  p.run_all();
  const auto before = snapshot(dir.path());
  for (Stage s : {Stage::Select, Stage::Augment, Stage::Classify}) p.run(s);
  const auto after = snapshot(dir.path());
  REQUIRE(before.size() == after.size());
  for (const auto& [name, bytes] : before) CHECK_MESSAGE(after.at(name) == bytes, name);
}

TEST_CASE("a stage without its dataset names the missing path") {
  const testing::TempDir dir("pipe_missing");
  auto cfg = small_config();
  cfg.dataset = dir.path() / "nowhere";
  Pipeline p(cfg, dir.path() / "out");
  try {
    p.run(Stage::Decompose);
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == Stage::Decompose);
    CHECK(std::string(e.what()).find("stage 'decompose'") == 0);
    CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
  }
}

TEST_CASE("a failing stage leaves its partial marker") {
  const testing::TempDir dir("pipe_partial");
  auto cfg = small_config();
  cfg.test_run = 9;
  Pipeline p(cfg, dir.path());
  p.run(Stage::Simulate);
  p.run(Stage::Decompose);
  p.run(Stage::Select);
  CHECK_THROWS_AS(p.run(Stage::Features), StageError);
  CHECK(fs::exists(p.stage_dir(Stage::Features) / ".partial"));
  CHECK_FALSE(fs::exists(p.stage_dir(Stage::Select) / ".partial"));
}

TEST_CASE("the rhythm corpus runs through decomposition and selection") {
  const testing::TempDir dir("pipe_es");
  PipelineConfig cfg;
  cfg.simulation = SimulationKind::Rhythms;
  cfg.rhythms.duration = 2.0;
  cfg.rhythms.snr_db = 0.0;
  cfg.rhythm_trials = 2;
  cfg.segment = "all";
  cfg.sift.num_directions = 38;
  cfg.stages = {Stage::Simulate, Stage::Decompose, Stage::Select};
  Pipeline(cfg, dir.path()).run_all();
  const auto d = load_dataset(dir.path() / "dataset");
  CHECK(d.size() == 2);
  CHECK(d.channel_labels().size() == 19);
  CHECK(fs::exists(dir.path() / "select" / "trial_2.json"));
}
