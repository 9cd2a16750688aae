#pragma once

#include "trialmix/eval.hpp"
#include "trialmix/memd.hpp"
#include "trialmix/simulate.hpp"
#include "trialmix/tfr.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trialmix {

enum class Stage { Simulate, Decompose, Tfr, Select, Augment, Features, Classify, Audit };

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);
// Every stage in execution order.
std::vector<Stage> all_stages();

/// Failure inside a stage. what() starts with "stage '<name>': ".
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& message);
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

enum class SimulationKind { MotorImagery, Rhythms };

struct PipelineConfig {
  // Existing dataset directory. Without one, the simulate stage writes
  // <out>/dataset and later stages read it.
  std::optional<std::filesystem::path> dataset;
  SimulationKind simulation = SimulationKind::MotorImagery;
  MiProfile profile;
  SimConfig rhythms;
  std::size_t rhythm_trials = 10;

  std::uint64_t seed = 1;
  SiftConfig sift;
  WaveletConfig wavelet;
  std::vector<Band> bands = default_bands();
  std::string segment = "mi";
  int train_run = 1;
  int test_run = 2;
  std::vector<double> pcts{0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 25.0, 37.5, 50.0};
  int reps = 100;
  double mad_threshold = kMadThreshold;
  std::vector<int> tfr_trials;            // empty: the first training trial
  std::vector<std::string> tfr_channels;  // empty: the first channel
  std::vector<Stage> stages = all_stages();

  void validate() const;
};

/// Missing keys keep their defaults. Relative dataset paths resolve against
/// base_dir.
PipelineConfig pipeline_config_from_json(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& file);
/// Canonical form; its FNV-1a hash identifies the run.
std::string to_json(const PipelineConfig& cfg);
std::uint64_t config_hash(const PipelineConfig& cfg);

/// Seed of a named stage derived from the root seed.
std::uint64_t stage_seed(const PipelineConfig& cfg, Stage s);

/// Runs stages against one output directory. Each stage reads its inputs
/// from the artifacts earlier stages left there, so a stage rerun from
/// cached upstream outputs matches a full run. A stage's directory carries
/// a `.partial` marker until the stage finishes; `summary.json` records the
/// config hash, finished stages and timings.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::filesystem::path out);

  const PipelineConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }
  std::filesystem::path stage_dir(Stage s) const;
  std::filesystem::path dataset_dir() const;

  void run(Stage s);
  // The configured stages in order. Simulate is skipped when an input
  // dataset is configured.
  void run_all();

 private:
  void simulate();
  void decompose();
  void tfr();
  void select();
  void augment();
  void features();
  void classify();
  void audit();
  void record(Stage s, double seconds);

  PipelineConfig cfg_;
  std::filesystem::path out_;
};

/// Feature table CSV: optional rep column, trial_id, label, then one column
/// per (channel, band) feature. Values carry 17 significant digits.
std::string features_csv(const FeatureSet& f, std::span<const std::string> names,
                         std::span<const int> reps = {});
struct FeatureTable {
  FeatureSet set;
  std::vector<int> reps;  // empty without a rep column
  std::vector<std::string> names;
};
FeatureTable read_features_csv(const std::filesystem::path& path);

/// Column names "<channel>_<band>" in psd_features order.
std::vector<std::string> feature_names(std::span<const std::string> channels, std::span<const Band> bands);

/// Parses results.csv back into per-rep reports.
ExperimentResult read_results_csv(const std::filesystem::path& path);

}  // namespace trialmix
