#include "trialmix/pipeline.hpp"

#include "trialmix/augment.hpp"
#include "trialmix/dataset_io.hpp"
#include "trialmix/errors.hpp"
#include "trialmix/rng.hpp"
#include "trialmix/selection.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace trialmix {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 8> kStageNames{{{Stage::Simulate, "simulate"},
                                                                          {Stage::Decompose, "decompose"},
                                                                          {Stage::Tfr, "tfr"},
                                                                          {Stage::Select, "select"},
                                                                          {Stage::Augment, "augment"},
                                                                          {Stage::Features, "features"},
                                                                          {Stage::Classify, "classify"},
                                                                          {Stage::Audit, "audit"}}};

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::string pct_label(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", pct);
  return buf;
}

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view s, const fs::path& where) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw LoadError("bad number '" + std::string(s) + "' in " + where.string());
  }
  return v;
}

int parse_int(std::string_view s, const fs::path& where) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw LoadError("bad integer '" + std::string(s) + "' in " + where.string());
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> csv_lines(const fs::path& path) {
  std::istringstream is(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw LoadError("empty table " + path.string());
  return lines;
}

json sift_json(const SiftConfig& s) {
  return {{"max_sift_iterations", s.max_sift_iterations},
          {"envelope_mean_tolerance", s.envelope_mean_tolerance},
          {"num_directions", s.num_directions},
          {"max_imfs", s.max_imfs},
          {"boundary_extension", s.boundary_extension}};
}

SiftConfig sift_from_json(const json& j) {
  SiftConfig s;
  s.max_sift_iterations = j.value("max_sift_iterations", s.max_sift_iterations);
  s.envelope_mean_tolerance = j.value("envelope_mean_tolerance", s.envelope_mean_tolerance);
  s.num_directions = j.value("num_directions", s.num_directions);
  s.max_imfs = j.value("max_imfs", s.max_imfs);
  s.boundary_extension = j.value("boundary_extension", s.boundary_extension);
  return s;
}

struct Decompositions {
  std::vector<ImfDecomposition> items;
  SiftConfig sift;
};

Decompositions load_decompositions(const fs::path& dir) {
  const auto manifest = json::parse(read_text(dir / "manifest.json"));
  Decompositions out;
  out.sift = sift_from_json(manifest.at("sift"));
  const double fs = manifest.at("fs").get<double>();
  const auto labels = manifest.at("channel_labels").get<std::vector<std::string>>();
  for (const auto& t : manifest.at("trials")) {
    out.items.push_back(read_decomposition(dir / t.at("file").get<std::string>(), fs, labels,
                                           t.at("trial_id").get<int>()));
  }
  return out;
}

std::vector<SelectionReport> load_reports(const fs::path& dir, const std::vector<ImfDecomposition>& decs) {
  std::vector<SelectionReport> out;
  for (const auto& d : decs) {
    out.push_back(selection_report_from_json(read_text(dir / ("trial_" + std::to_string(d.source_trial_id) + ".json"))));
  }
  return out;
}

struct PlanFile {
  double pct = 0.0;
  std::vector<RecombinationPlan> plans;  // one per rep
};

PlanFile load_plans(const fs::path& path) {
  const auto j = json::parse(read_text(path));
  PlanFile f;
  f.pct = j.at("pct").get<double>();
  for (const auto& p : j.at("plans")) f.plans.push_back(recombination_plan_from_json(p.dump()));
  return f;
}

FeatureSet rows_of_rep(const FeatureTable& t, int rep) {
  FeatureSet out;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < t.reps.size(); ++i) {
    if (t.reps[i] == rep) {
      rows.push_back(static_cast<Eigen::Index>(i));
      out.labels.push_back(t.set.labels[i]);
      out.trial_ids.push_back(t.set.trial_ids[i]);
    }
  }
  out.features = t.set.features(rows, Eigen::all);
  return out;
}

}  // namespace

std::string_view stage_name(Stage s) {
  for (const auto& [stage, name] : kStageNames) {
    if (stage == s) return name;
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (const auto& [stage, n] : kStageNames) {
    if (n == name) return stage;
  }
  throw DomainError("unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> all_stages() {
  std::vector<Stage> out;
  for (const auto& [stage, name] : kStageNames) out.push_back(stage);
  return out;
}

StageError::StageError(Stage stage, const std::string& message)
    : std::runtime_error("stage '" + std::string(stage_name(stage)) + "': " + message), stage_(stage) {}

void PipelineConfig::validate() const {
  if (reps < 1) throw DomainError("reps must be at least 1");
  for (double p : pcts) {
    if (!(p >= 0.0 && p <= 100.0)) throw DomainError("substitution percentages must lie in [0, 100]");
  }
  if (bands.empty()) throw DomainError("at least one band is required");
  for (const auto& b : bands) {
    if (!(b.lo < b.hi)) throw DomainError("band '" + b.name + "' has lo >= hi");
  }
  if (!(mad_threshold > 0.0)) throw DomainError("mad_threshold must be positive");
  if (simulation == SimulationKind::MotorImagery) profile.validate();
  else rhythms.validate();
}

PipelineConfig pipeline_config_from_json(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    const auto j = json::parse(text);
    if (j.contains("dataset") && !j.at("dataset").is_null()) {
      fs::path p = j.at("dataset").get<std::string>();
      c.dataset = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      const auto kind = s.value("kind", std::string("motor_imagery"));
      if (kind == "motor_imagery") {
        c.simulation = SimulationKind::MotorImagery;
      } else if (kind == "rhythms") {
        c.simulation = SimulationKind::Rhythms;
      } else {
        throw DomainError("unknown simulation kind '" + kind + "'");
      }
      if (s.contains("profile")) c.profile = mi_profile_from_json(s.at("profile").dump());
      if (s.contains("rhythms")) c.rhythms = sim_config_from_json(s.at("rhythms").dump());
      c.rhythm_trials = s.value("trials", c.rhythm_trials);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("sift")) c.sift = sift_from_json(j.at("sift"));
    if (j.contains("wavelet")) {
      const auto& w = j.at("wavelet");
      c.wavelet.f_min = w.value("f_min", c.wavelet.f_min);
      c.wavelet.f_max = w.value("f_max", c.wavelet.f_max);
      c.wavelet.f_step = w.value("f_step", c.wavelet.f_step);
      c.wavelet.cycles = w.value("cycles", c.wavelet.cycles);
    }
    if (j.contains("bands")) {
      c.bands.clear();
      for (const auto& b : j.at("bands")) {
        c.bands.push_back({b.at("name").get<std::string>(), b.at("lo").get<double>(), b.at("hi").get<double>()});
      }
    }
    c.segment = j.value("segment", c.segment);
    c.train_run = j.value("train_run", c.train_run);
    c.test_run = j.value("test_run", c.test_run);
    c.pcts = j.value("pcts", c.pcts);
    c.reps = j.value("reps", c.reps);
    c.mad_threshold = j.value("mad_threshold", c.mad_threshold);
    if (j.contains("tfr")) {
      c.tfr_trials = j.at("tfr").value("trials", c.tfr_trials);
      c.tfr_channels = j.at("tfr").value("channels", c.tfr_channels);
    }
    if (j.contains("stages")) {
      c.stages.clear();
      for (const auto& s : j.at("stages")) c.stages.push_back(parse_stage(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& file) {
  if (!fs::exists(file)) throw LoadError("config file " + file.string() + " does not exist");
  return pipeline_config_from_json(read_text(file), file.parent_path());
}

std::string to_json(const PipelineConfig& c) {
  json j;
  j["dataset"] = c.dataset ? json(c.dataset->generic_string()) : json();
  j["simulate"] = {{"kind", c.simulation == SimulationKind::MotorImagery ? "motor_imagery" : "rhythms"},
                   {"profile", json::parse(to_json(c.profile))},
                   {"rhythms", json::parse(to_json(c.rhythms))},
                   {"trials", c.rhythm_trials}};
  j["seed"] = c.seed;
  j["sift"] = sift_json(c.sift);
  j["wavelet"] = {{"f_min", c.wavelet.f_min},
                  {"f_max", c.wavelet.f_max},
                  {"f_step", c.wavelet.f_step},
                  {"cycles", c.wavelet.cycles}};
  j["bands"] = json::array();
  for (const auto& b : c.bands) j["bands"].push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}});
  j["segment"] = c.segment;
  j["train_run"] = c.train_run;
  j["test_run"] = c.test_run;
  j["pcts"] = c.pcts;
  j["reps"] = c.reps;
  j["mad_threshold"] = c.mad_threshold;
  j["tfr"] = {{"trials", c.tfr_trials}, {"channels", c.tfr_channels}};
  j["stages"] = json::array();
  for (Stage s : c.stages) j["stages"].push_back(stage_name(s));
  return j.dump(2);
}

std::uint64_t config_hash(const PipelineConfig& cfg) { return fnv1a64(to_json(cfg)); }

std::uint64_t stage_seed(const PipelineConfig& cfg, Stage s) { return derive_seed(cfg.seed, stage_name(s)); }

std::vector<std::string> feature_names(std::span<const std::string> channels, std::span<const Band> bands) {
  std::vector<std::string> out;
  for (const auto& c : channels) {
    for (const auto& b : bands) out.push_back(c + "_" + b.name);
  }
  return out;
}

std::string features_csv(const FeatureSet& f, std::span<const std::string> names, std::span<const int> reps) {
  std::ostringstream os;
  if (!reps.empty()) os << "rep,";
  os << "trial_id,label";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < f.trial_ids.size(); ++i) {
    if (!reps.empty()) os << reps[i] << ',';
    os << f.trial_ids[i] << ',' << to_string(f.labels[i]);
    for (Eigen::Index k = 0; k < f.features.cols(); ++k) os << ',' << g17(f.features(static_cast<Eigen::Index>(i), k));
    os << '\n';
  }
  return os.str();
}

FeatureTable read_features_csv(const fs::path& path) {
  const auto lines = csv_lines(path);
  const auto header = split(lines[0]);
  FeatureTable t;
  const bool has_rep = !header.empty() && header[0] == "rep";
  const std::size_t first = has_rep ? 3 : 2;
  if (header.size() < first) throw LoadError("bad feature header in " + path.string());
  for (std::size_t k = first; k < header.size(); ++k) t.names.emplace_back(header[k]);
  const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
  t.set.features.resize(rows, static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    if (cells.size() != header.size()) throw LoadError("ragged row " + std::to_string(i) + " in " + path.string());
    std::size_t c = 0;
    if (has_rep) t.reps.push_back(parse_int(cells[c++], path));
    t.set.trial_ids.push_back(parse_int(cells[c++], path));
    t.set.labels.push_back(parse_class_label(cells[c++]));
    for (std::size_t k = 0; k < t.names.size(); ++k) {
      t.set.features(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k)) = parse_double(cells[first + k], path);
    }
  }
  return t;
}

ExperimentResult read_results_csv(const fs::path& path) {
  const auto lines = csv_lines(path);
  if (lines[0] != "subject,pct,rep,class,error_rate") throw LoadError("unexpected header in " + path.string());
  std::vector<ErrorReport> reports;
  std::string subject;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    if (cells.size() != 5) throw LoadError("ragged row " + std::to_string(i) + " in " + path.string());
    subject = std::string(cells[0]);
    const double pct = parse_double(cells[1], path);
    const int rep = parse_int(cells[2], path);
    if (reports.empty() || reports.back().pct != pct || reports.back().rep != rep) {
      reports.emplace_back();
      reports.back().pct = pct;
      reports.back().rep = rep;
    }
    reports.back().error_pct[parse_class_label(cells[3])] = parse_double(cells[4], path);
  }
  return tabulate(subject, std::move(reports));
}

Pipeline::Pipeline(PipelineConfig cfg, fs::path out) : cfg_(std::move(cfg)), out_(std::move(out)) {}

fs::path Pipeline::stage_dir(Stage s) const {
  return s == Stage::Simulate ? out_ / "dataset" : out_ / std::string(stage_name(s));
}

fs::path Pipeline::dataset_dir() const { return cfg_.dataset ? *cfg_.dataset : stage_dir(Stage::Simulate); }

void Pipeline::run(Stage s) {
  const fs::path dir = stage_dir(s);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (s != Stage::Simulate) {
      const auto data = dataset_dir();
      if (!fs::exists(data / "manifest.json")) {
        throw LoadError("input dataset " + data.string() + " does not exist or has no manifest.json");
      }
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(dir / ".partial", "");
    switch (s) {
      case Stage::Simulate: simulate(); break;
      case Stage::Decompose: decompose(); break;
      case Stage::Tfr: tfr(); break;
      case Stage::Select: select(); break;
      case Stage::Augment: augment(); break;
      case Stage::Features: features(); break;
      case Stage::Classify: classify(); break;
      case Stage::Audit: audit(); break;
    }
    fs::remove(dir / ".partial");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(s, e.what());
  }
  record(s, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

void Pipeline::run_all() {
  for (Stage s : cfg_.stages) {
    if (s == Stage::Simulate && cfg_.dataset) continue;
    run(s);
  }
}

void Pipeline::record(Stage s, double seconds) {
  const fs::path path = out_ / "summary.json";
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg_)));
  json summary;
  if (fs::exists(path)) {
    try {
      summary = json::parse(read_text(path));
    } catch (const json::exception&) {
      summary = json();
    }
    if (!summary.is_object() || summary.value("config_hash", std::string{}) != hash) summary = json();
  }
  if (summary.is_null()) {
    summary = {{"config_hash", hash}, {"seed", cfg_.seed}, {"stages", json::array()}, {"timings", json::object()}};
  }
  std::set<Stage> done;
  for (const auto& n : summary["stages"]) done.insert(parse_stage(n.get<std::string>()));
  done.insert(s);
  summary["stages"] = json::array();
  for (Stage st : all_stages()) {
    if (done.count(st)) summary["stages"].push_back(stage_name(st));
  }
  summary["timings"][std::string(stage_name(s))] = seconds;
  write_text(path, summary.dump(2) + "\n");
}

void Pipeline::simulate() {
  const fs::path dir = stage_dir(Stage::Simulate);
  const auto seed = stage_seed(cfg_, Stage::Simulate);
  if (cfg_.simulation == SimulationKind::MotorImagery) {
    save_dataset(simulate_mi_dataset(cfg_.profile, seed), dir);
    return;
  }
  SimConfig sc = cfg_.rhythms;
  sc.seed = seed;
  TrialDataset d = simulate_clean_trials(sc, cfg_.rhythm_trials);
  if (sc.snr_db) d = add_noise_at_snr(d, *sc.snr_db, seed);
  if (sc.ocular.max_bursts > 0) d = add_ocular_artifact(d, sc.ocular, seed);
  save_dataset(d, dir);
}

void Pipeline::decompose() {
  const fs::path dir = stage_dir(Stage::Decompose);
  const TrialDataset train = load_dataset(dataset_dir()).filter_run(cfg_.train_run);
  if (train.empty()) throw DomainError("no trials in training run " + std::to_string(cfg_.train_run));
  json manifest;
  manifest["fs"] = train.fs();
  manifest["channel_labels"] = train.channel_labels();
  manifest["sift"] = sift_json(cfg_.sift);
  manifest["trials"] = json::array();
  for (const auto& t : train.trials()) {
    const auto d = memd(t.signal, cfg_.sift, t.trial_id);
    const std::string file = "trial_" + std::to_string(t.trial_id) + ".imf.f64";
    write_decomposition(d, dir / file);
    manifest["trials"].push_back({{"trial_id", t.trial_id}, {"file", file}, {"imf_count", d.imf_count()}});
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

void Pipeline::tfr() {
  const fs::path dir = stage_dir(Stage::Tfr);
  const auto decs = load_decompositions(stage_dir(Stage::Decompose));
  if (decs.items.empty()) throw DomainError("no decompositions to image");
  const TrialDataset data = load_dataset(dataset_dir());
  std::vector<int> trials = cfg_.tfr_trials;
  if (trials.empty()) trials.push_back(decs.items.front().source_trial_id);
  std::vector<std::string> channels = cfg_.tfr_channels;
  if (channels.empty()) channels.push_back(data.channel_labels().front());
  MorletFilterBank bank(data.fs(), cfg_.wavelet);
  for (int id : trials) {
    auto it = std::find_if(decs.items.begin(), decs.items.end(),
                           [&](const ImfDecomposition& d) { return d.source_trial_id == id; });
    if (it == decs.items.end()) throw DomainError("trial " + std::to_string(id) + " was not decomposed");
    const Trial& trial = data.find(id);
    for (const auto& ch : channels) {
      const auto& labels = trial.signal.channel_labels();
      const auto pos = std::find(labels.begin(), labels.end(), ch);
      if (pos == labels.end()) throw DomainError("unknown channel '" + ch + "'");
      const auto c = static_cast<Eigen::Index>(pos - labels.begin());
      const std::string stem = "trial_" + std::to_string(id) + "_" + ch;
      write_pgm(TfImage{bank.power(trial.signal.channel(static_cast<std::size_t>(c))), bank.freqs(), bank.fs()},
                dir / (stem + ".pgm"));
      for (std::size_t j = 0; j < it->imf_count(); ++j) {
        write_pgm(TfImage{bank.power(row_span(it->imfs[j], c)), bank.freqs(), bank.fs()},
                  dir / (stem + "_imf" + std::to_string(j + 1) + ".pgm"));
      }
    }
  }
}

void Pipeline::select() {
  const fs::path dir = stage_dir(Stage::Select);
  const auto decs = load_decompositions(stage_dir(Stage::Decompose));
  if (decs.items.empty()) throw DomainError("no decompositions to select from");
  MorletFilterBank bank(decs.items.front().fs, cfg_.wavelet);
  for (const auto& d : decs.items) {
    write_text(dir / ("trial_" + std::to_string(d.source_trial_id) + ".json"),
               to_json(select_relevant_imfs(d, bank)) + "\n");
  }
}

void Pipeline::augment() {
  const fs::path dir = stage_dir(Stage::Augment);
  const TrialDataset train = load_dataset(dataset_dir()).filter_run(cfg_.train_run);
  const auto decs = load_decompositions(stage_dir(Stage::Decompose));
  const auto reports = load_reports(stage_dir(Stage::Select), decs.items);
  const AugmentationPool pool(train, decs.items, reports);
  const auto base_seed = stage_seed(cfg_, Stage::Augment);
  json pool_info{{"max_imf", pool.max_imf()}, {"base_seed", base_seed}, {"reps", cfg_.reps}};
  write_text(dir / "pool.json", pool_info.dump(2) + "\n");
  for (double pct : cfg_.pcts) {
    if (pct == 0.0) continue;
    json f{{"pct", pct}, {"max_imf", pool.max_imf()}, {"base_seed", base_seed}, {"plans", json::array()}};
    for (int rep = 0; rep < cfg_.reps; ++rep) {
      const auto plan = plan_substitution(pool, pct, base_seed + static_cast<std::uint64_t>(rep));
      f["plans"].push_back(json::parse(to_json(plan)));
    }
    write_text(dir / ("plans_pct" + pct_label(pct) + ".json"), f.dump(1) + "\n");
  }
}

void Pipeline::features() {
  const fs::path dir = stage_dir(Stage::Features);
  const TrialDataset data = load_dataset(dataset_dir());
  const TrialDataset train = data.filter_run(cfg_.train_run);
  const TrialDataset test = data.filter_run(cfg_.test_run);
  if (test.empty()) throw DomainError("no trials in test run " + std::to_string(cfg_.test_run));
  const auto decs = load_decompositions(stage_dir(Stage::Decompose));
  const auto reports = load_reports(stage_dir(Stage::Select), decs.items);
  const AugmentationPool pool(train, decs.items, reports);
  MorletFilterBank bank(data.fs(), cfg_.wavelet);
  const auto names = feature_names(data.channel_labels(), cfg_.bands);

  write_text(dir / "train_original.csv", features_csv(extract_features(train, cfg_.bands, cfg_.segment, bank), names));
  write_text(dir / "train_reconstructed.csv",
             features_csv(extract_features(pool.reconstructed(), cfg_.bands, cfg_.segment, bank), names));
  write_text(dir / "test.csv", features_csv(extract_features(test, cfg_.bands, cfg_.segment, bank), names));

  for (double pct : cfg_.pcts) {
    if (pct == 0.0) continue;
    const auto plans = load_plans(stage_dir(Stage::Augment) / ("plans_pct" + pct_label(pct) + ".json"));
    FeatureSet all;
    std::vector<int> reps;
    std::vector<Eigen::RowVectorXd> rows;
    for (std::size_t rep = 0; rep < plans.plans.size(); ++rep) {
      const auto trials = synthesize(pool, plans.plans[rep]);
      const auto f = extract_features(std::span<const Trial>(trials), cfg_.bands, cfg_.segment, bank);
      for (std::size_t i = 0; i < trials.size(); ++i) {
        rows.push_back(f.features.row(static_cast<Eigen::Index>(i)));
        all.labels.push_back(f.labels[i]);
        all.trial_ids.push_back(f.trial_ids[i]);
        reps.push_back(static_cast<int>(rep));
      }
    }
    all.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) all.features.row(static_cast<Eigen::Index>(i)) = rows[i];
    write_text(dir / ("artificial_pct" + pct_label(pct) + ".csv"), features_csv(all, names, reps));
  }
}

void Pipeline::classify() {
  const fs::path dir = stage_dir(Stage::Classify);
  const fs::path feat = stage_dir(Stage::Features);
  const std::string subject = load_dataset(dataset_dir()).subject();
  const auto original = read_features_csv(feat / "train_original.csv").set;
  const auto base = read_features_csv(feat / "train_reconstructed.csv").set;
  const auto test = read_features_csv(feat / "test.csv").set;

  const ErrorReport oo = evaluate(original, test);
  const ErrorReport ro = evaluate(base, test);
  std::ostringstream baseline;
  baseline << "subject,condition,class,error_rate\n";
  for (const auto& [name, r] : {std::pair{"OO", &oo}, std::pair{"RO", &ro}}) {
    for (const auto& [label, e] : r->error_pct) {
      baseline << subject << ',' << name << ',' << short_name(label) << ',' << g17(e) << '\n';
    }
  }
  write_text(dir / "baseline.csv", baseline.str());

  std::vector<ErrorReport> reports;
  for (double pct : cfg_.pcts) {
    if (pct == 0.0) {
      for (int rep = 0; rep < cfg_.reps; ++rep) {
        ErrorReport r = ro;
        r.pct = 0.0;
        r.rep = rep;
        reports.push_back(std::move(r));
      }
      continue;
    }
    const auto plans = load_plans(stage_dir(Stage::Augment) / ("plans_pct" + pct_label(pct) + ".json"));
    const auto art = read_features_csv(feat / ("artificial_pct" + pct_label(pct) + ".csv"));
    for (std::size_t rep = 0; rep < plans.plans.size(); ++rep) {
      const auto& plan = plans.plans[rep];
      ErrorReport r = evaluate(substitute_features(base, plan, rows_of_rep(art, static_cast<int>(rep))), test);
      r.pct = pct;
      r.rep = static_cast<int>(rep);
      r.seed = plan.seed;
      reports.push_back(std::move(r));
    }
  }
  const auto result = tabulate(subject, std::move(reports));
  write_text(dir / "results.csv", results_csv(result));
  write_text(dir / "medians.csv", medians_csv(result));
}

void Pipeline::audit() {
  const fs::path dir = stage_dir(Stage::Audit);
  const auto result = read_results_csv(stage_dir(Stage::Classify) / "results.csv");
  const auto rows = trialmix::audit(result, cfg_.mad_threshold);
  write_text(dir / "mad.csv", audit_csv(result.subject, rows));
}

}  // namespace trialmix
