#include "trialmix/simulate.hpp"

#include "trialmix/errors.hpp"
#include "trialmix/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace trialmix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr ClassLabel kSimulatedClass{2};

std::size_t channel_index(const std::vector<std::string>& labels, const std::string& name) {
  auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw DomainError("channel '" + name + "' is not in the montage");
  return static_cast<std::size_t>(it - labels.begin());
}

std::optional<double> optional_number(const nlohmann::json& j, const char* key, std::optional<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::json optional_json(const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(); }

// Scales unit-variance noise so its realised power matches the target SNR.
void add_scaled_noise(std::span<double> x, double snr_db, Rng& rng, std::vector<double>& noise) {
  const double p_signal = mean_square(x);
  if (!(p_signal > 0.0)) throw DegenerateInputError("cannot set an SNR on a zero-power channel");
  noise.resize(x.size());
  for (double& v : noise) v = rng.normal();
  const double p_noise = mean_square(noise);
  const double scale = std::sqrt(p_signal / std::pow(10.0, snr_db / 10.0) / p_noise);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += scale * noise[i];
}

}  // namespace

void SimConfig::validate() const {
  if (!(fs > 0.0)) throw DomainError("fs must be positive");
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  if (channel_labels.empty()) throw DomainError("simulation needs at least one channel");
  for (const auto& r : rhythms) {
    if (!(r.frequency > 0.0 && r.frequency < fs / 2.0)) {
      throw DomainError("rhythm '" + r.band + "' frequency must lie in (0, fs/2)");
    }
  }
  if (ocular.min_bursts < 0 || ocular.max_bursts < ocular.min_bursts) throw DomainError("bad burst count range");
  if (!(ocular.duration > 0.0 && ocular.duration <= duration)) throw DomainError("burst duration outside the trial");
}

std::size_t SimConfig::samples() const { return static_cast<std::size_t>(std::lround(fs * duration)); }

std::string to_json(const SimConfig& cfg) {
  nlohmann::json j;
  j["subject"] = cfg.subject;
  j["channel_labels"] = cfg.channel_labels;
  j["fs"] = cfg.fs;
  j["duration"] = cfg.duration;
  j["rhythms"] = nlohmann::json::array();
  for (const auto& r : cfg.rhythms) {
    j["rhythms"].push_back({{"band", r.band}, {"amplitude", r.amplitude}, {"frequency", r.frequency}});
  }
  j["snr_db"] = optional_json(cfg.snr_db);
  j["ocular"] = {{"channels", cfg.ocular.channels},
                 {"amplitude", cfg.ocular.amplitude},
                 {"duration", cfg.ocular.duration},
                 {"min_bursts", cfg.ocular.min_bursts},
                 {"max_bursts", cfg.ocular.max_bursts}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

SimConfig sim_config_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SimConfig c;
    c.subject = j.value("subject", c.subject);
    c.channel_labels = j.value("channel_labels", c.channel_labels);
    c.fs = j.value("fs", c.fs);
    c.duration = j.value("duration", c.duration);
    if (j.contains("rhythms")) {
      c.rhythms.clear();
      for (const auto& r : j.at("rhythms")) {
        c.rhythms.push_back({r.value("band", std::string{}), r.at("amplitude").get<double>(),
                             r.at("frequency").get<double>()});
      }
    }
    c.snr_db = optional_number(j, "snr_db", c.snr_db);
    if (j.contains("ocular")) {
      const auto& o = j.at("ocular");
      c.ocular.channels = o.value("channels", c.ocular.channels);
      c.ocular.amplitude = o.value("amplitude", c.ocular.amplitude);
      c.ocular.duration = o.value("duration", c.ocular.duration);
      c.ocular.min_bursts = o.value("min_bursts", c.ocular.min_bursts);
      c.ocular.max_bursts = o.value("max_bursts", c.ocular.max_bursts);
    }
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed simulation config: ") + e.what());
  }
}

TrialDataset simulate_clean_trials(const SimConfig& cfg, std::size_t n_trials) {
  cfg.validate();
  const std::size_t n = cfg.samples();
  const std::size_t channels = cfg.channel_labels.size();
  Rng rng(derive_seed(cfg.seed, "simulate:clean"));
  std::vector<Trial> trials;
  for (std::size_t k = 0; k < n_trials; ++k) {
    Matrix data = Matrix::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < channels; ++c) {
      auto row = row_span(data, static_cast<Eigen::Index>(c));
      for (const auto& r : cfg.rhythms) {
        const double phase = rng.uniform(0.0, kTwoPi);
        const double w = kTwoPi * r.frequency / cfg.fs;
        for (std::size_t t = 0; t < n; ++t) row[t] += r.amplitude * std::sin(w * static_cast<double>(t) + phase);
      }
    }
    trials.push_back(Trial{MultichannelSignal(std::move(data), cfg.fs, cfg.channel_labels), kSimulatedClass, 1,
                           static_cast<int>(k + 1), {{"all", SampleRange{0, n}}}});
  }
  return TrialDataset(cfg.subject, "simulated rhythms", std::move(trials));
}

TrialDataset add_noise_at_snr(const TrialDataset& d, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw DomainError("SNR must be finite");
  Rng rng(derive_seed(seed, "simulate:noise"));
  std::vector<double> noise;
  std::vector<Trial> out;
  for (const auto& t : d.trials()) {
    Matrix data = t.signal.data();
    for (Eigen::Index c = 0; c < data.rows(); ++c) add_scaled_noise(row_span(data, c), snr_db, rng, noise);
    out.push_back(Trial{MultichannelSignal(std::move(data), t.signal.fs(), t.signal.channel_labels()), t.label,
                        t.run_id, t.trial_id, t.segments});
  }
  return TrialDataset(d.subject(), d.description(), std::move(out));
}

TrialDataset add_ocular_artifact(const TrialDataset& d, const OcularConfig& cfg, std::uint64_t seed) {
  if (cfg.channels.empty()) throw DomainError("no ocular channels configured");
  if (cfg.min_bursts < 0 || cfg.max_bursts < cfg.min_bursts) throw DomainError("bad burst count range");
  Rng rng(derive_seed(seed, "simulate:ocular"));
  std::vector<Trial> out;
  for (const auto& t : d.trials()) {
    const auto& labels = t.signal.channel_labels();
    std::vector<std::size_t> rows;
    for (const auto& name : cfg.channels) rows.push_back(channel_index(labels, name));
    const std::size_t n = t.signal.samples();
    const auto width = static_cast<std::size_t>(std::lround(cfg.duration * t.signal.fs()));
    if (width < 2 || width > n) throw DomainError("burst duration does not fit the trial");
    const auto span = static_cast<std::uint64_t>(cfg.max_bursts - cfg.min_bursts + 1);
    const auto bursts = cfg.min_bursts + static_cast<int>(rng.index(span));
    Matrix data = t.signal.data();
    for (int b = 0; b < bursts; ++b) {
      const auto onset = static_cast<std::size_t>(rng.index(n - width + 1));
      for (std::size_t i = 0; i < width; ++i) {
        const double pulse =
            0.5 * cfg.amplitude * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(width - 1)));
        for (std::size_t r : rows) data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(onset + i)) += pulse;
      }
    }
    out.push_back(Trial{MultichannelSignal(std::move(data), t.signal.fs(), labels), t.label, t.run_id, t.trial_id,
                        t.segments});
  }
  return TrialDataset(d.subject(), d.description(), std::move(out));
}

EsCorpus simulate_es_corpus(const SimConfig& cfg, std::size_t n_trials, double snr_db) {
  EsCorpus c{simulate_clean_trials(cfg, n_trials), TrialDataset(cfg.subject, "", {})};
  const auto seed = derive_seed(cfg.seed, "snr:" + std::to_string(snr_db));
  c.noisy = add_ocular_artifact(add_noise_at_snr(c.clean, snr_db, seed), cfg.ocular, seed);
  return c;
}

MiProfile MiProfile::good_performer() { return MiProfile{}; }

MiProfile MiProfile::poor_performer() {
  MiProfile p;
  p.subject = "poor_performer";
  p.attenuation = 0.0;
  return p;
}

void MiProfile::validate() const {
  if (!(fs > 0.0)) throw DomainError("fs must be positive");
  if (!(rest > 0.0 && cue >= 0.0 && mi > 0.0)) throw DomainError("segment durations must be positive");
  if (!(attenuation >= 0.0 && attenuation <= 1.0)) throw DomainError("attenuation must lie in [0, 1]");
  if (trials_per_class < 1 || runs < 1) throw DomainError("need at least one trial per class and one run");
  if (!(alpha_frequency + 0.5 < fs / 2.0 && beta_frequency < fs / 2.0)) throw DomainError("rhythm above Nyquist");
  for (ClassLabel l : {kLeftWrist, kRightWrist}) {
    for (const auto& name : contralateral_channels(l)) channel_index(channel_labels, name);
  }
}

std::string to_json(const MiProfile& p) {
  nlohmann::json j;
  j["subject"] = p.subject;
  j["attenuation"] = p.attenuation;
  j["snr_db"] = optional_json(p.snr_db);
  j["fs"] = p.fs;
  j["rest"] = p.rest;
  j["cue"] = p.cue;
  j["mi"] = p.mi;
  j["trials_per_class"] = p.trials_per_class;
  j["runs"] = p.runs;
  j["channel_labels"] = p.channel_labels;
  j["alpha_amplitude"] = p.alpha_amplitude;
  j["alpha_frequency"] = p.alpha_frequency;
  j["beta_amplitude"] = p.beta_amplitude;
  j["beta_frequency"] = p.beta_frequency;
  j["trial_gain_sigma"] = p.trial_gain_sigma;
  j["channel_gain_sigma"] = p.channel_gain_sigma;
  return j.dump(2);
}

MiProfile mi_profile_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MiProfile p;
    if (j.contains("profile")) {
      const auto name = j.at("profile").get<std::string>();
      if (name == "good_performer") {
        p = MiProfile::good_performer();
      } else if (name == "poor_performer") {
        p = MiProfile::poor_performer();
      } else {
        throw DomainError("unknown MI profile '" + name + "'");
      }
    }
    p.subject = j.value("subject", p.subject);
    p.attenuation = j.value("attenuation", p.attenuation);
    p.snr_db = optional_number(j, "snr_db", p.snr_db);
    p.fs = j.value("fs", p.fs);
    p.rest = j.value("rest", p.rest);
    p.cue = j.value("cue", p.cue);
    p.mi = j.value("mi", p.mi);
    p.trials_per_class = j.value("trials_per_class", p.trials_per_class);
    p.runs = j.value("runs", p.runs);
    p.channel_labels = j.value("channel_labels", p.channel_labels);
    p.alpha_amplitude = j.value("alpha_amplitude", p.alpha_amplitude);
    p.alpha_frequency = j.value("alpha_frequency", p.alpha_frequency);
    p.beta_amplitude = j.value("beta_amplitude", p.beta_amplitude);
    p.beta_frequency = j.value("beta_frequency", p.beta_frequency);
    p.trial_gain_sigma = j.value("trial_gain_sigma", p.trial_gain_sigma);
    p.channel_gain_sigma = j.value("channel_gain_sigma", p.channel_gain_sigma);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed MI profile: ") + e.what());
  }
}

std::vector<std::string> contralateral_channels(ClassLabel label) {
  if (label == kLeftWrist) return {"C4", "C6", "Cp6"};
  if (label == kRightWrist) return {"C3", "C5", "Cp5"};
  throw DomainError("no motor lateralisation for " + to_string(label));
}

TrialDataset simulate_mi_dataset(const MiProfile& p, std::uint64_t seed) {
  p.validate();
  const auto rest_end = static_cast<std::size_t>(std::lround(p.rest * p.fs));
  const auto cue_end = rest_end + static_cast<std::size_t>(std::lround(p.cue * p.fs));
  const auto n = cue_end + static_cast<std::size_t>(std::lround(p.mi * p.fs));
  const std::map<std::string, SampleRange> segments{
      {"rest", {0, rest_end}}, {"cue", {rest_end, cue_end}}, {"mi", {cue_end, n}}};
  const std::size_t channels = p.channel_labels.size();
  std::map<ClassLabel, std::vector<bool>> attenuated;
  for (ClassLabel l : {kLeftWrist, kRightWrist}) {
    attenuated[l].assign(channels, false);
    for (const auto& name : contralateral_channels(l)) attenuated[l][channel_index(p.channel_labels, name)] = true;
  }

  // Alpha envelope of an attenuated channel: 1 at rest, ramping to
  // 1 - attenuation over the cue, held through MI.
  std::vector<double> erd(n, 1.0);
  for (std::size_t t = rest_end; t < n; ++t) {
    const double ramp = t < cue_end ? static_cast<double>(t - rest_end) / static_cast<double>(cue_end - rest_end) : 1.0;
    erd[t] = 1.0 - p.attenuation * ramp;
  }

  Rng label_rng(derive_seed(seed, "simulate:labels"));
  Rng rng(derive_seed(seed, "simulate:mi"));
  std::vector<double> noise;
  std::vector<Trial> trials;
  int trial_id = 1;
  for (int run = 1; run <= p.runs; ++run) {
    std::vector<ClassLabel> labels;
    for (int i = 0; i < p.trials_per_class; ++i) {
      labels.push_back(kLeftWrist);
      labels.push_back(kRightWrist);
    }
    label_rng.shuffle(std::span<ClassLabel>(labels));
    for (ClassLabel label : labels) {
      Matrix data(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
      const double trial_gain = std::exp(p.trial_gain_sigma * rng.normal());
      const double fa = p.alpha_frequency + rng.uniform(-0.5, 0.5);
      const double wa = kTwoPi * fa / p.fs;
      const double wb = kTwoPi * p.beta_frequency / p.fs;
      for (std::size_t c = 0; c < channels; ++c) {
        const double gain = trial_gain * std::exp(p.channel_gain_sigma * rng.normal());
        const double pa = rng.uniform(0.0, kTwoPi);
        const double pb = rng.uniform(0.0, kTwoPi);
        const bool erd_here = attenuated[label][c];
        auto row = row_span(data, static_cast<Eigen::Index>(c));
        for (std::size_t t = 0; t < n; ++t) {
          const double x = static_cast<double>(t);
          const double a = p.alpha_amplitude * (erd_here ? erd[t] : 1.0);
          row[t] = gain * (a * std::sin(wa * x + pa) + p.beta_amplitude * std::sin(wb * x + pb));
        }
        if (p.snr_db) add_scaled_noise(row, *p.snr_db, rng, noise);
      }
      trials.push_back(Trial{MultichannelSignal(std::move(data), p.fs, p.channel_labels), label, run, trial_id++,
                             segments});
    }
  }
  return TrialDataset(p.subject, "simulated wrist motor imagery", std::move(trials));
}

}  // namespace trialmix
