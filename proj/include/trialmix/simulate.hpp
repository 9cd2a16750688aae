#pragma once

#include "trialmix/signal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trialmix {

struct Rhythm {
  std::string band;
  double amplitude = 0.0;  // µV
  double frequency = 0.0;  // Hz
};

/// Raised-cosine blink bursts added to the ocular channels.
struct OcularConfig {
  std::vector<std::string> channels{"Fp1", "Fp2"};
  double amplitude = 20.0;  // µV peak
  double duration = 0.3;    // s
  int min_bursts = 1;
  int max_bursts = 3;
};

/// Generator settings for the ES-like corpus.
struct SimConfig {
  std::string subject = "ES";
  std::vector<std::string> channel_labels{"C3", "C4", "Cz", "F3", "F4", "F7", "F8", "Fz", "Fp1", "Fp2",
                                          "O1", "O2", "P3", "P4", "Pz", "T3", "T4", "T5", "T6"};
  double fs = 256.0;
  double duration = 10.0;  // s
  std::vector<Rhythm> rhythms{{"alpha", 1.0, 10.0}, {"beta", 0.5, 20.0}, {"gamma", 0.25, 40.0}};
  std::optional<double> snr_db;
  OcularConfig ocular;
  std::uint64_t seed = 0;

  // Throws DomainError for a non-positive duration or fs, or a rhythm at or
  // above Nyquist.
  void validate() const;
  std::size_t samples() const;
};

std::string to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(std::string_view text);

/// Sum of the configured sinusoids on every channel, with an independent
/// random phase per (trial, channel, rhythm). One "all" segment per trial.
TrialDataset simulate_clean_trials(const SimConfig& cfg, std::size_t n_trials);

/// Adds white Gaussian noise to every channel, scaled so that the realised
/// noise power is exactly signal power / 10^(snr_db / 10). A zero-power
/// channel throws DegenerateInputError.
TrialDataset add_noise_at_snr(const TrialDataset& d, double snr_db, std::uint64_t seed);

/// Adds blink bursts to the configured channels of every trial. Burst count
/// is uniform in [min_bursts, max_bursts] and burst onsets uniform over the
/// trial; both ocular channels see the same bursts. Other channels are
/// untouched.
TrialDataset add_ocular_artifact(const TrialDataset& d, const OcularConfig& cfg, std::uint64_t seed);

/// The clean, noisy and noisy-plus-artifact versions used by the denoising
/// check.
struct EsCorpus {
  TrialDataset clean;
  TrialDataset noisy;
};
EsCorpus simulate_es_corpus(const SimConfig& cfg, std::size_t n_trials, double snr_db);

/// Motor-imagery subject: rest, cue and MI segments, two runs of balanced
/// left/right wrist trials. During MI the alpha amplitude on the channels
/// contralateral to the imagined wrist drops by `attenuation`, ramping in
/// over the cue.
struct MiProfile {
  std::string subject = "good_performer";
  double attenuation = 0.5;
  std::optional<double> snr_db = 10.0;
  double fs = 250.0;
  double rest = 2.0;  // s
  double cue = 1.0;
  double mi = 5.0;
  int trials_per_class = 40;
  int runs = 2;
  std::vector<std::string> channel_labels{"C1",  "C2",  "C3",  "C4",  "C5",  "C6",  "Cz",  "Cp1",
                                          "Cp2", "Cp5", "Cp6", "Fc1", "Fc2", "Fc5", "Fc6", "Fcz"};
  double alpha_amplitude = 2.0;   // µV
  double alpha_frequency = 10.0;  // Hz, jittered by +-0.5 per trial
  double beta_amplitude = 0.7;
  double beta_frequency = 20.0;
  double trial_gain_sigma = 0.2;    // log-amplitude jitter per trial
  double channel_gain_sigma = 0.1;  // log-amplitude jitter per (trial, channel)

  static MiProfile good_performer();
  static MiProfile poor_performer();
  void validate() const;
};

std::string to_json(const MiProfile& profile);
MiProfile mi_profile_from_json(std::string_view text);

/// Channels whose alpha is attenuated while imagining `label`.
std::vector<std::string> contralateral_channels(ClassLabel label);

/// runs x (2 x trials_per_class) trials, labels shuffled within each run,
/// trial ids consecutive from 1 across runs.
TrialDataset simulate_mi_dataset(const MiProfile& profile, std::uint64_t seed);

}  // namespace trialmix
