#pragma once

#include "trialmix/signal.hpp"
#include "trialmix/tfr.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace trialmix {

/// Entropy of every (electrode, IMF) TF image of one trial and the IMF
/// indices (1-based, ascending) kept for all electrodes.
struct SelectionReport {
  Matrix entropy;  // electrodes x IMFs, bits
  double mean_entropy = 0.0;
  std::vector<int> selected;
  int trial_id = 0;

  std::size_t imf_count() const { return static_cast<std::size_t>(entropy.cols()); }
  // Mean entropy of each IMF across electrodes.
  std::vector<double> imf_mean_entropy() const;
};

/// Shannon entropy (bits) of the 256-level gray histogram of the image.
double image_entropy(const Matrix& power);
double image_entropy(const TfImage& img);

/// Selection rule on a ready entropy matrix: keep IMF j iff its mean entropy
/// across electrodes exceeds the grand mean; if none does, keep the single
/// IMF with the highest mean (lowest index on ties).
SelectionReport select_from_entropy(Matrix entropy, int trial_id);

SelectionReport select_relevant_imfs(const ImfDecomposition& d, MorletFilterBank& bank);
SelectionReport select_relevant_imfs(const ImfDecomposition& d, const WaveletConfig& cfg);

std::string to_json(const SelectionReport& report);
SelectionReport selection_report_from_json(std::string_view text);

}  // namespace trialmix
