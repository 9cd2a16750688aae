#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trialmix {

// Channels x samples, one contiguous row per channel.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}
inline std::span<double> row_span(Matrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// Sampled multichannel EEG segment in microvolts.
///
/// Immutable once constructed; the constructor enforces one label per row,
/// finite samples and a positive sampling rate.
class MultichannelSignal {
 public:
  MultichannelSignal(Matrix data, double fs, std::vector<std::string> channel_labels);

  const Matrix& data() const { return data_; }
  double fs() const { return fs_; }
  const std::vector<std::string>& channel_labels() const { return labels_; }
  std::size_t channels() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(data_.cols()); }
  std::span<const double> channel(std::size_t c) const {
    return row_span(data_, static_cast<Eigen::Index>(c));
  }

 private:
  Matrix data_;
  double fs_;
  std::vector<std::string> labels_;
};

/// Task class of a trial. Ids 0 and 1 are the two wrist motor-imagery
/// tasks; any other id is a generic class.
struct ClassLabel {
  int id = 0;
  auto operator<=>(const ClassLabel&) const = default;
};

inline constexpr ClassLabel kLeftWrist{0};
inline constexpr ClassLabel kRightWrist{1};

std::string to_string(ClassLabel label);       // "LEFT_WRIST", "RIGHT_WRIST", "CLASS_<n>"
std::string short_name(ClassLabel label);      // "LW", "RW", "C<n>"
ClassLabel parse_class_label(std::string_view text);

struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const { return end - begin; }
  bool operator==(const SampleRange&) const = default;
};

struct Trial {
  MultichannelSignal signal;
  ClassLabel label;
  int run_id = 1;
  int trial_id = 0;
  std::map<std::string, SampleRange> segments;

  const SampleRange& segment(const std::string& name) const;
};

/// Ordered trials sharing one sampling rate and montage.
class TrialDataset {
 public:
  TrialDataset(std::string subject, std::string description, std::vector<Trial> trials);

  const std::string& subject() const { return subject_; }
  const std::string& description() const { return description_; }
  const std::vector<Trial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }

  // Only meaningful for non-empty datasets.
  double fs() const;
  const std::vector<std::string>& channel_labels() const;

  const Trial& find(int trial_id) const;
  std::vector<int> run_ids() const;
  TrialDataset filter_run(int run_id) const;

 private:
  std::string subject_;
  std::string description_;
  std::vector<Trial> trials_;
};

/// Output of EMD/MEMD for one trial. imfs[0] is the fastest mode (index 1 in
/// the 1-based numbering used by selection reports and plans).
struct ImfDecomposition {
  std::vector<Matrix> imfs;
  Matrix residuum;
  int source_trial_id = 0;
  double fs = 1.0;
  std::vector<std::string> channel_labels;

  std::size_t imf_count() const { return imfs.size(); }
};

/// Sums the requested IMF layers (1-based). Without indices, all IMFs plus
/// the residuum are summed, which reproduces the decomposed signal.
MultichannelSignal reconstruct(const ImfDecomposition& d,
                               std::optional<std::span<const int>> indices = std::nullopt);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
double mean_square(std::span<const double> x);

// Lower median for even counts (deterministic tie convention for error rates).
double lower_median(std::vector<double> values);
// Conventional median, averaging the middle pair for even counts.
double median(std::vector<double> values);

}  // namespace trialmix
