#include "trialmix/signal.hpp"

#include "trialmix/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace trialmix {

MultichannelSignal::MultichannelSignal(Matrix data, double fs, std::vector<std::string> channel_labels)
    : data_(std::move(data)), fs_(fs), labels_(std::move(channel_labels)) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
    throw DomainError("sampling rate must be positive, got " + std::to_string(fs_));
  }
  if (static_cast<std::size_t>(data_.rows()) != labels_.size()) {
    throw DomainError("signal has " + std::to_string(data_.rows()) + " channels but " +
                      std::to_string(labels_.size()) + " labels");
  }
  if (!data_.allFinite()) {
    throw DomainError("signal contains non-finite samples");
  }
}

std::string to_string(ClassLabel label) {
  if (label == kLeftWrist) return "LEFT_WRIST";
  if (label == kRightWrist) return "RIGHT_WRIST";
  return "CLASS_" + std::to_string(label.id);
}

std::string short_name(ClassLabel label) {
  if (label == kLeftWrist) return "LW";
  if (label == kRightWrist) return "RW";
  return "C" + std::to_string(label.id);
}

ClassLabel parse_class_label(std::string_view text) {
  if (text == "LEFT_WRIST" || text == "LW") return kLeftWrist;
  if (text == "RIGHT_WRIST" || text == "RW") return kRightWrist;
  for (std::string_view prefix : {std::string_view("CLASS_"), std::string_view("C")}) {
    if (!text.starts_with(prefix)) continue;
    int id = 0;
    auto digits = text.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && id >= 0) return ClassLabel{id};
  }
  throw DomainError("unknown class label '" + std::string(text) + "'");
}

const SampleRange& Trial::segment(const std::string& name) const {
  auto it = segments.find(name);
  if (it == segments.end()) {
    throw DomainError("trial " + std::to_string(trial_id) + " has no segment '" + name + "'");
  }
  return it->second;
}

TrialDataset::TrialDataset(std::string subject, std::string description, std::vector<Trial> trials)
    : subject_(std::move(subject)), description_(std::move(description)), trials_(std::move(trials)) {
  std::set<std::pair<int, int>> ids;
  for (const auto& t : trials_) {
    const auto& first = trials_.front().signal;
    if (t.signal.fs() != first.fs()) {
      throw DomainError("trial " + std::to_string(t.trial_id) + " has sampling rate " +
                        std::to_string(t.signal.fs()) + ", dataset uses " + std::to_string(first.fs()));
    }
    if (t.signal.channel_labels() != first.channel_labels()) {
      throw DomainError("trial " + std::to_string(t.trial_id) + " has a different montage");
    }
    for (const auto& [name, range] : t.segments) {
      if (range.begin > range.end || range.end > t.signal.samples()) {
        throw DomainError("trial " + std::to_string(t.trial_id) + " segment '" + name +
                          "' lies outside the signal");
      }
    }
    if (!ids.emplace(t.run_id, t.trial_id).second) {
      throw DomainError("duplicate trial id " + std::to_string(t.trial_id) + " in run " +
                        std::to_string(t.run_id));
    }
  }
}

double TrialDataset::fs() const { return trials_.at(0).signal.fs(); }

const std::vector<std::string>& TrialDataset::channel_labels() const {
  return trials_.at(0).signal.channel_labels();
}

const Trial& TrialDataset::find(int trial_id) const {
  auto it = std::find_if(trials_.begin(), trials_.end(),
                         [&](const Trial& t) { return t.trial_id == trial_id; });
  if (it == trials_.end()) throw DomainError("no trial with id " + std::to_string(trial_id));
  return *it;
}

std::vector<int> TrialDataset::run_ids() const {
  std::set<int> runs;
  for (const auto& t : trials_) runs.insert(t.run_id);
  return {runs.begin(), runs.end()};
}

TrialDataset TrialDataset::filter_run(int run_id) const {
  std::vector<Trial> kept;
  for (const auto& t : trials_) {
    if (t.run_id == run_id) kept.push_back(t);
  }
  return TrialDataset(subject_, description_, std::move(kept));
}

MultichannelSignal reconstruct(const ImfDecomposition& d, std::optional<std::span<const int>> indices) {
  Matrix out;
  if (!indices) {
    out = d.residuum;
    for (const auto& imf : d.imfs) out += imf;
  } else {
    out = Matrix::Zero(d.residuum.rows(), d.residuum.cols());
    for (int index : *indices) {
      if (index < 1 || static_cast<std::size_t>(index) > d.imfs.size()) {
        throw DomainError("IMF index " + std::to_string(index) + " outside 1.." +
                          std::to_string(d.imfs.size()));
      }
      out += d.imfs[static_cast<std::size_t>(index - 1)];
    }
  }
  return MultichannelSignal(std::move(out), d.fs, d.channel_labels);
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double mean_square(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("PCC inputs differ in length");
  if (a.size() < 2) throw DomainError("PCC needs at least 2 samples");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw DegenerateInputError("PCC undefined for a constant input");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty list");
  const auto mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty list");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace trialmix
