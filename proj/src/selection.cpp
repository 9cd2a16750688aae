#include "trialmix/selection.hpp"

#include "trialmix/errors.hpp"

#include <json.hpp>

#include <array>
#include <cmath>

namespace trialmix {

std::vector<double> SelectionReport::imf_mean_entropy() const {
  std::vector<double> m(imf_count());
  for (Eigen::Index j = 0; j < entropy.cols(); ++j) m[static_cast<std::size_t>(j)] = entropy.col(j).mean();
  return m;
}

double image_entropy(const Matrix& power) {
  if (power.size() == 0) throw DomainError("entropy of an empty image");
  std::array<std::size_t, 256> counts{};
  for (auto level : gray_levels(power)) ++counts[level];
  const double n = static_cast<double>(power.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double image_entropy(const TfImage& img) { return image_entropy(img.power); }

SelectionReport select_from_entropy(Matrix entropy, int trial_id) {
  if (entropy.cols() == 0 || entropy.rows() == 0) throw DomainError("selection needs at least one IMF and electrode");
  SelectionReport r;
  r.entropy = std::move(entropy);
  r.trial_id = trial_id;
  r.mean_entropy = r.entropy.mean();
  const auto means = r.imf_mean_entropy();
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (means[j] > r.mean_entropy) r.selected.push_back(static_cast<int>(j) + 1);
  }
  if (r.selected.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < means.size(); ++j) {
      if (means[j] > means[best]) best = j;
    }
    r.selected.push_back(static_cast<int>(best) + 1);
  }
  return r;
}

SelectionReport select_relevant_imfs(const ImfDecomposition& d, MorletFilterBank& bank) {
  if (d.imfs.empty()) throw DomainError("selection needs a decomposition with at least one IMF");
  const auto electrodes = d.imfs.front().rows();
  Matrix entropy(electrodes, static_cast<Eigen::Index>(d.imfs.size()));
  for (std::size_t j = 0; j < d.imfs.size(); ++j) {
    for (Eigen::Index c = 0; c < electrodes; ++c) {
      entropy(c, static_cast<Eigen::Index>(j)) = image_entropy(bank.power(row_span(d.imfs[j], c)));
    }
  }
  return select_from_entropy(std::move(entropy), d.source_trial_id);
}

SelectionReport select_relevant_imfs(const ImfDecomposition& d, const WaveletConfig& cfg) {
  MorletFilterBank bank(d.fs, cfg);
  return select_relevant_imfs(d, bank);
}

std::string to_json(const SelectionReport& report) {
  nlohmann::json j;
  j["trial_id"] = report.trial_id;
  auto rows = nlohmann::json::array();
  for (Eigen::Index c = 0; c < report.entropy.rows(); ++c) {
    std::vector<double> row(report.entropy.row(c).begin(), report.entropy.row(c).end());
    rows.push_back(row);
  }
  j["entropy_matrix"] = rows;
  j["mean_entropy"] = report.mean_entropy;
  j["selected_indices"] = report.selected;
  return j.dump(2);
}

SelectionReport selection_report_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed selection report: ") + e.what());
  }
  try {
    SelectionReport r;
    r.trial_id = j.at("trial_id").get<int>();
    const auto rows = j.at("entropy_matrix").get<std::vector<std::vector<double>>>();
    const auto cols = rows.empty() ? 0 : rows.front().size();
    r.entropy.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t c = 0; c < rows.size(); ++c) {
      if (rows[c].size() != cols) throw LoadError("ragged entropy matrix in selection report");
      for (std::size_t k = 0; k < cols; ++k) {
        r.entropy(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = rows[c][k];
      }
    }
    r.mean_entropy = j.at("mean_entropy").get<double>();
    r.selected = j.at("selected_indices").get<std::vector<int>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("incomplete selection report: ") + e.what());
  }
}

}  // namespace trialmix
