#pragma once

#include "trialmix/augment.hpp"
#include "trialmix/signal.hpp"
#include "trialmix/tfr.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace trialmix {

/// Two-class linear discriminant with a ridge-regularised pooled covariance.
/// Predicts `classes[1]` when weights . x + bias > 0.
struct LdaModel {
  std::array<ClassLabel, 2> classes{};
  std::array<Eigen::VectorXd, 2> means;
  Eigen::MatrixXd covariance;  // pooled and regularised
  Eigen::VectorXd weights;
  double bias = 0.0;

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + bias; }
  ClassLabel predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return score(x) > 0.0 ? classes[1] : classes[0];
  }
};

inline constexpr double kLdaRidge = 1e-3;

/// features: one row per sample. Throws DomainError unless exactly two
/// classes with at least two samples each are present.
LdaModel lda_train(const Eigen::MatrixXd& features, std::span<const ClassLabel> labels, double ridge = kLdaRidge);
std::vector<ClassLabel> predict(const LdaModel& model, const Eigen::MatrixXd& features);

struct ErrorReport {
  std::map<ClassLabel, double> error_pct;
  std::map<ClassLabel, std::size_t> n_test;
  double pct = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
};

/// 100 * (wrongly predicted samples of class c) / (samples of class c).
ErrorReport per_class_error(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted);
ErrorReport per_class_error(const LdaModel& model, const Eigen::MatrixXd& features,
                            std::span<const ClassLabel> labels);

enum class MadStatus { Ok, ZeroMad };
std::string to_string(MadStatus status);  // "OK", "ZERO_MAD"

struct MadVerdict {
  MadStatus status = MadStatus::Ok;
  double median = 0.0;
  double left_mad = 0.0;
  double right_mad = 0.0;
  std::vector<double> scores;  // +inf for a value off the median on a zero-MAD side
  std::vector<bool> outlier;
  double reference_score = 0.0;  // NaN when status is ZeroMad
  bool reference_flagged = false;

  std::size_t outlier_count() const;
};

inline constexpr double kMadThreshold = 2.5;

/// Double median absolute deviation test. Values at or below the median are
/// scored against the left MAD, values above against the right MAD, and a
/// score above `threshold` marks an outlier. When the MAD on the reference's
/// side is zero the status is ZeroMad and the reference is left unscored.
/// Throws DomainError for fewer than 3 observations.
MadVerdict double_mad_outliers(std::span<const double> observations, double reference,
                               double threshold = kMadThreshold);

/// Features of a whole dataset: one row per trial, psd_features order.
struct FeatureSet {
  Eigen::MatrixXd features;
  std::vector<ClassLabel> labels;
  std::vector<int> trial_ids;
};
FeatureSet extract_features(const TrialDataset& d, std::span<const Band> bands, const std::string& segment,
                            MorletFilterBank& bank);
FeatureSet extract_features(std::span<const Trial> trials, std::span<const Band> bands, const std::string& segment,
                            MorletFilterBank& bank);

struct ExperimentConfig {
  std::vector<double> pcts{0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 25.0, 37.5, 50.0};
  int reps = 100;
  std::uint64_t base_seed = 0;
  std::vector<Band> bands = default_bands();
  std::string segment = "mi";
};

struct ExperimentResult {
  std::string subject;
  std::vector<ErrorReport> reports;  // (pct, rep) order
  // Per-class repetition errors and their lower medians, keyed by pct.
  std::map<double, std::map<ClassLabel, std::vector<double>>> errors;
  std::map<double, std::map<ClassLabel, double>> medians;
};

/// `base` with the rows of each class's substituted trials replaced, in
/// order, by that class's artificial rows. artificial rows follow
/// plan.artificial.
FeatureSet substitute_features(const FeatureSet& base, const RecombinationPlan& plan, const FeatureSet& artificial);

/// LDA trained on `train`, per-class error on `test`.
ErrorReport evaluate(const FeatureSet& train, const FeatureSet& test);

/// Groups reports (already in (pct, rep) order) into per-class error lists
/// and lower medians.
ExperimentResult tabulate(std::string subject, std::vector<ErrorReport> reports);

/// Train on the pool's training set after substituting pct% of each class
/// (seed base_seed + rep), test on `test`. At pct 0 the training set is the
/// reconstructed originals, evaluated once and replicated over the reps.
ExperimentResult substitution_experiment(const AugmentationPool& pool, const TrialDataset& test,
                                         const ExperimentConfig& cfg, MorletFilterBank& bank);

/// Same experiment from precomputed test features.
ExperimentResult substitution_experiment(const AugmentationPool& pool, const FeatureSet& test,
                                         const ExperimentConfig& cfg, MorletFilterBank& bank);

struct AuditRow {
  double pct = 0.0;
  ClassLabel label;
  double reference = 0.0;
  MadVerdict verdict;
};

/// Double-MAD audit of every nonzero pct against the pct 0 median.
std::vector<AuditRow> audit(const ExperimentResult& result, double threshold = kMadThreshold);

std::string results_csv(const ExperimentResult& result);
std::string medians_csv(const ExperimentResult& result);
std::string audit_csv(const std::string& subject, std::span<const AuditRow> rows);

}  // namespace trialmix
