#include "trialmix/eval.hpp"

#include "trialmix/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace trialmix {

LdaModel lda_train(const Eigen::MatrixXd& features, std::span<const ClassLabel> labels, double ridge) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DomainError("feature rows and labels differ in count");
  }
  if (features.cols() < 1) throw DomainError("LDA needs at least one feature");
  const std::set<ClassLabel> present(labels.begin(), labels.end());
  if (present.size() != 2) {
    throw DomainError("LDA needs exactly two classes, got " + std::to_string(present.size()));
  }
  LdaModel m;
  m.classes = {*present.begin(), *present.rbegin()};
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  std::size_t total = 0;
  for (int k = 0; k < 2; ++k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == m.classes[static_cast<std::size_t>(k)]) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.size() < 2) {
      throw DomainError("class " + to_string(m.classes[static_cast<std::size_t>(k)]) +
                        " has fewer than two training samples");
    }
    Eigen::MatrixXd x = features(rows, Eigen::all);
    Eigen::VectorXd mu = x.colwise().mean().transpose();
    x.rowwise() -= mu.transpose();
    scatter.noalias() += x.transpose() * x;
    m.means[static_cast<std::size_t>(k)] = std::move(mu);
    total += rows.size();
  }
  m.covariance = scatter / static_cast<double>(total - 2);
  const double trace = m.covariance.trace();
  const double shrink = trace > 0.0 ? ridge * trace / static_cast<double>(d) : 1.0;
  m.covariance.diagonal().array() += shrink;
  Eigen::LLT<Eigen::MatrixXd> llt(m.covariance);
  if (llt.info() != Eigen::Success) throw NumericError("regularised covariance is not positive definite");
  m.weights = llt.solve(m.means[1] - m.means[0]);
  m.bias = -0.5 * m.weights.dot(m.means[0] + m.means[1]);
  if (!m.weights.allFinite() || !std::isfinite(m.bias)) throw NumericError("non-finite LDA weights");
  return m;
}

std::vector<ClassLabel> predict(const LdaModel& model, const Eigen::MatrixXd& features) {
  std::vector<ClassLabel> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) out.push_back(model.predict(features.row(i).transpose()));
  return out;
}

ErrorReport per_class_error(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
  if (truth.size() != predicted.size()) throw DomainError("truth and prediction counts differ");
  ErrorReport r;
  std::map<ClassLabel, std::size_t> wrong;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.n_test[truth[i]];
    wrong[truth[i]] += predicted[i] != truth[i] ? 1 : 0;
  }
  for (const auto& [label, n] : r.n_test) {
    r.error_pct[label] = 100.0 * static_cast<double>(wrong[label]) / static_cast<double>(n);
  }
  return r;
}

ErrorReport per_class_error(const LdaModel& model, const Eigen::MatrixXd& features,
                            std::span<const ClassLabel> labels) {
  const auto predicted = predict(model, features);
  return per_class_error(labels, predicted);
}

std::string to_string(MadStatus status) { return status == MadStatus::ZeroMad ? "ZERO_MAD" : "OK"; }

std::size_t MadVerdict::outlier_count() const {
  return static_cast<std::size_t>(std::count(outlier.begin(), outlier.end(), true));
}

namespace {

double side_score(double x, double m, double left, double right) {
  if (x == m) return 0.0;
  const double mad = x < m ? left : right;
  if (mad == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(x - m) / mad;
}

}  // namespace

MadVerdict double_mad_outliers(std::span<const double> observations, double reference, double threshold) {
  if (observations.size() < 3) throw DomainError("double MAD needs at least 3 observations");
  MadVerdict v;
  v.median = median({observations.begin(), observations.end()});
  std::vector<double> left, right;
  for (double x : observations) {
    if (x <= v.median) left.push_back(v.median - x);
    if (x >= v.median) right.push_back(x - v.median);
  }
  v.left_mad = median(std::move(left));
  v.right_mad = median(std::move(right));
  for (double x : observations) {
    const double s = side_score(x, v.median, v.left_mad, v.right_mad);
    v.scores.push_back(s);
    v.outlier.push_back(s > threshold);
  }
  const double ref_mad = reference <= v.median ? v.left_mad : v.right_mad;
  if (ref_mad == 0.0) {
    v.status = MadStatus::ZeroMad;
    v.reference_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    v.reference_score = std::abs(reference - v.median) / ref_mad;
    v.reference_flagged = v.reference_score > threshold;
  }
  return v;
}

FeatureSet extract_features(std::span<const Trial> trials, std::span<const Band> bands, const std::string& segment,
                            MorletFilterBank& bank) {
  FeatureSet f;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto row = psd_features(trials[i], bands, segment, bank);
    if (i == 0) f.features.resize(static_cast<Eigen::Index>(trials.size()), static_cast<Eigen::Index>(row.size()));
    f.features.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), f.features.cols());
    f.labels.push_back(trials[i].label);
    f.trial_ids.push_back(trials[i].trial_id);
  }
  return f;
}

FeatureSet extract_features(const TrialDataset& d, std::span<const Band> bands, const std::string& segment,
                            MorletFilterBank& bank) {
  return extract_features(std::span<const Trial>(d.trials()), bands, segment, bank);
}

ExperimentResult substitution_experiment(const AugmentationPool& pool, const TrialDataset& test,
                                         const ExperimentConfig& cfg, MorletFilterBank& bank) {
  return substitution_experiment(pool, extract_features(test, cfg.bands, cfg.segment, bank), cfg, bank);
}

FeatureSet substitute_features(const FeatureSet& base, const RecombinationPlan& plan, const FeatureSet& artificial) {
  if (artificial.trial_ids.size() != plan.artificial.size()) {
    throw DomainError("artificial feature rows do not match the plan");
  }
  FeatureSet out = base;
  std::map<int, Eigen::Index> row_of;
  for (std::size_t i = 0; i < base.trial_ids.size(); ++i) row_of[base.trial_ids[i]] = static_cast<Eigen::Index>(i);
  std::map<int, Eigen::Index> art_row;
  for (std::size_t i = 0; i < artificial.trial_ids.size(); ++i) {
    if (artificial.trial_ids[i] != plan.artificial[i].trial_id) {
      throw DomainError("artificial feature rows are not in plan order");
    }
    art_row[artificial.trial_ids[i]] = static_cast<Eigen::Index>(i);
  }
  for (const auto& [label, replaced] : plan.substituted) {
    const auto fresh = plan.of_class(label);
    if (fresh.size() != replaced.size()) throw DomainError("plan substitutes and artificial counts differ");
    for (std::size_t k = 0; k < replaced.size(); ++k) {
      auto it = row_of.find(replaced[k]);
      if (it == row_of.end()) throw DomainError("substituted trial " + std::to_string(replaced[k]) + " not found");
      const Eigen::Index src = art_row.at(fresh[k]->trial_id);
      out.features.row(it->second) = artificial.features.row(src);
      out.labels[static_cast<std::size_t>(it->second)] = artificial.labels[static_cast<std::size_t>(src)];
      out.trial_ids[static_cast<std::size_t>(it->second)] = fresh[k]->trial_id;
    }
  }
  return out;
}

ErrorReport evaluate(const FeatureSet& train, const FeatureSet& test) {
  return per_class_error(lda_train(train.features, train.labels), test.features, test.labels);
}

ExperimentResult tabulate(std::string subject, std::vector<ErrorReport> reports) {
  ExperimentResult result;
  result.subject = std::move(subject);
  for (const auto& r : reports) {
    for (const auto& [label, e] : r.error_pct) result.errors[r.pct][label].push_back(e);
  }
  for (const auto& [pct, by_class] : result.errors) {
    for (const auto& [label, errs] : by_class) result.medians[pct][label] = lower_median(errs);
  }
  result.reports = std::move(reports);
  return result;
}

ExperimentResult substitution_experiment(const AugmentationPool& pool, const FeatureSet& test,
                                         const ExperimentConfig& cfg, MorletFilterBank& bank) {
  if (cfg.reps < 1) throw DomainError("experiment needs at least one repetition");
  const FeatureSet base = extract_features(pool.reconstructed(), cfg.bands, cfg.segment, bank);
  const ErrorReport reference = evaluate(base, test);

  std::vector<ErrorReport> reports;
  for (double pct : cfg.pcts) {
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(rep);
      ErrorReport r;
      if (pct == 0.0) {
        r = reference;
      } else {
        const auto sub = substitute_trials(pool, pct, seed);
        std::vector<Trial> artificial;
        for (const auto& a : sub.plan.artificial) artificial.push_back(sub.dataset.find(a.trial_id));
        const FeatureSet art = extract_features(artificial, cfg.bands, cfg.segment, bank);
        r = evaluate(substitute_features(base, sub.plan, art), test);
      }
      r.pct = pct;
      r.rep = rep;
      r.seed = pct == 0.0 ? 0 : seed;
      reports.push_back(std::move(r));
    }
  }
  return tabulate(pool.reconstructed().subject(), std::move(reports));
}

std::vector<AuditRow> audit(const ExperimentResult& result, double threshold) {
  auto ref_it = result.medians.find(0.0);
  if (ref_it == result.medians.end()) throw DomainError("audit needs a pct 0 reference");
  std::vector<AuditRow> rows;
  for (const auto& [pct, by_class] : result.errors) {
    if (pct == 0.0) continue;
    for (const auto& [label, errs] : by_class) {
      const double ref = ref_it->second.at(label);
      rows.push_back({pct, label, ref, double_mad_outliers(errs, ref, threshold)});
    }
  }
  return rows;
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string results_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "subject,pct,rep,class,error_rate\n";
  for (const auto& r : result.reports) {
    for (const auto& [label, e] : r.error_pct) {
      os << result.subject << ',' << num(r.pct) << ',' << r.rep << ',' << short_name(label) << ',' << num(e) << '\n';
    }
  }
  return os.str();
}

std::string medians_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "subject,pct,class,median_error\n";
  for (const auto& [pct, by_class] : result.medians) {
    for (const auto& [label, m] : by_class) {
      os << result.subject << ',' << num(pct) << ',' << short_name(label) << ',' << num(m) << '\n';
    }
  }
  return os.str();
}

std::string audit_csv(const std::string& subject, std::span<const AuditRow> rows) {
  std::ostringstream os;
  os << "subject,pct,class,status,n_outliers,reference,reference_flag,median,left_mad,right_mad\n";
  for (const auto& r : rows) {
    const auto& v = r.verdict;
    os << subject << ',' << num(r.pct) << ',' << short_name(r.label) << ',' << to_string(v.status) << ','
       << v.outlier_count() << ',' << num(r.reference) << ',' << (v.reference_flagged ? 1 : 0) << ','
       << num(v.median) << ',' << num(v.left_mad) << ',' << num(v.right_mad) << '\n';
  }
  return os.str();
}

}  // namespace trialmix
