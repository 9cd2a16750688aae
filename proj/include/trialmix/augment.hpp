#pragma once

#include "trialmix/selection.hpp"
#include "trialmix/signal.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trialmix {

/// Largest selected-IMF count among the reports.
int max_imf_count(std::span<const SelectionReport> reports);

/// Exactly max_imf layers, ordered fast to slow with zero pads last. Starts
/// from the selected layers; when the decomposition has at least max_imf
/// IMFs, discarded ones are added back in descending mean entropy, otherwise
/// all IMFs are kept and zero layers fill the remainder.
std::vector<Matrix> normalize_imf_set(const ImfDecomposition& d, const SelectionReport& report, int max_imf);

/// Which source trial supplies each slot of each artificial trial, plus the
/// originals those trials replace.
struct RecombinationPlan {
  struct Artificial {
    int trial_id = 0;
    ClassLabel label;
    std::vector<int> sources;  // slot i -> source trial id
  };
  int max_imf = 0;
  double pct = 0.0;
  std::uint64_t seed = 0;
  std::vector<Artificial> artificial;
  std::map<ClassLabel, std::vector<int>> substituted;  // original ids replaced, per class

  std::vector<const Artificial*> of_class(ClassLabel label) const;
};

std::string to_json(const RecombinationPlan& plan);
RecombinationPlan recombination_plan_from_json(std::string_view text);

/// A same-class original trial with its normalised layers.
struct SourceTrial {
  const Trial* trial = nullptr;
  const std::vector<Matrix>* layers = nullptr;
};

struct ArtificialBatch {
  std::vector<Trial> trials;
  RecombinationPlan plan;
};

/// Number of ordered tuples of k distinct items out of n, saturating at
/// UINT64_MAX.
std::uint64_t tuple_capacity(std::size_t n, std::size_t k);

/// Source tuples for `count` artificial trials of one class, drawn as in
/// generate_artificial_trials without building the signals.
std::vector<RecombinationPlan::Artificial> draw_recombinations(std::span<const SourceTrial> class_trials,
                                                               std::size_t count, std::uint64_t seed,
                                                               int first_trial_id);

/// `count` artificial trials whose slot i is layer i of a distinct source
/// trial. Tuples are drawn as random partial permutations and redrawn on
/// repeats; more than 10000 redraws or a count above the tuple capacity
/// throws CapacityError. Trial ids run from first_trial_id upward.
ArtificialBatch generate_artificial_trials(std::span<const SourceTrial> class_trials, std::size_t count,
                                           std::uint64_t seed, int first_trial_id);

/// Training trials of one subject reduced to their max_imf normalised
/// layers. `reconstructed()` holds each original rebuilt from those layers,
/// which is the pct = 0 training set.
class AugmentationPool {
 public:
  // decompositions and reports are matched to trials by trial id. max_imf
  // defaults to the largest selection over all given reports.
  AugmentationPool(const TrialDataset& train, std::span<const ImfDecomposition> decompositions,
                   std::span<const SelectionReport> reports, int max_imf = 0);

  int max_imf() const { return max_imf_; }
  const TrialDataset& reconstructed() const { return reconstructed_; }
  const std::vector<Matrix>& layers(int trial_id) const;
  std::vector<ClassLabel> classes() const;
  std::vector<SourceTrial> class_trials(ClassLabel label) const;
  int next_trial_id() const { return next_id_; }

 private:
  int max_imf_ = 0;
  TrialDataset reconstructed_;
  std::map<int, std::vector<Matrix>> layers_;
  int next_id_ = 1;
};

/// Sum over slots of the assigned source layers, for every artificial entry
/// of the plan.
std::vector<Trial> synthesize(const AugmentationPool& pool, const RecombinationPlan& plan);

struct SubstitutionResult {
  TrialDataset dataset;
  RecombinationPlan plan;
};

/// Chooses round(pct/100 * class size) originals of every class to replace
/// and draws the artificial trials that replace them. The k-th artificial
/// entry of a class replaces the k-th substituted id of that class.
RecombinationPlan plan_substitution(const AugmentationPool& pool, double pct, std::uint64_t seed);

/// Replaces round(pct/100 * class size) randomly chosen reconstructed
/// originals of every class by artificial trials of that class, in place.
SubstitutionResult substitute_trials(const AugmentationPool& pool, double pct, std::uint64_t seed);

}  // namespace trialmix
