#include "trialmix/augment.hpp"

#include "trialmix/errors.hpp"
#include "trialmix/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace trialmix {

int max_imf_count(std::span<const SelectionReport> reports) {
  if (reports.empty()) throw DomainError("max_imf_count needs at least one report");
  std::size_t m = 0;
  for (const auto& r : reports) m = std::max(m, r.selected.size());
  return static_cast<int>(m);
}

std::vector<Matrix> normalize_imf_set(const ImfDecomposition& d, const SelectionReport& report, int max_imf) {
  const auto wanted = static_cast<std::size_t>(max_imf);
  if (max_imf < 1 || wanted < report.selected.size()) {
    throw DomainError("max_imf " + std::to_string(max_imf) + " is below the " +
                      std::to_string(report.selected.size()) + " selected IMFs");
  }
  const std::size_t total = d.imf_count();
  for (int idx : report.selected) {
    if (idx < 1 || static_cast<std::size_t>(idx) > total) {
      throw DomainError("selected IMF " + std::to_string(idx) + " outside 1.." + std::to_string(total));
    }
  }
  std::vector<int> keep;
  if (total >= wanted) {
    keep = report.selected;
    std::vector<int> discarded;
    for (int j = 1; j <= static_cast<int>(total); ++j) {
      if (std::find(keep.begin(), keep.end(), j) == keep.end()) discarded.push_back(j);
    }
    const auto means = report.imf_mean_entropy();
    auto entropy_of = [&](int j) {
      return static_cast<std::size_t>(j) <= means.size() ? means[static_cast<std::size_t>(j - 1)] : 0.0;
    };
    std::stable_sort(discarded.begin(), discarded.end(),
                     [&](int a, int b) { return entropy_of(a) > entropy_of(b); });
    for (std::size_t i = 0; keep.size() < wanted; ++i) keep.push_back(discarded[i]);
    std::sort(keep.begin(), keep.end());
  } else {
    keep.resize(total);
    std::iota(keep.begin(), keep.end(), 1);
  }
  std::vector<Matrix> layers;
  layers.reserve(wanted);
  for (int j : keep) layers.push_back(d.imfs[static_cast<std::size_t>(j - 1)]);
  const Matrix zero = Matrix::Zero(d.residuum.rows(), d.residuum.cols());
  while (layers.size() < wanted) layers.push_back(zero);
  return layers;
}

std::vector<const RecombinationPlan::Artificial*> RecombinationPlan::of_class(ClassLabel label) const {
  std::vector<const Artificial*> out;
  for (const auto& a : artificial) {
    if (a.label == label) out.push_back(&a);
  }
  return out;
}

std::string to_json(const RecombinationPlan& plan) {
  nlohmann::json j;
  j["seed"] = plan.seed;
  j["pct"] = plan.pct;
  j["max_imf"] = plan.max_imf;
  nlohmann::json classes = nlohmann::json::object();
  std::set<ClassLabel> labels;
  for (const auto& a : plan.artificial) labels.insert(a.label);
  for (const auto& [label, ids] : plan.substituted) labels.insert(label);
  for (auto label : labels) {
    nlohmann::json c;
    auto tuples = nlohmann::json::array();
    auto ids = nlohmann::json::array();
    for (const auto* a : plan.of_class(label)) {
      tuples.push_back(a->sources);
      ids.push_back(a->trial_id);
    }
    c["tuples"] = tuples;
    c["artificial_trial_ids"] = ids;
    auto it = plan.substituted.find(label);
    c["substituted_trial_ids"] = it == plan.substituted.end() ? std::vector<int>{} : it->second;
    classes[to_string(label)] = c;
  }
  j["classes"] = classes;
  return j.dump(2);
}

RecombinationPlan recombination_plan_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RecombinationPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.pct = j.at("pct").get<double>();
    plan.max_imf = j.at("max_imf").get<int>();
    for (const auto& [name, c] : j.at("classes").items()) {
      const ClassLabel label = parse_class_label(name);
      const auto tuples = c.at("tuples").get<std::vector<std::vector<int>>>();
      const auto ids = c.at("artificial_trial_ids").get<std::vector<int>>();
      if (tuples.size() != ids.size()) throw LoadError("plan class " + name + ": tuple and id counts differ");
      for (std::size_t i = 0; i < ids.size(); ++i) plan.artificial.push_back({ids[i], label, tuples[i]});
      plan.substituted[label] = c.at("substituted_trial_ids").get<std::vector<int>>();
    }
    std::sort(plan.artificial.begin(), plan.artificial.end(),
              [](const auto& a, const auto& b) { return a.trial_id < b.trial_id; });
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed recombination plan: ") + e.what());
  } catch (const DomainError& e) {
    throw LoadError(std::string("malformed recombination plan: ") + e.what());
  }
}

std::uint64_t tuple_capacity(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::uint64_t c = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const auto f = static_cast<std::uint64_t>(n - i);
    if (c > std::numeric_limits<std::uint64_t>::max() / f) return std::numeric_limits<std::uint64_t>::max();
    c *= f;
  }
  return c;
}

namespace {

Matrix sum_layers(const std::vector<const Matrix*>& layers) {
  Matrix s = *layers.front();
  for (std::size_t i = 1; i < layers.size(); ++i) s += *layers[i];
  return s;
}

constexpr std::size_t kMaxRejections = 10000;

Trial artificial_trial(const Trial& first_source, const RecombinationPlan::Artificial& a,
                       const std::vector<const Matrix*>& parts) {
  return Trial{MultichannelSignal(sum_layers(parts), first_source.signal.fs(), first_source.signal.channel_labels()),
               a.label, first_source.run_id, a.trial_id, first_source.segments};
}

}  // namespace

std::vector<RecombinationPlan::Artificial> draw_recombinations(std::span<const SourceTrial> class_trials,
                                                               std::size_t count, std::uint64_t seed,
                                                               int first_trial_id) {
  std::vector<RecombinationPlan::Artificial> out;
  if (count == 0) return out;
  if (class_trials.empty()) throw CapacityError("no source trials to recombine");
  const std::size_t max_imf = class_trials.front().layers->size();
  const ClassLabel label = class_trials.front().trial->label;
  for (const auto& s : class_trials) {
    if (s.layers->size() != max_imf) throw DomainError("source trials carry different layer counts");
    if (s.trial->label != label) throw DomainError("source trials mix classes");
  }
  const std::uint64_t capacity = tuple_capacity(class_trials.size(), max_imf);
  if (count > capacity) {
    throw CapacityError("requested " + std::to_string(count) + " artificial trials but only " +
                        std::to_string(capacity) + " distinct tuples of " + std::to_string(max_imf) +
                        " sources exist among " + std::to_string(class_trials.size()) + " trials");
  }

  Rng rng(seed);
  std::set<std::vector<int>> seen;
  std::vector<std::size_t> order(class_trials.size());
  std::size_t rejections = 0;
  while (out.size() < count) {
    // Partial Fisher-Yates: the first max_imf entries form a uniform tuple of
    // distinct sources.
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < max_imf; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.index(order.size() - i));
      std::swap(order[i], order[j]);
    }
    RecombinationPlan::Artificial entry;
    entry.label = label;
    for (std::size_t slot = 0; slot < max_imf; ++slot) entry.sources.push_back(class_trials[order[slot]].trial->trial_id);
    if (!seen.insert(entry.sources).second) {
      if (++rejections > kMaxRejections) {
        throw CapacityError("gave up after " + std::to_string(kMaxRejections) +
                            " repeated tuples; tuple capacity is " + std::to_string(capacity));
      }
      continue;
    }
    entry.trial_id = first_trial_id + static_cast<int>(out.size());
    out.push_back(std::move(entry));
  }
  return out;
}

ArtificialBatch generate_artificial_trials(std::span<const SourceTrial> class_trials, std::size_t count,
                                           std::uint64_t seed, int first_trial_id) {
  ArtificialBatch batch;
  batch.plan.seed = seed;
  batch.plan.artificial = draw_recombinations(class_trials, count, seed, first_trial_id);
  if (batch.plan.artificial.empty()) return batch;
  batch.plan.max_imf = static_cast<int>(class_trials.front().layers->size());
  std::map<int, const SourceTrial*> by_id;
  for (const auto& s : class_trials) by_id[s.trial->trial_id] = &s;
  for (const auto& a : batch.plan.artificial) {
    std::vector<const Matrix*> parts;
    for (std::size_t slot = 0; slot < a.sources.size(); ++slot) parts.push_back(&(*by_id.at(a.sources[slot])->layers)[slot]);
    batch.trials.push_back(artificial_trial(*by_id.at(a.sources.front())->trial, a, parts));
  }
  return batch;
}

AugmentationPool::AugmentationPool(const TrialDataset& train, std::span<const ImfDecomposition> decompositions,
                                   std::span<const SelectionReport> reports, int max_imf)
    : reconstructed_(train.subject(), train.description(), {}) {
  if (train.empty()) throw DomainError("augmentation pool needs training trials");
  std::map<int, const ImfDecomposition*> by_id;
  for (const auto& d : decompositions) by_id[d.source_trial_id] = &d;
  std::map<int, const SelectionReport*> report_by_id;
  for (const auto& r : reports) report_by_id[r.trial_id] = &r;

  std::vector<SelectionReport> used;
  for (const auto& t : train.trials()) {
    auto it = report_by_id.find(t.trial_id);
    if (it == report_by_id.end()) throw DomainError("no selection report for trial " + std::to_string(t.trial_id));
    used.push_back(*it->second);
  }
  max_imf_ = max_imf > 0 ? max_imf : max_imf_count(used);

  std::vector<Trial> rebuilt;
  int max_id = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Trial& t = train.trials()[i];
    max_id = std::max(max_id, t.trial_id);
    auto it = by_id.find(t.trial_id);
    if (it == by_id.end()) throw DomainError("no decomposition for trial " + std::to_string(t.trial_id));
    auto layers = normalize_imf_set(*it->second, used[i], max_imf_);
    std::vector<const Matrix*> parts;
    for (const auto& l : layers) parts.push_back(&l);
    rebuilt.push_back(Trial{MultichannelSignal(sum_layers(parts), t.signal.fs(), t.signal.channel_labels()),
                            t.label, t.run_id, t.trial_id, t.segments});
    layers_[t.trial_id] = std::move(layers);
  }
  next_id_ = max_id + 1;
  reconstructed_ = TrialDataset(train.subject(), train.description(), std::move(rebuilt));
}

const std::vector<Matrix>& AugmentationPool::layers(int trial_id) const {
  auto it = layers_.find(trial_id);
  if (it == layers_.end()) throw DomainError("trial " + std::to_string(trial_id) + " is not in the pool");
  return it->second;
}

std::vector<ClassLabel> AugmentationPool::classes() const {
  std::set<ClassLabel> s;
  for (const auto& t : reconstructed_.trials()) s.insert(t.label);
  return {s.begin(), s.end()};
}

std::vector<SourceTrial> AugmentationPool::class_trials(ClassLabel label) const {
  std::vector<SourceTrial> out;
  for (const auto& t : reconstructed_.trials()) {
    if (t.label == label) out.push_back({&t, &layers(t.trial_id)});
  }
  return out;
}

std::vector<Trial> synthesize(const AugmentationPool& pool, const RecombinationPlan& plan) {
  std::vector<Trial> out;
  for (const auto& a : plan.artificial) {
    if (a.sources.size() != static_cast<std::size_t>(pool.max_imf())) {
      throw DomainError("plan entry " + std::to_string(a.trial_id) + " has " + std::to_string(a.sources.size()) +
                        " slots, pool max_imf is " + std::to_string(pool.max_imf()));
    }
    std::vector<const Matrix*> parts;
    for (std::size_t slot = 0; slot < a.sources.size(); ++slot) parts.push_back(&pool.layers(a.sources[slot])[slot]);
    out.push_back(artificial_trial(pool.reconstructed().find(a.sources.front()), a, parts));
  }
  return out;
}

RecombinationPlan plan_substitution(const AugmentationPool& pool, double pct, std::uint64_t seed) {
  if (!(pct >= 0.0 && pct <= 100.0)) throw DomainError("substitution percentage must lie in [0, 100]");
  RecombinationPlan plan;
  plan.max_imf = pool.max_imf();
  plan.pct = pct;
  plan.seed = seed;
  int next_id = pool.next_trial_id();
  for (ClassLabel label : pool.classes()) {
    const auto sources = pool.class_trials(label);
    const auto count = static_cast<std::size_t>(std::lround(pct / 100.0 * static_cast<double>(sources.size())));
    plan.substituted[label] = {};
    if (count == 0) continue;

    std::vector<int> ids;
    for (const auto& s : sources) ids.push_back(s.trial->trial_id);
    Rng pick(derive_seed(seed, "pick:" + short_name(label)));
    pick.shuffle(std::span<int>(ids));
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    plan.substituted[label] = std::move(ids);

    auto drawn = draw_recombinations(sources, count, derive_seed(seed, "generate:" + short_name(label)), next_id);
    next_id += static_cast<int>(count);
    for (auto& a : drawn) plan.artificial.push_back(std::move(a));
  }
  return plan;
}

SubstitutionResult substitute_trials(const AugmentationPool& pool, double pct, std::uint64_t seed) {
  auto plan = plan_substitution(pool, pct, seed);
  auto fresh = synthesize(pool, plan);
  std::vector<Trial> trials = pool.reconstructed().trials();
  std::map<int, std::size_t> position;
  for (std::size_t i = 0; i < trials.size(); ++i) position[trials[i].trial_id] = i;
  std::map<int, Trial*> by_id;
  for (auto& t : fresh) by_id[t.trial_id] = &t;
  for (const auto& [label, replaced] : plan.substituted) {
    const auto entries = plan.of_class(label);
    for (std::size_t k = 0; k < replaced.size(); ++k) {
      trials[position.at(replaced[k])] = std::move(*by_id.at(entries[k]->trial_id));
    }
  }
  const auto& base = pool.reconstructed();
  return {TrialDataset(base.subject(), base.description(), std::move(trials)), std::move(plan)};
}

}  // namespace trialmix
