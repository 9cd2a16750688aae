// Acceptance checks AC1-AC9. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include "trialmix/augment.hpp"
#include "trialmix/eval.hpp"
#include "trialmix/memd.hpp"
#include "trialmix/pipeline.hpp"
#include "trialmix/rng.hpp"
#include "trialmix/selection.hpp"
#include "trialmix/simulate.hpp"
#include "trialmix/tfr.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#ifndef TRIALMIX_CONFIG_DIR
#define TRIALMIX_CONFIG_DIR "configs"
#endif

using namespace trialmix;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// AC1 and AC2 share the decompositions.
struct Decomposed {
  std::vector<TrialDataset> sets;
  std::vector<ImfDecomposition> decs;
  double seconds = 0.0;
};

Decomposed decompose_mixed_corpus() {
  Decomposed out;
  auto mi = MiProfile::good_performer();
  mi.trials_per_class = 13;
  mi.runs = 1;
  SimConfig es;
  es.seed = 11;
  out.sets.push_back(simulate_mi_dataset(mi, 5));
  out.sets.push_back(simulate_es_corpus(es, 25, 0.0).noisy);
  const auto t0 = Clock::now();
  for (const auto& set : out.sets) {
    const std::size_t n = std::min<std::size_t>(set.size(), 25);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& t = set.trials()[k];
      out.decs.push_back(memd(t.signal, SiftConfig{}, t.trial_id));
    }
  }
  out.seconds = seconds_since(t0);
  return out;
}

Outcome ac1(const Decomposed& d) {
  double worst = 0.0;
  std::size_t k = 0;
  for (const auto& set : d.sets) {
    const std::size_t n = std::min<std::size_t>(set.size(), 25);
    for (std::size_t i = 0; i < n; ++i, ++k) {
      const Matrix diff = reconstruct(d.decs[k]).data() - set.trials()[i].signal.data();
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
  }
  const bool ok = d.decs.size() >= 50 && worst < 1e-8 && d.seconds < 120.0;
  return {ok, std::to_string(d.decs.size()) + " trials, max error " + fmt("%.3g", worst) + " uV, " +
                  fmt("%.1f", d.seconds) + " s"};
}

Outcome ac2(const Decomposed& d) {
  std::size_t aligned = 0;
  for (const auto& dec : d.decs) {
    bool same = dec.residuum.rows() > 0;
    for (const auto& imf : dec.imfs) same = same && imf.rows() == dec.residuum.rows() && imf.cols() == dec.residuum.cols();
    aligned += same ? 1 : 0;
  }
  return {aligned == d.decs.size(), std::to_string(aligned) + "/" + std::to_string(d.decs.size()) +
                                        " decompositions share one IMF count across channels"};
}

Outcome ac3() {
  constexpr double fs = 250.0;
  constexpr std::size_t n = 1000;
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(derive_seed(seed, "acceptance:tones"));
    const double p1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<double> slow(n), fast(n), x(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / fs;
      slow[t] = std::sin(2.0 * w + p1);
      fast[t] = std::sin(25.0 * w + p2);
      x[t] = slow[t] + fast[t];
    }
    const auto d = emd(x, SiftConfig{}, fs);
    double best_slow = -1.0, best_fast = -1.0;
    for (const auto& imf : d.imfs) {
      best_slow = std::max(best_slow, pearson_correlation(row_span(imf, 0), slow));
      best_fast = std::max(best_fast, pearson_correlation(row_span(imf, 0), fast));
    }
    hits += best_slow > 0.9 && best_fast > 0.9 ? 1 : 0;
  }
  return {hits >= 18, std::to_string(hits) + "/20 seeds separate both tones"};
}

Outcome ac4() {
  constexpr double fs = 250.0;
  const WaveletConfig cfg;
  std::string detail;
  bool ok = true;
  for (double f : {8.0, 10.0, 15.0, 20.0, 25.0, 30.0}) {
    std::vector<double> x(1000);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs);
    const auto img = tf_image(x, fs, cfg);
    Eigen::Index row = 0;
    img.power.rowwise().sum().maxCoeff(&row);
    const double peak = img.freqs[static_cast<std::size_t>(row)];
    ok = ok && std::abs(peak - f) <= 1.0;
    detail += fmt("%g", f) + "->" + fmt("%g", peak) + " ";
  }
  return {ok, "peaks " + detail + "Hz"};
}

Outcome ac5() {
  const auto t0 = Clock::now();
  SimConfig cfg;
  cfg.seed = 2024;
  const WaveletConfig wavelet;
  MorletFilterBank bank(cfg.fs, wavelet);
  bool ok = true;
  std::string detail;
  for (double snr : {-20.0, -12.0, 0.0, 10.0, 20.0}) {
    const auto corpus = simulate_es_corpus(cfg, 10, snr);
    const auto& labels = corpus.clean.channel_labels();
    double raw = 0.0, rec = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < corpus.clean.size(); ++k) {
      const auto& clean = corpus.clean.trials()[k].signal;
      const auto& noisy = corpus.noisy.trials()[k].signal;
      const auto d = memd(noisy, SiftConfig{}, corpus.noisy.trials()[k].trial_id);
      const auto report = select_relevant_imfs(d, bank);
      const auto denoised = reconstruct(d, std::span<const int>(report.selected));
      for (std::size_t c = 0; c < labels.size(); ++c) {
        if (std::find(cfg.ocular.channels.begin(), cfg.ocular.channels.end(), labels[c]) != cfg.ocular.channels.end()) {
          continue;
        }
        raw += pearson_correlation(clean.channel(c), noisy.channel(c));
        rec += pearson_correlation(clean.channel(c), denoised.channel(c));
        ++count;
      }
    }
    raw /= count;
    rec /= count;
    const bool level_ok = rec >= raw && (snr < -12.0 || rec - raw >= 0.05);
    ok = ok && level_ok;
    detail += fmt("%+g dB", snr) + " raw " + fmt("%.3f", raw) + " sel " + fmt("%.3f", rec) + (level_ok ? "" : " (miss)") + "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 600.0;
  return {ok, detail + fmt("%.0f s", secs)};
}

struct GoodPerformer {
  ExperimentResult result;
  double seconds = 0.0;
};

GoodPerformer good_performer_experiment() {
  const auto t0 = Clock::now();
  const auto cfg = load_pipeline_config(fs::path(TRIALMIX_CONFIG_DIR) / "good_performer.json");
  const TrialDataset data = simulate_mi_dataset(cfg.profile, stage_seed(cfg, Stage::Simulate));
  const TrialDataset train = data.filter_run(cfg.train_run);
  MorletFilterBank bank(data.fs(), cfg.wavelet);
  std::vector<ImfDecomposition> decs;
  std::vector<SelectionReport> reports;
  for (const auto& t : train.trials()) {
    decs.push_back(memd(t.signal, cfg.sift, t.trial_id));
    reports.push_back(select_relevant_imfs(decs.back(), bank));
  }
  const AugmentationPool pool(train, decs, reports);
  ExperimentConfig ec;
  ec.pcts = cfg.pcts;
  ec.reps = cfg.reps;
  ec.base_seed = stage_seed(cfg, Stage::Augment);
  ec.bands = cfg.bands;
  ec.segment = cfg.segment;
  GoodPerformer g{substitution_experiment(pool, data.filter_run(cfg.test_run), ec, bank), 0.0};
  g.seconds = seconds_since(t0);
  return g;
}

Outcome ac6(const GoodPerformer& g) {
  const auto& med = g.result.medians;
  bool ok = med.count(0.0) == 1;
  std::string detail;
  for (double pct : {2.5, 5.0, 10.0, 12.5, 25.0}) {
    if (!med.count(pct) || !ok) {
      ok = false;
      continue;
    }
    for (const auto& [label, m] : med.at(pct)) {
      const double delta = std::abs(m - med.at(0.0).at(label));
      ok = ok && delta <= 10.0;
      detail += fmt("%g%%", pct) + " " + short_name(label) + " " + fmt("%.1f", m) + " ";
    }
  }
  if (ok) {
    detail = "reference " + short_name(kLeftWrist) + " " + fmt("%.1f", med.at(0.0).at(kLeftWrist)) + " " +
             short_name(kRightWrist) + " " + fmt("%.1f", med.at(0.0).at(kRightWrist)) + "; medians " + detail;
  }
  return {ok, detail + "(" + std::to_string(g.result.reports.size()) + " runs, " + fmt("%.0f s", g.seconds) + ")"};
}

Outcome ac7(const GoodPerformer& g) {
  int unflagged = 0, levels = 0, zero_mad = 0;
  for (const auto& [pct, per_class] : g.result.errors) {
    if (pct == 0.0) continue;
    ++levels;
    bool flagged = false;
    for (const auto& [label, errs] : per_class) {
      const auto v = double_mad_outliers(errs, g.result.medians.at(0.0).at(label));
      flagged = flagged || v.reference_flagged;
      zero_mad += v.status == MadStatus::ZeroMad ? 1 : 0;
    }
    unflagged += flagged ? 0 : 1;
  }

  // Gross outliers injected into every repetition list are always flagged.
  bool injected_ok = true;
  for (const auto& [pct, per_class] : g.result.errors) {
    for (const auto& [label, errs] : per_class) {
      auto spread = errs;
      Rng rng(derive_seed(static_cast<std::uint64_t>(pct * 10.0), "acceptance:inject"));
      for (auto& e : spread) e += 2.0 * rng.normal();
      spread[spread.size() / 2] = median(spread) + 50.0;
      const auto v = double_mad_outliers(spread, median(spread));
      injected_ok = injected_ok && v.outlier[spread.size() / 2];
    }
  }

  // Lists more than half identical have a zero MAD.
  bool zero_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(trial), "acceptance:zero_mad"));
    std::vector<double> list(100, 12.5);
    for (std::size_t i = 0; i < 49; ++i) list[static_cast<std::size_t>(rng.index(list.size()))] = rng.uniform(0.0, 100.0);
    zero_ok = zero_ok && double_mad_outliers(list, 12.5).status == MadStatus::ZeroMad;
  }

  const bool ok = levels == 8 && unflagged >= 6 && injected_ok && zero_ok;
  return {ok, "reference unflagged at " + std::to_string(unflagged) + "/" + std::to_string(levels) +
                  " levels (" + std::to_string(zero_mad) + " ZERO_MAD lists); injected outliers " +
                  (injected_ok ? "all flagged" : "missed") + "; majority-identical lists " +
                  (zero_ok ? "ZERO_MAD" : "not ZERO_MAD")};
}

Outcome ac8() {
  // Separable blobs: d = 32, 40 + 40 samples, means 6 sigma apart.
  Rng rng(derive_seed(8, "acceptance:blobs"));
  Matrix x(80, 32);
  std::vector<ClassLabel> y;
  const double half = 3.0 / std::sqrt(32.0);
  for (Eigen::Index i = 0; i < 80; ++i) {
    const bool right = i % 2 == 1;
    y.push_back(right ? kRightWrist : kLeftWrist);
    for (Eigen::Index k = 0; k < 32; ++k) x(i, k) = rng.normal() + (right ? half : -half);
  }
  const auto blobs = per_class_error(lda_train(x, y), x, y);
  double blob_worst = 0.0;
  for (const auto& [label, e] : blobs.error_pct) blob_worst = std::max(blob_worst, e);

  const auto poor = MiProfile::poor_performer();
  const auto bands = default_bands();
  std::map<ClassLabel, double> mean_err;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto data = simulate_mi_dataset(poor, seed);
    MorletFilterBank bank(data.fs(), WaveletConfig{});
    const auto r = evaluate(extract_features(data.filter_run(1), bands, "mi", bank),
                            extract_features(data.filter_run(2), bands, "mi", bank));
    for (const auto& [label, e] : r.error_pct) mean_err[label] += e / 20.0;
  }
  bool ok = blob_worst < 5.0;
  std::string detail = "blobs " + fmt("%.1f%%", blob_worst) + "; zero-attenuation";
  for (const auto& [label, e] : mean_err) {
    ok = ok && std::abs(e - 50.0) <= 12.0;
    detail += " " + short_name(label) + " " + fmt("%.1f%%", e);
  }
  return {ok && mean_err.size() == 2, detail};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream is(e.path(), std::ios::binary);
    std::string bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel == "summary.json") {
      // Wall-clock timings are the only field allowed to differ.
      const auto pos = bytes.find("\"timings\"");
      bytes = bytes.substr(0, pos);
    }
    files[rel] = std::move(bytes);
  }
  return files;
}

Outcome ac9() {
  const auto t0 = Clock::now();
  const auto cfg = load_pipeline_config(fs::path(TRIALMIX_CONFIG_DIR) / "good_performer.json");
  const fs::path root = fs::temp_directory_path() / ("trialmix_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  Pipeline(cfg, root / "a").run_all();
  Pipeline(cfg, root / "b").run_all();
  const auto a = snapshot(root / "a");
  const auto b = snapshot(root / "b");
  std::size_t differ = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    differ += it == b.end() || it->second != bytes ? 1 : 0;
  }
  differ += b.size() > a.size() ? b.size() - a.size() : 0;
  fs::remove_all(root);
  return {differ == 0 && !a.empty(), std::to_string(a.size()) + " files compared, " + std::to_string(differ) +
                                         " differ (" + fmt("%.0f s", seconds_since(t0)) + ")"};
}

void report(int n, const std::function<Outcome()>& check, int& failures) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::printf("AC%d %s %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;
  Decomposed mixed;
  try {
    mixed = decompose_mixed_corpus();
  } catch (const std::exception& e) {
    std::printf("corpus decomposition failed: %s\n", e.what());
  }
  report(1, [&] { return ac1(mixed); }, failures);
  report(2, [&] { return ac2(mixed); }, failures);
  report(3, ac3, failures);
  report(4, ac4, failures);
  report(5, ac5, failures);
  GoodPerformer good;
  bool have_good = false;
  try {
    good = good_performer_experiment();
    have_good = true;
  } catch (const std::exception& e) {
    std::printf("good-performer experiment failed: %s\n", e.what());
  }
  report(6, [&] { return have_good ? ac6(good) : Outcome{false, "no experiment"}; }, failures);
  report(7, [&] { return have_good ? ac7(good) : Outcome{false, "no experiment"}; }, failures);
  report(8, ac8, failures);
  report(9, ac9, failures);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
