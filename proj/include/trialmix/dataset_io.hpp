#pragma once

#include "trialmix/signal.hpp"

#include <filesystem>

namespace trialmix {

enum class SampleFormat { Csv, F64 };

/// Reads `manifest.json` and the per-trial sample files it names. Files
/// ending in `.csv` hold one row per sample and one column per channel;
/// `.f64` files hold little-endian doubles, one channel after another.
/// Throws LoadError naming the trial for malformed or inconsistent input.
TrialDataset load_dataset(const std::filesystem::path& dir);

/// Writes `manifest.json` plus one `trial_<run>_<id>.<ext>` file per trial.
/// CSV values carry 17 significant digits, so both formats round-trip
/// exactly.
void save_dataset(const TrialDataset& d, const std::filesystem::path& dir,
                  SampleFormat format = SampleFormat::F64);

}  // namespace trialmix
