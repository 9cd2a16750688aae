#pragma once

#include "trialmix/signal.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace trialmix {

namespace detail {
class ComplexFft;
}

struct WaveletConfig {
  double f_min = 8.0;
  double f_max = 30.0;
  double f_step = 1.0;
  double cycles = 7.0;

  // Throws DomainError unless 0 < f_min < f_max < fs/2, f_step > 0, cycles > 0.
  void validate(double fs) const;
  // f_min, f_min + f_step, ... up to f_max (inclusive, with a small tolerance).
  std::vector<double> frequencies() const;
};

/// Power rows (frequency ascending) by time columns, in µV².
struct TfImage {
  Matrix power;
  std::vector<double> freqs;
  double fs = 1.0;
};

/// Unit-energy complex Morlet centred on f with Gaussian width
/// cycles / (2 pi f) seconds, sampled on +-ceil(5 sigma fs) samples.
std::vector<std::complex<double>> morlet_wavelet(double f, double fs, double cycles);

/// |x * w_f|^2 with same-length centred output, computed by zero-padded FFT
/// convolution.
std::vector<double> morlet_convolution_power(std::span<const double> x, double f, double fs,
                                             const WaveletConfig& cfg);

TfImage tf_image(std::span<const double> x, double fs, const WaveletConfig& cfg);

/// Reusable Morlet filter bank for one sampling rate and frequency grid.
/// Wavelet spectra and FFT plans are cached per transform length, so a bank
/// must not be shared between threads.
class MorletFilterBank {
 public:
  MorletFilterBank(double fs, const WaveletConfig& cfg);
  ~MorletFilterBank();
  MorletFilterBank(const MorletFilterBank&) = delete;
  MorletFilterBank& operator=(const MorletFilterBank&) = delete;

  double fs() const { return fs_; }
  const WaveletConfig& config() const { return cfg_; }
  const std::vector<double>& freqs() const { return freqs_; }
  // Longest wavelet support in samples (lowest frequency).
  std::size_t max_support() const;

  // Full image, freqs() rows by x.size() columns.
  Matrix power(std::span<const double> x);
  // Columns [cols.begin, cols.end) of the full image. Only the input samples
  // that reach those columns are transformed.
  Matrix power(std::span<const double> x, SampleRange cols);

 private:
  struct Plan;
  Plan& plan_for(std::size_t n);

  double fs_;
  WaveletConfig cfg_;
  std::vector<double> freqs_;
  std::vector<std::vector<std::complex<double>>> wavelets_;
  std::map<std::size_t, std::unique_ptr<Plan>> plans_;
};

struct Band {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

// alpha [8, 13] Hz and beta [13, 30] Hz, both inclusive.
std::vector<Band> default_bands();

/// One feature per (channel, band): the mean over the segment's columns of
/// the summed power rows with frequency inside [lo, hi]. Channel-major order.
std::vector<double> psd_features(const MultichannelSignal& s, SampleRange segment,
                                 std::span<const Band> bands, MorletFilterBank& bank);
std::vector<double> psd_features(const Trial& trial, std::span<const Band> bands,
                                 const std::string& segment, MorletFilterBank& bank);

/// Per-image min-max scaling to 0..255 (rounded). A constant image maps to 0.
std::vector<std::uint8_t> gray_levels(const Matrix& power);

/// 8-bit binary PGM, highest frequency on the top row, plus a JSON sidecar
/// with the grid, fs and the power range used for scaling.
void write_pgm(const TfImage& img, const std::filesystem::path& path);

}  // namespace trialmix
