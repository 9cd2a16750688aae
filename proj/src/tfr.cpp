#include "trialmix/tfr.hpp"

#include "fft.hpp"
#include "trialmix/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace trialmix {

using cplx = std::complex<double>;

void WaveletConfig::validate(double fs) const {
  if (!(fs > 0.0)) throw DomainError("sampling rate must be positive");
  if (!(f_min > 0.0) || !(f_min < f_max) || !(f_max < fs / 2.0)) {
    throw DomainError("wavelet grid must satisfy 0 < f_min < f_max < fs/2 (got " + std::to_string(f_min) +
                      ", " + std::to_string(f_max) + ", fs " + std::to_string(fs) + ")");
  }
  if (!(f_step > 0.0)) throw DomainError("f_step must be positive");
  if (!(cycles > 0.0)) throw DomainError("cycles must be positive");
}

std::vector<double> WaveletConfig::frequencies() const {
  std::vector<double> f;
  const auto n = static_cast<std::size_t>(std::floor((f_max - f_min) / f_step + 1e-9)) + 1;
  f.reserve(n);
  for (std::size_t i = 0; i < n; ++i) f.push_back(f_min + static_cast<double>(i) * f_step);
  return f;
}

std::vector<cplx> morlet_wavelet(double f, double fs, double cycles) {
  const double sigma = cycles / (2.0 * std::numbers::pi * f);
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(5.0 * sigma * fs));
  std::vector<cplx> w(static_cast<std::size_t>(2 * half + 1));
  double energy = 0.0;
  for (std::ptrdiff_t m = -half; m <= half; ++m) {
    const double tau = static_cast<double>(m) / fs;
    const double envelope = std::exp(-tau * tau / (2.0 * sigma * sigma));
    const cplx v = std::polar(envelope, 2.0 * std::numbers::pi * f * tau);
    w[static_cast<std::size_t>(m + half)] = v;
    energy += envelope * envelope;
  }
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& v : w) v *= scale;
  return w;
}

namespace {

void wavelet_spectrum(const std::vector<cplx>& w, detail::ComplexFft& fft, std::vector<cplx>& out) {
  cplx* buf = fft.data();
  std::fill(buf, buf + fft.size(), cplx{});
  std::copy(w.begin(), w.end(), buf);
  fft.forward();
  out.assign(buf, buf + fft.size());
}

void signal_spectrum(std::span<const double> x, detail::ComplexFft& fft, std::vector<cplx>& out) {
  cplx* buf = fft.data();
  std::fill(buf, buf + fft.size(), cplx{});
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  fft.forward();
  out.assign(buf, buf + fft.size());
}

// power[t - first] = |(x * w)(t)|^2 for t in [first, last), where x starts at
// global sample `offset` and has spectrum X.
void convolve_power(const std::vector<cplx>& X, const std::vector<cplx>& W, std::size_t half,
                    std::size_t offset, std::size_t first, std::size_t last, detail::ComplexFft& fft,
                    double* power) {
  cplx* buf = fft.data();
  const std::size_t n = fft.size();
  for (std::size_t i = 0; i < n; ++i) buf[i] = X[i] * W[i];
  fft.inverse();
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t t = first; t < last; ++t) {
    power[t - first] = std::norm(buf[t - offset + half] * scale);
  }
}

}  // namespace

std::vector<double> morlet_convolution_power(std::span<const double> x, double f, double fs,
                                             const WaveletConfig& cfg) {
  if (!(fs > 0.0)) throw DomainError("sampling rate must be positive");
  if (!(f > 0.0) || !(f < fs / 2.0)) {
    throw DomainError("frequency " + std::to_string(f) + " Hz outside (0, fs/2)");
  }
  if (!(cfg.cycles > 0.0)) throw DomainError("cycles must be positive");
  const auto w = morlet_wavelet(f, fs, cfg.cycles);
  if (x.size() < w.size()) {
    throw DomainError("signal of " + std::to_string(x.size()) + " samples is shorter than the " +
                      std::to_string(w.size()) + "-sample wavelet at " + std::to_string(f) + " Hz");
  }
  detail::ComplexFft fft(detail::next_pow2(x.size() + w.size() - 1));
  std::vector<cplx> X, W;
  wavelet_spectrum(w, fft, W);
  signal_spectrum(x, fft, X);
  std::vector<double> out(x.size());
  convolve_power(X, W, (w.size() - 1) / 2, 0, 0, x.size(), fft, out.data());
  return out;
}

TfImage tf_image(std::span<const double> x, double fs, const WaveletConfig& cfg) {
  MorletFilterBank bank(fs, cfg);
  return TfImage{bank.power(x), bank.freqs(), fs};
}

struct MorletFilterBank::Plan {
  explicit Plan(std::size_t n) : fft(n) {}
  detail::ComplexFft fft;
  std::vector<std::vector<cplx>> spectra;
  std::vector<cplx> signal;
};

MorletFilterBank::MorletFilterBank(double fs, const WaveletConfig& cfg) : fs_(fs), cfg_(cfg) {
  cfg.validate(fs);
  freqs_ = cfg.frequencies();
  for (double f : freqs_) wavelets_.push_back(morlet_wavelet(f, fs, cfg.cycles));
}

MorletFilterBank::~MorletFilterBank() = default;

std::size_t MorletFilterBank::max_support() const {
  std::size_t m = 0;
  for (const auto& w : wavelets_) m = std::max(m, w.size());
  return m;
}

MorletFilterBank::Plan& MorletFilterBank::plan_for(std::size_t n) {
  auto& slot = plans_[n];
  if (!slot) {
    slot = std::make_unique<Plan>(n);
    slot->spectra.resize(wavelets_.size());
    for (std::size_t r = 0; r < wavelets_.size(); ++r) wavelet_spectrum(wavelets_[r], slot->fft, slot->spectra[r]);
  }
  return *slot;
}

Matrix MorletFilterBank::power(std::span<const double> x) { return power(x, SampleRange{0, x.size()}); }

Matrix MorletFilterBank::power(std::span<const double> x, SampleRange cols) {
  const std::size_t n = x.size();
  const std::size_t support = max_support();
  if (n < support) {
    throw DomainError("signal of " + std::to_string(n) + " samples is shorter than the " +
                      std::to_string(support) + "-sample wavelet at " + std::to_string(freqs_.front()) + " Hz");
  }
  if (cols.begin > cols.end || cols.end > n) throw DomainError("column range outside the signal");
  Matrix out(static_cast<Eigen::Index>(freqs_.size()), static_cast<Eigen::Index>(cols.size()));
  if (cols.size() == 0) return out;

  const std::size_t half = (support - 1) / 2;
  const std::size_t s0 = cols.begin > half ? cols.begin - half : 0;
  const std::size_t s1 = std::min(n, cols.end + half);
  Plan& plan = plan_for(detail::next_pow2(s1 - s0 + support - 1));
  signal_spectrum(x.subspan(s0, s1 - s0), plan.fft, plan.signal);
  for (std::size_t r = 0; r < freqs_.size(); ++r) {
    convolve_power(plan.signal, plan.spectra[r], (wavelets_[r].size() - 1) / 2, s0, cols.begin, cols.end,
                   plan.fft, out.data() + static_cast<Eigen::Index>(r) * out.cols());
  }
  return out;
}

std::vector<Band> default_bands() { return {{"alpha", 8.0, 13.0}, {"beta", 13.0, 30.0}}; }

std::vector<double> psd_features(const MultichannelSignal& s, SampleRange segment, std::span<const Band> bands,
                                 MorletFilterBank& bank) {
  if (segment.size() == 0 || segment.end > s.samples()) throw DomainError("feature segment empty or out of range");
  const auto& freqs = bank.freqs();
  std::vector<std::vector<Eigen::Index>> rows(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t r = 0; r < freqs.size(); ++r) {
      if (freqs[r] >= bands[b].lo - 1e-9 && freqs[r] <= bands[b].hi + 1e-9) {
        rows[b].push_back(static_cast<Eigen::Index>(r));
      }
    }
    if (rows[b].empty()) throw DomainError("band '" + bands[b].name + "' contains no wavelet frequency");
  }
  std::vector<double> features;
  features.reserve(s.channels() * bands.size());
  for (std::size_t c = 0; c < s.channels(); ++c) {
    const Matrix p = bank.power(s.channel(c), segment);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      double total = 0.0;
      for (auto r : rows[b]) total += p.row(r).sum();
      features.push_back(total / static_cast<double>(segment.size()));
    }
  }
  return features;
}

std::vector<double> psd_features(const Trial& trial, std::span<const Band> bands, const std::string& segment,
                                 MorletFilterBank& bank) {
  return psd_features(trial.signal, trial.segment(segment), bands, bank);
}

std::vector<std::uint8_t> gray_levels(const Matrix& power) {
  std::vector<std::uint8_t> levels(static_cast<std::size_t>(power.size()), 0);
  if (power.size() == 0) return levels;
  const double lo = power.minCoeff();
  const double hi = power.maxCoeff();
  const double range = hi - lo;
  if (!(range > 0.0) || !std::isfinite(range)) return levels;
  const double scale = 255.0 / range;
  for (Eigen::Index i = 0; i < power.size(); ++i) {
    levels[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(std::clamp(std::lround((power.data()[i] - lo) * scale), 0L, 255L));
  }
  return levels;
}

void write_pgm(const TfImage& img, const std::filesystem::path& path) {
  const auto rows = static_cast<std::size_t>(img.power.rows());
  const auto cols = static_cast<std::size_t>(img.power.cols());
  const auto levels = gray_levels(img.power);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (std::size_t r = rows; r-- > 0;) {
    os.write(reinterpret_cast<const char*>(levels.data() + r * cols), static_cast<std::streamsize>(cols));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());

  nlohmann::json meta;
  meta["f_min"] = img.freqs.empty() ? 0.0 : img.freqs.front();
  meta["f_max"] = img.freqs.empty() ? 0.0 : img.freqs.back();
  meta["f_step"] = img.freqs.size() > 1 ? img.freqs[1] - img.freqs[0] : 0.0;
  meta["fs"] = img.fs;
  meta["min_power"] = img.power.size() ? img.power.minCoeff() : 0.0;
  meta["max_power"] = img.power.size() ? img.power.maxCoeff() : 0.0;
  auto sidecar = path;
  sidecar.replace_extension(".json");
  std::ofstream js(sidecar);
  if (!js) throw std::runtime_error("cannot write " + sidecar.string());
  js << meta.dump(2) << '\n';
}

}  // namespace trialmix
