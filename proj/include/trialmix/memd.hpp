#pragma once

#include "trialmix/signal.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace trialmix {

struct SiftConfig {
  int max_sift_iterations = 10;
  // Sifting stops once sum(m^2) / sum(h^2) drops below this and the detail
  // passes the zero-crossing/extrema check.
  double envelope_mean_tolerance = 1e-8;
  int num_directions = 64;
  int max_imfs = 12;
  // Extrema mirrored at each end before spline interpolation.
  int boundary_extension = 2;

  void validate(std::size_t channels) const;
};

/// Unit vectors on the (n-1)-sphere, one row per direction.
struct DirectionSet {
  Matrix vectors;  // K x n

  std::size_t count() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(vectors.cols()); }
};

class MonotoneResidual : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;
  std::size_t count() const { return maxima.size() + minima.size(); }
};

/// Strict interior local extrema. A flat plateau counts once, at its middle
/// sample (lower index when the plateau has even length). Endpoints never
/// qualify.
Extrema find_extrema(std::span<const double> x);

std::size_t count_zero_crossings(std::span<const double> x);

/// Knot positions for an envelope through the maxima of `projection`,
/// mirrored at both ends (Rilling-style symmetry about the boundary extremum
/// or the end sample). `source` gives the sample whose value each knot
/// carries. Empty when there are too few extrema.
struct EnvelopeKnots {
  std::vector<double> times;
  std::vector<std::size_t> source;
};
EnvelopeKnots envelope_knots(std::span<const double> projection, const Extrema& ext,
                             std::size_t mirror_count);

/// Natural cubic spline through (i, x[i]) for the given extremum indices,
/// evaluated at every sample. No boundary extension; two knots give a
/// straight line. Throws MonotoneResidual with fewer than 2 knots.
std::vector<double> envelope(std::span<const double> x, std::span<const std::size_t> extrema);

enum class EnvelopeSide { Upper, Lower };

/// Envelope through the maxima (Upper) or minima (Lower) of x after
/// mirroring `mirror_count` extrema at each end. Throws MonotoneResidual
/// when x has too few extrema.
std::vector<double> envelope(std::span<const double> x, EnvelopeSide side, std::size_t mirror_count = 2);

/// K directions from a Hammersley point set pushed through the inverse
/// normal CDF and normalised, which spreads them over the (n-1)-sphere.
/// Deterministic in (n, K).
DirectionSet hammersley_directions(std::size_t n, std::size_t K);

/// Univariate EMD. Upper and lower envelopes are natural cubic splines
/// through the mirrored extrema; the detail is sifted until its mean
/// envelope is negligible and it passes the IMF count check.
ImfDecomposition emd(std::span<const double> x, const SiftConfig& cfg = {}, double fs = 1.0);

/// Multivariate EMD over all channels of `s` with cfg.num_directions
/// projections. Every channel gets the same number of IMFs. A single-channel
/// signal is handed to emd().
ImfDecomposition memd(const MultichannelSignal& s, const SiftConfig& cfg = {}, int source_trial_id = 0);

// trial_<id>.imf.f64: three little-endian uint64 {n_channels, n_imfs,
// n_samples}, then n_imfs IMF layers followed by the residuum, each layer
// stored channel by channel as little-endian float64.
void write_decomposition(const ImfDecomposition& d, const std::filesystem::path& path);
ImfDecomposition read_decomposition(const std::filesystem::path& path, double fs,
                                    std::vector<std::string> channel_labels, int source_trial_id);

}  // namespace trialmix
