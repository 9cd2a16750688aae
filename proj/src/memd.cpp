#include "trialmix/memd.hpp"

#include "binary_io.hpp"
#include "trialmix/errors.hpp"
#include "trialmix/spline.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace trialmix {

void SiftConfig::validate(std::size_t channels) const {
  if (max_sift_iterations < 1) throw DomainError("max_sift_iterations must be >= 1");
  if (!(envelope_mean_tolerance > 0.0)) throw DomainError("envelope_mean_tolerance must be > 0");
  if (max_imfs < 1) throw DomainError("max_imfs must be >= 1");
  if (boundary_extension < 1) throw DomainError("boundary_extension must be >= 1");
  if (static_cast<std::size_t>(num_directions) < 2 * channels) {
    throw DomainError("num_directions (" + std::to_string(num_directions) + ") must be >= 2 x channels (" +
                      std::to_string(channels) + ")");
  }
}

namespace {

// Plateau-free input: a branch-free scan. Returns false on the first
// equal neighbour pair.
bool find_strict_extrema(std::span<const double> x, Extrema& out) {
  const std::size_t n = x.size();
  out.maxima.resize(n / 2 + 1);
  out.minima.resize(n / 2 + 1);
  std::size_t nmax = 0, nmin = 0;
  double prev = x[1] - x[0];
  bool flat = prev == 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double next = x[i + 1] - x[i];
    flat |= next == 0.0;
    out.maxima[nmax] = i;
    nmax += static_cast<std::size_t>((prev > 0.0) & (next < 0.0));
    out.minima[nmin] = i;
    nmin += static_cast<std::size_t>((prev < 0.0) & (next > 0.0));
    prev = next;
  }
  out.maxima.resize(nmax);
  out.minima.resize(nmin);
  return !flat;
}

}  // namespace

Extrema find_extrema(std::span<const double> x) {
  Extrema out;
  const std::size_t n = x.size();
  if (n < 3) return out;
  if (find_strict_extrema(x, out)) return out;
  out = Extrema{};
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] == x[i - 1]) {
      ++i;
      continue;
    }
    const bool rising = x[i] > x[i - 1];
    std::size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 < n) {
      if (rising && x[j + 1] < x[i]) out.maxima.push_back((i + j) / 2);
      if (!rising && x[j + 1] > x[i]) out.minima.push_back((i + j) / 2);
    }
    i = j + 1;
  }
  return out;
}

std::size_t count_zero_crossings(std::span<const double> x) {
  std::size_t count = 0;
  int previous = 0;
  for (double v : x) {
    const int sign = (v > 0.0) - (v < 0.0);
    if (sign == 0) continue;
    if (previous != 0 && sign != previous) ++count;
    previous = sign;
  }
  return count;
}

namespace {

// Reversed copy of v[from, to), bounds clamped to the vector.
std::vector<std::size_t> reversed_slice(const std::vector<std::size_t>& v, std::ptrdiff_t from,
                                        std::ptrdiff_t to) {
  const auto size = static_cast<std::ptrdiff_t>(v.size());
  from = std::clamp<std::ptrdiff_t>(from, 0, size);
  to = std::clamp<std::ptrdiff_t>(to, 0, size);
  std::vector<std::size_t> out;
  for (std::ptrdiff_t k = to - 1; k >= from; --k) out.push_back(v[static_cast<std::size_t>(k)]);
  return out;
}

std::vector<double> mirror(const std::vector<std::size_t>& idx, std::size_t sym) {
  std::vector<double> t;
  t.reserve(idx.size());
  for (auto i : idx) t.push_back(2.0 * static_cast<double>(sym) - static_cast<double>(i));
  return t;
}

}  // namespace

EnvelopeKnots envelope_knots(std::span<const double> p, const Extrema& ext, std::size_t mirror_count) {
  const auto& imax = ext.maxima;
  const auto& imin = ext.minima;
  if (imax.empty() || imin.empty() || ext.count() < 3) return {};
  const auto nb = static_cast<std::ptrdiff_t>(mirror_count);
  const std::size_t last = p.size() - 1;
  const auto nmax = static_cast<std::ptrdiff_t>(imax.size());
  const auto nmin = static_cast<std::ptrdiff_t>(imin.size());

  std::vector<std::size_t> lmax, lmin, rmax, rmin;
  std::size_t lsym = 0, rsym = last;

  if (imax.front() < imin.front()) {
    if (p[0] > p[imin.front()]) {
      lmax = reversed_slice(imax, 1, nb + 1);
      lmin = reversed_slice(imin, 0, nb);
      lsym = imax.front();
    } else {
      lmax = reversed_slice(imax, 0, nb);
      lmin = reversed_slice(imin, 0, nb - 1);
      lmin.push_back(0);
      lsym = 0;
    }
  } else {
    if (p[0] < p[imax.front()]) {
      lmax = reversed_slice(imax, 0, nb);
      lmin = reversed_slice(imin, 1, nb + 1);
      lsym = imin.front();
    } else {
      lmax = reversed_slice(imax, 0, nb - 1);
      lmax.push_back(0);
      lmin = reversed_slice(imin, 0, nb);
      lsym = 0;
    }
  }

  if (imax.back() < imin.back()) {
    if (p[last] < p[imax.back()]) {
      rmax = reversed_slice(imax, nmax - nb, nmax);
      rmin = reversed_slice(imin, nmin - nb - 1, nmin - 1);
      rsym = imin.back();
    } else {
      rmax = reversed_slice(imax, nmax - nb + 1, nmax);
      rmax.insert(rmax.begin(), last);
      rmin = reversed_slice(imin, nmin - nb, nmin);
      rsym = last;
    }
  } else {
    if (p[last] > p[imin.back()]) {
      rmax = reversed_slice(imax, nmax - nb - 1, nmax - 1);
      rmin = reversed_slice(imin, nmin - nb, nmin);
      rsym = imax.back();
    } else {
      rmax = reversed_slice(imax, nmax - nb, nmax);
      rmin = reversed_slice(imin, nmin - nb + 1, nmin);
      rmin.insert(rmin.begin(), last);
      rsym = last;
    }
  }

  auto tlmax = mirror(lmax, lsym);
  auto tlmin = mirror(lmin, lsym);
  auto trmax = mirror(rmax, rsym);
  auto trmin = mirror(rmin, rsym);

  // Symmetrised part too short to cover the first sample: mirror about it.
  if ((!tlmin.empty() && tlmin.front() > 0.0) || (!tlmax.empty() && tlmax.front() > 0.0)) {
    if (lsym == imax.front()) {
      lmax = reversed_slice(imax, 0, nb);
    } else {
      lmin = reversed_slice(imin, 0, nb);
    }
    lsym = 0;
    tlmax = mirror(lmax, lsym);
  }
  if ((!trmin.empty() && trmin.back() < static_cast<double>(last)) ||
      (!trmax.empty() && trmax.back() < static_cast<double>(last))) {
    if (rsym == imax.back()) {
      rmax = reversed_slice(imax, nmax - nb, nmax);
    } else {
      rmin = reversed_slice(imin, nmin - nb, nmin);
    }
    rsym = last;
    trmax = mirror(rmax, rsym);
  }

  EnvelopeKnots knots;
  knots.times.reserve(tlmax.size() + imax.size() + trmax.size());
  auto push = [&](double t, std::size_t src) {
    if (!knots.times.empty() && !(t > knots.times.back())) return;
    knots.times.push_back(t);
    knots.source.push_back(src);
  };
  for (std::size_t k = 0; k < lmax.size(); ++k) push(tlmax[k], lmax[k]);
  for (auto i : imax) push(static_cast<double>(i), i);
  for (std::size_t k = 0; k < rmax.size(); ++k) push(trmax[k], rmax[k]);
  if (knots.times.size() < 2) return {};
  return knots;
}

std::vector<double> envelope(std::span<const double> x, std::span<const std::size_t> extrema) {
  if (extrema.size() < 2) throw MonotoneResidual("envelope needs at least 2 extrema");
  std::vector<double> t(extrema.size());
  std::vector<double> y(extrema.size());
  for (std::size_t j = 0; j < extrema.size(); ++j) {
    t[j] = static_cast<double>(extrema[j]);
    y[j] = x[extrema[j]];
  }
  NaturalCubicSpline spline(t);
  std::vector<double> out(x.size());
  spline.evaluate(y, out);
  return out;
}

std::vector<double> envelope(std::span<const double> x, EnvelopeSide side, std::size_t mirror_count) {
  std::vector<double> projection(x.begin(), x.end());
  Extrema ext = find_extrema(x);
  if (side == EnvelopeSide::Lower) {
    for (auto& v : projection) v = -v;
    std::swap(ext.maxima, ext.minima);
  }
  const auto knots = envelope_knots(projection, ext, mirror_count);
  if (knots.times.empty()) throw MonotoneResidual("too few extrema for an envelope");
  std::vector<double> y(knots.source.size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = x[knots.source[j]];
  NaturalCubicSpline spline(knots.times);
  std::vector<double> out(x.size());
  spline.evaluate(y, out);
  return out;
}

namespace {

std::vector<std::size_t> first_primes(std::size_t count) {
  std::vector<std::size_t> primes;
  for (std::size_t candidate = 2; primes.size() < count; ++candidate) {
    bool prime = true;
    for (auto p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(candidate);
  }
  return primes;
}

double radical_inverse(std::size_t base, std::size_t index) {
  double result = 0.0;
  double scale = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale /= static_cast<double>(base);
  }
  return result;
}

}  // namespace

DirectionSet hammersley_directions(std::size_t n, std::size_t K) {
  if (n < 1) throw DomainError("direction dimension must be >= 1");
  if (K < 2 * n) throw DomainError("need at least 2n directions");
  if (n == 1 && K != 2) throw DomainError("a 0-sphere holds only 2 distinct directions");
  const auto primes = first_primes(n > 1 ? n - 1 : 0);
  DirectionSet set;
  set.vectors.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < K; ++k) {
    double norm2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const double u = d == 0 ? (static_cast<double>(k) + 0.5) / static_cast<double>(K)
                              : radical_inverse(primes[d - 1], k + 1);
      const double g = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
      set.vectors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) = g;
      norm2 += g * g;
    }
    set.vectors.row(static_cast<Eigen::Index>(k)) /= std::sqrt(norm2);
  }
  return set;
}

namespace {

// Shared sifting loop. Each direction contributes the spline through the
// signal values at the maxima of its projection; the mean over contributing
// directions is the local mean envelope. With directions {+1, -1} in one
// dimension this is the classic (upper + lower) / 2.
//
// Works on a samples x channels copy so every per-sample update runs over a
// contiguous channel vector.
class Sifter {
 public:
  Sifter(const DirectionSet& dirs, const SiftConfig& cfg, std::size_t samples)
      : dirs_(dirs), cfg_(cfg), column_(samples), sum_(samples, static_cast<std::size_t>(dirs.vectors.cols())) {}

  ImfDecomposition run(const Matrix& x) {
    ImfDecomposition out;
    Matrix r = x.transpose();
    Matrix h, m(r.rows(), r.cols());
    while (out.imfs.size() < static_cast<std::size_t>(cfg_.max_imfs) && !exhausted(r)) {
      h = r;
      const int imf_number = static_cast<int>(out.imfs.size()) + 1;
      for (int it = 0; it < cfg_.max_sift_iterations; ++it) {
        if (!mean_envelope(h, m)) break;
        if (!m.allFinite()) {
          throw NumericError("non-finite mean envelope at sift iteration " + std::to_string(it + 1) +
                             " of IMF " + std::to_string(imf_number));
        }
        const double energy = h.squaredNorm();
        if (energy == 0.0) break;
        if (m.squaredNorm() / energy < cfg_.envelope_mean_tolerance && is_imf(h)) break;
        h -= m;
      }
      r -= h;
      out.imfs.push_back(h.transpose());
    }
    out.residuum = r.transpose();
    return out;
  }

 private:
  // All direction projections at once, one column per direction.
  void project(const Matrix& h) { projections_.noalias() = h * dirs_.vectors.transpose(); }

  std::span<const double> projection(std::size_t k) const {
    return {projections_.data() + static_cast<Eigen::Index>(k) * projections_.rows(),
            static_cast<std::size_t>(projections_.rows())};
  }

  bool exhausted(const Matrix& r) {
    project(r);
    for (std::size_t k = 0; k < dirs_.count(); ++k) {
      if (find_extrema(projection(k)).count() >= 3) return false;
    }
    return true;
  }

  bool mean_envelope(const Matrix& h, Matrix& m) {
    project(h);
    sum_.reset();
    int used = 0;
    for (std::size_t k = 0; k < dirs_.count(); ++k) {
      const auto p = projection(k);
      const Extrema ext = find_extrema(p);
      const auto knots = envelope_knots(p, ext, static_cast<std::size_t>(cfg_.boundary_extension));
      if (knots.times.empty()) continue;
      values_.resize(static_cast<Eigen::Index>(knots.source.size()), h.cols());
      for (std::size_t j = 0; j < knots.source.size(); ++j) {
        values_.row(static_cast<Eigen::Index>(j)) = h.row(static_cast<Eigen::Index>(knots.source[j]));
      }
      spline_.reset(knots.times);
      sum_.add(spline_, values_);
      ++used;
    }
    if (used == 0) return false;
    sum_.finish(m, 1.0 / static_cast<double>(used));
    return true;
  }

  bool is_imf(const Matrix& h) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      for (Eigen::Index t = 0; t < h.rows(); ++t) column_[static_cast<std::size_t>(t)] = h(t, c);
      const auto extrema = static_cast<std::ptrdiff_t>(find_extrema(column_).count());
      const auto zc = static_cast<std::ptrdiff_t>(count_zero_crossings(column_));
      if (std::abs(extrema - zc) > 1) return false;
    }
    return true;
  }

  const DirectionSet& dirs_;
  const SiftConfig& cfg_;
  Eigen::MatrixXd projections_;
  std::vector<double> column_;
  Matrix values_;
  SplineSumAccumulator sum_;
  NaturalCubicSpline spline_{std::array<double, 2>{0.0, 1.0}};
};

}  // namespace

ImfDecomposition emd(std::span<const double> x, const SiftConfig& cfg, double fs) {
  if (x.size() < 4) throw DomainError("EMD needs at least 4 samples");
  cfg.validate(1);
  Matrix signal(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), signal.data());
  if (!signal.allFinite()) throw DomainError("EMD input contains non-finite samples");
  DirectionSet pm;
  pm.vectors.resize(2, 1);
  pm.vectors << 1.0, -1.0;
  Sifter sifter(pm, cfg, x.size());
  auto d = sifter.run(signal);
  d.fs = fs;
  d.channel_labels = {"x"};
  return d;
}

ImfDecomposition memd(const MultichannelSignal& s, const SiftConfig& cfg, int source_trial_id) {
  if (s.samples() < 4) throw DomainError("MEMD needs at least 4 samples");
  ImfDecomposition d;
  if (s.channels() == 1) {
    d = emd(s.channel(0), cfg, s.fs());
  } else {
    cfg.validate(s.channels());
    const auto dirs = hammersley_directions(s.channels(), static_cast<std::size_t>(cfg.num_directions));
    Sifter sifter(dirs, cfg, s.samples());
    d = sifter.run(s.data());
  }
  d.fs = s.fs();
  d.channel_labels = s.channel_labels();
  d.source_trial_id = source_trial_id;
  return d;
}

void write_decomposition(const ImfDecomposition& d, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(d.residuum.rows()));
  detail::write_le<std::uint64_t>(os, d.imfs.size());
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(d.residuum.cols()));
  auto write_layer = [&](const Matrix& layer) {
    for (Eigen::Index i = 0; i < layer.size(); ++i) detail::write_le(os, layer.data()[i]);
  };
  for (const auto& imf : d.imfs) write_layer(imf);
  write_layer(d.residuum);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

ImfDecomposition read_decomposition(const std::filesystem::path& path, double fs,
                                    std::vector<std::string> channel_labels, int source_trial_id) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open decomposition " + path.string());
  std::uint64_t channels = 0, n_imfs = 0, samples = 0;
  if (!detail::read_le(is, channels) || !detail::read_le(is, n_imfs) || !detail::read_le(is, samples)) {
    throw LoadError("truncated header in " + path.string());
  }
  if (channels != channel_labels.size()) {
    throw LoadError(path.string() + " holds " + std::to_string(channels) + " channels, expected " +
                    std::to_string(channel_labels.size()));
  }
  auto read_layer = [&]() {
    Matrix layer(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples));
    for (Eigen::Index i = 0; i < layer.size(); ++i) {
      if (!detail::read_le(is, layer.data()[i])) throw LoadError("truncated layer data in " + path.string());
    }
    return layer;
  };
  ImfDecomposition d;
  for (std::uint64_t i = 0; i < n_imfs; ++i) d.imfs.push_back(read_layer());
  d.residuum = read_layer();
  d.fs = fs;
  d.channel_labels = std::move(channel_labels);
  d.source_trial_id = source_trial_id;
  return d;
}

}  // namespace trialmix
