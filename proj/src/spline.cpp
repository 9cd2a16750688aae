#include "trialmix/spline.hpp"

#include "trialmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trialmix {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots) { reset(knots); }

void NaturalCubicSpline::reset(std::span<const double> knots) {
  if (knots.size() < 2) throw DomainError("spline needs at least 2 knots");
  knots_.assign(knots.begin(), knots.end());
  w_samples_ = 0;
  h_.resize(knots_.size() - 1);
  for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
    h_[j] = knots_[j + 1] - knots_[j];
    if (!(h_[j] > 0.0)) throw DomainError("spline knots must be strictly increasing");
  }
  // Interior unknowns M_1..M_{k-2}; M_0 = M_{k-1} = 0.
  const std::size_t m = knots_.size() >= 3 ? knots_.size() - 2 : 0;
  diag_.resize(m);
  upper_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sub = i > 0 ? h_[i] : 0.0;
    double d = 2.0 * (h_[i] + h_[i + 1]);
    if (i > 0) d -= sub * upper_[i - 1];
    diag_[i] = d;
    upper_[i] = h_[i + 1] / d;
  }
}

void NaturalCubicSpline::second_derivatives(std::span<const double> y, std::span<double> M) const {
  const std::size_t k = knots_.size();
  std::fill(M.begin(), M.end(), 0.0);
  if (k < 3) return;
  const std::size_t m = k - 2;
  // Forward sweep, storing the modified rhs in M[1..m].
  for (std::size_t i = 0; i < m; ++i) {
    double rhs = 6.0 * ((y[i + 2] - y[i + 1]) / h_[i + 1] - (y[i + 1] - y[i]) / h_[i]);
    if (i > 0) rhs -= h_[i] * M[i];
    M[i + 1] = rhs / diag_[i];
  }
  for (std::size_t i = m - 1; i-- > 0;) {
    M[i + 1] -= upper_[i] * M[i + 2];
  }
}

void NaturalCubicSpline::prepare_weights(std::size_t n) const {
  if (w_samples_ == n && !w_.a.empty()) return;
  w_samples_ = n;
  w_.a.assign(n, 0.0);
  w_.b.assign(n, 0.0);
  w_.c.assign(n, 0.0);
  w_.d.assign(n, 0.0);
  const std::size_t k = knots_.size();
  // interval_start[j] is the first sample in segment j, where segment 0 is
  // left extrapolation, 1..k-1 are the knot intervals and k is the right side.
  w_.interval_start.assign(k + 2, n);
  std::size_t t = 0;
  w_.interval_start[0] = 0;
  for (std::size_t seg = 0; seg <= k; ++seg) {
    w_.interval_start[seg] = std::min(t, n);
    const double hi = seg < k ? knots_[seg] : std::numeric_limits<double>::infinity();
    for (; t < n && (static_cast<double>(t) < hi || (seg == k - 1 && static_cast<double>(t) <= hi)); ++t) {
      const double x = static_cast<double>(t);
      if (seg == 0) {
        // linear continuation left of the first knot: y0 + s0 (x - t0)
        const double dx = x - knots_[0];
        const double h = h_[0];
        w_.a[t] = 1.0 - dx / h;
        w_.b[t] = dx / h;
        w_.c[t] = 0.0;
        w_.d[t] = -dx * h / 6.0;
      } else if (seg == k) {
        const double dx = x - knots_[k - 1];
        const double h = h_[k - 2];
        w_.a[t] = -dx / h;
        w_.b[t] = 1.0 + dx / h;
        w_.c[t] = dx * h / 6.0;
        w_.d[t] = 0.0;
      } else {
        const double h = h_[seg - 1];
        const double A = (knots_[seg] - x) / h;
        const double B = 1.0 - A;
        w_.a[t] = A;
        w_.b[t] = B;
        w_.c[t] = (A * A * A - A) * h * h / 6.0;
        w_.d[t] = (B * B * B - B) * h * h / 6.0;
      }
    }
  }
  w_.interval_start[k + 1] = n;
}

namespace {

// Interval j of the weight layout uses knots (lo, lo + 1).
inline std::size_t left_knot(std::size_t seg, std::size_t k) {
  if (seg == 0) return 0;
  if (seg == k) return k - 2;
  return seg - 1;
}

}  // namespace

void NaturalCubicSpline::evaluate(std::span<const double> values, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  Matrix v(1, static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), v.data());
  Matrix acc = Matrix::Zero(1, static_cast<Eigen::Index>(out.size()));
  accumulate(v, acc);
  std::copy(acc.data(), acc.data() + acc.size(), out.begin());
}

void NaturalCubicSpline::accumulate(const Matrix& values, Matrix& acc) const {
  const std::size_t k = knots_.size();
  const auto n = static_cast<std::size_t>(acc.cols());
  prepare_weights(n);
  std::vector<double> M(k);
  const double* a = w_.a.data();
  const double* b = w_.b.data();
  const double* c = w_.c.data();
  const double* d = w_.d.data();
  for (Eigen::Index ch = 0; ch < values.rows(); ++ch) {
    const auto y = row_span(values, ch);
    second_derivatives(y, M);
    double* out = acc.data() + ch * acc.cols();
    for (std::size_t seg = 0; seg <= k; ++seg) {
      const std::size_t begin = w_.interval_start[seg];
      const std::size_t end = w_.interval_start[seg + 1];
      if (begin >= end) continue;
      const std::size_t lo = left_knot(seg, k);
      const double y0 = y[lo], y1 = y[lo + 1], m0 = M[lo], m1 = M[lo + 1];
      for (std::size_t t = begin; t < end; ++t) {
        out[t] += a[t] * y0 + b[t] * y1 + c[t] * m0 + d[t] * m1;
      }
    }
  }
}

void NaturalCubicSpline::second_derivatives(const Matrix& values, Matrix& out) const {
  const std::size_t k = knots_.size();
  const auto channels = values.cols();
  // Thomas sweep across rows so the channel loop stays contiguous.
  out.resize(static_cast<Eigen::Index>(k), channels);
  out.row(0).setZero();
  out.row(static_cast<Eigen::Index>(k) - 1).setZero();
  if (k >= 3) {
    const std::size_t m = k - 2;
    for (std::size_t i = 0; i < m; ++i) {
      const double* y0 = values.data() + static_cast<Eigen::Index>(i) * channels;
      const double* y1 = y0 + channels;
      const double* y2 = y1 + channels;
      double* row = out.data() + static_cast<Eigen::Index>(i + 1) * channels;
      const double* prev = out.data() + static_cast<Eigen::Index>(i) * channels;
      const double inv_h1 = 1.0 / h_[i + 1];
      const double inv_h0 = 1.0 / h_[i];
      const double sub = i > 0 ? h_[i] : 0.0;
      const double inv_diag = 1.0 / diag_[i];
      for (Eigen::Index c = 0; c < channels; ++c) {
        const double rhs = 6.0 * ((y2[c] - y1[c]) * inv_h1 - (y1[c] - y0[c]) * inv_h0) - sub * prev[c];
        row[c] = rhs * inv_diag;
      }
    }
    for (std::size_t i = m - 1; i-- > 0;) {
      double* cur = out.data() + static_cast<Eigen::Index>(i + 1) * channels;
      const double* next = cur + channels;
      const double u = upper_[i];
      for (Eigen::Index c = 0; c < channels; ++c) cur[c] -= u * next[c];
    }
  }
}

SplineSumAccumulator::SplineSumAccumulator(std::size_t samples, std::size_t channels, std::size_t block)
    : samples_(samples),
      channels_(channels),
      block_(block),
      blocks_((samples + block - 1) / block),
      state_(Matrix::Zero(static_cast<Eigen::Index>(4 * blocks_), static_cast<Eigen::Index>(channels))),
      jumps_(Matrix::Zero(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(channels))) {}

void SplineSumAccumulator::reset() {
  state_.setZero();
  jumps_.setZero();
}

void SplineSumAccumulator::add(const NaturalCubicSpline& spline, const Matrix& values) {
  const auto x = spline.knots();
  const auto h = spline.spacing();
  const std::size_t k = x.size();
  const auto nc = static_cast<Eigen::Index>(channels_);
  spline.second_derivatives(values, second_);

  // Third-derivative jumps at knots strictly inside a block (block starts
  // carry them in their state). Outside the knot range the spline is linear.
  for (std::size_t j = 0; j < k; ++j) {
    if (x[j] <= 0.0 || x[j] >= static_cast<double>(samples_)) continue;
    const auto t = static_cast<std::size_t>(x[j]);
    if (t % block_ == 0) continue;
    double* out = jumps_.data() + static_cast<Eigen::Index>(t) * nc;
    const double* mj = second_.data() + static_cast<Eigen::Index>(j) * nc;
    if (j == 0) {
      const double inv = 1.0 / h[0];
      for (Eigen::Index c = 0; c < nc; ++c) out[c] += mj[nc + c] * inv;
    } else if (j + 1 == k) {
      const double inv = 1.0 / h[j - 1];
      for (Eigen::Index c = 0; c < nc; ++c) out[c] += mj[c - nc] * inv;
    } else {
      const double inv_r = 1.0 / h[j];
      const double inv_l = 1.0 / h[j - 1];
      for (Eigen::Index c = 0; c < nc; ++c) {
        out[c] += (mj[nc + c] - mj[c]) * inv_r - (mj[c] - mj[c - nc]) * inv_l;
      }
    }
  }

  std::size_t i = 0;  // interval index, x[i] <= t0 < x[i + 1]
  for (std::size_t b = 0; b < blocks_; ++b) {
    const double t0 = static_cast<double>(b * block_);
    double* v = state_.data() + static_cast<Eigen::Index>(4 * b) * nc;
    double* d1 = v + nc;
    double* d2 = d1 + nc;
    double* d3 = d2 + nc;
    if (t0 < x[0]) {
      const double dx = t0 - x[0];
      const double* y0 = values.data();
      const double* y1 = y0 + nc;
      const double* m1 = second_.data() + nc;
      for (Eigen::Index c = 0; c < nc; ++c) {
        const double slope = (y1[c] - y0[c]) / h[0] - h[0] * m1[c] / 6.0;
        v[c] += y0[c] + slope * dx;
        d1[c] += slope;
      }
      continue;
    }
    if (t0 >= x[k - 1]) {
      const double dx = t0 - x[k - 1];
      const double* y0 = values.data() + static_cast<Eigen::Index>(k - 2) * nc;
      const double* y1 = y0 + nc;
      const double* m0 = second_.data() + static_cast<Eigen::Index>(k - 2) * nc;
      const double hh = h[k - 2];
      for (Eigen::Index c = 0; c < nc; ++c) {
        const double slope = (y1[c] - y0[c]) / hh + hh * m0[c] / 6.0;
        v[c] += y1[c] + slope * dx;
        d1[c] += slope;
      }
      continue;
    }
    while (x[i + 1] <= t0) ++i;
    const double hh = h[i];
    const double A = (x[i + 1] - t0) / hh;
    const double B = 1.0 - A;
    const double cA = (A * A * A - A) * hh * hh / 6.0;
    const double cB = (B * B * B - B) * hh * hh / 6.0;
    const double gA = (3.0 * A * A - 1.0) * hh / 6.0;
    const double gB = (3.0 * B * B - 1.0) * hh / 6.0;
    const double* y0 = values.data() + static_cast<Eigen::Index>(i) * nc;
    const double* y1 = y0 + nc;
    const double* m0 = second_.data() + static_cast<Eigen::Index>(i) * nc;
    const double* m1 = m0 + nc;
    for (Eigen::Index c = 0; c < nc; ++c) {
      v[c] += A * y0[c] + B * y1[c] + cA * m0[c] + cB * m1[c];
      d1[c] += (y1[c] - y0[c]) / hh - gA * m0[c] + gB * m1[c];
      d2[c] += A * m0[c] + B * m1[c];
      d3[c] += (m1[c] - m0[c]) / hh;
    }
  }
}

void SplineSumAccumulator::finish(Matrix& out, double scale) {
  const auto nc = static_cast<Eigen::Index>(channels_);
  out.resize(static_cast<Eigen::Index>(samples_), nc);
  std::vector<double> s(4 * channels_);
  double* v = s.data();
  double* d1 = v + nc;
  double* d2 = d1 + nc;
  double* d3 = d2 + nc;
  for (std::size_t b = 0; b < blocks_; ++b) {
    const double* init = state_.data() + static_cast<Eigen::Index>(4 * b) * nc;
    std::copy(init, init + 4 * nc, s.begin());
    const std::size_t begin = b * block_;
    const std::size_t end = std::min(samples_, begin + block_);
    for (std::size_t t = begin; t < end; ++t) {
      double* row = out.data() + static_cast<Eigen::Index>(t) * nc;
      const double* jump = jumps_.data() + static_cast<Eigen::Index>(t) * nc;
      for (Eigen::Index c = 0; c < nc; ++c) {
        d3[c] += jump[c];
        row[c] = scale * v[c];
        v[c] += d1[c] + 0.5 * d2[c] + d3[c] / 6.0;
        d1[c] += d2[c] + 0.5 * d3[c];
        d2[c] += d3[c];
      }
    }
  }
}

}  // namespace trialmix
