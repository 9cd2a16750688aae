#pragma once

#include "trialmix/signal.hpp"

#include <span>
#include <vector>

namespace trialmix {

/// Natural cubic spline through knots (t_j, y_j), evaluated on the integer
/// sample grid 0..n-1. Several value rows can share one knot set; the
/// tridiagonal factorisation is done once per knot set. Outside the knot range
/// the spline continues linearly (zero curvature at the ends).
class NaturalCubicSpline {
 public:
  // knots strictly increasing, at least 2 of them.
  explicit NaturalCubicSpline(std::span<const double> knots);
  // Refactor for a new knot set, reusing storage.
  void reset(std::span<const double> knots);

  std::size_t knot_count() const { return knots_.size(); }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> spacing() const { return h_; }

  // Second derivatives for one row of knot values.
  void second_derivatives(std::span<const double> values, std::span<double> out) const;

  // out[t] = S(t) for t = 0..out.size()-1.
  void evaluate(std::span<const double> values, std::span<double> out) const;

  // acc.row(c) += S_c(t), where S_c interpolates values.row(c) (values is
  // channels x knots).
  void accumulate(const Matrix& values, Matrix& acc) const;

  // Second derivatives for every column of values (knots x channels) at once.
  void second_derivatives(const Matrix& values, Matrix& out) const;

 private:
  struct Weights {
    std::vector<double> a, b, c, d;  // per sample
    std::vector<std::size_t> interval_start;  // first sample of each knot interval
  };
  void prepare_weights(std::size_t n) const;

  std::vector<double> knots_;
  std::vector<double> h_;
  std::vector<double> diag_;   // Thomas factorisation of the interior system
  std::vector<double> upper_;
  mutable Weights w_;
  mutable std::size_t w_samples_ = 0;
};

/// Running sum of natural cubic splines on integer knots, expanded onto the
/// sample grid once at the end. Each added spline costs O(knots + blocks)
/// per channel instead of O(samples): its value and first three derivatives
/// are recorded at every block start and its third-derivative jumps at the
/// knots inside the grid. finish() walks each block with exact cubic Taylor
/// steps, so round-off only grows over one block.
class SplineSumAccumulator {
 public:
  SplineSumAccumulator(std::size_t samples, std::size_t channels, std::size_t block = 64);

  void reset();
  // knots: integer-valued, strictly increasing; values: knots x channels.
  void add(const NaturalCubicSpline& spline, const Matrix& values);
  // out (samples x channels) = scale * sum of added splines.
  void finish(Matrix& out, double scale);

 private:
  std::size_t samples_;
  std::size_t channels_;
  std::size_t block_;
  std::size_t blocks_;
  Matrix state_;  // 4 rows per block: value, first, second, third derivative
  Matrix jumps_;  // samples x channels
  Matrix second_;
};

}  // namespace trialmix
