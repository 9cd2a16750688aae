#include "helpers.hpp"
#include "trialmix/errors.hpp"
#include "trialmix/memd.hpp"
#include "trialmix/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace trialmix;

namespace {

Matrix noise_matrix(std::size_t channels, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double max_reconstruction_error(const ImfDecomposition& d, const Matrix& x) {
  return (reconstruct(d).data() - x).cwiseAbs().maxCoeff();
}

double zero_crossing_rate(std::span<const double> x) {
  return static_cast<double>(count_zero_crossings(x)) / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("find_extrema examples") {
  const auto sine = testing::tone(100, 1.0, 100.0);
  const auto e = find_extrema(sine);
  CHECK(e.maxima.size() == 1);
  CHECK(e.minima.size() == 1);

  const std::vector<double> up{1, 2, 3, 4, 5};
  CHECK(find_extrema(up).count() == 0);

  const std::vector<double> plateau{0, 1, 1, 0};
  const auto p = find_extrema(plateau);
  CHECK(p.maxima == std::vector<std::size_t>{1});
  CHECK(p.minima.empty());

  const std::vector<double> wide{3, 0, 0, 0, 3};
  CHECK(find_extrema(wide).minima == std::vector<std::size_t>{2});
}

TEST_CASE("find_extrema fast path agrees with plateau handling on random data") {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(200);
    for (double& v : x) v = static_cast<double>(rng.index(5));
    const auto e = find_extrema(x);
    for (auto i : e.maxima) {
      CHECK(i > 0);
      CHECK(i + 1 < x.size());
      std::size_t lo = i, hi = i;
      while (lo > 0 && x[lo - 1] == x[i]) --lo;
      while (hi + 1 < x.size() && x[hi + 1] == x[i]) ++hi;
      REQUIRE(lo > 0);
      REQUIRE(hi + 1 < x.size());
      CHECK(x[lo - 1] < x[i]);
      CHECK(x[hi + 1] < x[i]);
      CHECK(i == lo + (hi - lo) / 2);
    }
  }
}

TEST_CASE("envelope of a pure tone tracks its amplitude") {
  const auto x = testing::tone(1000, 5.0, 250.0, 2.0, 0.3);
  const auto up = envelope(x, EnvelopeSide::Upper);
  const auto lo = envelope(x, EnvelopeSide::Lower);
  for (std::size_t t = 100; t < 900; ++t) {
    CHECK(std::abs(up[t] - 2.0) < 0.04);
    CHECK(std::abs(lo[t] + 2.0) < 0.04);
  }
}

TEST_CASE("envelope interpolates its knots and is linear for two") {
  const std::vector<double> x{0, 3, 1, 2, 0, 5, 1};
  const std::vector<std::size_t> knots{1, 5};
  const auto e = envelope(x, knots);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(e[t] == doctest::Approx(3.0 + 0.5 * (static_cast<double>(t) - 1.0)));
  const std::vector<std::size_t> three{1, 3, 5};
  const auto f = envelope(x, three);
  for (auto k : three) CHECK(f[k] == doctest::Approx(x[k]).epsilon(1e-14));
  const std::vector<std::size_t> one{1};
  CHECK_THROWS_AS(envelope(x, one), MonotoneResidual);
}

TEST_CASE("hammersley directions") {
  const auto a = hammersley_directions(2, 8);
  CHECK(a.count() == 8);
  for (Eigen::Index k = 0; k < 8; ++k) CHECK(std::abs(a.vectors.row(k).norm() - 1.0) < 1e-12);

  const auto b = hammersley_directions(16, 64);
  for (Eigen::Index i = 0; i < 64; ++i) {
    CHECK(std::abs(b.vectors.row(i).norm() - 1.0) < 1e-12);
    for (Eigen::Index j = i + 1; j < 64; ++j) CHECK((b.vectors.row(i) - b.vectors.row(j)).norm() > 1e-6);
  }
  CHECK(hammersley_directions(16, 64).vectors == b.vectors);
  CHECK_THROWS_AS(hammersley_directions(4, 7), DomainError);
  CHECK_THROWS_AS(hammersley_directions(1, 4), DomainError);
}

TEST_CASE("SiftConfig validation") {
  SiftConfig c;
  CHECK_NOTHROW(c.validate(19));
  c.num_directions = 30;
  CHECK_THROWS_AS(c.validate(19), DomainError);
  c = SiftConfig{};
  c.max_sift_iterations = 0;
  CHECK_THROWS_AS(c.validate(1), DomainError);
}

TEST_CASE("emd of a pure tone") {
  const auto x = testing::tone(500, 10.0, 250.0);
  const auto d = emd(x, {}, 250.0);
  REQUIRE(d.imf_count() >= 1);
  CHECK(pearson_correlation(row_span(d.imfs[0], 0), x) > 0.95);
  double energy = 0.0, res = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    energy += x[t] * x[t];
    res += d.residuum(0, static_cast<Eigen::Index>(t)) * d.residuum(0, static_cast<Eigen::Index>(t));
  }
  CHECK(res < 0.05 * energy);
}

TEST_CASE("emd separates a 2 Hz + 25 Hz tone pair") {
  const auto slow = testing::tone(2500, 2.0, 250.0, 1.0, 0.4);
  const auto fast = testing::tone(2500, 25.0, 250.0, 1.0, 1.1);
  std::vector<double> x(slow.size());
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = slow[t] + fast[t];
  const auto d = emd(x, {}, 250.0);
  double best_fast = -1.0, best_slow = -1.0;
  for (const auto& imf : d.imfs) {
    best_fast = std::max(best_fast, pearson_correlation(row_span(imf, 0), fast));
    best_slow = std::max(best_slow, pearson_correlation(row_span(imf, 0), slow));
  }
  CHECK(best_fast > 0.9);
  CHECK(best_slow > 0.9);
}

TEST_CASE("emd of a constant signal has no IMFs") {
  const std::vector<double> x(64, 3.5);
  const auto d = emd(x);
  CHECK(d.imf_count() == 0);
  CHECK((d.residuum.array() == 3.5).all());
}

TEST_CASE("extracted IMFs have near-zero mean") {
  const auto slow = testing::tone(1000, 3.0, 250.0);
  const auto fast = testing::tone(1000, 30.0, 250.0, 0.5);
  std::vector<double> x(1000);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = slow[t] + fast[t];
  const auto d = emd(x);
  REQUIRE(d.imf_count() >= 2);
  const double sd = std::sqrt(mean_square(x));
  for (const auto& imf : d.imfs) CHECK(std::abs(mean(row_span(imf, 0))) < 1e-3 * sd);
}

TEST_CASE("memd reconstruction identity, alignment and determinism") {
  SiftConfig cfg;
  cfg.num_directions = 16;
  const Matrix x = noise_matrix(4, 800, 21);
  const MultichannelSignal s(x, 250.0, testing::labels(4));
  const auto d = memd(s, cfg, 5);
  CHECK(d.source_trial_id == 5);
  REQUIRE(d.imf_count() >= 2);
  for (const auto& imf : d.imfs) {
    CHECK(imf.rows() == 4);
    CHECK(imf.cols() == 800);
  }
  CHECK(max_reconstruction_error(d, x) < 1e-8);

  const auto again = memd(s, cfg, 5);
  REQUIRE(again.imf_count() == d.imf_count());
  for (std::size_t j = 0; j < d.imf_count(); ++j) CHECK(again.imfs[j] == d.imfs[j]);

  for (Eigen::Index c = 0; c < 4; ++c) {
    CHECK(zero_crossing_rate(row_span(d.imfs[0], c)) > zero_crossing_rate(row_span(d.imfs[1], c)));
  }
}

TEST_CASE("memd treats identical channels identically") {
  SiftConfig cfg;
  cfg.num_directions = 16;
  const Matrix one = noise_matrix(1, 600, 2);
  Matrix x(2, 600);
  x.row(0) = one.row(0);
  x.row(1) = one.row(0);
  const auto d = memd(MultichannelSignal(x, 100.0, testing::labels(2)), cfg);
  for (const auto& imf : d.imfs) CHECK((imf.row(0) - imf.row(1)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("doubling the direction count keeps the identity and IMF 1 stable") {
  // Quadrature pair: every projection carries both tones at full amplitude.
  Matrix x(2, 1000);
  for (Eigen::Index t = 0; t < 1000; ++t) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / 250.0;
    x(0, t) = std::sin(3.0 * w) + 0.5 * std::sin(30.0 * w);
    x(1, t) = std::cos(3.0 * w) + 0.5 * std::cos(30.0 * w);
  }
  const MultichannelSignal s(x, 250.0, testing::labels(2));
  SiftConfig a, b;
  b.num_directions = 128;
  const auto da = memd(s, a);
  const auto db = memd(s, b);
  CHECK(max_reconstruction_error(da, x) < 1e-8);
  CHECK(max_reconstruction_error(db, x) < 1e-8);
  CHECK((da.imfs[0] - db.imfs[0]).norm() < 0.1 * da.imfs[0].norm());
}

TEST_CASE("decomposition files round-trip") {
  SiftConfig cfg;
  cfg.num_directions = 8;
  const Matrix x = noise_matrix(3, 300, 6);
  const auto d = memd(MultichannelSignal(x, 50.0, testing::labels(3)), cfg, 12);
  testing::TempDir dir("imf");
  const auto path = dir.path() / "trial_12.imf.f64";
  write_decomposition(d, path);
  const auto back = read_decomposition(path, 50.0, testing::labels(3), 12);
  REQUIRE(back.imf_count() == d.imf_count());
  for (std::size_t j = 0; j < d.imf_count(); ++j) CHECK(back.imfs[j] == d.imfs[j]);
  CHECK(back.residuum == d.residuum);
  CHECK_THROWS_AS(read_decomposition(path, 50.0, testing::labels(2), 12), LoadError);
}
