#include "trialmix/errors.hpp"
#include "trialmix/rng.hpp"
#include "trialmix/selection.hpp"

#include <doctest.h>

#include <cmath>

using namespace trialmix;

TEST_CASE("image entropy examples") {
  CHECK(image_entropy(Matrix::Constant(4, 5, 2.0)) == 0.0);

  Matrix half(2, 4);
  half << 0, 0, 0, 0, 1, 1, 1, 1;
  CHECK(image_entropy(half) == doctest::Approx(1.0));

  Matrix ramp(16, 16);
  for (Eigen::Index i = 0; i < 256; ++i) ramp.data()[i] = static_cast<double>(i);
  CHECK(image_entropy(ramp) == doctest::Approx(8.0));
  CHECK_THROWS_AS(image_entropy(Matrix(0, 0)), DomainError);
}

TEST_CASE("entropy is invariant under positive affine rescaling and bounded") {
  Rng rng(6);
  for (int k = 0; k < 10; ++k) {
    Matrix m(23, 200);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::pow(rng.normal(), 2);
    const double h = image_entropy(m);
    CHECK(h >= 0.0);
    CHECK(h <= 8.0);
    const Matrix scaled = (3.5 * m.array() + 0.25).matrix();
    CHECK(std::abs(image_entropy(scaled) - h) < 1e-12);
  }
}

TEST_CASE("adding noise to a constant image raises its entropy on average") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Matrix m = Matrix::Constant(10, 50, 1.0);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += 0.01 * rng.normal();
    total += image_entropy(m);
  }
  CHECK(total / 20.0 > 0.0);
}

TEST_CASE("selection rule") {
  Matrix e(2, 3);
  e << 1, 2, 3, 1, 2, 3;
  const auto r = select_from_entropy(e, 4);
  CHECK(r.mean_entropy == doctest::Approx(2.0));
  CHECK(r.selected == std::vector<int>{3});
  CHECK(r.trial_id == 4);

  const auto flat = select_from_entropy(Matrix::Constant(3, 5, 1.5), 1);
  CHECK(flat.selected == std::vector<int>{1});

  Matrix mixed(2, 4);
  mixed << 5, 1, 4, 0, 3, 1, 6, 0;
  CHECK(select_from_entropy(mixed, 1).selected == std::vector<int>{1, 3});
}

TEST_CASE("selection depends only on the entropy matrix, not electrode order") {
  Rng rng(1);
  Matrix e(5, 8);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.uniform(0.0, 8.0);
  Matrix p = e;
  p.row(0).swap(p.row(4));
  p.row(1).swap(p.row(2));
  CHECK(select_from_entropy(e, 1).selected == select_from_entropy(p, 1).selected);
}

TEST_CASE("selection reports round-trip through JSON") {
  Matrix e(2, 3);
  e << 0.5, 7.25, 3.0, 1.0 / 3.0, 2.0, 6.5;
  const auto r = select_from_entropy(e, 9);
  const auto back = selection_report_from_json(to_json(r));
  CHECK(back.entropy == r.entropy);
  CHECK(back.selected == r.selected);
  CHECK(back.mean_entropy == r.mean_entropy);
  CHECK(back.trial_id == 9);
  CHECK_THROWS_AS(selection_report_from_json("{\"trial_id\": 1}"), LoadError);
}

TEST_CASE("select_relevant_imfs keeps one index set for all electrodes") {
  ImfDecomposition d;
  Rng rng(2);
  for (int j = 0; j < 4; ++j) {
    Matrix m(3, 600);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() / (1.0 + j);
    d.imfs.push_back(m);
  }
  d.residuum = Matrix::Zero(3, 600);
  d.fs = 250.0;
  d.channel_labels = {"a", "b", "c"};
  const auto r = select_relevant_imfs(d, WaveletConfig{});
  CHECK(r.entropy.rows() == 3);
  CHECK(r.entropy.cols() == 4);
  CHECK_FALSE(r.selected.empty());
  for (int j : r.selected) {
    CHECK(j >= 1);
    CHECK(j <= 4);
  }
}
