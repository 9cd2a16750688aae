#include "helpers.hpp"
#include "trialmix/dataset_io.hpp"
#include "trialmix/errors.hpp"

#include <doctest.h>

#include <fstream>

using namespace trialmix;

namespace {

TrialDataset sample_dataset() {
  std::vector<Trial> trials;
  for (int id = 1; id <= 3; ++id) {
    Matrix m(2, 7);
    for (Eigen::Index c = 0; c < 2; ++c) {
      for (Eigen::Index t = 0; t < 7; ++t) m(c, t) = 0.1 * id + std::sin(0.3 * static_cast<double>(t + c)) / 3.0;
    }
    Trial t = testing::make_trial(m, 128.0, id == 2 ? kRightWrist : kLeftWrist, 1, id);
    t.segments["mi"] = SampleRange{2, 7};
    trials.push_back(std::move(t));
  }
  return TrialDataset("S01", "io test", std::move(trials));
}

void check_equal(const TrialDataset& a, const TrialDataset& b) {
  REQUIRE(a.size() == b.size());
  CHECK(a.subject() == b.subject());
  CHECK(a.channel_labels() == b.channel_labels());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.trials()[i];
    const auto& y = b.trials()[i];
    CHECK(x.trial_id == y.trial_id);
    CHECK(x.run_id == y.run_id);
    CHECK(x.label == y.label);
    CHECK(x.segments == y.segments);
    CHECK(x.signal.data() == y.signal.data());
  }
}

}  // namespace

TEST_CASE("datasets round-trip bit-exactly in both sample formats") {
  const auto d = sample_dataset();
  for (auto format : {SampleFormat::F64, SampleFormat::Csv}) {
    testing::TempDir dir("io");
    save_dataset(d, dir.path(), format);
    check_equal(d, load_dataset(dir.path()));
  }
}

TEST_CASE("load errors name the offending trial") {
  testing::TempDir dir("ioerr");
  save_dataset(sample_dataset(), dir.path(), SampleFormat::Csv);
  {
    std::ofstream os(dir.path() / "trial_1_2.csv");
    os << "1,2,3\n";
  }
  try {
    load_dataset(dir.path());
    FAIL("expected a LoadError");
  } catch (const LoadError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("trial 2") != std::string::npos);
    CHECK(msg.find("3 columns") != std::string::npos);
  }
}

TEST_CASE("missing or truncated inputs raise LoadError") {
  testing::TempDir dir("iomissing");
  CHECK_THROWS_AS(load_dataset(dir.path() / "nope"), LoadError);
  save_dataset(sample_dataset(), dir.path(), SampleFormat::F64);
  std::filesystem::resize_file(dir.path() / "trial_1_1.f64", 8);
  CHECK_THROWS_AS(load_dataset(dir.path()), LoadError);
}
