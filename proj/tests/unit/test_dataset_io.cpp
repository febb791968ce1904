#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "dualpath/dataset_io.hpp"
#include "dualpath/errors.hpp"
#include "dualpath/waveform.hpp"

using namespace dualpath;
namespace fs = std::filesystem;

namespace {

fs::path temp(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST(DatasetFile, RoundTripKeepsRecordsAtFloatPrecision) {
  const auto path = temp("dualpath_io_test.dpd");
  const auto spec = waveform::dataset2();
  io::write_dataset(path, spec, 25, 77);
  io::DatasetReader reader(path);
  ASSERT_EQ(reader.size(), 25U);
  EXPECT_EQ(reader.header().seed, 77U);
  EXPECT_EQ(reader.header().spec.universe, spec.universe);

  const waveform::EpochStream stream(spec, 25, 77);
  for (std::size_t i : {0U, 13U, 24U}) {
    const auto want = stream.at(i);
    const auto got = reader.read(i);
    ASSERT_EQ(got.y.size(), want.y.size());
    for (std::size_t k = 0; k < want.y.size(); ++k) {
      EXPECT_NEAR(got.y[k].real(), want.y[k].real(), 1e-6 * (1 + std::abs(want.y[k])));
      EXPECT_NEAR(got.z3[k].imag(), want.z3[k].imag(), 1e-6 * (1 + std::abs(want.z3[k])));
    }
    EXPECT_EQ(got.z4, want.z4);
    EXPECT_EQ(got.z5, want.z5);
    EXPECT_EQ(got.class_index, want.class_index);
    EXPECT_EQ(got.params.f0, want.params.f0);
    EXPECT_EQ(got.params.scheme, want.params.scheme);
  }
  EXPECT_THROW(reader.read(25), Error);
  fs::remove(path);
}

TEST(DatasetFile, RecordSizeFormula) { EXPECT_EQ(io::record_size(128), 32U * 128 + 128 + 1 + 120); }

TEST(DatasetFile, MissingOrCorruptFileIsIoError) {
  try {
    io::DatasetReader r(temp("dualpath_does_not_exist.dpd"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
  const auto bad = temp("dualpath_bad.dpd");
  std::ofstream(bad) << "not a header\n";
  EXPECT_THROW(io::DatasetReader r(bad), Error);
  fs::remove(bad);
}

TEST(DatasetFile, TruncatedFileIsDetected) {
  const auto path = temp("dualpath_trunc.dpd");
  io::write_dataset(path, waveform::dataset1(), 4, 1);
  fs::resize_file(path, fs::file_size(path) - 10);
  EXPECT_THROW(io::DatasetReader(path).read_all(), Error);
  fs::remove(path);
}

TEST(RxParamsJson, RoundTripIsExact) {
  RxParams p = RxParams::identity(16, 3);
  p.noise_taps[3] = Complex(0.25, -1.5);
  p.f0_hat = 0.00123;
  p.class_scores = {0.2, 0.3, 0.5};
  const auto back = io::rx_params_from_json(io::rx_params_to_json(p));
  EXPECT_EQ(back.noise_taps, p.noise_taps);
  EXPECT_EQ(back.eqmf_taps, p.eqmf_taps);
  EXPECT_EQ(back.f0_hat, p.f0_hat);
  EXPECT_EQ(back.timing, p.timing);
  EXPECT_EQ(back.class_scores, p.class_scores);
}
