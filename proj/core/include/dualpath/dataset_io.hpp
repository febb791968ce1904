#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualpath/sigcore.hpp"
#include "dualpath/waveform.hpp"

namespace dualpath::io {

inline constexpr int kDatasetVersion = 1;

struct DatasetHeader {
  waveform::DatasetSpec spec;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  int version = kDatasetVersion;
};

// Bytes per record for an n-sample window: y, z1, z2, z3 as f32 I/Q pairs,
// z4 as u8, one u8 class index, then the f64 params block.
std::size_t record_size(std::size_t n_r);

// One JSON header line followed by fixed-size little-endian records.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, const DatasetHeader& header);
  void write(const LabeledSample& sample);
  // Throws kIo when fewer records than announced were written.
  void close();

 private:
  std::ofstream out_;
  DatasetHeader header_;
  std::size_t written_ = 0;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  const DatasetHeader& header() const { return header_; }
  std::size_t size() const { return header_.count; }
  // Symbols are not stored; the returned sample carries empty symbol lists.
  LabeledSample read(std::size_t index);
  std::vector<LabeledSample> read_all();

 private:
  std::ifstream in_;
  DatasetHeader header_;
  std::streamoff data_start_ = 0;
};

// Generates `count` samples of `spec` from `seed` and writes them.
void write_dataset(const std::filesystem::path& path, const waveform::DatasetSpec& spec, std::size_t count,
                   std::uint64_t seed);

// Taps as [re, im] pairs.
nlohmann::json rx_params_to_json(const RxParams& p);
RxParams rx_params_from_json(const nlohmann::json& j);

}  // namespace dualpath::io
