#include "dualpath/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "dualpath/errors.hpp"

namespace dualpath::io {
namespace {

static_assert(std::endian::native == std::endian::little, "dataset records assume a little-endian host");

void put_signal(std::vector<char>& buf, std::size_t& at, std::span<const Complex> x, std::size_t n) {
  if (x.size() != n) fail(ErrorKind::kDimension, "signal length differs from the dataset window");
  for (const Complex& v : x) {
    const float iq[2] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
    std::memcpy(buf.data() + at, iq, sizeof iq);
    at += sizeof iq;
  }
}

ComplexSequence get_signal(const std::vector<char>& buf, std::size_t& at, std::size_t n) {
  ComplexSequence x(n);
  for (auto& v : x) {
    float iq[2];
    std::memcpy(iq, buf.data() + at, sizeof iq);
    at += sizeof iq;
    v = Complex(iq[0], iq[1]);
  }
  return x;
}

}  // namespace

std::size_t record_size(std::size_t n_r) {
  return 4 * 2 * n_r * sizeof(float) + n_r + 1 + kParamsBlockSize * sizeof(double);
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path, const DatasetHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), header_(header) {
  if (!out_) fail(ErrorKind::kIo, "cannot write " + path.string());
  if (header.spec.universe.size() > 256) fail(ErrorKind::kInvalidArgument, "class index must fit in one byte");
  const nlohmann::json meta{{"format", "dualpath-dataset"},
                            {"version", header.version},
                            {"spec", header.spec},
                            {"count", header.count},
                            {"seed", header.seed}};
  out_ << meta.dump() << '\n';
}

void DatasetWriter::write(const LabeledSample& s) {
  const std::size_t n = header_.spec.n_r;
  if (written_ >= header_.count) fail(ErrorKind::kIo, "more records than announced in the header");
  std::vector<char> buf(record_size(n));
  std::size_t at = 0;
  for (const ComplexSequence* x : {&s.y, &s.z1, &s.z2, &s.z3}) put_signal(buf, at, *x, n);
  if (s.z4.size() != n) fail(ErrorKind::kDimension, "timing signal length differs from the dataset window");
  std::memcpy(buf.data() + at, s.z4.data(), n);
  at += n;
  buf[at++] = static_cast<char>(static_cast<std::uint8_t>(s.class_index));
  const auto block = params_block(s.params);
  std::memcpy(buf.data() + at, block.data(), sizeof(double) * kParamsBlockSize);
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out_) fail(ErrorKind::kIo, "write failed");
  ++written_;
}

void DatasetWriter::close() {
  out_.close();
  if (written_ != header_.count) fail(ErrorKind::kIo, "dataset has fewer records than announced");
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in_, line)) fail(ErrorKind::kIo, "missing dataset header");
  try {
    const auto meta = nlohmann::json::parse(line);
    if (meta.value("format", std::string()) != "dualpath-dataset") fail(ErrorKind::kIo, "not a dataset file");
    header_.version = meta.at("version").get<int>();
    if (header_.version != kDatasetVersion) fail(ErrorKind::kIo, "unsupported dataset version");
    header_.spec = meta.at("spec").get<waveform::DatasetSpec>();
    header_.count = meta.at("count").get<std::size_t>();
    header_.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kIo, std::string("malformed dataset header: ") + e.what());
  }
  data_start_ = in_.tellg();
  in_.seekg(0, std::ios::end);
  const auto expected = data_start_ + static_cast<std::streamoff>(header_.count * record_size(header_.spec.n_r));
  if (in_.tellg() < expected) fail(ErrorKind::kIo, "dataset file is truncated");
}

LabeledSample DatasetReader::read(std::size_t index) {
  if (index >= header_.count) fail(ErrorKind::kInvalidArgument, "record index out of range");
  const std::size_t n = header_.spec.n_r;
  std::vector<char> buf(record_size(n));
  in_.clear();
  in_.seekg(data_start_ + static_cast<std::streamoff>(index * buf.size()));
  in_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in_) fail(ErrorKind::kIo, "short read");

  LabeledSample s;
  std::size_t at = 0;
  s.y = get_signal(buf, at, n);
  s.z1 = get_signal(buf, at, n);
  s.z2 = get_signal(buf, at, n);
  s.z3 = get_signal(buf, at, n);
  s.z4.assign(buf.begin() + static_cast<long>(at), buf.begin() + static_cast<long>(at + n));
  at += n;
  s.class_index = static_cast<std::uint8_t>(buf[at++]);
  std::array<double, kParamsBlockSize> block{};
  std::memcpy(block.data(), buf.data() + at, sizeof(double) * kParamsBlockSize);
  s.params = params_from_block(block);
  const auto& universe = header_.spec.universe;
  if (s.class_index >= universe.size()) fail(ErrorKind::kUnknownClass, "record class index outside the universe");
  s.z5 = one_hot(universe[s.class_index], universe);
  return s;
}

std::vector<LabeledSample> DatasetReader::read_all() {
  std::vector<LabeledSample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(read(i));
  return out;
}

void write_dataset(const std::filesystem::path& path, const waveform::DatasetSpec& spec, std::size_t count,
                   std::uint64_t seed) {
  DatasetWriter w(path, DatasetHeader{spec, count, seed, kDatasetVersion});
  auto stream = waveform::stream_epoch(spec, count, seed);
  while (auto s = stream.next()) w.write(*s);
  w.close();
}

nlohmann::json rx_params_to_json(const RxParams& p) {
  const auto pairs = [](const ComplexSequence& x) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : x) a.push_back({v.real(), v.imag()});
    return a;
  };
  return nlohmann::json{{"noise_taps", pairs(p.noise_taps)},
                        {"f0_hat", p.f0_hat},
                        {"eqmf_taps", pairs(p.eqmf_taps)},
                        {"timing", p.timing},
                        {"class_scores", p.class_scores}};
}

RxParams rx_params_from_json(const nlohmann::json& j) {
  const auto taps = [](const nlohmann::json& a) {
    ComplexSequence x;
    for (const auto& v : a) x.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    return x;
  };
  RxParams p;
  try {
    p.noise_taps = taps(j.at("noise_taps"));
    p.f0_hat = j.at("f0_hat").get<double>();
    p.eqmf_taps = taps(j.at("eqmf_taps"));
    p.timing = j.at("timing").get<TimingSignal>();
    p.class_scores = j.value("class_scores", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad receiver parameters: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace dualpath::io
