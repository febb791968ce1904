#include "dualpath/nn/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "dualpath/errors.hpp"

namespace dualpath::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

constexpr const char* kManifest = "manifest.json";
constexpr const char* kBlob = "params.bin";

nlohmann::json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifest);
  if (!in) fail(ErrorKind::kIo, "cannot open " + (dir / kManifest).string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kIo, std::string("malformed checkpoint manifest: ") + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& store, const nlohmann::json& metadata) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string());

  nlohmann::json params = nlohmann::json::array();
  std::size_t offset = 0;
  std::ofstream blob(dir / kBlob, std::ios::binary | std::ios::trunc);
  if (!blob) fail(ErrorKind::kIo, "cannot write " + (dir / kBlob).string());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Parameter& p = store[i];
    params.push_back({{"name", p.name}, {"shape", p.value.shape}, {"offset", offset}, {"count", p.value.size()}});
    blob.write(reinterpret_cast<const char*>(p.value.data.data()),
               static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    offset += p.value.size();
  }
  if (!blob) fail(ErrorKind::kIo, "short write to " + (dir / kBlob).string());

  const nlohmann::json manifest{
      {"format", "dualpath-params"}, {"version", 1}, {"dtype", "f64le"},
      {"blob", kBlob},               {"params", params}, {"metadata", metadata}};
  std::ofstream out(dir / kManifest, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + (dir / kManifest).string());
  out << manifest.dump(2) << '\n';
}

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& dir) {
  return read_manifest(dir).value("metadata", nlohmann::json::object());
}

nlohmann::json load_checkpoint(const std::filesystem::path& dir, ParameterStore& store) {
  const nlohmann::json manifest = read_manifest(dir);
  std::ifstream blob(dir / manifest.value("blob", std::string(kBlob)), std::ios::binary);
  if (!blob) fail(ErrorKind::kIo, "cannot open checkpoint blob in " + dir.string());

  const auto& params = manifest.at("params");
  if (params.size() != store.size()) fail(ErrorKind::kIo, "checkpoint parameter count does not match the model");
  for (const auto& entry : params) {
    const auto name = entry.at("name").get<std::string>();
    if (!store.contains(name)) fail(ErrorKind::kIo, "checkpoint has unknown parameter " + name);
    Parameter& p = store[store.index_of(name)];
    if (entry.at("shape").get<Shape>() != p.value.shape) {
      fail(ErrorKind::kIo, "shape mismatch for parameter " + name);
    }
    blob.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::size_t>() * sizeof(double)));
    blob.read(reinterpret_cast<char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!blob) fail(ErrorKind::kIo, "truncated checkpoint blob at " + name);
  }
  return manifest.value("metadata", nlohmann::json::object());
}

std::vector<Tensor> snapshot(const ParameterStore& store) {
  std::vector<Tensor> out;
  out.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) out.push_back(store[i].value);
  return out;
}

void restore(ParameterStore& store, const std::vector<Tensor>& values) {
  if (values.size() != store.size()) fail(ErrorKind::kDimension, "snapshot does not match the store");
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (values[i].shape != store[i].value.shape) fail(ErrorKind::kDimension, "snapshot shape mismatch");
    store[i].value = values[i];
  }
}

}  // namespace dualpath::nn
