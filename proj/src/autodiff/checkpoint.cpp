#include "lsa/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lsa/errors.hpp"

namespace lsa::ad {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'A', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits & 0xffu));
    bits >>= 8;
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint: truncated file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json manifest;
  manifest["version"] = kCheckpointVersion;
  manifest["parameters"] = nlohmann::json::array();
  for (const auto& [name, t] : checkpoint.parameters.entries()) {
    manifest["parameters"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  manifest["metadata"] = checkpoint.metadata;
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [_, t] : checkpoint.parameters.entries()) {
    for (double v : t.values()) put_le(out, v);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto length = get_le<std::uint64_t>(bytes, pos);
  if (pos + length > bytes.size()) throw DataError("checkpoint: truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + length));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: manifest is not valid JSON: ") + e.what());
  }
  pos += length;

  Checkpoint out;
  try {
    for (const auto& entry : manifest.at("parameters")) {
      const auto shape = entry.at("shape").get<Shape>();
      std::vector<double> values(shape_size(shape));
      for (auto& v : values) v = get_le<double>(bytes, pos);
      out.parameters.add(entry.at("name").get<std::string>(), Tensor::from(shape, std::move(values)));
    }
    out.metadata = manifest.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  if (pos != bytes.size()) throw DataError("checkpoint: trailing bytes after payload");
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace lsa::ad
