#include "premsel/nn/serialize.hpp"

#include "premsel/nn/bytes.hpp"

namespace premsel::nn {

namespace {
constexpr std::string_view kMagic = "PSNN";
}

std::vector<std::byte> serialize_model(const DenseNetwork<float>& net) {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.depth()));
  for (const auto& layer : net.layers()) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(layer.activation));
    w.put<float>(layer.dropout);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weights.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weights.cols()));
    w.put_array(std::span<const float>(layer.weights.data(), static_cast<std::size_t>(layer.weights.size())));
    w.put_array(std::span<const float>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
  }
  w.put_crc32();
  return std::move(w.bytes());
}

DenseNetwork<float> deserialize_model(std::span<const std::byte> bytes) {
  ByteReader r(checked_payload(bytes, kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) +
                                                ", expected " + std::to_string(kModelFormatVersion));
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<DenseLayer<float>> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto code = r.get<std::uint8_t>();
    if (!is_valid_activation(code)) {
      throw Error(ErrorCode::ChecksumMismatch, "unknown activation code " + std::to_string(code));
    }
    DenseLayer<float> layer;
    layer.activation = static_cast<Activation>(code);
    layer.dropout = r.get<float>();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (static_cast<std::uint64_t>(rows) * cols * 4 > r.remaining()) {
      throw Error(ErrorCode::ChecksumMismatch, "layer dimensions exceed file size");
    }
    layer.weights.resize(rows, cols);
    layer.bias.resize(rows);
    r.get_array(std::span<float>(layer.weights.data(), static_cast<std::size_t>(layer.weights.size())));
    r.get_array(std::span<float>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
    layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::ChecksumMismatch, "trailing bytes after last layer");
  try {
    return DenseNetwork<float>(std::move(layers));
  } catch (const Error& e) {
    throw Error(ErrorCode::ChecksumMismatch, std::string("inconsistent layer stack: ") + e.what());
  }
}

void save_model(const DenseNetwork<float>& net, const std::filesystem::path& path) {
  write_file(path, serialize_model(net));
}

DenseNetwork<float> load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace premsel::nn
