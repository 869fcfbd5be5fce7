#include "premsel/nn/container.hpp"

#include "premsel/nn/bytes.hpp"

namespace premsel::nn {

namespace {

constexpr std::string_view kMagic = "PSTC";

template <typename T>
constexpr TensorContainer::DType dtype_of() {
  using D = TensorContainer::DType;
  if constexpr (std::is_same_v<T, float>) return D::F32;
  if constexpr (std::is_same_v<T, double>) return D::F64;
  if constexpr (std::is_same_v<T, std::uint32_t>) return D::U32;
  if constexpr (std::is_same_v<T, std::int64_t>) return D::I64;
  if constexpr (std::is_same_v<T, std::uint64_t>) return D::U64;
}

template <typename T>
TensorContainer::Data read_values(ByteReader& r, std::uint64_t count) {
  if (count > r.remaining() / sizeof(T)) throw Error(ErrorCode::ChecksumMismatch, "tensor exceeds file size");
  std::vector<T> values(count);
  r.get_array(std::span<T>(values));
  return values;
}

}  // namespace

const TensorContainer::Entry& TensorContainer::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(ErrorCode::UpstreamMissing, "no tensor named '" + name + "'");
  return it->second;
}

std::vector<std::byte> TensorContainer::serialize() const {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name);
    std::visit(
        [&](const auto& values) {
          using T = typename std::decay_t<decltype(values)>::value_type;
          w.put<std::uint8_t>(static_cast<std::uint8_t>(dtype_of<T>()));
          w.put<std::uint64_t>(e.rows);
          w.put<std::uint64_t>(e.cols);
          w.put_array(std::span<const T>(values));
        },
        e.data);
  }
  w.put_crc32();
  return std::move(w.bytes());
}

TensorContainer TensorContainer::deserialize(std::span<const std::byte> bytes) {
  ByteReader r(checked_payload(bytes, kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorCode::VersionMismatch, "container version " + std::to_string(version));
  }
  TensorContainer out;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name = r.get_string(r.get<std::uint16_t>());
    const auto dtype = r.get<std::uint8_t>();
    Entry e;
    e.rows = r.get<std::uint64_t>();
    e.cols = r.get<std::uint64_t>();
    const auto n = e.rows * e.cols;
    switch (static_cast<DType>(dtype)) {
      case DType::F32: e.data = read_values<float>(r, n); break;
      case DType::F64: e.data = read_values<double>(r, n); break;
      case DType::U32: e.data = read_values<std::uint32_t>(r, n); break;
      case DType::I64: e.data = read_values<std::int64_t>(r, n); break;
      case DType::U64: e.data = read_values<std::uint64_t>(r, n); break;
      default: throw Error(ErrorCode::ChecksumMismatch, "unknown dtype in tensor '" + name + "'");
    }
    out.entries_[name] = std::move(e);
  }
  if (r.remaining() != 0) throw Error(ErrorCode::ChecksumMismatch, "trailing bytes after last tensor");
  return out;
}

void TensorContainer::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

TensorContainer TensorContainer::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace premsel::nn
