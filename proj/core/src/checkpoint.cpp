#include "ffgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "ffgan/errors.hpp"

namespace ffgan {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'F', 'F', 'G', 'A', 'N', 'C', 'K', 'P'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) fail(ErrorKind::Corrupt, "checkpoint is truncated");
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return 0;
    case torch::kFloat64: return 1;
    case torch::kInt64: return 2;
    default: fail(ErrorKind::InvalidArgument, "checkpoint tensors must be float32, float64 or int64");
  }
}

torch::ScalarType dtype_from_code(std::uint8_t code) {
  switch (code) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt64;
    default: fail(ErrorKind::Corrupt, "unknown tensor dtype code " + std::to_string(code));
  }
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointContents& contents) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(contents.version);
  w.put<std::uint64_t>(contents.config_json.size());
  w.put_bytes(contents.config_json.data(), contents.config_json.size());
  w.put<std::uint64_t>(contents.entries.size());
  for (const auto& [name, tensor] : contents.entries) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    const auto t = tensor.detach().to(torch::kCPU).contiguous();
    w.put<std::uint8_t>(dtype_code(t.scalar_type()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.dim()));
    for (auto d : t.sizes()) w.put<std::int64_t>(d);
    w.put_bytes(t.data_ptr(), t.numel() * t.element_size());
  }
  w.put<std::uint32_t>(crc_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

CheckpointContents decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::Corrupt, "not a checkpoint (bad magic)");
  }
  if (bytes.size() < sizeof kMagic + 4 + 4) fail(ErrorKind::Corrupt, "checkpoint is truncated");
  Reader r(bytes.data(), bytes.size() - 4);
  r.take(sizeof kMagic);
  CheckpointContents out;
  out.version = r.get<std::uint32_t>();
  if (out.version != kCheckpointVersion) {
    fail(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(out.version) +
                                         " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (stored != crc_of(bytes.data(), bytes.size() - 4)) fail(ErrorKind::Corrupt, "checkpoint checksum mismatch");

  const auto json_len = r.get<std::uint64_t>();
  const auto* json = r.take(json_len);
  out.config_json.assign(reinterpret_cast<const char*>(json), json_len);
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    const auto* name = r.take(name_len);
    const auto dtype = dtype_from_code(r.get<std::uint8_t>());
    const auto ndim = r.get<std::uint32_t>();
    if (ndim > 8) fail(ErrorKind::Corrupt, "implausible tensor rank");
    std::vector<std::int64_t> shape(ndim);
    std::int64_t numel = 1;
    for (auto& d : shape) {
      d = r.get<std::int64_t>();
      if (d < 0 || (d > 0 && numel > (std::int64_t{1} << 40) / d)) fail(ErrorKind::Corrupt, "implausible tensor shape");
      numel *= d;
    }
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    const auto n = static_cast<std::size_t>(numel) * t.element_size();
    std::memcpy(t.data_ptr(), r.take(n), n);
    out.entries.emplace_back(std::string(reinterpret_cast<const char*>(name), name_len), std::move(t));
  }
  if (!r.done()) fail(ErrorKind::Corrupt, "trailing bytes in checkpoint");
  return out;
}

void save_checkpoint(const TrainState& state, const fs::path& path) {
  CheckpointContents contents;
  contents.config_json = state.config.to_json();
  contents.entries = state.named_tensors();
  const auto bytes = encode_checkpoint(contents);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot publish '" + path.string() + "': " + ec.message());
}

TrainState load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto contents = decode_checkpoint(bytes);
  TrainState state(TrainConfig::from_json(contents.config_json));
  state.load_named_tensors(contents.entries);
  return state;
}

}  // namespace ffgan
