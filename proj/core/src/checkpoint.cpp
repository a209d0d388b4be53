#include "ddrecon/checkpoint.hpp"

#include "binary_io.hpp"

#include <fstream>
#include <limits>

namespace ddrecon {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for reading");
  }
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  // Write to a sibling and rename so readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::io, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

} // namespace detail

namespace {
constexpr std::string_view magic = "DDRK";
}

std::vector<char> encode_checkpoint(std::span<const NamedTensor> tensors) {
  detail::ByteWriter w;
  w.bytes(magic);
  w.le<std::uint32_t>(checkpoint_version);
  w.le<std::uint64_t>(tensors.size());
  for (const auto& [name, tensor] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::invalid_argument, "checkpoint: tensor name too long: " + name.substr(0, 32) + "...");
    }
    if (tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw Error(ErrorCode::invalid_argument, "checkpoint: rank too large for " + name);
    }
    w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.le<std::uint8_t>(static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.shape()) {
      w.le<std::uint64_t>(d);
    }
    for (double v : tensor.data()) {
      w.le<double>(v);
    }
  }
  return w.buffer();
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<char>& bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (bytes.size() < magic.size() && magic.starts_with(std::string_view(bytes.data(), bytes.size()))) {
    r.need(magic.size());
  }
  if (bytes.size() < magic.size() || r.bytes(magic.size()) != magic) {
    throw Error(ErrorCode::bad_magic, "checkpoint: missing DDRK magic");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != checkpoint_version) {
    throw Error(ErrorCode::version_mismatch, "checkpoint: version " + std::to_string(version) + ", expected " +
                                                 std::to_string(checkpoint_version));
  }
  const auto count = r.le<std::uint64_t>();
  std::vector<NamedTensor> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint16_t>();
    std::string name(r.bytes(name_len));
    const auto rank = r.le<std::uint8_t>();
    Shape shape;
    std::uint64_t numel = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      const auto d = r.le<std::uint64_t>();
      if (d == 0) {
        throw Error(ErrorCode::invalid_argument, "checkpoint: zero dimension in " + name);
      }
      // Bounding each factor by the remaining bytes keeps the product from overflowing.
      if (d > r.remaining() || numel > r.remaining()) {
        r.need(r.remaining() + 1);
      }
      shape.push_back(d);
      numel *= d;
    }
    r.need(numel * 8);
    std::vector<double> data(numel);
    for (auto& v : data) {
      v = r.le<double>();
    }
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::invalid_argument,
                "checkpoint: " + std::to_string(r.remaining()) + " trailing bytes after the last tensor");
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  detail::write_file(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

} // namespace ddrecon
