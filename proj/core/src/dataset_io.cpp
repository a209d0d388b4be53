#include "ddrecon/dataset_io.hpp"

#include "binary_io.hpp"

#include <limits>

namespace ddrecon {

namespace {
constexpr std::string_view magic = "DDMK";
}

std::vector<char> encode_dataset(std::span<const DatasetSlice> slices) {
  if (slices.empty()) {
    throw Error(ErrorCode::invalid_argument, "write_dataset: refusing to write an empty dataset");
  }
  detail::ByteWriter w;
  w.bytes(magic);
  w.le<std::uint32_t>(dataset_version);
  w.le<std::uint64_t>(slices.size());
  for (const auto& [volume, mask] : slices) {
    const auto& id = volume.slice_id;
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::invalid_argument, "write_dataset: slice id too long");
    }
    if (mask.width() != volume.width()) {
      throw Error(ErrorCode::shape_mismatch, "write_dataset: mask width " + std::to_string(mask.width()) +
                                                 " != k-space width " + std::to_string(volume.width()) + " in " + id);
    }
    const auto ncoil = volume.ncoil();
    const auto h = volume.height();
    const auto width = volume.width();
    w.le<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    w.bytes(id);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(ncoil));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(h));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(width));
    for (auto line : mask.lines) {
      w.le<std::uint8_t>(line ? 1 : 0);
    }
    const auto hw = h * width;
    auto v = volume.data.tensor.data();
    for (std::size_t c = 0; c < ncoil; ++c) {
      for (std::size_t p = 0; p < hw; ++p) {
        w.le<float>(static_cast<float>(v[(2 * c) * hw + p]));
        w.le<float>(static_cast<float>(v[(2 * c + 1) * hw + p]));
      }
    }
  }
  return w.buffer();
}

Dataset decode_dataset(const std::vector<char>& bytes) {
  detail::ByteReader r(bytes, "dataset");
  if (bytes.size() < magic.size() && magic.starts_with(std::string_view(bytes.data(), bytes.size()))) {
    r.need(magic.size());
  }
  if (r.bytes(magic.size()) != magic) {
    throw Error(ErrorCode::bad_magic, "dataset: missing DDMK magic");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != dataset_version) {
    throw Error(ErrorCode::version_mismatch,
                "dataset: version " + std::to_string(version) + ", expected " + std::to_string(dataset_version));
  }
  const auto count = r.le<std::uint64_t>();
  Dataset out;
  for (std::uint64_t s = 0; s < count; ++s) {
    const auto id_len = r.le<std::uint16_t>();
    std::string id(r.bytes(id_len));
    const auto ncoil = r.le<std::uint16_t>();
    const auto h = r.le<std::uint32_t>();
    const auto width = r.le<std::uint32_t>();
    if (ncoil == 0 || h == 0 || width == 0) {
      throw Error(ErrorCode::invalid_argument, "dataset: slice " + id + " has a zero dimension");
    }
    SamplingMask mask;
    const auto mask_bytes = r.bytes(width);
    mask.lines.assign(mask_bytes.begin(), mask_bytes.end());
    for (auto& line : mask.lines) {
      if (line > 1) {
        throw Error(ErrorCode::invalid_argument, "dataset: mask byte other than 0/1 in slice " + id);
      }
    }
    mask.acceleration = mask.kept() ? static_cast<double>(width) / static_cast<double>(mask.kept()) : 0.0;
    const std::uint64_t hw = std::uint64_t{h} * width;
    r.need(hw * ncoil * 8);
    Tensor k(Shape{1, 2 * std::size_t{ncoil}, h, width});
    auto v = k.mutable_data();
    for (std::size_t c = 0; c < ncoil; ++c) {
      for (std::size_t p = 0; p < hw; ++p) {
        v[(2 * c) * hw + p] = r.le<float>();
        v[(2 * c + 1) * hw + p] = r.le<float>();
      }
    }
    out.push_back({make_kspace_volume(std::move(k), std::move(id)), std::move(mask)});
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::invalid_argument, "dataset: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const DatasetSlice> slices) {
  detail::write_file(path, encode_dataset(slices));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(detail::read_file(path)); }

void quantize_to_f32(KSpaceVolume& volume) {
  for (auto& v : volume.data.tensor.mutable_data()) {
    v = static_cast<double>(static_cast<float>(v));
  }
}

const DatasetSlice& find_slice(const Dataset& dataset, const std::string& slice_id) {
  for (const auto& s : dataset) {
    if (s.kspace.slice_id == slice_id) {
      return s;
    }
  }
  throw Error(ErrorCode::invalid_argument, "no slice with id '" + slice_id + "' in dataset");
}

} // namespace ddrecon
