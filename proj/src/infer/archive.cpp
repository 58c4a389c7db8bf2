#include <bit>
#include <cstring>
#include <numeric>

#include <zlib.h>

#include "hapforge/core/error.hpp"
#include "hapforge/infer.hpp"
#include "hapforge/io/formats.hpp"

namespace hapforge::infer {
namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& bytes, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  return v;
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Cursor {
public:
  Cursor(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() {
    const char* p = take(2);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) | (static_cast<unsigned char>(p[1]) << 8));
  }
  std::uint32_t u32() {
    take(4);
    return get_u32(bytes_, pos_ - 4);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) { return std::string(take(n), n); }
  std::size_t pos() const noexcept { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

private:
  const char* take(std::size_t n) {
    require(pos_ + n <= end_, ErrorKind::Validation, "weight archive ends inside a record");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t Tensor::numel() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string encode_archive(const WeightArchive& archive) {
  std::string out(kArchiveMagic, 4);
  put_u32(out, kArchiveVersion);
  put_u32(out, static_cast<std::uint32_t>(archive.descriptor.size()));
  out += archive.descriptor;
  put_u32(out, static_cast<std::uint32_t>(archive.tensors.size()));
  for (const Tensor& t : archive.tensors) {
    require(t.name.size() <= 0xFFFF, ErrorKind::Validation, "tensor name too long: " + t.name.substr(0, 32));
    require(t.shape.size() <= 0xFF, ErrorKind::Validation, "tensor " + t.name + " has too many dimensions");
    require(t.values.size() == t.numel(), ErrorKind::Shape,
            "tensor " + t.name + " payload does not match its shape");
    put_u16(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    put_u8(out, static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, crc_of(out.data(), out.size()));
  return out;
}

void write_archive(const std::filesystem::path& path, const WeightArchive& archive) {
  io::write_text(path, encode_archive(archive));
}

WeightArchive decode_archive(const std::string& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kArchiveMagic, 4) == 0, ErrorKind::BadMagic,
          "not a V2HW weight archive");
  require(bytes.size() >= 8, ErrorKind::Checksum, "weight archive truncated before its version");
  const std::uint32_t version = get_u32(bytes, 4);
  require(version == kArchiveVersion, ErrorKind::BadVersion,
          "unsupported weight archive version " + std::to_string(version));
  require(bytes.size() >= 12, ErrorKind::Checksum, "weight archive truncated before its checksum");
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored = get_u32(bytes, body);
  const std::uint32_t actual = crc_of(bytes.data(), body);
  require(stored == actual, ErrorKind::Checksum, "weight archive checksum mismatch (truncated or corrupted)");

  WeightArchive out;
  Cursor in(bytes, body);
  in.seek(8);
  const std::uint32_t desc_len = in.u32();
  out.descriptor = in.str(desc_len);
  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = in.str(in.u16());
    const std::uint8_t ndim = in.u8();
    for (std::uint8_t d = 0; d < ndim; ++d) t.shape.push_back(in.u32());
    const std::size_t n = t.numel();
    require(n <= (body - in.pos()) / 4, ErrorKind::Validation, "tensor " + t.name + " runs past the archive end");
    t.values.resize(n);
    for (auto& v : t.values) v = in.f32();
    out.tensors.push_back(std::move(t));
  }
  require(in.pos() == body, ErrorKind::Validation, "weight archive has trailing bytes before its checksum");
  return out;
}

WeightArchive read_archive(const std::filesystem::path& path) {
  try {
    return decode_archive(io::read_text(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MissingInput || e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace hapforge::infer
