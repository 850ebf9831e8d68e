#include "corpusflow/zip.hpp"

#include <zlib.h>

#include <cstdint>
#include <limits>

#include "corpusflow/error.hpp"

namespace corpusflow::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kUtf8Flag = 0x0800;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint16_t u16(std::size_t at) const {
    need(at, 2);
    return static_cast<std::uint16_t>(byte(at) | (byte(at + 1) << 8));
  }
  std::uint32_t u32(std::size_t at) const {
    need(at, 4);
    return static_cast<std::uint32_t>(byte(at)) | (static_cast<std::uint32_t>(byte(at + 1)) << 8) |
           (static_cast<std::uint32_t>(byte(at + 2)) << 16) |
           (static_cast<std::uint32_t>(byte(at + 3)) << 24);
  }
  std::string_view slice(std::size_t at, std::size_t len) const {
    need(at, len);
    return bytes_.substr(at, len);
  }
  std::size_t size() const { return bytes_.size(); }

 private:
  unsigned byte(std::size_t at) const { return static_cast<unsigned char>(bytes_[at]); }
  void need(std::size_t at, std::size_t len) const {
    if (at > bytes_.size() || len > bytes_.size() - at) throw ParseError("corrupt ZIP: truncated");
  }
  std::string_view bytes_;
};

std::uint32_t crc_of(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < data.size()) {
    auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string inflate_raw(std::string_view in, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error("zlib inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) throw ParseError("corrupt ZIP: bad deflate data");
  return out;
}

std::string deflate_raw(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("zlib deflateInit failed");
  std::string out(deflateBound(&zs, static_cast<uLong>(in.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error("zlib deflate failed");
  return out;
}

}  // namespace

std::vector<Entry> read_archive(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 22) throw ParseError("corrupt ZIP: too short");
  // End-of-central-directory record: last signature within the comment window.
  std::size_t eocd = std::string_view::npos;
  std::size_t lowest = bytes.size() >= 22 + 0xFFFF ? bytes.size() - 22 - 0xFFFF : 0;
  for (std::size_t at = bytes.size() - 22 + 1; at-- > lowest;) {
    if (r.u32(at) == kEndSig) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw ParseError("corrupt ZIP: no end of central directory");
  std::uint16_t count = r.u16(eocd + 10);
  std::uint32_t cd_size = r.u32(eocd + 12);
  std::uint32_t cd_offset = r.u32(eocd + 16);
  if (cd_offset == 0xFFFFFFFF || count == 0xFFFF) throw ParseError("ZIP64 archives are not supported");
  if (static_cast<std::size_t>(cd_offset) + cd_size > eocd)
    throw ParseError("corrupt ZIP: central directory out of range");

  std::vector<Entry> entries;
  entries.reserve(count);
  std::size_t at = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (r.u32(at) != kCentralSig) throw ParseError("corrupt ZIP: bad central directory entry");
    std::uint16_t flags = r.u16(at + 8);
    std::uint16_t method = r.u16(at + 10);
    std::uint32_t crc = r.u32(at + 16);
    std::uint32_t csize = r.u32(at + 20);
    std::uint32_t usize = r.u32(at + 24);
    std::uint16_t name_len = r.u16(at + 28);
    std::uint16_t extra_len = r.u16(at + 30);
    std::uint16_t comment_len = r.u16(at + 32);
    std::uint32_t local = r.u32(at + 42);
    Entry entry;
    entry.name = std::string(r.slice(at + 46, name_len));
    at += 46 + name_len + extra_len + comment_len;

    if (flags & 0x1) throw ParseError("encrypted ZIP entries are not supported: " + entry.name);
    if (r.u32(local) != kLocalSig) throw ParseError("corrupt ZIP: bad local header for " + entry.name);
    std::size_t data_at = local + 30 + r.u16(local + 26) + r.u16(local + 28);
    std::string_view raw = r.slice(data_at, csize);
    if (method == 0) {
      if (csize != usize) throw ParseError("corrupt ZIP: stored size mismatch for " + entry.name);
      entry.data = std::string(raw);
    } else if (method == 8) {
      entry.data = inflate_raw(raw, usize);
    } else {
      throw ParseError("unsupported ZIP compression method " + std::to_string(method) + " for " +
                       entry.name);
    }
    if (crc_of(entry.data) != crc) throw ParseError("corrupt ZIP: CRC mismatch for " + entry.name);
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string write_archive(const std::vector<Entry>& entries) {
  if (entries.size() >= 0xFFFF) throw InvalidArgument("too many ZIP entries");
  std::string out;
  std::string central;
  for (const auto& entry : entries) {
    if (entry.name.size() > 0xFFFF) throw InvalidArgument("ZIP entry name too long");
    if (entry.data.size() >= std::numeric_limits<std::uint32_t>::max())
      throw InvalidArgument("ZIP entry too large: " + entry.name);
    std::string packed = deflate_raw(entry.data);
    std::uint16_t method = 8;
    if (packed.size() >= entry.data.size()) {
      packed = entry.data;
      method = 0;
    }
    std::uint32_t crc = crc_of(entry.data);
    if (out.size() >= std::numeric_limits<std::uint32_t>::max())
      throw InvalidArgument("ZIP archive too large");
    auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);
    put16(out, kUtf8Flag);
    put16(out, method);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(entry.data.size()));
    put16(out, static_cast<std::uint16_t>(entry.name.size()));
    put16(out, 0);
    out += entry.name;
    out += packed;

    put32(central, kCentralSig);
    put16(central, 20);
    put16(central, 20);
    put16(central, kUtf8Flag);
    put16(central, method);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(entry.data.size()));
    put16(central, static_cast<std::uint16_t>(entry.name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += entry.name;
  }
  auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace corpusflow::zip
