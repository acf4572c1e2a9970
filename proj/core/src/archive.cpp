#include "envsniff/archive.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>

#include "envsniff/errors.hpp"

namespace envsniff::archive {

namespace {

std::uint32_t u16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) throw CorruptArchive("zip: read past end");
  return static_cast<std::uint8_t>(b[at]) | (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 1])) << 8);
}

std::uint32_t u32(std::string_view b, std::size_t at) { return u16(b, at) | (u16(b, at + 2) << 16); }

void put16(std::string& out, std::uint32_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>((v >> 8) & 0xFF);
}
void put32(std::string& out, std::uint32_t v) {
  put16(out, v & 0xFFFF);
  put16(out, v >> 16);
}

std::string inflate_raw(std::string_view in, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw CorruptArchive("inflate init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw CorruptArchive("zip: deflate stream damaged");
  return out;
}

std::string deflate_raw(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw CorruptArchive("deflate init failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(in.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw CorruptArchive("deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::uint64_t parse_octal(std::string_view field) {
  std::uint64_t v = 0;
  for (char c : field) {
    if (c == '\0' || c == ' ') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw CorruptArchive("tar: bad octal field");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string c_field(std::string_view block, std::size_t at, std::size_t len) {
  std::string_view f = block.substr(at, len);
  std::size_t nul = f.find('\0');
  return std::string(f.substr(0, nul));
}

std::string strip_leading_dot_slash(std::string p) {
  while (p.starts_with("./")) p.erase(0, 2);
  return p;
}

}  // namespace

bool is_safe_member_path(std::string_view path) {
  if (path.empty() || path.front() == '/' || path.find('\\') != std::string_view::npos) return false;
  if (path.size() > 1 && path[1] == ':') return false;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    std::string_view part = path.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (part == "..") return false;
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return true;
}

std::vector<Entry> read_zip(std::string_view b) {
  if (b.size() < 22) throw CorruptArchive("zip: too short");
  std::size_t eocd = std::string_view::npos;
  std::size_t lowest = b.size() > 22 + 65535 ? b.size() - 22 - 65535 : 0;
  for (std::size_t i = b.size() - 22 + 1; i-- > lowest;) {
    if (u32(b, i) == 0x06054b50) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw CorruptArchive("zip: end of central directory not found");
  std::uint32_t count = u16(b, eocd + 10);
  std::uint32_t cd_offset = u32(b, eocd + 16);
  if (cd_offset == 0xFFFFFFFF || count == 0xFFFF) throw CorruptArchive("zip: zip64 archives are not supported");

  std::vector<Entry> out;
  std::size_t p = cd_offset;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (u32(b, p) != 0x02014b50) throw CorruptArchive("zip: bad central directory entry");
    std::uint32_t method = u16(b, p + 10);
    std::uint32_t crc = u32(b, p + 16);
    std::uint32_t csize = u32(b, p + 20);
    std::uint32_t usize = u32(b, p + 24);
    std::uint32_t name_len = u16(b, p + 28);
    std::uint32_t extra_len = u16(b, p + 30);
    std::uint32_t comment_len = u16(b, p + 32);
    std::uint32_t local = u32(b, p + 42);
    if (p + 46 + name_len > b.size()) throw CorruptArchive("zip: truncated central directory");
    Entry e;
    e.path = strip_leading_dot_slash(std::string(b.substr(p + 46, name_len)));
    p += 46 + name_len + extra_len + comment_len;

    if (e.path.ends_with("/")) {
      e.is_directory = true;
      e.path.pop_back();
      out.push_back(std::move(e));
      continue;
    }
    if (u32(b, local) != 0x04034b50) throw CorruptArchive("zip: bad local header for " + e.path);
    std::size_t data_at = local + 30 + u16(b, local + 26) + u16(b, local + 28);
    if (data_at + csize > b.size()) throw CorruptArchive("zip: truncated member " + e.path);
    std::string_view raw = b.substr(data_at, csize);
    if (method == 0) {
      e.data = std::string(raw);
    } else if (method == 8) {
      e.data = inflate_raw(raw, usize);
    } else {
      throw CorruptArchive("zip: unsupported compression method " + std::to_string(method));
    }
    if (e.data.size() != usize || crc_of(e.data) != crc) throw CorruptArchive("zip: CRC mismatch for " + e.path);
    out.push_back(std::move(e));
  }
  return out;
}

std::string write_zip(const std::vector<Entry>& entries) {
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    std::string name = e.is_directory ? e.path + "/" : e.path;
    std::string packed = e.is_directory ? std::string() : deflate_raw(e.data);
    std::uint32_t method = e.is_directory ? 0 : 8;
    std::uint32_t crc = crc_of(e.data);
    auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, method);
    put16(out, 0);
    put16(out, 0x21);  // 1980-01-01
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(e.data.size()));
    put16(out, static_cast<std::uint32_t>(name.size()));
    put16(out, 0);
    out += name;
    out += packed;

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, method);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(e.data.size()));
    put16(central, static_cast<std::uint32_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += name;
  }
  auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::string gunzip(std::string_view in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw CorruptArchive("gzip init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[64 * 1024];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw CorruptArchive("gzip: damaged stream");
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw CorruptArchive("gzip: truncated stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<Entry> read_tar(std::string_view b) {
  std::vector<Entry> out;
  std::size_t p = 0;
  std::string long_name;
  std::string pax_path;
  while (p + 512 <= b.size()) {
    std::string_view block = b.substr(p, 512);
    if (block.find_first_not_of('\0') == std::string_view::npos) break;

    unsigned sum = 0;
    for (std::size_t i = 0; i < 512; ++i) {
      sum += (i >= 148 && i < 156) ? static_cast<unsigned>(' ') : static_cast<unsigned char>(block[i]);
    }
    if (sum != parse_octal(block.substr(148, 8))) throw CorruptArchive("tar: header checksum mismatch");

    std::uint64_t size = parse_octal(block.substr(124, 12));
    char type = block[156];
    std::size_t data_at = p + 512;
    if (data_at + size > b.size()) throw CorruptArchive("tar: truncated member");
    std::string_view data = b.substr(data_at, size);
    p = data_at + ((size + 511) / 512) * 512;

    if (type == 'L') {
      long_name = std::string(data.substr(0, data.find('\0')));
      continue;
    }
    if (type == 'x') {
      std::size_t q = 0;
      while (q < data.size()) {
        std::size_t sp = data.find(' ', q);
        if (sp == std::string_view::npos) break;
        std::size_t len = std::stoul(std::string(data.substr(q, sp - q)));
        std::string_view rec = data.substr(sp + 1, len - (sp - q) - 1);
        if (rec.starts_with("path=")) pax_path = std::string(rec.substr(5, rec.size() - 6));
        q += len;
      }
      continue;
    }
    if (type == 'g') continue;

    std::string name = c_field(block, 0, 100);
    if (block.substr(257, 5) == "ustar") {
      std::string prefix = c_field(block, 345, 155);
      if (!prefix.empty()) name = prefix + "/" + name;
    }
    if (!long_name.empty()) name = std::move(long_name);
    if (!pax_path.empty()) name = std::move(pax_path);
    long_name.clear();
    pax_path.clear();

    Entry e;
    e.path = strip_leading_dot_slash(name);
    if (type == '5') {
      e.is_directory = true;
      if (e.path.ends_with("/")) e.path.pop_back();
      out.push_back(std::move(e));
    } else if (type == '0' || type == '\0' || type == '7') {
      e.data = std::string(data);
      out.push_back(std::move(e));
    }
    // links and devices carry no source
  }
  return out;
}

std::vector<Entry> read_archive(std::string_view filename, std::string_view bytes) {
  if (filename.ends_with(".whl") || filename.ends_with(".zip") || filename.ends_with(".egg")) return read_zip(bytes);
  if (filename.ends_with(".tar.gz") || filename.ends_with(".tgz")) return read_tar(gunzip(bytes));
  if (filename.ends_with(".tar")) return read_tar(bytes);
  throw CorruptArchive("unsupported archive type: " + std::string(filename));
}

}  // namespace envsniff::archive
