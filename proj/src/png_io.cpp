#include "hipmark/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hipmark {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  out.resize(bound);
  return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                       std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  uLongf n = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &n, data, static_cast<uLong>(size));
  if (rc != Z_OK || n != expected)
    throw std::runtime_error("png: inflate failed or size mismatch");
  return out;
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

constexpr std::uint8_t kSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace

std::vector<std::uint8_t> encode_gray8_png(const MatrixXd& image01) {
  const int h = static_cast<int>(image01.rows());
  const int w = static_cast<int>(image01.cols());
  if (h <= 0 || w <= 0) throw std::invalid_argument("png: empty image");

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(h) * (w + 1));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < w; ++x) {
      const double v = std::clamp(image01(y, x), 0.0, 1.0);
      raw.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
  }

  std::vector<std::uint8_t> png(kSig, kSig + 8);
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w));
  put_u32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", zlib_deflate(raw));
  append_chunk(png, "IEND", {});
  return png;
}

MatrixXd decode_gray8_png(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  auto fail = [&origin](const std::string& why) -> MatrixXd {
    throw std::runtime_error("png: " + origin + ": " + why);
  };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0)
    return fail("not a PNG file");

  std::size_t pos = 8;
  int w = 0, h = 0;
  bool have_ihdr = false;
  std::vector<std::uint8_t> idat;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) return fail("truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) return fail("bad IHDR");
      w = static_cast<int>(get_u32(payload));
      h = static_cast<int>(get_u32(payload + 4));
      if (payload[8] != 8 || payload[9] != 0)
        return fail("only 8-bit grayscale is supported");
      if (payload[12] != 0) return fail("interlaced PNG is not supported");
      have_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || w <= 0 || h <= 0) return fail("missing IHDR");

  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  const auto raw = zlib_inflate(idat.data(), idat.size(), stride * h);

  MatrixXd img(h, w);
  std::vector<std::uint8_t> prev(w, 0), cur(w, 0);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t filter = raw[y * stride];
    const std::uint8_t* row = raw.data() + y * stride + 1;
    for (int x = 0; x < w; ++x) {
      const int a = x > 0 ? cur[x - 1] : 0;
      const int b = prev[x];
      const int c = x > 0 ? prev[x - 1] : 0;
      int v = row[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: return fail("unknown scanline filter");
      }
      cur[x] = static_cast<std::uint8_t>(v & 0xff);
      img(y, x) = cur[x] / 255.0;
    }
    std::swap(prev, cur);
  }
  return img;
}

void write_gray8_png(const std::string& path, const MatrixXd& image01) {
  const auto bytes = encode_gray8_png(image01);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("png: cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("png: write failed: " + path);
}

MatrixXd read_gray8_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("png: cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_gray8_png(bytes, path);
}

}  // namespace hipmark
