#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "torsotext/error.hpp"

namespace torsotext {

/// 8-bit raster, 1 (gray) or 3 (RGB) channels, row-major interleaved.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> data;

  uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

namespace detail {

inline constexpr uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

inline uint32_t read_be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void write_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

inline void append_chunk(std::vector<uint8_t>& out, const char type[4],
                         const uint8_t* payload, size_t n) {
  write_be32(out, static_cast<uint32_t>(n));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload, payload + n);
  uint32_t crc = ::crc32(0L, out.data() + start, static_cast<uInt>(4 + n));
  write_be32(out, crc);
}

inline int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

inline std::vector<uint8_t> png_encode(const PngImage& img) {
  if (img.width < 1 || img.height < 1 || (img.channels != 1 && img.channels != 3))
    raise(Err::InvalidArgument, "png encoder supports 8-bit gray or RGB");
  if (img.data.size() != static_cast<size_t>(img.width) * img.height * img.channels)
    raise(Err::ShapeError, "png data size mismatch");

  std::vector<uint8_t> out(detail::kPngSignature, detail::kPngSignature + 8);

  uint8_t ihdr[13];
  ihdr[0] = uint8_t(img.width >> 24); ihdr[1] = uint8_t(img.width >> 16);
  ihdr[2] = uint8_t(img.width >> 8);  ihdr[3] = uint8_t(img.width);
  ihdr[4] = uint8_t(img.height >> 24); ihdr[5] = uint8_t(img.height >> 16);
  ihdr[6] = uint8_t(img.height >> 8);  ihdr[7] = uint8_t(img.height);
  ihdr[8] = 8;                                   // bit depth
  ihdr[9] = (img.channels == 1) ? 0 : 2;         // gray / truecolor
  ihdr[10] = 0; ihdr[11] = 0; ihdr[12] = 0;      // deflate, adaptive, no interlace
  detail::append_chunk(out, "IHDR", ihdr, 13);

  // Raw scanlines, filter type 0 on every row: deterministic bytes for fixed input.
  const size_t row_bytes = static_cast<size_t>(img.width) * img.channels;
  std::vector<uint8_t> raw;
  raw.reserve((row_bytes + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.data.data() + static_cast<size_t>(y) * row_bytes;
    raw.insert(raw.end(), row, row + row_bytes);
  }

  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (::compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    raise(Err::IoError, "zlib compression failed");
  compressed.resize(bound);

  detail::append_chunk(out, "IDAT", compressed.data(), compressed.size());
  detail::append_chunk(out, "IEND", nullptr, 0);
  return out;
}

inline PngImage png_decode(std::span<const uint8_t> bytes, const std::string& name = "") {
  auto fail = [&](const std::string& why) -> void {
    raise(Err::DecodeError, name.empty() ? why : name + ": " + why);
  };

  if (bytes.size() < 8 || std::memcmp(bytes.data(), detail::kPngSignature, 8) != 0)
    fail("not a PNG file");

  size_t pos = 8;
  PngImage img;
  int color_type = -1;
  int src_channels = 0;
  std::vector<uint8_t> idat;
  bool saw_ihdr = false, saw_iend = false;

  while (pos + 8 <= bytes.size() && !saw_iend) {
    uint32_t len = detail::read_be32(bytes.data() + pos);
    if (pos + 12 + static_cast<size_t>(len) > bytes.size()) fail("truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const uint8_t* payload = bytes.data() + pos + 8;
    uint32_t crc_stored = detail::read_be32(bytes.data() + pos + 8 + len);
    uint32_t crc_actual = ::crc32(0L, bytes.data() + pos + 4, 4 + len);
    if (crc_stored != crc_actual) fail("chunk CRC mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail("bad IHDR length");
      img.width = static_cast<int>(detail::read_be32(payload));
      img.height = static_cast<int>(detail::read_be32(payload + 4));
      int bit_depth = payload[8];
      color_type = payload[9];
      int interlace = payload[12];
      if (img.width < 1 || img.height < 1) fail("bad dimensions");
      if (bit_depth != 8) fail("only 8-bit PNG supported");
      if (interlace != 0) fail("interlaced PNG not supported");
      switch (color_type) {
        case 0: src_channels = 1; break;
        case 2: src_channels = 3; break;
        case 6: src_channels = 4; break;  // alpha dropped after unfiltering
        default: fail("unsupported color type (palette/alpha-gray)");
      }
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (!saw_ihdr) fail("IDAT before IHDR");
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    // ancillary chunks skipped
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend || idat.empty()) fail("missing required chunks");

  const size_t row_bytes = static_cast<size_t>(img.width) * src_channels;
  const size_t raw_size = (row_bytes + 1) * img.height;
  std::vector<uint8_t> raw(raw_size);
  uLongf out_len = static_cast<uLongf>(raw_size);
  int zrc = ::uncompress(raw.data(), &out_len, idat.data(), static_cast<uLong>(idat.size()));
  if (zrc != Z_OK || out_len != raw_size) fail("zlib inflate failed");

  // Undo per-row filters (types 0-4).
  std::vector<uint8_t> pixels(row_bytes * img.height);
  const int bpp = src_channels;
  for (int y = 0; y < img.height; ++y) {
    uint8_t filter = raw[(row_bytes + 1) * y];
    const uint8_t* src = raw.data() + (row_bytes + 1) * y + 1;
    uint8_t* cur = pixels.data() + row_bytes * y;
    const uint8_t* prev = (y > 0) ? pixels.data() + row_bytes * (y - 1) : nullptr;
    for (size_t i = 0; i < row_bytes; ++i) {
      int a = (i >= static_cast<size_t>(bpp)) ? cur[i - bpp] : 0;
      int b = prev ? prev[i] : 0;
      int c = (prev && i >= static_cast<size_t>(bpp)) ? prev[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += detail::paeth(a, b, c); break;
        default: fail("unknown scanline filter");
      }
      cur[i] = static_cast<uint8_t>(v & 0xff);
    }
  }

  if (src_channels == 4) {
    img.channels = 3;
    img.data.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (size_t p = 0; p < static_cast<size_t>(img.width) * img.height; ++p) {
      img.data[p * 3 + 0] = pixels[p * 4 + 0];
      img.data[p * 3 + 1] = pixels[p * 4 + 1];
      img.data[p * 3 + 2] = pixels[p * 4 + 2];
    }
  } else {
    img.channels = src_channels;
    img.data = std::move(pixels);
  }
  return img;
}

inline PngImage png_read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Err::IoError, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return png_decode(bytes, path.filename().string());
}

inline void png_write_file(const std::filesystem::path& path, const PngImage& img) {
  auto bytes = png_encode(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Err::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Err::IoError, "short write to " + path.string());
}

}  // namespace torsotext
