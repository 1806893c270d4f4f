#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/grid.hpp"

namespace torsotext {

// F32M container: ASCII magic "F32M\n", header line "<width> <height> <channels>\n",
// then width*height*channels IEEE-754 binary32 values, little-endian, row-major,
// channel-interleaved. Write-then-read round-trips bit-exactly.

namespace detail {

inline void put_f32_le(std::string& out, float v) {
  uint32_t bits = std::bit_cast<uint32_t>(v);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

inline float get_f32_le(const uint8_t* p) {
  uint32_t bits = uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
                  (uint32_t(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace detail

inline std::string f32m_serialize(const FloatMap& map) {
  std::string out = "F32M\n";
  out += std::to_string(map.width) + " " + std::to_string(map.height) + " " +
         std::to_string(map.channels) + "\n";
  out.reserve(out.size() + map.values.size() * 4);
  for (float v : map.values) detail::put_f32_le(out, v);
  return out;
}

inline FloatMap f32m_parse(const std::string& bytes, const std::string& name = "") {
  auto ctx = [&](const std::string& why) { return name.empty() ? why : name + ": " + why; };

  if (bytes.size() < 5 || bytes.compare(0, 5, "F32M\n") != 0)
    raise(Err::FormatError, ctx("bad magic"));

  size_t header_end = bytes.find('\n', 5);
  if (header_end == std::string::npos) raise(Err::FormatError, ctx("missing header line"));

  std::istringstream header(bytes.substr(5, header_end - 5));
  long long w = 0, h = 0, c = 0;
  if (!(header >> w >> h >> c) || !(header >> std::ws).eof())
    raise(Err::FormatError, ctx("malformed header"));
  if (w < 1 || h < 1 || c < 1 || w > 1 << 20 || h > 1 << 20 || c > 1 << 10)
    raise(Err::FormatError, ctx("implausible dimensions"));

  const size_t count = static_cast<size_t>(w) * h * c;
  const size_t payload_at = header_end + 1;
  if (bytes.size() < payload_at + count * 4)
    raise(Err::TruncatedError, ctx("payload shorter than header promises"));

  std::vector<float> values(count);
  const uint8_t* p = reinterpret_cast<const uint8_t*>(bytes.data()) + payload_at;
  for (size_t i = 0; i < count; ++i) values[i] = detail::get_f32_le(p + i * 4);
  return FloatMap(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c),
                  std::move(values));
}

inline void f32m_write(const std::filesystem::path& path, const FloatMap& map) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Err::IoError, "cannot write " + path.string());
  std::string bytes = f32m_serialize(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Err::IoError, "short write to " + path.string());
}

inline FloatMap f32m_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Err::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return f32m_parse(bytes, path.filename().string());
}

}  // namespace torsotext
