#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

namespace support {

// Fresh directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("exmorph-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

inline void gzip_copy(const std::filesystem::path& from, const std::filesystem::path& to) {
  const std::string bytes = slurp(from);
  gzFile f = gzopen(to.string().c_str(), "wb");
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

// Minimal NIfTI-1 header writer written from the format description, used to
// craft inputs the library itself would never emit.
struct RawHeader {
  std::int16_t dims[3] = {2, 2, 2};
  float pixdim[3] = {1, 1, 1};
  std::int16_t datatype = 2;
  std::int16_t bitpix = 8;
  float scl_slope = 0;
  float scl_inter = 0;
  std::int16_t sform_code = 0;
  std::int16_t qform_code = 0;
  float srow[3][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
  std::string magic = std::string("n+1\0", 4);
  std::int32_t sizeof_hdr = 348;
  bool big_endian = false;
};

inline std::string header_bytes(const RawHeader& h) {
  std::string b(352, '\0');
  auto put = [&](std::size_t off, const void* src, std::size_t n) {
    std::memcpy(b.data() + off, src, n);
    if (h.big_endian) std::reverse(b.begin() + static_cast<std::ptrdiff_t>(off),
                                   b.begin() + static_cast<std::ptrdiff_t>(off + n));
  };
  auto i16 = [&](std::size_t off, std::int16_t v) { put(off, &v, 2); };
  auto f32 = [&](std::size_t off, float v) { put(off, &v, 4); };
  put(0, &h.sizeof_hdr, 4);
  i16(40, 3);
  for (int i = 0; i < 3; ++i) i16(42 + 2 * i, h.dims[i]);
  for (int i = 4; i < 8; ++i) i16(40 + 2 * i, 1);
  i16(70, h.datatype);
  i16(72, h.bitpix);
  f32(76, 1.0f);
  for (int i = 0; i < 3; ++i) f32(80 + 4 * i, h.pixdim[i]);
  f32(108, 352.0f);
  f32(112, h.scl_slope);
  f32(116, h.scl_inter);
  i16(252, h.qform_code);
  i16(254, h.sform_code);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) f32(280 + 16 * r + 4 * c, h.srow[r][c]);
  }
  std::memcpy(b.data() + 344, h.magic.data(), 4);
  return b;
}

template <typename T>
std::string payload(const std::vector<T>& values, bool big_endian) {
  std::string out(values.size() * sizeof(T), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    char* dst = out.data() + i * sizeof(T);
    std::memcpy(dst, &values[i], sizeof(T));
    if (big_endian) std::reverse(dst, dst + sizeof(T));
  }
  return out;
}

}  // namespace support
