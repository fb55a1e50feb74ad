#include "exmorph/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "exmorph/error.hpp"

namespace exmorph::nifti {

namespace {

constexpr std::size_t header_size = 348;
constexpr std::size_t data_offset = 352;

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error("missing-file", "no such file: " + path.string());
  }
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw Error("io-error", "cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::array<std::uint8_t, 1 << 16> buffer{};
  for (;;) {
    const int n = gzread(f, buffer.data(), static_cast<unsigned>(buffer.size()));
    if (n < 0) {
      gzclose(f);
      throw Error("io-error", "corrupt compressed stream in " + path.string());
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), buffer.begin(), buffer.begin() + n);
  }
  gzclose(f);
  return bytes;
}

bool has_gzip_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char m[2] = {0, 0};
  in.read(reinterpret_cast<char*>(m), 2);
  return in.gcount() == 2 && m[0] == 0x1F && m[1] == 0x8B;
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, bytes_.data() + offset, sizeof(T));
    if (swap_) v = swapped(v);
    return v;
  }

  template <typename T>
  static T swapped(T v) {
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), &v, sizeof(T));
    std::reverse(raw.begin(), raw.end());
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  bool swap_;
};

// Header floats are widened through their shortest decimal form so that a
// spacing of 0.3 written as float32 reads back as the double 0.3.
double widen(float f) {
  if (!std::isfinite(f)) return static_cast<double>(f);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), f);
  double d = 0.0;
  std::from_chars(buf, res.ptr, d);
  return d;
}

std::size_t bytes_per_voxel(Datatype d) {
  switch (d) {
    case Datatype::uint8: return 1;
    case Datatype::int16: return 2;
    case Datatype::int32: return 4;
    case Datatype::float32: return 4;
  }
  return 0;
}

Affine quatern_to_affine(double b, double c, double d, const Vec3& offset, const Vec3& spacing,
                         double qfac) {
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    const double norm = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= norm;
    c *= norm;
    d *= norm;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double r[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}};
  Affine m{};
  const double scale[3] = {spacing[0], spacing[1], spacing[2] * qfac};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = r[i][j] * scale[j];
    m[i][3] = offset[i];
  }
  m[3] = {0.0, 0.0, 0.0, 1.0};
  return m;
}

struct Quatern {
  double b, c, d, qfac;
};

Quatern affine_to_quatern(const Affine& m, const Vec3& spacing) {
  double r[3][3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r[i][j] = m[i][j] / spacing[j];
  }
  const double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                     r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                     r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  double qfac = 1.0;
  if (det < 0.0) {
    qfac = -1.0;
    for (auto& row : r) row[2] = -row[2];
  }
  double a = r[0][0] + r[1][1] + r[2][2] + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r[2][1] - r[1][2]) / a;
    c = 0.25 * (r[0][2] - r[2][0]) / a;
    d = 0.25 * (r[1][0] - r[0][1]) / a;
  } else {
    const double xd = 1.0 + r[0][0] - r[1][1] - r[2][2];
    const double yd = 1.0 + r[1][1] - r[0][0] - r[2][2];
    const double zd = 1.0 + r[2][2] - r[0][0] - r[1][1];
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r[0][1] + r[1][0]) / b;
      d = 0.25 * (r[0][2] + r[2][0]) / b;
      a = 0.25 * (r[2][1] - r[1][2]) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r[0][1] + r[1][0]) / c;
      d = 0.25 * (r[1][2] + r[2][1]) / c;
      a = 0.25 * (r[0][2] - r[2][0]) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r[0][2] + r[2][0]) / d;
      c = 0.25 * (r[1][2] + r[2][1]) / d;
      a = 0.25 * (r[1][0] - r[0][1]) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  return {b, c, d, qfac};
}

struct Parsed {
  Header header;
  VoxelGrid grid;
  std::vector<double> values;
};

Parsed parse(const std::filesystem::path& path, bool want_values) {
  const bool gz = has_gzip_magic(path);
  const std::vector<std::uint8_t> bytes = slurp(path);
  if (bytes.size() < header_size) {
    throw Error("bad-header", "file too short for a NIfTI-1 header: " + path.string());
  }
  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != static_cast<std::int32_t>(header_size)) {
    if (Reader::swapped(sizeof_hdr) == static_cast<std::int32_t>(header_size)) {
      swap = true;
    } else if (sizeof_hdr == 540 || Reader::swapped(sizeof_hdr) == 540) {
      throw Error("unsupported-format", "unsupported NIfTI-2 file: " + path.string());
    } else {
      throw Error("bad-header", "not a NIfTI-1 file (sizeof_hdr): " + path.string());
    }
  }
  const char* magic = reinterpret_cast<const char*>(bytes.data() + 344);
  if (std::memcmp(magic, "ni1\0", 4) == 0) {
    throw Error("unsupported-format", "unsupported two-file NIfTI: " + path.string());
  }
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    throw Error("bad-magic", "bad NIfTI magic in " + path.string());
  }

  const Reader r(bytes, swap);
  Header h;
  h.big_endian = (std::endian::native == std::endian::little) == swap;
  h.gzipped = gz;
  const std::int16_t ndim = r.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7) throw Error("bad-header", "invalid dim[0] in " + path.string());
  for (int i = 0; i < 3; ++i) {
    const std::int16_t d = i < ndim ? r.get<std::int16_t>(42 + 2 * i) : std::int16_t{1};
    if (d < 1) throw Error("bad-header", "non-positive dimension in " + path.string());
    h.dims[i] = d;
  }
  for (int i = 3; i < ndim; ++i) {
    if (r.get<std::int16_t>(42 + 2 * i) > 1) {
      throw Error("unsupported-format", "only 3D volumes are supported: " + path.string());
    }
  }
  const std::int16_t code = r.get<std::int16_t>(70);
  switch (code) {
    case 2: case 4: case 8: case 16: h.datatype = static_cast<Datatype>(code); break;
    default:
      throw Error("unsupported-datatype",
                  "unsupported NIfTI datatype " + std::to_string(code) + " in " + path.string());
  }
  const double qfac_raw = widen(r.get<float>(76));
  for (int i = 0; i < 3; ++i) h.pixdim[i] = std::abs(widen(r.get<float>(80 + 4 * i)));
  const float vox_offset = r.get<float>(108);
  h.scl_slope = r.get<float>(112);
  h.scl_inter = r.get<float>(116);
  h.qform_code = r.get<std::int16_t>(252);
  h.sform_code = r.get<std::int16_t>(254);

  Affine affine{};
  if (h.sform_code > 0) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) affine[i][j] = widen(r.get<float>(280 + 16 * i + 4 * j));
    }
    affine[3] = {0.0, 0.0, 0.0, 1.0};
  } else if (h.qform_code > 0) {
    const Vec3 offset{widen(r.get<float>(268)), widen(r.get<float>(272)),
                      widen(r.get<float>(276))};
    affine = quatern_to_affine(widen(r.get<float>(256)), widen(r.get<float>(260)),
                               widen(r.get<float>(264)), offset, h.pixdim,
                               qfac_raw < 0.0 ? -1.0 : 1.0);
  } else {
    affine = diagonal_affine(h.pixdim);
  }
  VoxelGrid grid(h.dims, h.pixdim, affine);

  std::vector<double> values;
  if (want_values) {
    const std::size_t offset =
        std::max<std::size_t>(static_cast<std::size_t>(vox_offset), header_size);
    const std::size_t n = grid.voxel_count();
    const std::size_t bpv = bytes_per_voxel(h.datatype);
    if (bytes.size() < offset + n * bpv) {
      throw Error("bad-header", "dims/pixdim inconsistent with data length in " + path.string());
    }
    values.resize(n);
    const std::uint8_t* base = bytes.data() + offset;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t at = offset + i * bpv;
      switch (h.datatype) {
        case Datatype::uint8: values[i] = base[i]; break;
        case Datatype::int16: values[i] = r.get<std::int16_t>(at); break;
        case Datatype::int32: values[i] = r.get<std::int32_t>(at); break;
        case Datatype::float32: values[i] = r.get<float>(at); break;
      }
    }
    if (h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
        !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
      const double slope = h.scl_slope;
      const double inter = h.scl_inter;
      for (double& v : values) v = v * slope + inter;
    }
    for (const double v : values) {
      if (!std::isfinite(v)) throw Error("non-finite", "non-finite voxel value in " + path.string());
    }
  }
  return {h, std::move(grid), std::move(values)};
}

template <typename T>
void put(std::vector<std::uint8_t>& out, std::size_t offset, T value) {
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

std::vector<std::uint8_t> encode_header(const VoxelGrid& grid, Datatype datatype) {
  static_assert(std::endian::native == std::endian::little, "writer assumes a little-endian host");
  std::vector<std::uint8_t> out(data_offset, 0);
  put<std::int32_t>(out, 0, static_cast<std::int32_t>(header_size));
  const auto& dims = grid.dims();
  for (int i = 0; i < 3; ++i) {
    if (dims[i] > std::numeric_limits<std::int16_t>::max()) {
      throw Error("bad-geometry", "dimension exceeds NIfTI-1 limit");
    }
  }
  const std::int16_t dim[8] = {3,
                               static_cast<std::int16_t>(dims[0]),
                               static_cast<std::int16_t>(dims[1]),
                               static_cast<std::int16_t>(dims[2]),
                               1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put<std::int16_t>(out, 40 + 2 * i, dim[i]);
  put<std::int16_t>(out, 70, static_cast<std::int16_t>(datatype));
  put<std::int16_t>(out, 72, static_cast<std::int16_t>(8 * bytes_per_voxel(datatype)));

  const Quatern q = affine_to_quatern(grid.affine(), grid.spacing());
  const float pixdim[8] = {static_cast<float>(q.qfac),
                           static_cast<float>(grid.spacing()[0]),
                           static_cast<float>(grid.spacing()[1]),
                           static_cast<float>(grid.spacing()[2]),
                           1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) put<float>(out, 76 + 4 * i, pixdim[i]);
  put<float>(out, 108, static_cast<float>(data_offset));
  put<float>(out, 112, 1.0f);
  put<float>(out, 116, 0.0f);
  out[123] = 2;  // xyzt_units: mm
  put<std::int16_t>(out, 252, 1);
  put<std::int16_t>(out, 254, 1);
  put<float>(out, 256, static_cast<float>(q.b));
  put<float>(out, 260, static_cast<float>(q.c));
  put<float>(out, 264, static_cast<float>(q.d));
  const Affine& a = grid.affine();
  for (int i = 0; i < 3; ++i) put<float>(out, 268 + 4 * i, static_cast<float>(a[i][3]));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) put<float>(out, 280 + 16 * i + 4 * j, static_cast<float>(a[i][j]));
  }
  std::memcpy(out.data() + 344, "n+1\0", 4);
  return out;
}

void emit(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  const bool compress = path.extension() == ".gz";
  if (compress) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw Error("io-error", "cannot write " + path.string());
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    const int rc = gzclose(f);
    if (n != static_cast<int>(bytes.size()) || rc != Z_OK) {
      throw Error("io-error", "short write to " + path.string());
    }
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io-error", "short write to " + path.string());
}

template <typename T, typename Source>
void append_values(std::vector<std::uint8_t>& out, const std::vector<Source>& values) {
  const std::size_t base = out.size();
  out.resize(base + values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T v = static_cast<T>(values[i]);
    std::memcpy(out.data() + base + i * sizeof(T), &v, sizeof(T));
  }
}

}  // namespace

const char* datatype_name(Datatype d) noexcept {
  switch (d) {
    case Datatype::uint8: return "uint8";
    case Datatype::int16: return "int16";
    case Datatype::int32: return "int32";
    case Datatype::float32: return "float32";
  }
  return "unknown";
}

Header read_header(const std::filesystem::path& path) { return parse(path, false).header; }

ImageVolume read_image(const std::filesystem::path& path) {
  Parsed p = parse(path, true);
  return ImageVolume(std::move(p.grid), std::move(p.values));
}

LabelMap read_labels(const std::filesystem::path& path, const LabelDictionary& dictionary) {
  Parsed p = parse(path, true);
  std::vector<std::int32_t> ids(p.values.size());
  LabelDictionary dict = dictionary;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double v = p.values[i];
    if (v < 0.0 || v != std::floor(v) || v > std::numeric_limits<std::int32_t>::max()) {
      throw Error("bad-label", "volume is not a non-negative integer label map: " + path.string());
    }
    ids[i] = static_cast<std::int32_t>(v);
    if (ids[i] != 0 && !dict.contains(ids[i])) dict[ids[i]] = "label_" + std::to_string(ids[i]);
  }
  return LabelMap(std::move(p.grid), std::move(ids), std::move(dict));
}

void write_image(const ImageVolume& volume, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = encode_header(volume.grid, Datatype::float32);
  append_values<float>(bytes, volume.data);
  emit(path, bytes);
}

void write_labels(const LabelMap& labels, const std::filesystem::path& path,
                  const LabelWriteOptions& options) {
  const std::int32_t max_id = labels.max_label();
  Datatype datatype;
  if (options.datatype) {
    datatype = *options.datatype;
    const std::int64_t limit = datatype == Datatype::uint8    ? 255
                               : datatype == Datatype::int16  ? 32767
                               : datatype == Datatype::int32  ? std::numeric_limits<std::int32_t>::max()
                                                              : (std::int64_t{1} << 24);
    if (max_id > limit) {
      throw Error("label-overflow", "label id " + std::to_string(max_id) + " exceeds " +
                                        datatype_name(datatype));
    }
  } else if (max_id <= 255) {
    datatype = Datatype::uint8;
  } else if (max_id <= 32767) {
    datatype = Datatype::int16;
  } else if (options.allow_int32) {
    datatype = Datatype::int32;
  } else {
    throw Error("label-overflow",
                "label id " + std::to_string(max_id) + " exceeds int16 and int32 is disabled");
  }
  std::vector<std::uint8_t> bytes = encode_header(labels.grid(), datatype);
  switch (datatype) {
    case Datatype::uint8: append_values<std::uint8_t>(bytes, labels.labels()); break;
    case Datatype::int16: append_values<std::int16_t>(bytes, labels.labels()); break;
    case Datatype::int32: append_values<std::int32_t>(bytes, labels.labels()); break;
    case Datatype::float32: append_values<float>(bytes, labels.labels()); break;
  }
  emit(path, bytes);
}

}  // namespace exmorph::nifti
