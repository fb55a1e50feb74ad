#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "exmorph/volume.hpp"

namespace exmorph::nifti {

// NIfTI-1 datatype codes accepted by the reader.
enum class Datatype : std::int16_t {
  uint8 = 2,
  int16 = 4,
  int32 = 8,
  float32 = 16,
};

const char* datatype_name(Datatype d) noexcept;

struct Header {
  std::array<std::int64_t, 3> dims{};
  Vec3 pixdim{};
  Datatype datatype = Datatype::float32;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  bool big_endian = false;
  bool gzipped = false;
};

// Reads the header only. Paths may be plain or gzip-compressed (.nii/.nii.gz);
// compression is detected from the 0x1F 0x8B prefix, not the extension.
Header read_header(const std::filesystem::path& path);

ImageVolume read_image(const std::filesystem::path& path);

/// Loads an integer-typed volume as a label map. Ids absent from `dictionary`
/// are added as "label_<id>"; non-integer or negative values are an error.
LabelMap read_labels(const std::filesystem::path& path,
                     const LabelDictionary& dictionary = default_label_dictionary());

struct LabelWriteOptions {
  // Force a datatype; otherwise the narrowest of uint8/int16 that fits.
  std::optional<Datatype> datatype;
  // Whether ids beyond int16 may widen to int32 instead of failing.
  bool allow_int32 = true;
};

// Images are written as float32. A ".gz" suffix selects gzip compression.
void write_image(const ImageVolume& volume, const std::filesystem::path& path);
void write_labels(const LabelMap& labels, const std::filesystem::path& path,
                  const LabelWriteOptions& options = {});

}  // namespace exmorph::nifti
