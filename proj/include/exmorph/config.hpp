#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exmorph/stats.hpp"
#include "exmorph/volume.hpp"

namespace exmorph {

struct SubjectEntry {
  std::string id;
  std::filesystem::path label_map;
  std::filesystem::path landmarks;  // may be empty for volume-only studies
  std::optional<double> icv_mm3;
};

/// A cohort run. Text format, one directive per line, `#` starts a comment:
///
///     key = value              # [study] keys; also accepted before any section
///     [labels]
///     1 = GM                   # label id = name
///     [subjects]
///     S01  seg/S01.nii.gz  lm/S01.csv  1.45e6     # id, label map, landmarks, ICV (or -)
///
/// Relative paths resolve against the config file's directory.
struct StudyConfig {
  std::filesystem::path base_dir = ".";
  std::vector<SubjectEntry> subjects;
  LabelDictionary dictionary = default_label_dictionary();
  std::vector<std::string> landmark_names;

  std::filesystem::path out_dir = "results";
  std::optional<std::filesystem::path> ratings;
  std::optional<std::filesystem::path> globals;
  std::optional<std::filesystem::path> region_mapping;
  std::optional<std::filesystem::path> thickness_csv;
  std::optional<std::filesystem::path> reference_thickness_csv;
  std::optional<std::filesystem::path> volumes_csv;
  std::optional<std::filesystem::path> groups;
  std::optional<std::filesystem::path> subset;

  stats::Alternative alternative = stats::Alternative::less;
  double q = 0.05;
  double snap_tolerance_mm = 1.0;
  double search_radius_mm = 20.0;
  int jobs = 1;
  bool largest_component_only = false;

  std::string gm_label = "GM";
  std::string wm_label = "WM";
  std::string wmh_label = "WMH";
  std::vector<std::string> subcortical_labels = {"caudate", "putamen", "globus_pallidus",
                                                 "thalamus"};

  // `key = value` as it would appear in the [study] section. Used by the
  // parser and by command-line overrides.
  void set(const std::string& key, const std::string& value);
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

StudyConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                         const std::string& source = "<config>");
StudyConfig load_config(const std::filesystem::path& path);

enum class Command { thickness, volumes, correlate };

// Fail-fast checks before any computation; throws Error with code "invalid-config"
// or "no-subjects".
void validate(const StudyConfig& config, Command command);

// One subject id per line; blank lines and `#` comments ignored.
std::vector<std::string> read_subject_list(const std::filesystem::path& path);

}  // namespace exmorph
