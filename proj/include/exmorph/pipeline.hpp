#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "exmorph/config.hpp"

namespace exmorph::pipeline {

// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_partial = 1;
inline constexpr int exit_invalid = 2;

struct Report {
  int exit_code = exit_ok;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;
};

using Rows = std::vector<std::vector<std::string>>;

inline const std::vector<std::string> thickness_header = {
    "subject",  "landmark",  "thickness_mm", "center_x",         "center_y", "center_z",
    "radius_mm", "snapped",  "snap_distance_mm", "flag"};
inline const std::vector<std::string> volumes_header = {"subject", "measure", "value", "flag"};
inline const std::vector<std::string> metrics_header = {"subject", "label", "dsc", "hd95_mm", "flag"};
inline const std::vector<std::string> correlation_header = {"roi", "measure", "rho", "p",
                                                            "n",   "bh_rejected", "flag"};

// Per-subject measurement; subject-level errors become flagged rows.
Report cmd_thickness(const StudyConfig& config);
Report cmd_volumes(const StudyConfig& config);
Report cmd_correlate(const StudyConfig& config);

struct EvaluateOptions {
  std::filesystem::path candidate_dir;
  std::filesystem::path reference_dir;
  std::vector<std::int32_t> labels;  // empty: every id in the dictionary
  LabelDictionary dictionary = default_label_dictionary();
  std::filesystem::path out_dir = "results";
  int jobs = 1;
};

Report cmd_evaluate(const EvaluateOptions& options);

// Row builders behind the commands, exposed for tests.
Rows thickness_rows(const StudyConfig& config, std::vector<std::string>& warnings);
Rows volume_rows(const StudyConfig& config, std::vector<std::string>& warnings);

}  // namespace exmorph::pipeline
