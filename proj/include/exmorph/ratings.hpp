#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace exmorph {

// Regional semi-quantitative measures, in CSV column order.
inline const std::array<std::string, 5> regional_measures = {"ptau", "abeta", "tdp43", "asyn",
                                                             "neuronloss"};
// Per-subject global stages, in CSV column order.
inline const std::array<std::string, 4> global_measures = {"a_score", "b_score", "c_score",
                                                           "braak06"};

// Ordinal rating scale: none, rare, mild, moderate, severe.
bool valid_rating(double value) noexcept;

struct RegionalRatings {
  std::array<std::optional<double>, 5> values;
};

struct GlobalStages {
  std::array<std::optional<double>, 4> values;  // A 0-3, B 0-3, C 0-3, Braak 0-6
};

/// Pathology ratings keyed by (subject, pathology region) plus global stages.
class RatingsTable {
 public:
  void set_regional(const std::string& subject, const std::string& region, RegionalRatings r);
  void set_global(const std::string& subject, GlobalStages g);

  std::optional<double> regional(const std::string& subject, const std::string& region,
                                 const std::string& measure) const;
  std::optional<double> global(const std::string& subject, const std::string& measure) const;

  // Either a regional or a global measure name.
  std::optional<double> value(const std::string& subject, const std::string& region,
                              const std::string& measure) const;

  bool has_region(const std::string& region) const;

 private:
  std::map<std::pair<std::string, std::string>, RegionalRatings> regional_;
  std::map<std::string, GlobalStages> global_;
};

// `subject,region,ptau,abeta,tdp43,asyn,neuronloss`, blank for missing.
void read_regional_ratings(const std::filesystem::path& path, RatingsTable& table);
// `subject,a_score,b_score,c_score,braak06`.
void read_global_stages(const std::filesystem::path& path, RatingsTable& table);

struct RegionMapping {
  std::string roi;
  std::string pathology_region;
  bool exact = true;
};

// `roi,pathology_region,exact` with exact in {Y,N}.
std::vector<RegionMapping> read_region_mapping(const std::filesystem::path& path);
// The sixteen-row cortical ROI to rating-region table shipped with the toolkit.
std::vector<RegionMapping> default_region_mapping();
std::string render_region_mapping(const std::vector<RegionMapping>& mapping);

}  // namespace exmorph
