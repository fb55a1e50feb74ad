#include "exmorph/ratings.hpp"

#include <cmath>

#include "exmorph/csv.hpp"
#include "exmorph/error.hpp"

namespace exmorph {

bool valid_rating(double value) noexcept {
  return value == 0.0 || value == 0.5 || value == 1.0 || value == 2.0 || value == 3.0;
}

namespace {

template <typename Array, typename Names>
std::optional<double> lookup(const Array& values, const Names& names, const std::string& measure) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == measure) return values[i];
  }
  throw Error("unknown-measure", "unknown pathology measure '" + measure + "'");
}

bool is_global(const std::string& measure) {
  for (const auto& g : global_measures) {
    if (g == measure) return true;
  }
  return false;
}

}  // namespace

void RatingsTable::set_regional(const std::string& subject, const std::string& region,
                                RegionalRatings r) {
  for (const auto& v : r.values) {
    if (v && !valid_rating(*v)) {
      throw Error("bad-rating", "rating " + std::to_string(*v) + " for " + subject + "/" + region +
                                    " is not on the 0/0.5/1/2/3 scale");
    }
  }
  regional_[{subject, region}] = r;
}

void RatingsTable::set_global(const std::string& subject, GlobalStages g) {
  static constexpr double upper[4] = {3.0, 3.0, 3.0, 6.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& v = g.values[i];
    if (v && (*v < 0.0 || *v > upper[i] || *v != std::floor(*v))) {
      throw Error("bad-rating", global_measures[i] + " for " + subject + " out of range");
    }
  }
  global_[subject] = g;
}

std::optional<double> RatingsTable::regional(const std::string& subject, const std::string& region,
                                             const std::string& measure) const {
  const auto it = regional_.find({subject, region});
  if (it == regional_.end()) {
    lookup(RegionalRatings{}.values, regional_measures, measure);  // validates the name
    return std::nullopt;
  }
  return lookup(it->second.values, regional_measures, measure);
}

std::optional<double> RatingsTable::global(const std::string& subject,
                                           const std::string& measure) const {
  const auto it = global_.find(subject);
  if (it == global_.end()) {
    lookup(GlobalStages{}.values, global_measures, measure);
    return std::nullopt;
  }
  return lookup(it->second.values, global_measures, measure);
}

std::optional<double> RatingsTable::value(const std::string& subject, const std::string& region,
                                          const std::string& measure) const {
  return is_global(measure) ? global(subject, measure) : regional(subject, region, measure);
}

bool RatingsTable::has_region(const std::string& region) const {
  for (const auto& [key, _] : regional_) {
    if (key.second == region) return true;
  }
  return false;
}

void read_regional_ratings(const std::filesystem::path& path, RatingsTable& table) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, {"subject", "region", "ptau", "abeta", "tdp43", "asyn", "neuronloss"},
                      path.string());
  for (const auto& row : t.rows) {
    RegionalRatings r;
    for (std::size_t i = 0; i < 5; ++i) {
      r.values[i] = csv::to_optional_double(row[2 + i], row[0] + "/" + row[1] + "/" + regional_measures[i]);
    }
    table.set_regional(row[0], row[1], r);
  }
}

void read_global_stages(const std::filesystem::path& path, RatingsTable& table) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, {"subject", "a_score", "b_score", "c_score", "braak06"}, path.string());
  for (const auto& row : t.rows) {
    GlobalStages g;
    for (std::size_t i = 0; i < 4; ++i) {
      g.values[i] = csv::to_optional_double(row[1 + i], row[0] + "/" + global_measures[i]);
    }
    table.set_global(row[0], g);
  }
}

std::vector<RegionMapping> read_region_mapping(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, {"roi", "pathology_region", "exact"}, path.string());
  std::vector<RegionMapping> out;
  for (const auto& row : t.rows) {
    if (row[2] != "Y" && row[2] != "N") {
      throw Error("bad-csv", path.string() + ": exact must be Y or N for roi " + row[0]);
    }
    out.push_back({row[0], row[1], row[2] == "Y"});
  }
  return out;
}

std::vector<RegionMapping> default_region_mapping() {
  return {
      {"visual", "Occipital cortex", true},
      {"midfrontal", "Middle frontal gyrus", true},
      {"orbitofrontal", "Orbital frontal cortex", true},
      {"anterior_cingulate", "Cingulate gyrus", true},
      {"posterior_cingulate", "Cingulate gyrus", true},
      {"motor", "Motor cortex", true},
      {"angular_gyrus", "Angular gyrus", true},
      {"superior_parietal", "Angular gyrus", false},
      {"superior_temporal", "Superior/middle temporal", true},
      {"anterior_temporal", "Amygdala", false},
      {"anterior_insula", "Middle frontal gyrus", false},
      {"ventrolateral_temporal", "Entorhinal cortex", false},
      {"inferior_frontal", "Middle frontal gyrus", false},
      {"entorhinal", "Entorhinal cortex", true},
      {"ba35", "Entorhinal cortex", true},
      {"parahippocampal", "CA1/Subiculum", false},
  };
}

std::string render_region_mapping(const std::vector<RegionMapping>& mapping) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : mapping) rows.push_back({m.roi, m.pathology_region, m.exact ? "Y" : "N"});
  return csv::render({"roi", "pathology_region", "exact"}, rows);
}

}  // namespace exmorph
