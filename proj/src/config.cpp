#include "exmorph/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "exmorph/csv.hpp"
#include "exmorph/error.hpp"
#include "exmorph/morphometry.hpp"

namespace exmorph {

namespace {

double positive(const std::string& key, const std::string& value) {
  const double v = csv::to_double(value, key);
  if (!(v > 0.0)) throw Error("invalid-config", key + " must be positive");
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto& item : csv::split(value, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return csv::trim(hash == std::string::npos ? line : line.substr(0, hash));
}

}  // namespace

std::filesystem::path StudyConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

void StudyConfig::set(const std::string& key, const std::string& value) {
  auto path = [&]() { return std::filesystem::path(value); };
  if (key == "out") out_dir = path();
  else if (key == "ratings") ratings = path();
  else if (key == "globals") globals = path();
  else if (key == "region_mapping") region_mapping = path();
  else if (key == "thickness") thickness_csv = path();
  else if (key == "reference_thickness") reference_thickness_csv = path();
  else if (key == "volumes") volumes_csv = path();
  else if (key == "groups") groups = path();
  else if (key == "subset") subset = path();
  else if (key == "alternative") alternative = stats::parse_alternative(value);
  else if (key == "q") {
    q = csv::to_double(value, key);
    if (!(q > 0.0 && q < 1.0)) throw Error("invalid-config", "q must lie in (0, 1)");
  } else if (key == "snap_tolerance_mm") snap_tolerance_mm = positive(key, value);
  else if (key == "search_radius_mm") search_radius_mm = positive(key, value);
  else if (key == "jobs") {
    const double j = positive(key, value);
    if (j != static_cast<int>(j)) throw Error("invalid-config", "jobs must be an integer");
    jobs = static_cast<int>(j);
  } else if (key == "largest_component_only") {
    if (value != "true" && value != "false") {
      throw Error("invalid-config", "largest_component_only must be true or false");
    }
    largest_component_only = value == "true";
  } else if (key == "landmarks") landmark_names = split_list(value);
  else if (key == "gm_label") gm_label = value;
  else if (key == "wm_label") wm_label = value;
  else if (key == "wmh_label") wmh_label = value;
  else if (key == "subcortical_labels") subcortical_labels = split_list(value);
  else throw Error("invalid-config", "unknown config key '" + key + "'");
}

StudyConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                         const std::string& source) {
  StudyConfig c;
  c.base_dir = base_dir;
  c.landmark_names = cortical_roi_names();
  std::string section = "study";
  bool labels_seen = false;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw Error("invalid-config", "unterminated section header");
        section = csv::trim(line.substr(1, line.size() - 2));
        if (section != "study" && section != "labels" && section != "subjects") {
          throw Error("invalid-config", "unknown section [" + section + "]");
        }
        continue;
      }
      if (section == "subjects") {
        const auto w = words(line);
        if (w.size() < 2 || w.size() > 4) {
          throw Error("invalid-config", "subject line needs: id label_map [landmarks] [icv]");
        }
        SubjectEntry s;
        s.id = w[0];
        if (!ids.insert(s.id).second) throw Error("invalid-config", "duplicate subject " + s.id);
        s.label_map = w[1];
        if (w.size() >= 3 && w[2] != "-") s.landmarks = w[2];
        if (w.size() == 4 && w[3] != "-") s.icv_mm3 = positive("icv of " + s.id, w[3]);
        c.subjects.push_back(std::move(s));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error("invalid-config", "expected key = value");
      const std::string key = csv::trim(line.substr(0, eq));
      const std::string value = csv::trim(line.substr(eq + 1));
      if (section == "labels") {
        if (!labels_seen) {
          c.dictionary.clear();
          labels_seen = true;
        }
        const double id = csv::to_double(key, "label id");
        if (id < 1 || id != static_cast<std::int32_t>(id)) {
          throw Error("invalid-config", "label ids must be positive integers");
        }
        c.dictionary[static_cast<std::int32_t>(id)] = value;
      } else {
        c.set(key, value);
      }
    } catch (const Error& e) {
      throw Error("invalid-config", where + e.what());
    }
  }
  return c;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("invalid-config", "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path(),
                      path.string());
}

namespace {

void require_file(const StudyConfig& c, const std::optional<std::filesystem::path>& p,
                  const std::string& what) {
  if (!p) throw Error("invalid-config", what + " is not configured");
  if (!std::filesystem::exists(c.resolve(*p))) {
    throw Error("invalid-config", what + " not found: " + c.resolve(*p).string());
  }
}

void require_label(const StudyConfig& c, const std::string& name) {
  for (const auto& [id, n] : c.dictionary) {
    if (n == name) return;
  }
  throw Error("invalid-config", "label '" + name + "' is not in the label dictionary");
}

}  // namespace

void validate(const StudyConfig& c, Command command) {
  if (!(c.q > 0.0 && c.q < 1.0)) throw Error("invalid-config", "q must lie in (0, 1)");
  if (!(c.snap_tolerance_mm > 0.0) || !(c.search_radius_mm > 0.0)) {
    throw Error("invalid-config", "tolerances must be positive");
  }
  if (c.jobs < 1) throw Error("invalid-config", "jobs must be >= 1");
  if (command == Command::thickness || command == Command::volumes) {
    if (c.subjects.empty()) throw Error("no-subjects", "no subjects");
    for (const auto& s : c.subjects) {
      if (!std::filesystem::exists(c.resolve(s.label_map))) {
        throw Error("invalid-config", "label map for " + s.id + " not found: " +
                                          c.resolve(s.label_map).string());
      }
      if (command == Command::thickness) {
        if (s.landmarks.empty()) throw Error("invalid-config", "no landmark file for " + s.id);
        if (!std::filesystem::exists(c.resolve(s.landmarks))) {
          throw Error("invalid-config", "landmark file for " + s.id + " not found: " +
                                            c.resolve(s.landmarks).string());
        }
      }
    }
  }
  if (command == Command::thickness) {
    require_label(c, c.gm_label);
    if (c.landmark_names.empty()) throw Error("invalid-config", "no landmark names configured");
  }
  if (command == Command::volumes) {
    require_label(c, c.wm_label);
    require_label(c, c.wmh_label);
  }
  if (command == Command::correlate) {
    require_file(c, c.ratings, "ratings");
    if (c.globals) require_file(c, c.globals, "globals");
    if (c.region_mapping) require_file(c, c.region_mapping, "region_mapping");
    if (c.subset) require_file(c, c.subset, "subset");
    if (c.reference_thickness_csv) require_file(c, c.reference_thickness_csv, "reference_thickness");
    if (c.groups) require_file(c, c.groups, "groups");
    const auto thickness = c.thickness_csv ? *c.thickness_csv : c.out_dir / "thickness.csv";
    require_file(c, thickness, "thickness measurements");
    if (c.volumes_csv) require_file(c, c.volumes_csv, "volume measurements");
  }
}

std::vector<std::string> read_subject_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing-file", "cannot read subject list " + path.string());
  std::vector<std::string> out;
  for (std::string raw; std::getline(in, raw);) {
    const std::string line = strip_comment(raw);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace exmorph
