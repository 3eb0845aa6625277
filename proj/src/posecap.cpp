#include "posegen/posecap.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "posegen/checkpoint.hpp"
#include "posegen/error.hpp"

namespace posegen {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string to_jsonl_line(const PoseCapRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["caption"] = r.caption;
  ojson kp = ojson::array();
  for (const auto& p : r.keypoints) kp.push_back({p[0], p[1]});
  j["keypoints"] = std::move(kp);
  j["visibility"] = r.visibility;
  j["width"] = r.width;
  j["height"] = r.height;
  return j.dump();
}

PoseCapRecord parse_jsonl_line(const std::string& line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  try {
    PoseCapRecord r;
    r.id = j.at("id").get<std::string>();
    r.caption = j.at("caption").get<std::string>();
    for (const auto& p : j.at("keypoints")) {
      if (!p.is_array() || p.size() != 2) throw DataError(where + "keypoint is not an [x, y] pair");
      r.keypoints.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    r.visibility = j.at("visibility").get<std::vector<int>>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + e.what());
  }
}

std::vector<PoseCapRecord> read_posecap(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open", path.string());
  std::vector<PoseCapRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(parse_jsonl_line(line, n));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_posecap(const fs::path& path, const std::vector<PoseCapRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    text += to_jsonl_line(r);
    text += '\n';
  }
  write_file(path, text);
}

PoseCapRecord to_record(const PoseSample& s) {
  PoseCapRecord r;
  r.id = s.id;
  r.caption = s.caption;
  r.width = s.source_width;
  r.height = s.source_height;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const bool vis = s.visibility[j] >= 0.5;
    r.visibility.push_back(vis ? 1 : 0);
    if (vis) {
      const auto [px, py] = denormalize_coords(s.pose[j], s.source_width, s.source_height);
      r.keypoints.push_back({px, py});
    } else {
      r.keypoints.push_back({s.source_width / 2.0, s.source_height / 2.0});
    }
  }
  return r;
}

PoseSample to_sample(const PoseCapRecord& r) {
  RawSample raw;
  raw.id = r.id;
  raw.caption = r.caption;
  raw.source_width = r.width;
  raw.source_height = r.height;
  if (r.width <= 0 || r.height <= 0) {
    throw ValidationError(r.id + ": non-positive image size");
  }
  for (std::size_t j = 0; j < r.keypoints.size(); ++j) {
    const bool vis = j < r.visibility.size() && r.visibility[j] == 1;
    raw.joints.push_back(vis ? normalize_coords(r.keypoints[j][0], r.keypoints[j][1],
                                                r.width, r.height)
                             : Keypoint2D{0.0, 0.0});
  }
  for (int v : r.visibility) raw.visibility.push_back(static_cast<double>(v));
  try {
    return to_pose_sample(raw);
  } catch (const ValidationError& e) {
    throw ValidationError(r.id + ": " + e.what());
  }
}

std::vector<PoseSample> load_corpus(const fs::path& path) {
  std::vector<PoseSample> out;
  for (const auto& r : read_posecap(path)) {
    try {
      out.push_back(to_sample(r));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void save_corpus(const fs::path& path, const std::vector<PoseSample>& samples) {
  std::vector<PoseCapRecord> records;
  records.reserve(samples.size());
  for (const auto& s : samples) records.push_back(to_record(s));
  write_posecap(path, records);
}

bool convert_openpose(const std::string& json_text, const std::string& id,
                      const std::string& caption, const ImportOptions& opt,
                      PoseCapRecord& out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("people") || !j["people"].is_array()) {
    throw DataError("missing \"people\" array");
  }
  if (j["people"].empty()) return false;
  const auto& person = j["people"][0];
  if (!person.contains("pose_keypoints_2d")) {
    throw DataError("people[0] has no pose_keypoints_2d");
  }
  const auto& kp = person["pose_keypoints_2d"];
  if (!kp.is_array() || kp.size() != 3 * kNumJoints) {
    throw DataError("pose_keypoints_2d must hold 54 numbers, got " +
                    std::to_string(kp.is_array() ? kp.size() : 0));
  }
  PoseCapRecord r;
  r.id = id;
  r.caption = caption;
  r.width = opt.width;
  r.height = opt.height;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (!kp[3 * i].is_number() || !kp[3 * i + 1].is_number() || !kp[3 * i + 2].is_number()) {
      throw DataError("pose_keypoints_2d holds a non-number");
    }
    const double x = kp[3 * i].get<double>();
    const double y = kp[3 * i + 1].get<double>();
    const double c = kp[3 * i + 2].get<double>();
    const bool vis = c > opt.conf_threshold;
    r.visibility.push_back(vis ? 1 : 0);
    if (vis) {
      r.keypoints.push_back({x, y});
    } else {
      r.keypoints.push_back({opt.width / 2.0, opt.height / 2.0});
    }
  }
  // Rejects out-of-frame visible joints and other schema problems.
  (void)to_sample(r);
  out = std::move(r);
  return true;
}

ImportResult import_openpose(const fs::path& dir, const fs::path& captions_file,
                             const ImportOptions& opt) {
  if (!fs::is_directory(dir)) throw IoError("not a directory", dir.string());
  nlohmann::json caps;
  try {
    caps = nlohmann::json::parse(read_file(captions_file));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(captions_file.string() + ": " + e.what());
  }
  if (!caps.is_object()) throw DataError(captions_file.string() + ": expected an object of id -> caption");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  ImportResult res;
  constexpr std::string_view kSuffix = "_keypoints";
  for (const auto& f : files) {
    std::string id = f.stem().string();
    if (id.size() > kSuffix.size() && id.ends_with(kSuffix)) id.resize(id.size() - kSuffix.size());
    const auto it = caps.find(id);
    if (it == caps.end() || !it->is_string() || it->get<std::string>().empty()) {
      ++res.skipped_no_caption;
      continue;
    }
    try {
      PoseCapRecord r;
      if (convert_openpose(read_file(f), id, it->get<std::string>(), opt, r)) {
        res.records.push_back(std::move(r));
      } else {
        ++res.skipped_no_people;
      }
    } catch (const Error& e) {
      res.errors.push_back({f.filename().string(), e.what()});
    }
  }
  return res;
}

}  // namespace posegen
