#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "posegen/skeleton.hpp"

namespace posegen {

// One JSONL line: id, caption, keypoints (18 pixel pairs), visibility (18
// ints), width, height.
struct PoseCapRecord {
  std::string id;
  std::string caption;
  std::vector<std::array<double, 2>> keypoints;
  std::vector<int> visibility;
  int width = 256;
  int height = 256;

  friend bool operator==(const PoseCapRecord&, const PoseCapRecord&) = default;
};

std::string to_jsonl_line(const PoseCapRecord& r);
// Throws DataError naming the line on malformed JSON or missing keys.
PoseCapRecord parse_jsonl_line(const std::string& line, std::size_t line_no = 0);

std::vector<PoseCapRecord> read_posecap(const std::filesystem::path& path);
void write_posecap(const std::filesystem::path& path,
                   const std::vector<PoseCapRecord>& records);

// Pixel <-> normalized conversion. Invisible joints are parked at the image
// center in pixel space, which is the origin once normalized.
PoseCapRecord to_record(const PoseSample& s);
// Throws ValidationError on schema violations.
PoseSample to_sample(const PoseCapRecord& r);

std::vector<PoseSample> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path,
                 const std::vector<PoseSample>& samples);

struct ImportOptions {
  // Strictly greater confidence marks a joint visible.
  double conf_threshold = 0.1;
  int width = 256;
  int height = 256;
};

struct ImportIssue {
  std::string file;
  std::string message;
};

struct ImportResult {
  std::vector<PoseCapRecord> records;
  std::size_t skipped_no_caption = 0;
  std::size_t skipped_no_people = 0;
  std::vector<ImportIssue> errors;
};

// Converts one OpenPose document. Returns false when it holds no person.
bool convert_openpose(const std::string& json_text, const std::string& id,
                      const std::string& caption, const ImportOptions& opt,
                      PoseCapRecord& out);

// Reads every *.json file in dir in filename order. The record id is the
// file stem with a trailing "_keypoints" removed. captions_file is a JSON
// object mapping id to caption.
ImportResult import_openpose(const std::filesystem::path& dir,
                             const std::filesystem::path& captions_file,
                             const ImportOptions& opt);

}  // namespace posegen
