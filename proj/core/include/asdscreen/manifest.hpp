#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace asdscreen {

enum class Modality { color_frame, skeleton_joints, joint_angles };
enum class Split { train, val, test, unassigned };

std::string to_string(Modality m);
std::string to_string(Split s);
Modality modality_from_string(const std::string& s);
Split split_from_string(const std::string& s);

// One labeled sample. `subject` and the subject component of `path` are
// pseudonymized; no field carries the on-disk subject directory name.
struct SampleRecord {
  std::string sample_id;
  std::string subject;
  std::string path;  // <class_dir>/<subject_pseudonym>/<file>, '/' separated
  int label = 0;     // 1 = ASD, 0 = neurotypical
  Modality modality = Modality::color_frame;
  std::map<std::string, std::string> attributes;
  Split split = Split::unassigned;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::string corpus_root;
  std::string salt_fingerprint;
  std::string created_at;  // ISO-8601 UTC; empty when timestamps suppressed

  std::vector<size_t> indices_of(Split split) const;
  // samples per label, optionally restricted to one split
  std::pair<size_t, size_t> class_counts(std::optional<Split> split = {}) const;
};

struct SplitConfig {
  double train_fraction = 0.9;
  double val_fraction = 0.1;
  double test_fraction = 0.0;
  uint64_t seed = 0;
  bool stratify = true;
  // Splits are subject-level by default; image-level reproduces an exact
  // per-record 90/10 partition (2940 -> 2646/294) at the cost of letting one
  // subject span splits.
  bool image_level = false;

  void validate() const;
};

// Keyed hash of (salt, name), first 16 hex characters.
std::string pseudonymize(const std::string& salt, const std::string& name);

// Short identifier of the salt itself, safe to store next to a manifest.
std::string fingerprint_salt(const std::string& salt);

// Walks <root>/<class_dir>/<subject_dir>/... guided by <root>/labels.json,
// producing one record per recognized file. Records are ordered by the
// original (pre-pseudonymization) relative path.
DatasetManifest scan_corpus(const std::filesystem::path& root, const std::string& salt);

// Assigns splits by seeded shuffle at subject granularity (or record
// granularity with image_level). Per-class counts per split differ from the
// fractional target by at most one unit.
DatasetManifest make_splits(const DatasetManifest& manifest, const SplitConfig& cfg);

// JSON Lines serialization, one record per line, fixed key order:
// sample_id, subject, path, label, modality, attributes, split.
// Manifest-level metadata goes to "<path>.meta.json".
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Maps a record's pseudonymized path back to the on-disk file by re-hashing
// the corpus' subject directory names under the same salt.
class PathResolver {
 public:
  PathResolver(const std::filesystem::path& root, const std::string& salt);
  std::filesystem::path resolve(const SampleRecord& record) const;

 private:
  std::filesystem::path root_;
  std::map<std::string, std::string> subject_dirs_;  // pseudonym -> directory name
};

std::string now_iso8601();

}  // namespace asdscreen
