#include "asdscreen/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "asdscreen/codec.hpp"
#include "asdscreen/crypto.hpp"
#include "asdscreen/errors.hpp"
#include "asdscreen/random.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace asdscreen {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::color_frame: return "color_frame";
    case Modality::skeleton_joints: return "skeleton_joints";
    case Modality::joint_angles: return "joint_angles";
  }
  throw ValueError("unknown modality");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  throw ValueError("unknown split");
}

Modality modality_from_string(const std::string& s) {
  if (s == "color_frame") return Modality::color_frame;
  if (s == "skeleton_joints") return Modality::skeleton_joints;
  if (s == "joint_angles") return Modality::joint_angles;
  throw ParseError("unknown modality '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  throw ParseError("unknown split '" + s + "'");
}

std::vector<size_t> DatasetManifest::indices_of(Split split) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == split) out.push_back(i);
  }
  return out;
}

std::pair<size_t, size_t> DatasetManifest::class_counts(std::optional<Split> split) const {
  size_t neg = 0, pos = 0;
  for (const auto& r : records) {
    if (split && r.split != *split) continue;
    (r.label == 1 ? pos : neg)++;
  }
  return {neg, pos};
}

void SplitConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1); got " +
                      std::to_string(train_fraction));
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in (0,1); got " +
                      std::to_string(val_fraction));
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in [0,1); got " +
                      std::to_string(test_fraction));
  }
  const double sum = train_fraction + val_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1; got " + std::to_string(sum));
  }
}

std::string pseudonymize(const std::string& salt, const std::string& name) {
  return hmac_sha256_hex(salt, name).substr(0, 16);
}

std::string fingerprint_salt(const std::string& salt) {
  return sha256_hex("asdscreen-salt:" + salt).substr(0, 8);
}

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

constexpr const char* kLabelsFile = "labels.json";
constexpr const char* kAttributesFile = "attributes.json";

bool is_skeleton_file(const fs::path& p) { return p.extension() == ".skel"; }

bool is_angles_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 11 && name.ends_with(".angles.csv");
}

std::map<std::string, int> read_labels_sidecar(const fs::path& root) {
  const fs::path path = root / kLabelsFile;
  std::ifstream in(path);
  if (!in) {
    throw StructureError("missing class labels sidecar " + path.string());
  }
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  std::map<std::string, int> labels;
  std::set<int> seen;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number_integer()) {
      throw ParseError(path.string() + ": label for '" + it.key() +
                       "' must be 0 or 1");
    }
    const int label = it.value().get<int>();
    if (label != 0 && label != 1) {
      throw ParseError(path.string() + ": label for '" + it.key() +
                       "' must be 0 or 1, got " + std::to_string(label));
    }
    labels[it.key()] = label;
    seen.insert(label);
  }
  if (seen.size() != 2) {
    throw StructureError(path.string() + ": needs one directory per class (labels 0 and 1)");
  }
  return labels;
}

std::map<std::string, std::string> read_subject_attributes(const fs::path& file) {
  std::ifstream in(file);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  std::map<std::string, std::string> attrs;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) {
      throw SchemaError(file.string() + ": attribute '" + it.key() +
                        "' must be a string");
    }
    attrs[it.key()] = it.value().get<std::string>();
  }
  return attrs;
}

// Largest-remainder apportionment of n units over the three fractions.
// Remainder ties resolve in declaration order (train, val, test).
std::array<size_t, 3> apportion(size_t n, const SplitConfig& cfg) {
  const double fractions[3] = {cfg.train_fraction, cfg.val_fraction, cfg.test_fraction};
  std::array<size_t, 3> counts{};
  double remainders[3];
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double target = n * fractions[i];
    counts[i] = static_cast<size_t>(std::floor(target));
    remainders[i] = target - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (size_t extra = 0; extra < n - assigned; ++extra) {
    counts[order[extra % 3]]++;
  }
  return counts;
}

}  // namespace

DatasetManifest scan_corpus(const fs::path& root, const std::string& salt) {
  if (!fs::exists(root)) {
    throw IoError("corpus root does not exist: " + root.string());
  }
  if (!fs::is_directory(root)) {
    throw IoError("corpus root is not a directory: " + root.string());
  }
  const auto labels = read_labels_sidecar(root);

  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && !labels.contains(entry.path().filename().string())) {
      throw StructureError("folder with no recognizable class: " +
                           entry.path().filename().string() +
                           " (not listed in labels.json)");
    }
  }

  struct Pending {
    std::string original_path;  // relative, '/' separated
    SampleRecord record;
  };
  std::vector<Pending> pending;

  for (const auto& [class_dir, label] : labels) {
    const fs::path class_path = root / class_dir;
    if (!fs::is_directory(class_path)) {
      throw StructureError("class directory missing: " + class_path.string());
    }
    for (const auto& subject_entry : fs::directory_iterator(class_path)) {
      if (!subject_entry.is_directory()) continue;
      const std::string subject_name = subject_entry.path().filename().string();
      const std::string pseudonym = pseudonymize(salt, subject_name);

      std::map<std::string, std::string> attrs;
      const fs::path attr_file = subject_entry.path() / kAttributesFile;
      if (fs::exists(attr_file)) {
        attrs = read_subject_attributes(attr_file);
      }

      for (const auto& file_entry : fs::recursive_directory_iterator(subject_entry.path())) {
        if (!file_entry.is_regular_file()) continue;
        const fs::path& file = file_entry.path();
        Modality modality;
        if (is_image_file(file)) {
          modality = Modality::color_frame;
        } else if (is_skeleton_file(file)) {
          modality = Modality::skeleton_joints;
        } else if (is_angles_file(file)) {
          modality = Modality::joint_angles;
        } else {
          continue;  // attributes.json, videos, stray files
        }
        const std::string inner = fs::relative(file, subject_entry.path()).generic_string();
        Pending p;
        p.original_path = class_dir + "/" + subject_name + "/" + inner;
        p.record.subject = pseudonym;
        p.record.path = class_dir + "/" + pseudonym + "/" + inner;
        p.record.sample_id = p.record.path;
        p.record.label = label;
        p.record.modality = modality;
        p.record.attributes = attrs;
        p.record.split = Split::unassigned;
        pending.push_back(std::move(p));
      }
    }
  }

  if (pending.empty()) {
    throw StructureError("corpus contains no samples under " + root.string());
  }

  std::sort(pending.begin(), pending.end(),
            [](const Pending& a, const Pending& b) { return a.original_path < b.original_path; });

  DatasetManifest manifest;
  manifest.corpus_root = root.generic_string();
  manifest.salt_fingerprint = fingerprint_salt(salt);
  manifest.created_at = now_iso8601();
  manifest.records.reserve(pending.size());
  for (auto& p : pending) {
    manifest.records.push_back(std::move(p.record));
  }
  return manifest;
}

DatasetManifest make_splits(const DatasetManifest& manifest, const SplitConfig& cfg) {
  cfg.validate();
  if (manifest.records.empty()) {
    throw ConfigError("cannot split an empty manifest");
  }

  DatasetManifest out = manifest;

  // Unit of assignment: subject pseudonym, or record index when image_level.
  // Units are grouped per class when stratifying, then shuffled with a seed
  // derived from (cfg.seed, class) and apportioned by largest remainder.
  auto assign_units = [&](std::vector<std::string>& units, uint64_t seed,
                          std::map<std::string, Split>& assignment) {
    std::sort(units.begin(), units.end());
    units.erase(std::unique(units.begin(), units.end()), units.end());
    Rng rng(seed);
    rng.shuffle(units);
    const auto counts = apportion(units.size(), cfg);
    size_t i = 0;
    for (size_t k = 0; k < counts[0]; ++k) assignment[units[i++]] = Split::train;
    for (size_t k = 0; k < counts[1]; ++k) assignment[units[i++]] = Split::val;
    for (size_t k = 0; k < counts[2]; ++k) assignment[units[i++]] = Split::test;
  };

  auto unit_key = [&](size_t record_index) {
    const SampleRecord& r = manifest.records[record_index];
    if (cfg.image_level) {
      return r.sample_id;
    }
    return r.subject;
  };

  std::map<std::string, Split> assignment;
  if (cfg.stratify) {
    for (int label = 0; label <= 1; ++label) {
      std::vector<std::string> units;
      for (size_t i = 0; i < manifest.records.size(); ++i) {
        if (manifest.records[i].label == label) units.push_back(unit_key(i));
      }
      std::sort(units.begin(), units.end());
      units.erase(std::unique(units.begin(), units.end()), units.end());
      if (units.size() < 2) {
        throw ConfigError("stratified split needs at least 2 " +
                          std::string(cfg.image_level ? "records" : "subjects") +
                          " for class " + std::to_string(label) + ", got " +
                          std::to_string(units.size()));
      }
      assign_units(units, mix_seed(cfg.seed, static_cast<uint64_t>(label)), assignment);
    }
  } else {
    std::vector<std::string> units;
    for (size_t i = 0; i < manifest.records.size(); ++i) units.push_back(unit_key(i));
    assign_units(units, cfg.seed, assignment);
  }

  for (size_t i = 0; i < out.records.size(); ++i) {
    out.records[i].split = assignment.at(unit_key(i));
  }
  return out;
}

namespace {

ordered_json record_to_json(const SampleRecord& r) {
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["subject"] = r.subject;
  j["path"] = r.path;
  j["label"] = r.label;
  j["modality"] = to_string(r.modality);
  ordered_json attrs = ordered_json::object();
  for (const auto& [k, v] : r.attributes) attrs[k] = v;
  j["attributes"] = attrs;
  j["split"] = to_string(r.split);
  return j;
}

SampleRecord record_from_json(const ordered_json& j, size_t line_no) {
  try {
    SampleRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.subject = j.at("subject").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.label = j.at("label").get<int>();
    if (r.label != 0 && r.label != 1) {
      throw ValueError("label must be 0 or 1, got " + std::to_string(r.label));
    }
    r.modality = modality_from_string(j.at("modality").get<std::string>());
    for (auto it = j.at("attributes").begin(); it != j.at("attributes").end(); ++it) {
      r.attributes[it.key()] = it.value().get<std::string>();
    }
    r.split = split_from_string(j.at("split").get<std::string>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : manifest.records) {
    out << record_to_json(r).dump() << "\n";
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());

  ordered_json meta;
  meta["corpus_root"] = manifest.corpus_root;
  meta["salt_fingerprint"] = manifest.salt_fingerprint;
  meta["created_at"] = manifest.created_at;
  std::ofstream meta_out(path.string() + ".meta.json");
  if (!meta_out) throw IoError("cannot write " + path.string() + ".meta.json");
  meta_out << meta.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  std::string line;
  size_t line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    SampleRecord r = record_from_json(j, line_no);
    if (!ids.insert(r.sample_id).second) {
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": duplicate sample_id '" + r.sample_id + "'");
    }
    manifest.records.push_back(std::move(r));
  }

  const fs::path meta_path(path.string() + ".meta.json");
  if (fs::exists(meta_path)) {
    std::ifstream meta_in(meta_path);
    ordered_json meta;
    try {
      meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": " + e.what());
    }
    manifest.corpus_root = meta.value("corpus_root", "");
    manifest.salt_fingerprint = meta.value("salt_fingerprint", "");
    manifest.created_at = meta.value("created_at", "");
  }
  return manifest;
}

PathResolver::PathResolver(const fs::path& root, const std::string& salt) : root_(root) {
  if (!fs::is_directory(root)) {
    throw IoError("corpus root does not exist: " + root.string());
  }
  for (const auto& class_entry : fs::directory_iterator(root)) {
    if (!class_entry.is_directory()) continue;
    for (const auto& subject_entry : fs::directory_iterator(class_entry.path())) {
      if (!subject_entry.is_directory()) continue;
      const std::string name = subject_entry.path().filename().string();
      subject_dirs_[pseudonymize(salt, name)] = name;
    }
  }
}

fs::path PathResolver::resolve(const SampleRecord& record) const {
  // record.path = <class_dir>/<pseudonym>/<inner...>
  const std::string& p = record.path;
  const size_t first = p.find('/');
  const size_t second = first == std::string::npos ? std::string::npos : p.find('/', first + 1);
  if (second == std::string::npos) {
    throw ValueError("record path has unexpected shape: " + p);
  }
  const std::string class_dir = p.substr(0, first);
  const std::string pseudonym = p.substr(first + 1, second - first - 1);
  const std::string inner = p.substr(second + 1);
  auto it = subject_dirs_.find(pseudonym);
  if (it == subject_dirs_.end()) {
    throw IoError("cannot resolve subject pseudonym '" + pseudonym +
                  "' under " + root_.string() + " (salt mismatch or corpus changed)");
  }
  fs::path full = root_ / class_dir / it->second / fs::path(inner);
  if (!fs::exists(full)) {
    throw IoError("sample file missing: " + full.string());
  }
  return full;
}

}  // namespace asdscreen
