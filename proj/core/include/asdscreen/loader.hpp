#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "asdscreen/manifest.hpp"
#include "asdscreen/trainer.hpp"

namespace asdscreen {

// SampleSource over one split of a manifest: decode, normalize, resize to the
// backbone side, then apply the record's augmentation tag if present.
// Only color frames are image inputs; skeleton/angle records are skipped and
// counted. Pseudonymized paths are resolved by re-hashing the corpus
// directories under the same salt.
class ManifestSource final : public SampleSource {
 public:
  ManifestSource(const DatasetManifest& manifest, Split split,
                 const std::filesystem::path& corpus_root, const std::string& salt,
                 int input_side);

  size_t size() const override { return records_.size(); }
  ImageTensor image(size_t i) const override;
  int label(size_t i) const override { return records_[i].label; }

  const SampleRecord& record(size_t i) const { return records_[i]; }
  size_t skipped_non_image() const { return skipped_; }
  // Attribute value per sample ("" when absent); used for subgroup metrics.
  std::vector<std::string> attribute_column(const std::string& key) const;

 private:
  std::vector<SampleRecord> records_;
  PathResolver resolver_;
  int input_side_;
  size_t skipped_ = 0;
};

}  // namespace asdscreen
