#include "asdscreen/loader.hpp"

#include "asdscreen/codec.hpp"
#include "asdscreen/transforms.hpp"

namespace asdscreen {

ManifestSource::ManifestSource(const DatasetManifest& manifest, Split split,
                               const std::filesystem::path& corpus_root,
                               const std::string& salt, int input_side)
    : resolver_(corpus_root, salt), input_side_(input_side) {
  for (const auto& r : manifest.records) {
    if (r.split != split) continue;
    if (r.modality != Modality::color_frame) {
      ++skipped_;
      continue;
    }
    records_.push_back(r);
  }
}

ImageTensor ManifestSource::image(size_t i) const {
  const SampleRecord& r = records_[i];
  const RawImage raw = read_image(resolver_.resolve(r));
  ImageTensor img = resize(normalize(raw), input_side_);
  if (auto it = r.attributes.find("aug"); it != r.attributes.end()) {
    img = augment(img, parse_aug_tag(it->second));
  }
  return img;
}

std::vector<std::string> ManifestSource::attribute_column(const std::string& key) const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    auto it = r.attributes.find(key);
    out.push_back(it == r.attributes.end() ? std::string() : it->second);
  }
  return out;
}

}  // namespace asdscreen
