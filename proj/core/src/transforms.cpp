#include "asdscreen/transforms.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "asdscreen/errors.hpp"

namespace asdscreen {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string format_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

int clamp_int(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Bilinear sample at (sx, sy) with nearest-edge padding.
void sample_bilinear(const ImageTensor& img, double sx, double sy, double* out) {
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  const double tx = sx - fx0;
  const double ty = sy - fy0;
  const int x0 = clamp_int(static_cast<int>(fx0), 0, img.width - 1);
  const int x1 = clamp_int(static_cast<int>(fx0) + 1, 0, img.width - 1);
  const int y0 = clamp_int(static_cast<int>(fy0), 0, img.height - 1);
  const int y1 = clamp_int(static_cast<int>(fy0) + 1, 0, img.height - 1);
  for (int c = 0; c < ImageTensor::kChannels; ++c) {
    out[c] = (1.0 - tx) * (1.0 - ty) * img.at(y0, x0, c) +
             tx * (1.0 - ty) * img.at(y0, x1, c) +
             (1.0 - tx) * ty * img.at(y1, x0, c) +
             tx * ty * img.at(y1, x1, c);
  }
}

// Inverse map: src = center + M * (dst - center) - t.
struct InverseAffine {
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  double tx = 0, ty = 0;
};

ImageTensor apply_inverse_affine(const ImageTensor& img, const InverseAffine& a) {
  ImageTensor out;
  out.height = img.height;
  out.width = img.width;
  out.data.resize(img.data.size());
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  for (int y = 0; y < img.height; ++y) {
    const double dy = y - cy;
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double sx = cx + a.m00 * dx + a.m01 * dy - a.tx;
      const double sy = cy + a.m10 * dx + a.m11 * dy - a.ty;
      sample_bilinear(img, sx, sy, &out.data[out.index(y, x, 0)]);
    }
  }
  return out;
}

void require_nonempty(const ImageTensor& img, const char* op) {
  if (img.empty() || img.height <= 0 || img.width <= 0) {
    throw ShapeError(std::string(op) + ": empty image");
  }
}

}  // namespace

std::string to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::hflip: return "hflip";
    case Transform::rotate: return "rotate";
    case Transform::zoom: return "zoom";
    case Transform::shift_x: return "shift_x";
    case Transform::shift_y: return "shift_y";
    case Transform::brightness: return "brightness";
    case Transform::rotate_hflip: return "rotate_hflip";
  }
  throw ValueError("unknown transform");
}

void AugmentationSpec::validate() const {
  if (!(rotation_degrees >= -30.0 && rotation_degrees <= 30.0)) {
    throw ConfigError("rotation_degrees must lie in [-30, 30]; got " +
                      format_param(rotation_degrees));
  }
  if (!(zoom_factor >= 0.8 && zoom_factor <= 1.25)) {
    throw ConfigError("zoom_factor must lie in [0.8, 1.25]; got " +
                      format_param(zoom_factor));
  }
  if (!(std::abs(shift_fraction) <= 0.2)) {
    throw ConfigError("shift_fraction must lie in [-0.2, 0.2]; got " +
                      format_param(shift_fraction));
  }
  if (!(std::abs(brightness_delta) <= 0.2)) {
    throw ConfigError("brightness_delta must lie in [-0.2, 0.2]; got " +
                      format_param(brightness_delta));
  }
}

std::string AugmentationSpec::tag() const {
  switch (transform) {
    case Transform::identity: return "identity";
    case Transform::hflip: return "hflip";
    case Transform::rotate: return "rotate:" + format_param(rotation_degrees);
    case Transform::zoom: return "zoom:" + format_param(zoom_factor);
    case Transform::shift_x: return "shift_x:" + format_param(shift_fraction);
    case Transform::shift_y: return "shift_y:" + format_param(shift_fraction);
    case Transform::brightness: return "brightness:" + format_param(brightness_delta);
    case Transform::rotate_hflip: return "rotate_hflip:" + format_param(rotation_degrees);
  }
  throw ValueError("unknown transform");
}

AugmentationSpec parse_aug_tag(const std::string& tag) {
  AugmentationSpec spec;
  std::string name = tag;
  double value = 0.0;
  bool has_value = false;
  if (const size_t colon = tag.find(':'); colon != std::string::npos) {
    name = tag.substr(0, colon);
    const std::string v = tag.substr(colon + 1);
    char* end = nullptr;
    value = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
      throw ParseError("augmentation tag '" + tag + "': bad parameter");
    }
    has_value = true;
  }
  if (name == "identity") {
    spec.transform = Transform::identity;
  } else if (name == "hflip") {
    spec.transform = Transform::hflip;
  } else if (name == "rotate") {
    spec.transform = Transform::rotate;
    spec.rotation_degrees = value;
  } else if (name == "zoom") {
    spec.transform = Transform::zoom;
    spec.zoom_factor = has_value ? value : 1.0;
  } else if (name == "shift_x") {
    spec.transform = Transform::shift_x;
    spec.shift_fraction = value;
  } else if (name == "shift_y") {
    spec.transform = Transform::shift_y;
    spec.shift_fraction = value;
  } else if (name == "brightness") {
    spec.transform = Transform::brightness;
    spec.brightness_delta = value;
  } else if (name == "rotate_hflip") {
    spec.transform = Transform::rotate_hflip;
    spec.rotation_degrees = value;
  } else {
    throw ParseError("unknown augmentation tag '" + tag + "'");
  }
  spec.validate();
  return spec;
}

std::vector<AugmentationSpec> default_augmentations() {
  std::vector<AugmentationSpec> specs(7);
  specs[0].transform = Transform::hflip;
  specs[1].transform = Transform::rotate;
  specs[1].rotation_degrees = 15.0;
  specs[2].transform = Transform::rotate;
  specs[2].rotation_degrees = -15.0;
  specs[3].transform = Transform::zoom;
  specs[3].zoom_factor = 0.9;
  specs[4].transform = Transform::zoom;
  specs[4].zoom_factor = 1.1;
  specs[5].transform = Transform::shift_x;
  specs[5].shift_fraction = 0.1;
  specs[6].transform = Transform::rotate_hflip;
  specs[6].rotation_degrees = 15.0;
  return specs;
}

ImageTensor resize(const ImageTensor& img, int side) {
  if (side < 8) {
    throw ConfigError("resize: side must be >= 8, got " + std::to_string(side));
  }
  require_nonempty(img, "resize");
  if (img.height == side && img.width == side) {
    return img;
  }
  ImageTensor out;
  out.height = side;
  out.width = side;
  out.data.resize(static_cast<size_t>(side) * side * ImageTensor::kChannels);
  const double sx_scale = static_cast<double>(img.width) / side;
  const double sy_scale = static_cast<double>(img.height) / side;
  for (int y = 0; y < side; ++y) {
    const double sy = (y + 0.5) * sy_scale - 0.5;
    for (int x = 0; x < side; ++x) {
      const double sx = (x + 0.5) * sx_scale - 0.5;
      sample_bilinear(img, sx, sy, &out.data[out.index(y, x, 0)]);
    }
  }
  return out;
}

ImageTensor rotate_image(const ImageTensor& img, double degrees) {
  require_nonempty(img, "rotate");
  const double r = degrees * kPi / 180.0;
  InverseAffine a;
  a.m00 = std::cos(r);
  a.m01 = std::sin(r);
  a.m10 = -std::sin(r);
  a.m11 = std::cos(r);
  return apply_inverse_affine(img, a);
}

ImageTensor zoom_image(const ImageTensor& img, double factor) {
  require_nonempty(img, "zoom");
  if (!(factor > 0.0)) {
    throw ConfigError("zoom factor must be positive");
  }
  InverseAffine a;
  a.m00 = 1.0 / factor;
  a.m11 = 1.0 / factor;
  return apply_inverse_affine(img, a);
}

ImageTensor shift_image(const ImageTensor& img, double dx_fraction, double dy_fraction) {
  require_nonempty(img, "shift");
  InverseAffine a;
  a.tx = dx_fraction * img.width;
  a.ty = dy_fraction * img.height;
  return apply_inverse_affine(img, a);
}

ImageTensor hflip(const ImageTensor& img) {
  require_nonempty(img, "hflip");
  ImageTensor out;
  out.height = img.height;
  out.width = img.width;
  out.data.resize(img.data.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < ImageTensor::kChannels; ++c) {
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
      }
    }
  }
  return out;
}

ImageTensor adjust_brightness(const ImageTensor& img, double delta) {
  require_nonempty(img, "brightness");
  ImageTensor out = img;
  for (double& v : out.data) {
    v += delta;
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
  }
  return out;
}

ImageTensor augment(const ImageTensor& img, const AugmentationSpec& spec) {
  spec.validate();
  require_nonempty(img, "augment");
  switch (spec.transform) {
    case Transform::identity:
      return img;
    case Transform::hflip:
      return hflip(img);
    case Transform::rotate:
      return rotate_image(img, spec.rotation_degrees);
    case Transform::zoom:
      return zoom_image(img, spec.zoom_factor);
    case Transform::shift_x:
      return shift_image(img, spec.shift_fraction, 0.0);
    case Transform::shift_y:
      return shift_image(img, 0.0, spec.shift_fraction);
    case Transform::brightness:
      return adjust_brightness(img, spec.brightness_delta);
    case Transform::rotate_hflip:
      return hflip(rotate_image(img, spec.rotation_degrees));
  }
  throw ValueError("unknown transform");
}

DatasetManifest expand_dataset(const DatasetManifest& manifest,
                               const std::vector<AugmentationSpec>& specs,
                               Split split) {
  if (split != Split::train) {
    throw PolicyError("augmentation applies to the train split only; requested " +
                      to_string(split));
  }
  if (specs.size() != 7) {
    throw ConfigError("expansion needs exactly 7 augmentation specs, got " +
                      std::to_string(specs.size()));
  }
  std::set<std::string> tags;
  for (const auto& spec : specs) {
    spec.validate();
    if (spec.transform == Transform::identity) {
      throw ConfigError("expansion specs must not include the identity transform");
    }
    if (!tags.insert(spec.tag()).second) {
      throw ConfigError("duplicate augmentation spec '" + spec.tag() + "'");
    }
  }
  for (const auto& r : manifest.records) {
    if (r.attributes.contains("aug")) {
      throw ConfigError("manifest already contains augmented records (sample '" +
                        r.sample_id + "')");
    }
  }

  DatasetManifest out;
  out.corpus_root = manifest.corpus_root;
  out.salt_fingerprint = manifest.salt_fingerprint;
  out.created_at = manifest.created_at;
  out.records.reserve(manifest.records.size() * 2);
  for (const auto& r : manifest.records) {
    out.records.push_back(r);
    if (r.split != Split::train || r.modality != Modality::color_frame) {
      continue;
    }
    for (const auto& spec : specs) {
      SampleRecord derived = r;
      const std::string tag = spec.tag();
      derived.sample_id = r.sample_id + "#" + tag;
      derived.attributes["aug"] = tag;
      out.records.push_back(std::move(derived));
    }
  }
  return out;
}

}  // namespace asdscreen
