#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asdscreen/image.hpp"
#include "asdscreen/manifest.hpp"

namespace asdscreen {

enum class Transform {
  identity,
  hflip,
  rotate,
  zoom,
  shift_x,
  shift_y,
  brightness,
  rotate_hflip,
};

std::string to_string(Transform t);

// A single deterministic augmentation. Parameters are validated against the
// ranges below before any pixel is touched; augmentation never changes a
// sample's label.
struct AugmentationSpec {
  Transform transform = Transform::identity;
  double rotation_degrees = 0.0;  // [-30, 30]
  double zoom_factor = 1.0;       // [0.8, 1.25]; > 1 magnifies
  double shift_fraction = 0.0;    // |.| <= 0.2, fraction of the image side
  double brightness_delta = 0.0;  // |.| <= 0.2, clamped back into [0, 1]
  uint64_t seed = 0;              // reserved; current transforms draw nothing

  void validate() const;

  // Compact identifier, e.g. "rotate:15" or "hflip"; recorded in expanded
  // manifests and parsed back at load time.
  std::string tag() const;
};

AugmentationSpec parse_aug_tag(const std::string& tag);

// The default seven-transform expansion plan.
std::vector<AugmentationSpec> default_augmentations();

// Bilinear resize to side x side (half-pixel center convention). A same-size
// input is returned unchanged, bit for bit.
ImageTensor resize(const ImageTensor& img, int side);

// Geometry primitives behind augment(). All sample with bilinear
// interpolation around the image center and pad out-of-frame reads with the
// nearest edge pixel. Exposed separately so tests can drive angles outside
// the augmentation envelope.
ImageTensor rotate_image(const ImageTensor& img, double degrees);
ImageTensor zoom_image(const ImageTensor& img, double factor);
ImageTensor shift_image(const ImageTensor& img, double dx_fraction, double dy_fraction);
ImageTensor hflip(const ImageTensor& img);
ImageTensor adjust_brightness(const ImageTensor& img, double delta);

// Applies one validated spec. Deterministic given (img, spec); output shape
// equals input shape.
ImageTensor augment(const ImageTensor& img, const AugmentationSpec& spec);

// Adds, for every train color frame, one derived record per spec (exactly 7,
// none of them identity, distinct tags). Derived records copy the label and
// carry the transform tag in attributes["aug"]; val/test are never expanded.
DatasetManifest expand_dataset(const DatasetManifest& manifest,
                               const std::vector<AugmentationSpec>& specs,
                               Split split = Split::train);

}  // namespace asdscreen
