#pragma once

#include <filesystem>
#include <vector>

namespace asdscreen {

// Tracked 3D joints, frame-major. Coordinates are stored [frame][joint][xyz];
// every frame carries the same joint count.
struct SkeletonSequence {
  int frames = 0;
  int joints = 0;
  std::vector<double> coords;

  double at(int frame, int joint, int axis) const {
    return coords[(static_cast<size_t>(frame) * joints + joint) * 3 + axis];
  }
  double& at(int frame, int joint, int axis) {
    return coords[(static_cast<size_t>(frame) * joints + joint) * 3 + axis];
  }
};

// Text format: header "#skeleton v1 joints=<J>", then one line per
// (frame, joint) in order: "frame joint x y z", whitespace separated.
SkeletonSequence load_skeleton(const std::filesystem::path& path);
void write_skeleton(const std::filesystem::path& path, const SkeletonSequence& skel);

// Angle triples: the angle is measured at joint b between limb vectors b->a
// and b->c.
struct JointTriple {
  int a = 0;
  int b = 0;
  int c = 0;
};

// Per-frame angles in degrees, clamped arccos of the normalized dot product;
// results lie in [0, 180]. Zero-length limb vectors raise GeometryError
// naming the frame and triple.
std::vector<std::vector<double>> joint_angles(const SkeletonSequence& skel,
                                              const std::vector<JointTriple>& triples);

}  // namespace asdscreen
