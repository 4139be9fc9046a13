#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "asdscreen/errors.hpp"
#include "asdscreen/skeleton.hpp"
#include "test_util.hpp"

using namespace asdscreen;
using asdscreen::testing::TempDir;

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

// Direct-formula oracle in extended precision.
long double angle_oracle(const SkeletonSequence& s, int f, const JointTriple& t) {
  long double u[3], v[3];
  for (int ax = 0; ax < 3; ++ax) {
    u[ax] = static_cast<long double>(s.at(f, t.a, ax)) - s.at(f, t.b, ax);
    v[ax] = static_cast<long double>(s.at(f, t.c, ax)) - s.at(f, t.b, ax);
  }
  const long double nu = sqrtl(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  const long double nv = sqrtl(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  long double c = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (nu * nv);
  if (c > 1.0L) c = 1.0L;
  if (c < -1.0L) c = -1.0L;
  return acosl(c) * 180.0L / kPiL;
}

SkeletonSequence random_skeleton(Rng& rng, int frames, int joints) {
  SkeletonSequence s;
  s.frames = frames;
  s.joints = joints;
  s.coords.resize(static_cast<size_t>(frames) * joints * 3);
  for (double& c : s.coords) c = rng.uniform(-2.0, 2.0);
  return s;
}

// Rigid transform: rotation Rx(a)Ry(b)Rz(c) plus translation.
SkeletonSequence rigid_transform(const SkeletonSequence& s, double a, double b, double c,
                                 const double t[3]) {
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cc = std::cos(c), sc = std::sin(c);
  // Row-major 3x3 product Rx * Ry * Rz.
  const double r[3][3] = {
      {cb * cc, -cb * sc, sb},
      {ca * sc + sa * sb * cc, ca * cc - sa * sb * sc, -sa * cb},
      {sa * sc - ca * sb * cc, sa * cc + ca * sb * sc, ca * cb},
  };
  SkeletonSequence out = s;
  for (int f = 0; f < s.frames; ++f) {
    for (int j = 0; j < s.joints; ++j) {
      double p[3] = {s.at(f, j, 0), s.at(f, j, 1), s.at(f, j, 2)};
      for (int ax = 0; ax < 3; ++ax) {
        out.at(f, j, ax) = r[ax][0] * p[0] + r[ax][1] * p[1] + r[ax][2] * p[2] + t[ax];
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("load_skeleton: single all-zero frame") {
  TempDir tmp;
  const auto path = tmp / "zero.skel";
  std::ofstream out(path);
  out << "#skeleton v1 joints=3\n";
  out << "0 0 0 0 0\n0 1 0 0 0\n0 2 0 0 0\n";
  out.close();
  const SkeletonSequence s = load_skeleton(path);
  CHECK(s.frames == 1);
  CHECK(s.joints == 3);
  for (double c : s.coords) CHECK(c == 0.0);
}

TEST_CASE("load_skeleton: ragged second frame names the line") {
  TempDir tmp;
  const auto path = tmp / "ragged.skel";
  std::ofstream out(path);
  out << "#skeleton v1 joints=2\n";
  out << "0 0 1 2 3\n0 1 4 5 6\n1 0 7 8 9\n";  // frame 1 ends early
  out.close();
  try {
    load_skeleton(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("load_skeleton: non-numeric field names the line") {
  TempDir tmp;
  const auto path = tmp / "bad.skel";
  std::ofstream out(path);
  out << "#skeleton v1 joints=1\n";
  out << "0 0 1.0 oops 3.0\n";
  out.close();
  try {
    load_skeleton(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
    CHECK(std::string(e.what()).find("non-numeric") != std::string::npos);
  }
}

TEST_CASE("load_skeleton: bad header rejected") {
  TempDir tmp;
  const auto path = tmp / "hdr.skel";
  std::ofstream out(path);
  out << "#skellington v1 joints=2\n";
  out.close();
  CHECK_THROWS_AS(load_skeleton(path), ParseError);
}

TEST_CASE("skeleton write-then-load round-trips bit-exactly") {
  TempDir tmp;
  Rng rng(2024);
  const SkeletonSequence s = random_skeleton(rng, 10, 25);
  const auto path = tmp / "roundtrip.skel";
  write_skeleton(path, s);
  const SkeletonSequence loaded = load_skeleton(path);
  CHECK(loaded.frames == s.frames);
  CHECK(loaded.joints == s.joints);
  REQUIRE(loaded.coords.size() == s.coords.size());
  for (size_t i = 0; i < s.coords.size(); ++i) {
    CHECK(loaded.coords[i] == s.coords[i]);
  }
}

TEST_CASE("joint_angles: orthogonal and collinear triples") {
  SkeletonSequence s;
  s.frames = 1;
  s.joints = 4;
  s.coords = {
      1, 0, 0,  // joint 0: a
      0, 0, 0,  // joint 1: b
      0, 1, 0,  // joint 2: c
      -1, 0, 0, // joint 3: opposite of joint 0
  };
  const auto angles = joint_angles(s, {{0, 1, 2}, {0, 1, 3}});
  CHECK(angles[0][0] == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(angles[0][1] == doctest::Approx(180.0).epsilon(1e-12));
}

TEST_CASE("joint_angles: degenerate limb names frame and triple") {
  SkeletonSequence s;
  s.frames = 2;
  s.joints = 3;
  s.coords = {
      1, 0, 0, 0, 0, 0, 0, 1, 0,  // frame 0 fine
      0, 0, 0, 0, 0, 0, 0, 1, 0,  // frame 1: a == b
  };
  try {
    joint_angles(s, {{0, 1, 2}});
    FAIL("expected GeometryError");
  } catch (const GeometryError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("frame 1") != std::string::npos);
    CHECK(msg.find("(0,1,2)") != std::string::npos);
  }
}

TEST_CASE("joint_angles: out-of-range index rejected") {
  SkeletonSequence s;
  s.frames = 1;
  s.joints = 2;
  s.coords = {0, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(joint_angles(s, {{0, 1, 2}}), ValueError);
}

TEST_CASE("joint_angles: random skeletons match the direct-formula oracle") {
  Rng rng(555);
  for (int trial = 0; trial < 10; ++trial) {
    const SkeletonSequence s = random_skeleton(rng, 5, 8);
    std::vector<JointTriple> triples = {{0, 1, 2}, {3, 4, 5}, {6, 7, 0}, {2, 5, 7}};
    const auto angles = joint_angles(s, triples);
    for (int f = 0; f < s.frames; ++f) {
      for (size_t t = 0; t < triples.size(); ++t) {
        const long double want = angle_oracle(s, f, triples[t]);
        CHECK(std::abs(angles[f][t] - static_cast<double>(want)) <= 1e-9);
        CHECK(angles[f][t] >= 0.0);
        CHECK(angles[f][t] <= 180.0);
      }
    }
  }
}

TEST_CASE("joint_angles: invariant under rigid motion") {
  Rng rng(777);
  for (int trial = 0; trial < 10; ++trial) {
    const SkeletonSequence s = random_skeleton(rng, 4, 6);
    const double t[3] = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const SkeletonSequence moved = rigid_transform(
        s, rng.uniform(0, 6.28), rng.uniform(0, 6.28), rng.uniform(0, 6.28), t);
    std::vector<JointTriple> triples = {{0, 1, 2}, {3, 4, 5}, {5, 0, 3}};
    const auto base = joint_angles(s, triples);
    const auto after = joint_angles(moved, triples);
    for (int f = 0; f < s.frames; ++f) {
      for (size_t k = 0; k < triples.size(); ++k) {
        CHECK(std::abs(base[f][k] - after[f][k]) <= 1e-6);
      }
    }
  }
}
