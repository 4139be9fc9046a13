#include "asdscreen/skeleton.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "asdscreen/errors.hpp"

namespace asdscreen {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool parse_double(const std::string& token, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(token, &pos);
    return pos == token.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_int(const std::string& token, long& out) {
  try {
    size_t pos = 0;
    out = std::stol(token, &pos);
    return pos == token.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

SkeletonSequence load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open skeleton file " + path.string());

  auto fail = [&](size_t line_no, const std::string& what) -> void {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string line;
  size_t line_no = 1;
  if (!std::getline(in, line)) fail(1, "empty file");
  long joints = 0;
  {
    std::istringstream hs(line);
    std::string tag, version, joints_field;
    hs >> tag >> version >> joints_field;
    if (tag != "#skeleton" || version != "v1" || joints_field.rfind("joints=", 0) != 0 ||
        !parse_int(joints_field.substr(7), joints) || joints < 1) {
      fail(1, "expected header '#skeleton v1 joints=<J>'");
    }
  }

  SkeletonSequence skel;
  skel.joints = static_cast<int>(joints);
  long expected_frame = 0;
  long expected_joint = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string f_tok, j_tok, x_tok, y_tok, z_tok, extra;
    if (!(ls >> f_tok >> j_tok >> x_tok >> y_tok >> z_tok)) {
      fail(line_no, "expected 5 fields 'frame joint x y z'");
    }
    if (ls >> extra) fail(line_no, "trailing fields after 'frame joint x y z'");
    long f = 0, j = 0;
    double x = 0, y = 0, z = 0;
    if (!parse_int(f_tok, f) || !parse_int(j_tok, j)) {
      fail(line_no, "non-numeric frame or joint index");
    }
    if (!parse_double(x_tok, x) || !parse_double(y_tok, y) || !parse_double(z_tok, z)) {
      fail(line_no, "non-numeric coordinate");
    }
    if (f != expected_frame || j != expected_joint) {
      fail(line_no, "expected frame " + std::to_string(expected_frame) + " joint " +
                        std::to_string(expected_joint) + ", got frame " +
                        std::to_string(f) + " joint " + std::to_string(j) +
                        " (ragged or out-of-order frame)");
    }
    skel.coords.push_back(x);
    skel.coords.push_back(y);
    skel.coords.push_back(z);
    if (++expected_joint == joints) {
      expected_joint = 0;
      ++expected_frame;
    }
  }
  if (expected_joint != 0) {
    fail(line_no, "file ends mid-frame: frame " + std::to_string(expected_frame) +
                      " has " + std::to_string(expected_joint) + " of " +
                      std::to_string(joints) + " joints");
  }
  if (expected_frame == 0) fail(line_no, "no frames");
  skel.frames = static_cast<int>(expected_frame);
  return skel;
}

void write_skeleton(const std::filesystem::path& path, const SkeletonSequence& skel) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "#skeleton v1 joints=" << skel.joints << "\n";
  char buf[96];
  for (int f = 0; f < skel.frames; ++f) {
    for (int j = 0; j < skel.joints; ++j) {
      std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g\n", f, j,
                    skel.at(f, j, 0), skel.at(f, j, 1), skel.at(f, j, 2));
      out << buf;
    }
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::vector<double>> joint_angles(const SkeletonSequence& skel,
                                              const std::vector<JointTriple>& triples) {
  for (const auto& t : triples) {
    for (int idx : {t.a, t.b, t.c}) {
      if (idx < 0 || idx >= skel.joints) {
        throw ValueError("joint index " + std::to_string(idx) + " outside [0, " +
                         std::to_string(skel.joints) + ")");
      }
    }
  }
  std::vector<std::vector<double>> angles(skel.frames,
                                          std::vector<double>(triples.size(), 0.0));
  for (int f = 0; f < skel.frames; ++f) {
    for (size_t ti = 0; ti < triples.size(); ++ti) {
      const auto& t = triples[ti];
      double u[3], v[3];
      for (int ax = 0; ax < 3; ++ax) {
        u[ax] = skel.at(f, t.a, ax) - skel.at(f, t.b, ax);
        v[ax] = skel.at(f, t.c, ax) - skel.at(f, t.b, ax);
      }
      const double nu = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
      const double nv = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      if (nu == 0.0 || nv == 0.0) {
        throw GeometryError("zero-length limb vector at frame " + std::to_string(f) +
                            ", triple (" + std::to_string(t.a) + "," +
                            std::to_string(t.b) + "," + std::to_string(t.c) + ")");
      }
      double cosang = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (nu * nv);
      if (cosang > 1.0) cosang = 1.0;
      if (cosang < -1.0) cosang = -1.0;
      angles[f][ti] = std::acos(cosang) * 180.0 / kPi;
    }
  }
  return angles;
}

}  // namespace asdscreen
