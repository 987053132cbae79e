#include "motionseq/rotmath.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "motionseq/errors.hpp"

namespace motionseq::rotmath {
namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace

void check_rotation(const RotMat& m, double tolerance) {
  if (!m.allFinite()) {
    throw InvalidInput("rotation matrix has non-finite entries");
  }
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tolerance) {
    throw InvalidInput("matrix is not orthonormal (max |m^T m - I| = " + std::to_string(ortho) + ")");
  }
  if (std::abs(m.determinant() - 1.0) > tolerance) {
    throw InvalidInput("matrix determinant is not +1");
  }
}

RotMat expmap_to_rotmat(const ExpMap& r) {
  if (!r.allFinite()) {
    throw InvalidInput("expmap has non-finite components");
  }
  const double theta = r.norm();
  if (theta < kSmallAngle) {
    return Eigen::Matrix3d::Identity() + skew(r);
  }
  const Eigen::Matrix3d k = skew(r / theta);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * k * k;
}

ExpMap rotmat_to_expmap(const RotMat& m) {
  check_rotation(m);

  // sin(theta) * axis from the antisymmetric part, cos(theta) from the trace.
  const Eigen::Vector3d v(0.5 * (m(2, 1) - m(1, 2)),
                          0.5 * (m(0, 2) - m(2, 0)),
                          0.5 * (m(1, 0) - m(0, 1)));
  const double s = v.norm();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    return v;
  }
  if (c > 0.0 || s > 1e-6) {
    return v * (theta / s);
  }

  // Near pi: the antisymmetric part vanishes. S = cos I + (1 - cos) u u^T.
  const Eigen::Matrix3d sym = 0.5 * (m + m.transpose());
  const Eigen::Matrix3d uut = (sym - c * Eigen::Matrix3d::Identity()) / (1.0 - c);
  Eigen::Index col = 0;
  uut.diagonal().maxCoeff(&col);
  Eigen::Vector3d axis = uut.col(col) / std::sqrt(std::max(uut(col, col), 0.0));
  axis.normalize();
  if (s > 0.0) {
    if (axis.dot(v) < 0.0) axis = -axis;
  } else {
    Eigen::Index big = 0;
    axis.cwiseAbs().maxCoeff(&big);
    if (axis(big) < 0.0) axis = -axis;
  }
  return axis * theta;
}

RotMat euler_to_rotmat(const EulerAngles& e) {
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(e.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(e.pitch, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(e.roll, Eigen::Vector3d::UnitX()).toRotationMatrix();
  return rz * ry * rx;
}

EulerAngles rotmat_to_euler(const RotMat& m) {
  check_rotation(m);
  EulerAngles e;
  // m(2,0) = -sin(pitch); m(0,0), m(1,0) carry cos(pitch) * (cos yaw, sin yaw).
  const double cos_pitch = std::hypot(m(0, 0), m(1, 0));
  e.pitch = std::atan2(-m(2, 0), cos_pitch);
  if (cos_pitch < kGimbalLockCos) {
    // Only yaw -/+ roll is observable; pin roll.
    e.roll = 0.0;
    e.yaw = std::atan2(-m(0, 1), m(1, 1));
  } else {
    e.yaw = std::atan2(m(1, 0), m(0, 0));
    e.roll = std::atan2(m(2, 1), m(2, 2));
  }
  return e;
}

}  // namespace motionseq::rotmath
