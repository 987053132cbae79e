#pragma once

#include <Eigen/Core>

namespace motionseq::rotmath {

// Axis-angle vector: direction is the axis, norm the angle in radians.
using ExpMap = Eigen::Vector3d;
using RotMat = Eigen::Matrix3d;

// Intrinsic z-y-x angles: m = Rz(yaw) * Ry(pitch) * Rx(roll).
// pitch lies in [-pi/2, pi/2].
struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

// Below this angle Rodrigues' formula switches to I + [r]x.
inline constexpr double kSmallAngle = 1e-8;
// Orthonormality tolerance accepted by the matrix-input conversions.
inline constexpr double kOrthoTolerance = 1e-6;
// cos(pitch) below this is treated as gimbal lock; roll is pinned to 0.
inline constexpr double kGimbalLockCos = 1e-9;

RotMat expmap_to_rotmat(const ExpMap& r);

// Returns the canonical vector with norm in [0, pi]. At exactly pi the axis
// sign is chosen so that its largest-magnitude component is positive.
ExpMap rotmat_to_expmap(const RotMat& m);

EulerAngles rotmat_to_euler(const RotMat& m);
RotMat euler_to_rotmat(const EulerAngles& e);

// Throws InvalidInput unless m is orthonormal with det +1 within tolerance.
void check_rotation(const RotMat& m, double tolerance = kOrthoTolerance);

}  // namespace motionseq::rotmath
