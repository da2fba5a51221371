#pragma once

#include <Eigen/Dense>

namespace octo {

using Vec3 = Eigen::Vector3d;
// Column-major storage (Eigen default); indexing m(row, col) everywhere.
using Mat3 = Eigen::Matrix3d;

namespace geom {

inline constexpr double kPi = 3.14159265358979323846;
// Maximum |pitch| before the Euler kinematic matrix is treated as singular.
inline constexpr double kPitchGuard = kPi / 2.0 - 1e-6;

// ZYX (yaw-pitch-roll) Euler angles. Rotation from body (FRD) to earth (NED)
// is Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Vec3 as_vector() const { return {roll, pitch, yaw}; }
  static EulerAngles from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

// Wraps an angle to (-pi, pi].
double wrap_pi(double angle);

// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

Mat3 rotation_from_euler(const EulerAngles& eta);

// Inverse of rotation_from_euler away from pitch = +-pi/2. Roll and yaw are
// wrapped to (-pi, pi].
EulerAngles euler_from_rotation(const Mat3& r);

// C such that d(eta)/dt = C * omega_body. Throws GimbalLock when
// |pitch| >= kPitchGuard.
Mat3 euler_rate_matrix(const EulerAngles& eta);

// C^{-1}: maps Euler-angle rates to body rates. Same pitch guard as above.
Mat3 euler_rate_matrix_inverse(const EulerAngles& eta);

// Body z axis expressed in the earth frame, i.e. the third column of
// rotation_from_euler(eta). Unit norm for every eta.
Vec3 theta_vector(const EulerAngles& eta);

// Nearest rotation matrix in the Frobenius sense (polar factor via SVD).
Mat3 orthonormalize(const Mat3& r);

// ||R^T R - I||_F.
double orthonormality_error(const Mat3& r);

// True when r is orthonormal within tol and has determinant +1.
bool is_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace geom
}  // namespace octo
