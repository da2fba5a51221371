#include "octo/geom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "octo/errors.hpp"

namespace octo::geom {

namespace {

void check_pitch(const EulerAngles& eta) {
  if (!(std::abs(eta.pitch) < kPitchGuard)) {
    throw GimbalLock("pitch " + std::to_string(eta.pitch) +
                     " rad is at or beyond the gimbal guard");
  }
}

}  // namespace

double wrap_pi(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_from_euler(const EulerAngles& eta) {
  const double cr = std::cos(eta.roll), sr = std::sin(eta.roll);
  const double cp = std::cos(eta.pitch), sp = std::sin(eta.pitch);
  const double cy = std::cos(eta.yaw), sy = std::sin(eta.yaw);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return r;
}

EulerAngles euler_from_rotation(const Mat3& r) {
  EulerAngles eta;
  eta.roll = wrap_pi(std::atan2(r(2, 1), r(2, 2)));
  eta.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  eta.yaw = wrap_pi(std::atan2(r(1, 0), r(0, 0)));
  return eta;
}

Mat3 euler_rate_matrix(const EulerAngles& eta) {
  check_pitch(eta);
  const double cr = std::cos(eta.roll), sr = std::sin(eta.roll);
  const double cp = std::cos(eta.pitch), tp = std::tan(eta.pitch);
  Mat3 c;
  c << 1.0, sr * tp, cr * tp,
       0.0, cr, -sr,
       0.0, sr / cp, cr / cp;
  return c;
}

Mat3 euler_rate_matrix_inverse(const EulerAngles& eta) {
  check_pitch(eta);
  const double cr = std::cos(eta.roll), sr = std::sin(eta.roll);
  const double cp = std::cos(eta.pitch), sp = std::sin(eta.pitch);
  Mat3 w;
  w << 1.0, 0.0, -sp,
       0.0, cr, cp * sr,
       0.0, -sr, cp * cr;
  return w;
}

Vec3 theta_vector(const EulerAngles& eta) {
  const double cr = std::cos(eta.roll), sr = std::sin(eta.roll);
  const double cp = std::cos(eta.pitch), sp = std::sin(eta.pitch);
  const double cy = std::cos(eta.yaw), sy = std::sin(eta.yaw);
  return {cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr};
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

bool is_rotation(const Mat3& r, double tol) {
  return r.allFinite() && orthonormality_error(r) <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace octo::geom
