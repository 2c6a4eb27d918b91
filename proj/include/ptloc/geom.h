/*
 * Copyright 2026 The ptloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PTLOC_GEOM_H_
#define PTLOC_GEOM_H_

#include <cmath>
#include <numbers>
#include <ostream>

#include "Eigen/Core"
#include "Eigen/Geometry"

namespace ptloc {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar NormalizeAngle(Scalar angle) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  Scalar wrapped = std::remainder(angle, Scalar(2) * kPi);
  if (wrapped <= -kPi) wrapped += Scalar(2) * kPi;
  return wrapped;
}

// Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi].
template <typename Scalar>
Vector3<Scalar> RotationVector(const Eigen::Quaternion<Scalar>& q) {
  Eigen::Quaternion<Scalar> r = q;
  if (r.w() < Scalar(0)) r.coeffs() = -r.coeffs();
  const Vector3<Scalar> v = r.vec();
  const Scalar sin_half = v.norm();
  if (sin_half < Scalar(1e-8)) {
    // Series of 2 * atan2(s, w) / s around s = 0.
    return (Scalar(2) / r.w()) * (Scalar(1) - sin_half * sin_half /
                                                  (Scalar(3) * r.w() * r.w())) *
           v;
  }
  const Scalar angle = Scalar(2) * std::atan2(sin_half, r.w());
  return (angle / sin_half) * v;
}

template <typename Scalar>
Eigen::Quaternion<Scalar> QuaternionFromRotationVector(
    const Vector3<Scalar>& rotation_vector) {
  const Scalar angle = rotation_vector.norm();
  if (angle < Scalar(1e-8)) {
    Eigen::Quaternion<Scalar> q(Scalar(1), rotation_vector.x() / Scalar(2),
                                rotation_vector.y() / Scalar(2),
                                rotation_vector.z() / Scalar(2));
    return q.normalized();
  }
  return Eigen::Quaternion<Scalar>(
      Eigen::AngleAxis<Scalar>(angle, rotation_vector / angle));
}

template <typename Scalar>
Scalar RotationAngle(const Eigen::Quaternion<Scalar>& q) {
  return RotationVector(q).norm();
}

// Heading of the rotated x axis projected onto the ground plane.
template <typename Scalar>
Scalar Yaw(const Eigen::Quaternion<Scalar>& q) {
  const Vector3<Scalar> x_axis = q * Vector3<Scalar>::UnitX();
  return std::atan2(x_axis.y(), x_axis.x());
}

template <typename Scalar>
Eigen::Quaternion<Scalar> YawRotation(Scalar yaw) {
  return Eigen::Quaternion<Scalar>(
      Eigen::AngleAxis<Scalar>(yaw, Vector3<Scalar>::UnitZ()));
}

// Rigid transform in 3D. Maps points from its child frame into its parent
// frame: p_parent = rotation * p_child + translation.
template <typename Scalar>
class Pose3 {
 public:
  using Vector = Vector3<Scalar>;
  using Quaternion = Eigen::Quaternion<Scalar>;

  Pose3() : rotation_(Quaternion::Identity()), translation_(Vector::Zero()) {}
  Pose3(const Quaternion& rotation, const Vector& translation)
      : rotation_(rotation.normalized()), translation_(translation) {}

  static Pose3 Identity() { return Pose3(); }
  static Pose3 FromTranslation(const Vector& translation) {
    return Pose3(Quaternion::Identity(), translation);
  }
  static Pose3 FromRotation(const Quaternion& rotation) {
    return Pose3(rotation, Vector::Zero());
  }
  static Pose3 FromYaw(Scalar yaw, const Vector& translation = Vector::Zero()) {
    return Pose3(YawRotation(yaw), translation);
  }

  const Quaternion& rotation() const { return rotation_; }
  const Vector& translation() const { return translation_; }

  Pose3 inverse() const {
    const Quaternion r = rotation_.conjugate();
    return Pose3(r, -(r * translation_));
  }

  template <typename OtherScalar>
  Pose3<OtherScalar> cast() const {
    return Pose3<OtherScalar>(rotation_.template cast<OtherScalar>(),
                              translation_.template cast<OtherScalar>());
  }

 private:
  Quaternion rotation_;
  Vector translation_;
};

// compose(a, b) applies b first, then a.
template <typename Scalar>
Pose3<Scalar> Compose(const Pose3<Scalar>& a, const Pose3<Scalar>& b) {
  return Pose3<Scalar>(a.rotation() * b.rotation(),
                       a.rotation() * b.translation() + a.translation());
}

template <typename Scalar>
Pose3<Scalar> Inverse(const Pose3<Scalar>& a) {
  return a.inverse();
}

template <typename Scalar, typename Derived>
Vector3<Scalar> Apply(const Pose3<Scalar>& a,
                      const Eigen::MatrixBase<Derived>& point) {
  return a.rotation() * point + a.translation();
}

template <typename Scalar>
Pose3<Scalar> operator*(const Pose3<Scalar>& a, const Pose3<Scalar>& b) {
  return Compose(a, b);
}

template <typename Scalar>
Vector3<Scalar> operator*(const Pose3<Scalar>& a, const Vector3<Scalar>& p) {
  return Apply(a, p);
}

// Relative motion taking `from` to `to`, expressed in the `from` frame.
template <typename Scalar>
Pose3<Scalar> Between(const Pose3<Scalar>& from, const Pose3<Scalar>& to) {
  return Compose(from.inverse(), to);
}

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const Pose3<Scalar>& p) {
  const auto& q = p.rotation();
  return os << "{t: [" << p.translation().transpose() << "], q: [" << q.x()
            << ", " << q.y() << ", " << q.z() << ", " << q.w() << "]}";
}

// Planar pose with heading kept in (-pi, pi].
template <typename Scalar>
class Pose2 {
 public:
  Pose2() = default;
  Pose2(Scalar x, Scalar y, Scalar theta)
      : x_(x), y_(y), theta_(NormalizeAngle(theta)) {}

  Scalar x() const { return x_; }
  Scalar y() const { return y_; }
  Scalar theta() const { return theta_; }

 private:
  Scalar x_ = Scalar(0);
  Scalar y_ = Scalar(0);
  Scalar theta_ = Scalar(0);
};

template <typename Scalar>
Pose3<Scalar> EmbedPlanar(const Pose2<Scalar>& p) {
  return Pose3<Scalar>::FromYaw(p.theta(), Vector3<Scalar>(p.x(), p.y(), 0));
}

// Drops z, roll and pitch.
template <typename Scalar>
Pose2<Scalar> ProjectPlanar(const Pose3<Scalar>& p) {
  return Pose2<Scalar>(p.translation().x(), p.translation().y(),
                       Yaw(p.rotation()));
}

using Pose3d = Pose3<double>;
using Pose2d = Pose2<double>;

}  // namespace ptloc

#endif  // PTLOC_GEOM_H_
