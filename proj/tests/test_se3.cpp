#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace bodylink;
using testsupport::max_abs;
using testsupport::Rng;

namespace {

void check_valid_rotation(const Rotation& r) {
  CHECK(orthonormality_defect(r.matrix()) <= 1e-9);
  CHECK(r.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

}  // namespace

TEST_CASE("compose with identity and inverse") {
  Rng rng(1);
  const Transform t = rng.transform();
  CHECK(max_abs_diff(compose(Transform::identity(), t), t) == 0.0);
  CHECK(max_abs_diff(compose(t, inverse(t)), Transform::identity()) <= 1e-12);
}

TEST_CASE("compose quarter turn with a translation") {
  const Transform a{Rotation::rz(M_PI / 2), Vec3::Zero()};
  const Transform b = Transform::from_translation({1, 0, 0});
  const Transform c = compose(a, b);
  // Point-transform oracle: applying b then a to sample points.
  for (const Vec3& p : {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.3, -2, 5)}) {
    CHECK((c.apply(p) - a.apply(b.apply(p))).norm() <= 1e-15);
  }
  CHECK((c.translation - Vec3(0, 1, 0)).norm() <= 1e-15);
  CHECK(max_abs(c.rotation.matrix() - Rotation::rz(M_PI / 2).matrix()) == 0.0);
}

TEST_CASE("compose is associative") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Transform a = rng.transform(), b = rng.transform(), c = rng.transform();
    CHECK(max_abs_diff(compose(compose(a, b), c), compose(a, compose(b, c))) <= 1e-12);
  }
}

TEST_CASE("inverse") {
  CHECK(max_abs_diff(inverse(Transform::identity()), Transform::identity()) == 0.0);
  const Transform t = inverse(Transform::from_translation({1, 2, 3}));
  CHECK(t.translation == Vec3(-1, -2, -3));
  CHECK(t.rotation == Rotation());

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Transform x = rng.transform();
    CHECK(max_abs_diff(inverse(inverse(x)), x) <= 1e-12);
    CHECK(max_abs_diff(compose(x, inverse(x)), Transform::identity()) <= 1e-9);
    check_valid_rotation(compose(x, inverse(x)).rotation);
  }
}

TEST_CASE("angle_axis examples") {
  CHECK(angle_axis(Rotation()) == Vec3::Zero());
  const Vec3 v = angle_axis(Rotation::rz(M_PI / 2));
  CHECK((v - testsupport::quaternion_log(Rotation::rz(M_PI / 2).matrix())).norm() <= 1e-12);
  CHECK((v - Vec3(0, 0, M_PI / 2)).norm() <= 1e-12);
}

TEST_CASE("angle_axis matches the quaternion log oracle over all angles") {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const Rotation r = rng.rotation();
    const Vec3 got = angle_axis(r);
    const Vec3 want = testsupport::quaternion_log(r.matrix());
    if (want.norm() < M_PI - 1e-6) CHECK((got - want).norm() <= 1e-9);
    CHECK(got.norm() <= M_PI + 1e-12);
    CHECK(angle_axis(r.transpose()).norm() == doctest::Approx(got.norm()).epsilon(1e-12));
  }
}

TEST_CASE("angle_axis near identity and near pi") {
  for (double th : {1e-12, 1e-9, 5e-8, 1e-7, 2e-7, 1e-4}) {
    const Vec3 axis = Vec3(0.3, -0.5, 0.8).normalized();
    const Vec3 got = angle_axis(from_angle_axis(axis * th));
    CHECK((got - axis * th).norm() <= 1e-15 + 1e-9 * th);
  }
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    const Vec3 axis = Vec3(1, 2, -2).normalized();
    const Vec3 v = axis * (M_PI - eps);
    CHECK((angle_axis(from_angle_axis(v)) - v).norm() <= 1e-6);
  }
}

TEST_CASE("angle_axis at exactly pi picks the largest component positive") {
  // Axis (−0.6, 0, 0.8): largest magnitude is z, so z must come out positive.
  const Rotation r = from_angle_axis(Vec3(-0.6, 0, 0.8) * M_PI);
  const Vec3 v = angle_axis(r);
  CHECK(v.norm() == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(v.z() > 0);
  CHECK((v / M_PI - Vec3(-0.6, 0, 0.8)).norm() <= 1e-9);

  const Vec3 w = angle_axis(Rotation::from_matrix(Vec3(-1, -1, 1).asDiagonal()));  // Rz(π)
  CHECK((w - Vec3(0, 0, M_PI)).norm() <= 1e-12);
  // Tie between x and y: x wins and is made positive.
  const Vec3 tie = angle_axis(from_angle_axis(Vec3(-1, -1, 0).normalized() * M_PI));
  CHECK(tie.x() > 0);
  CHECK(tie.x() == doctest::Approx(tie.y()).epsilon(1e-9));
}

TEST_CASE("from_angle_axis") {
  CHECK(max_abs(from_angle_axis(Vec3::Zero()).matrix() - Mat3::Identity()) == 0.0);
  CHECK((from_angle_axis({0, 0, M_PI / 2}) * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() <= 1e-15);
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    Vec3 v = rng.vec(1.0);
    v = v.normalized() * rng.uniform(0.0, 3.0);
    const Rotation r = from_angle_axis(v);
    check_valid_rotation(r);
    CHECK((angle_axis(r) - v).norm() <= 1e-9);
  }
}

TEST_CASE("geodesic distance is a metric") {
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    const Rotation a = rng.rotation(), b = rng.rotation();
    CHECK(angle_axis(a * a.transpose()).norm() <= 1e-7);
    const double ab = angle_axis(a * b.transpose()).norm();
    const double ba = angle_axis(b * a.transpose()).norm();
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    CHECK(ab > 0.0);
  }
}

TEST_CASE("to_world") {
  Rng rng(7);
  const Transform t = rng.transform();
  FrameRegistry identity;
  for (Frame f : {Frame::Optical, Frame::Headset, Frame::RobotBase}) CHECK(max_abs_diff(to_world(identity, f, t), t) == 0.0);

  FrameRegistry reg;
  reg.world_from_optical = Transform::from_translation({1, 0, 0});
  CHECK(to_world(reg, Frame::Optical, Transform::identity()).translation == Vec3(1, 0, 0));

  reg.world_from_optical = rng.transform();
  reg.world_from_headset = rng.transform();
  reg.world_from_robot_base = rng.transform();
  for (int i = 0; i < 200; ++i) {
    const Transform a = rng.transform(), b = rng.transform();
    for (Frame f : {Frame::Optical, Frame::Headset, Frame::RobotBase}) {
      CHECK(max_abs_diff(to_world(reg, f, compose(a, b)), compose(to_world(reg, f, a), b)) <= 1e-12);
    }
  }
}

TEST_CASE("ingested rotations are repaired or rejected") {
  Rng rng(8);
  const Mat3 r = rng.rotation().matrix();

  Mat3 slightly = r;
  slightly(0, 1) += 1e-4;
  const Rotation fixed = Rotation::ingest(slightly);
  check_valid_rotation(fixed);
  CHECK(max_abs(fixed.matrix() - r) <= 1e-3);

  CHECK(Rotation::ingest(r).matrix() == r);  // below the repair threshold, untouched

  Mat3 garbage = r;
  garbage(2, 2) += 0.5;
  CHECK_THROWS_AS(Rotation::ingest(garbage), GeometryError);
  CHECK_THROWS_AS(Rotation::ingest(-Mat3::Identity()), GeometryError);  // reflection
}

TEST_CASE("transform JSON round trip is bit exact") {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Transform t = rng.transform(10.0);
    const Transform back = transform_from_json(nlohmann::json::parse(to_json(t).dump()));
    CHECK(back == t);
  }
  const nlohmann::json j = to_json(Transform::from_translation({1, 2, 3}));
  CHECK(j.at("rotation").size() == 9);
  CHECK(j.at("translation").size() == 3);

  FrameRegistry reg;
  reg.world_from_robot_base = rng.transform();
  const FrameRegistry back = registry_from_json(to_json(reg));
  CHECK(back.world_from_robot_base == reg.world_from_robot_base);
}
