#include "voxedit/camera.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

namespace voxedit {

double CameraPose::focal_px() const { return 0.5 * width / std::tan(0.5 * fov_x); }

void validate_pose(const CameraPose& pose) {
  if (!pose.camera_to_world.allFinite()) throw std::invalid_argument("camera pose is not finite");
  if (!(pose.fov_x > 0.0 && pose.fov_x < std::numbers::pi)) throw std::invalid_argument("fov_x must be in (0, pi)");
  if (pose.width <= 0 || pose.height <= 0) throw std::invalid_argument("image size must be positive");
  const Eigen::Matrix3d r = pose.camera_to_world.block<3, 3>(0, 0);
  if (std::abs(r.determinant()) < 1e-9) throw std::invalid_argument("camera transform is not invertible");
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-4) {
    throw std::invalid_argument("camera rotation is not orthonormal");
  }
  const Eigen::RowVector4d last = pose.camera_to_world.row(3);
  if (!last.isApprox(Eigen::RowVector4d(0, 0, 0, 1))) throw std::invalid_argument("camera transform is not affine");
}

void intersect_bounds(Ray& ray, const Bounds& bounds) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < bounds.min[a] || o > bounds.max[a]) {
        ray.hit = false;
        return;
      }
      continue;
    }
    double ta = (bounds.min[a] - o) / d;
    double tb = (bounds.max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  ray.hit = t1 > t0;
  ray.t_near = ray.hit ? t0 : 0.0;
  ray.t_far = ray.hit ? t1 : 0.0;
}

Ray pixel_ray(const CameraPose& pose, const Bounds& bounds, double px, double py) {
  const double f = pose.focal_px();
  const Vec3 d_cam((px - 0.5 * pose.width) / f, -(py - 0.5 * pose.height) / f, -1.0);
  Ray ray;
  ray.origin = pose.position();
  ray.direction = (pose.camera_to_world.block<3, 3>(0, 0) * d_cam).normalized();
  intersect_bounds(ray, bounds);
  return ray;
}

std::vector<Ray> generate_rays(const CameraPose& pose, const Bounds& bounds) {
  validate_pose(pose);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(pose.width) * static_cast<std::size_t>(pose.height));
  for (int y = 0; y < pose.height; ++y) {
    for (int x = 0; x < pose.width; ++x) rays.push_back(pixel_ray(pose, bounds, x + 0.5, y + 0.5));
  }
  return rays;
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw std::invalid_argument("look_at: up vector parallel to view direction");
  right.normalize();
  const Vec3 cam_up = right.cross(forward);
  CameraPose pose;
  pose.camera_to_world.block<3, 1>(0, 0) = right;
  pose.camera_to_world.block<3, 1>(0, 1) = cam_up;
  pose.camera_to_world.block<3, 1>(0, 2) = -forward;
  pose.camera_to_world.block<3, 1>(0, 3) = eye;
  pose.fov_x = fov_x;
  pose.width = width;
  pose.height = height;
  return pose;
}

CameraPose orbit_pose(const Vec3& center, double radius, double azimuth_rad, double elevation_rad, double fov_x,
                      int width, int height) {
  const Vec3 dir(std::cos(elevation_rad) * std::cos(azimuth_rad), std::cos(elevation_rad) * std::sin(azimuth_rad),
                 std::sin(elevation_rad));
  return look_at(center + radius * dir, center, Vec3::UnitZ(), fov_x, width, height);
}

}  // namespace voxedit
