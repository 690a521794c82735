#pragma once

#include <vector>

#include <Eigen/Core>

#include "voxedit/grid.hpp"

namespace voxedit {

using Mat4 = Eigen::Matrix4d;

/// Pinhole camera. Right-handed, looking down -z in camera space, +y up, square pixels.
struct CameraPose {
  Mat4 camera_to_world = Mat4::Identity();
  double fov_x = 0.8726646259971648;  // 50 degrees
  int width = 266;
  int height = 266;

  Vec3 position() const { return camera_to_world.block<3, 1>(0, 3); }
  double focal_px() const;
};

/// Throws std::invalid_argument for a non-rigid / non-invertible transform, a fov outside (0, pi),
/// or non-positive image size.
void validate_pose(const CameraPose& pose);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double t_near = 0.0;
  double t_far = 0.0;
  bool hit = false;  // false: the ray misses the grid box and sees background only
};

/// Slab test against `bounds`; t_near is clamped to 0 for cameras inside the box.
void intersect_bounds(Ray& ray, const Bounds& bounds);

Ray pixel_ray(const CameraPose& pose, const Bounds& bounds, double px, double py);

/// One ray per pixel centre, row-major from the top-left pixel.
std::vector<Ray> generate_rays(const CameraPose& pose, const Bounds& bounds);

/// Camera at `eye` looking at `target`. `up` must not be parallel to the view direction.
CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width, int height);

/// Camera on a sphere around `center`; z is up, azimuth measured from +x toward +y.
CameraPose orbit_pose(const Vec3& center, double radius, double azimuth_rad, double elevation_rad, double fov_x,
                      int width, int height);

}  // namespace voxedit
