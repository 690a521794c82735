#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "voxedit/camera.hpp"
#include "voxedit/dataset.hpp"
#include "voxedit/grid.hpp"
#include "voxedit/guidance.hpp"
#include "voxedit/losses.hpp"
#include "voxedit/render.hpp"

namespace voxedit {

/// What happens when the next annealing multiplication would drop k below the floor.
enum class AnnealFloor {
  kFreezeLast,  // skip it: k keeps its last value >= floor
  kClamp,       // k becomes exactly the floor
};

/// Annealed upper bound on the SDS timestep: k starts at 1 and is multiplied by `gamma`
/// at every iteration i >= i_start with i % period == 0.
struct AnnealSchedule {
  double epsilon = 0.02;
  int i_start = 4000;
  int period = 600;
  double gamma = 0.75;
  double k_floor = 0.35;
  double t0 = 0.0;
  double t_final = 1.0;
  AnnealFloor floor_mode = AnnealFloor::kFreezeLast;
};

double anneal_multiplier(const AnnealSchedule& s, int iteration);
double anneal_tmax(const AnnealSchedule& s, int iteration);

/// t ~ U[t0 + eps, min(1, t_max + eps)].
double sample_timestep(const AnnealSchedule& s, int iteration, std::mt19937_64& rng);

/// Upper-hemisphere viewpoints looking at `center`, z up. Elevation and azimuth are uniform in angle.
struct PoseSampler {
  double radius = 3.0;
  double elevation_min_deg = 0.0;
  double elevation_max_deg = 85.0;
  double fov_x = 0.8726646259971648;
  int width = 266;
  int height = 266;
  Vec3 center = Vec3::Zero();
};

CameraPose sample_pose(std::mt19937_64& rng, const PoseSampler& sampler);

struct EditProgress {
  int iteration = 0;
  double t = 0.0;
  double regularizer_loss = 0.0;
};

struct EditConfig {
  std::string prompt;
  int iterations = 8000;
  RegularizerConfig reg;
  AnnealSchedule schedule;
  PoseSampler poses;
  RenderConfig render;
  double lr = 0.03;
  std::uint64_t seed = 0;
  std::optional<double> guidance_scale;
  /// Render every iteration from this pose instead of sampling one.
  std::optional<CameraPose> fixed_pose;
  /// Input views, required by the image-space regularizers.
  const Dataset* reference_views = nullptr;
  std::function<void(const EditProgress&)> progress;
};

/// Optimises a copy of `initial` under backend SDS gradients plus the weighted regularizer.
/// Backend failures are rethrown with the iteration index; a non-finite gradient aborts.
FeatureGrid edit(const FeatureGrid& initial, const EditConfig& cfg, GuidanceBackend& backend);

}  // namespace voxedit
