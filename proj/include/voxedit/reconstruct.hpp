#pragma once

#include <cstdint>
#include <functional>

#include "voxedit/dataset.hpp"
#include "voxedit/grid.hpp"
#include "voxedit/render.hpp"

namespace voxedit {

struct ReconProgress {
  int iteration = 0;
  int epoch = 0;
  std::size_t view = 0;
  double loss = 0.0;  // L1 of this iteration's view before the update
};

struct ReconConfig {
  int resolution = 160;
  Bounds bounds;
  int epochs = 10;
  /// When > 0, overrides epochs: total number of single-view steps.
  int iterations = 0;
  double lr = 0.03;
  std::uint64_t seed = 0;
  /// Seeded shuffled view order per epoch; false visits views round-robin.
  bool shuffle = true;
  RenderConfig render;
  float init_density = 0.1f;
  float init_color = 0.0f;
  std::function<void(const ReconProgress&)> progress;
};

FeatureGrid make_initial_grid(int resolution, const Bounds& bounds, float density, float color);

/// Fits a grid to posed images by minimising the per-view L1 photometric error with Adam.
FeatureGrid reconstruct(const Dataset& dataset, const ReconConfig& cfg);

/// Mean PSNR of `grid` rendered at every view of `dataset`.
double mean_psnr(const FeatureGrid& grid, const Dataset& dataset, const RenderConfig& cfg);

}  // namespace voxedit
