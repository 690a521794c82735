#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "voxedit/camera.hpp"
#include "voxedit/grid.hpp"
#include "voxedit/image.hpp"

namespace voxedit {

struct RenderConfig {
  /// Samples along the in-box segment of each ray; 0 selects 2 * grid resolution.
  int samples_per_ray = 0;
  std::array<double, 3> background{1.0, 1.0, 1.0};
  /// Luma seen by attention renders where rays exit the object.
  double attention_background = 0.0;
  /// Stratified jitter inside each sample interval. Off: samples at interval midpoints.
  bool jitter = false;
  std::uint64_t jitter_seed = 0;
};

int effective_samples(const RenderConfig& cfg, int resolution);

/// Compositing weights T_j * alpha_j along one ray plus the residual transmittance T_S.
struct RayWeights {
  std::vector<double> weights;
  double final_transmittance = 1.0;
};

RayWeights ray_weights(const FeatureGrid& grid, const Ray& ray, const RenderConfig& cfg,
                       std::uint64_t pixel_index = 0);

RenderedImage render(const FeatureGrid& grid, const CameraPose& pose, const RenderConfig& cfg);

/// Gradient of sum(upstream * rgb) w.r.t. every raw feature of `grid`. `upstream` is W x H x 3 and
/// must use the same sampling configuration as the forward pass.
FeatureGrid render_backward(const FeatureGrid& grid, const CameraPose& pose, const RenderConfig& cfg,
                            const Image& upstream);

/// Single-channel luma render: sigmoid(attn) composited with the frozen density.
Image render_attention(const AttentionGrid& grid, const CameraPose& pose, const RenderConfig& cfg);

/// Gradient w.r.t. the attention channel only; the density channel of the result is zero.
AttentionGrid render_attention_backward(const AttentionGrid& grid, const CameraPose& pose, const RenderConfig& cfg,
                                        const Image& upstream);

}  // namespace voxedit
