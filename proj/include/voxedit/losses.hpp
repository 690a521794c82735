#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxedit/grid.hpp"
#include "voxedit/image.hpp"

namespace voxedit {

/// Either side with variance below this makes the correlation loss fall back to 1 with zero gradient.
inline constexpr double kVarianceFloor = 1e-12;

struct VectorLoss {
  double loss = 0.0;
  std::vector<float> grad;  // d loss / d moving
};

/// 1 - Pearson(fixed, moving) using biased (1/N) moments. The gradient is taken w.r.t. `moving` only.
VectorLoss correlation_loss(std::span<const float> fixed, std::span<const float> moving);

struct GridLoss {
  double loss = 0.0;
  FeatureGrid grad;
};

std::vector<float> density_features(const FeatureGrid& grid);
/// All colour channels flattened, voxel-major.
std::vector<float> color_features(const FeatureGrid& grid);

/// Correlation between density features; gradient lands on channel 0 of `edited`.
GridLoss density_correlation_loss(const FeatureGrid& initial, const FeatureGrid& edited);
/// Density correlation term plus one correlation term over all colour features flattened together.
GridLoss correlation_plus_rgb_loss(const FeatureGrid& initial, const FeatureGrid& edited);
/// Mean |f_e - f_i| (p = 1) or mean (f_e - f_i)^2 (p = 2) over density features.
GridLoss volumetric_distance_loss(const FeatureGrid& initial, const FeatureGrid& edited, int p);

struct ImageLoss {
  double loss = 0.0;
  Image grad;
};

/// Mean absolute (p = 1) or squared (p = 2) error over all pixel channels; gradient w.r.t. `rendered`.
ImageLoss image_loss(const Image& rendered, const Image& target, int p);

enum class RegularizerKind {
  kCorrelation,
  kCorrelationPlusRgb,
  kVolumetricL1,
  kVolumetricL2,
  kImageL1,
  kImageL2,
  kNone,
};

struct RegularizerConfig {
  RegularizerKind kind = RegularizerKind::kCorrelation;
  double weight = 200.0;
};

/// Command-line names: correlation, correlation_rgb, vol_l1, vol_l2, img_l1, img_l2, none.
RegularizerKind parse_regularizer(std::string_view name);
std::string regularizer_name(RegularizerKind kind);
bool is_image_space(RegularizerKind kind);

/// Unweighted loss and gradient for the grid-space regularizers (image-space kinds throw).
GridLoss volumetric_regularizer(RegularizerKind kind, const FeatureGrid& initial, const FeatureGrid& edited);

}  // namespace voxedit
