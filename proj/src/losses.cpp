#include "voxedit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace voxedit {

namespace {

double mean(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_pair(const FeatureGrid& a, const FeatureGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("grids differ in shape");
}

}  // namespace

VectorLoss correlation_loss(std::span<const float> fixed, std::span<const float> moving) {
  if (fixed.size() != moving.size()) throw std::invalid_argument("correlation_loss: length mismatch");
  if (fixed.size() < 2) throw std::invalid_argument("correlation_loss: need at least 2 elements");
  const std::size_t n = fixed.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ma = mean(fixed);
  const double mb = mean(moving);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = fixed[i] - ma;
    const double db = moving[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  cov *= inv_n;
  va *= inv_n;
  vb *= inv_n;

  VectorLoss out;
  out.grad.assign(n, 0.0f);
  if (va < kVarianceFloor || vb < kVarianceFloor) {
    out.loss = 1.0;
    return out;
  }
  const double denom = std::sqrt(va * vb);
  const double rho = cov / denom;
  out.loss = std::clamp(1.0 - rho, 0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double da = fixed[i] - ma;
    const double db = moving[i] - mb;
    out.grad[i] = static_cast<float>(-inv_n * (da / denom - rho * db / vb));
  }
  return out;
}

std::vector<float> density_features(const FeatureGrid& grid) {
  std::vector<float> out(grid.voxel_count());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = grid.at(v, channel::kDensity);
  return out;
}

std::vector<float> color_features(const FeatureGrid& grid) {
  std::vector<float> out(grid.voxel_count() * 3);
  for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
    for (int c = 0; c < 3; ++c) out[v * 3 + c] = grid.at(v, channel::kColor + c);
  }
  return out;
}

GridLoss density_correlation_loss(const FeatureGrid& initial, const FeatureGrid& edited) {
  check_pair(initial, edited);
  const VectorLoss d = correlation_loss(density_features(initial), density_features(edited));
  GridLoss out{d.loss, edited.zeros_like()};
  for (std::size_t v = 0; v < edited.voxel_count(); ++v) out.grad.at(v, channel::kDensity) = d.grad[v];
  return out;
}

GridLoss correlation_plus_rgb_loss(const FeatureGrid& initial, const FeatureGrid& edited) {
  GridLoss out = density_correlation_loss(initial, edited);
  const VectorLoss c = correlation_loss(color_features(initial), color_features(edited));
  out.loss += c.loss;
  for (std::size_t v = 0; v < edited.voxel_count(); ++v) {
    for (int k = 0; k < 3; ++k) out.grad.at(v, channel::kColor + k) = c.grad[v * 3 + k];
  }
  return out;
}

GridLoss volumetric_distance_loss(const FeatureGrid& initial, const FeatureGrid& edited, int p) {
  check_pair(initial, edited);
  if (p != 1 && p != 2) throw std::invalid_argument("volumetric_distance_loss: p must be 1 or 2");
  const double inv_n = 1.0 / static_cast<double>(edited.voxel_count());
  GridLoss out{0.0, edited.zeros_like()};
  for (std::size_t v = 0; v < edited.voxel_count(); ++v) {
    const double d = static_cast<double>(edited.at(v, channel::kDensity)) - initial.at(v, channel::kDensity);
    if (p == 1) {
      out.loss += std::abs(d);
      out.grad.at(v, channel::kDensity) = static_cast<float>(d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0));
    } else {
      out.loss += d * d;
      out.grad.at(v, channel::kDensity) = static_cast<float>(2.0 * d * inv_n);
    }
  }
  out.loss *= inv_n;
  return out;
}

ImageLoss image_loss(const Image& rendered, const Image& target, int p) {
  if (!rendered.same_dims(target)) throw std::invalid_argument("image_loss: shape mismatch");
  if (p != 1 && p != 2) throw std::invalid_argument("image_loss: p must be 1 or 2");
  const double inv_n = 1.0 / static_cast<double>(rendered.data.size());
  ImageLoss out{0.0, Image(rendered.width, rendered.height, rendered.channels)};
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - target.data[i];
    if (p == 1) {
      out.loss += std::abs(d);
      out.grad.data[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    } else {
      out.loss += d * d;
      out.grad.data[i] = 2.0 * d * inv_n;
    }
  }
  out.loss *= inv_n;
  return out;
}

RegularizerKind parse_regularizer(std::string_view name) {
  if (name == "correlation") return RegularizerKind::kCorrelation;
  if (name == "correlation_rgb") return RegularizerKind::kCorrelationPlusRgb;
  if (name == "vol_l1") return RegularizerKind::kVolumetricL1;
  if (name == "vol_l2") return RegularizerKind::kVolumetricL2;
  if (name == "img_l1") return RegularizerKind::kImageL1;
  if (name == "img_l2") return RegularizerKind::kImageL2;
  if (name == "none") return RegularizerKind::kNone;
  throw std::invalid_argument("unknown regularizer: " + std::string(name));
}

std::string regularizer_name(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::kCorrelation: return "correlation";
    case RegularizerKind::kCorrelationPlusRgb: return "correlation_rgb";
    case RegularizerKind::kVolumetricL1: return "vol_l1";
    case RegularizerKind::kVolumetricL2: return "vol_l2";
    case RegularizerKind::kImageL1: return "img_l1";
    case RegularizerKind::kImageL2: return "img_l2";
    case RegularizerKind::kNone: return "none";
  }
  return "none";
}

bool is_image_space(RegularizerKind kind) {
  return kind == RegularizerKind::kImageL1 || kind == RegularizerKind::kImageL2;
}

GridLoss volumetric_regularizer(RegularizerKind kind, const FeatureGrid& initial, const FeatureGrid& edited) {
  switch (kind) {
    case RegularizerKind::kCorrelation: return density_correlation_loss(initial, edited);
    case RegularizerKind::kCorrelationPlusRgb: return correlation_plus_rgb_loss(initial, edited);
    case RegularizerKind::kVolumetricL1: return volumetric_distance_loss(initial, edited, 1);
    case RegularizerKind::kVolumetricL2: return volumetric_distance_loss(initial, edited, 2);
    case RegularizerKind::kNone: return {0.0, edited.zeros_like()};
    case RegularizerKind::kImageL1:
    case RegularizerKind::kImageL2: break;
  }
  throw std::invalid_argument("image-space regularizers need rendered views, not grids");
}

}  // namespace voxedit
