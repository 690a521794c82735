#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace voxedit {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned world-space box covered by a grid.
struct Bounds {
  Vec3 min{-1.0, -1.0, -1.0};
  Vec3 max{1.0, 1.0, 1.0};

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }

  friend bool operator==(const Bounds& a, const Bounds& b) { return a.min == b.min && a.max == b.max; }
};

namespace channel {
inline constexpr int kDensity = 0;
inline constexpr int kColor = 1;      // FeatureGrid: channels 1..3
inline constexpr int kAttention = 1;  // AttentionGrid: channel 1
}  // namespace channel

/// Dense N^3 grid of raw (pre-activation) features, channel-interleaved with x fastest:
/// index = ((z*N + y)*N + x)*Channels + ch. Voxel centres sit at (i + 0.5)/N inside the bounds.
template <int Channels>
class Grid {
 public:
  static constexpr int kChannels = Channels;

  Grid() = default;
  explicit Grid(int resolution, Bounds bounds = {}, float fill = 0.0f)
      : resolution_(resolution), bounds_{snap_f32(bounds.min), snap_f32(bounds.max)} {
    if (resolution <= 0) throw std::invalid_argument("grid resolution must be positive");
    if (!((bounds.max.array() > bounds.min.array()).all()))
      throw std::invalid_argument("grid bounds must have positive extent");
    data_.assign(voxel_count() * Channels, fill);
  }

  int resolution() const { return resolution_; }
  const Bounds& bounds() const { return bounds_; }
  std::size_t voxel_count() const {
    const auto n = static_cast<std::size_t>(resolution_);
    return n * n * n;
  }
  std::size_t voxel_index(int x, int y, int z) const {
    const auto n = static_cast<std::size_t>(resolution_);
    return (static_cast<std::size_t>(z) * n + static_cast<std::size_t>(y)) * n + static_cast<std::size_t>(x);
  }
  Vec3 voxel_center(int x, int y, int z) const {
    const Vec3 frac((x + 0.5) / resolution_, (y + 0.5) / resolution_, (z + 0.5) / resolution_);
    return bounds_.min + frac.cwiseProduct(bounds_.extent());
  }

  float& at(std::size_t voxel, int ch) { return data_[voxel * Channels + static_cast<std::size_t>(ch)]; }
  float at(std::size_t voxel, int ch) const { return data_[voxel * Channels + static_cast<std::size_t>(ch)]; }
  std::span<float, Channels> voxel(std::size_t v) { return std::span<float, Channels>(data_.data() + v * Channels, Channels); }
  std::span<const float, Channels> voxel(std::size_t v) const {
    return std::span<const float, Channels>(data_.data() + v * Channels, Channels);
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Grid& other) const { return resolution_ == other.resolution_ && bounds_ == other.bounds_; }

  /// Zero-filled grid of identical shape, used for gradients.
  Grid zeros_like() const { return Grid(resolution_, bounds_, 0.0f); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.resolution_ == b.resolution_ && a.bounds_ == b.bounds_ && a.data_ == b.data_;
  }

 private:
  // Bounds are stored as f32 on disk; snapping on construction keeps every grid file round-trip exact.
  static Vec3 snap_f32(const Vec3& v) {
    return Vec3(static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z()));
  }

  int resolution_ = 0;
  Bounds bounds_;
  std::vector<float> data_;
};

using FeatureGrid = Grid<4>;
using AttentionGrid = Grid<2>;

/// Density copied bit-for-bit from `source` channel 0, attention channel filled with `attn_init`.
AttentionGrid make_attention_grid(const FeatureGrid& source, float attn_init = 0.0f);

/// The eight corner voxels and weights of a trilinear lookup. `valid` is false outside the bounds.
struct TrilinearStencil {
  bool valid = false;
  std::array<std::size_t, 8> voxels{};
  std::array<double, 8> weights{};
};

TrilinearStencil trilinear_stencil(int resolution, const Bounds& bounds, const Vec3& p);

template <int C>
using FeatureVec = std::array<double, C>;

template <int C>
FeatureVec<C> gather(const Grid<C>& grid, const TrilinearStencil& s) {
  FeatureVec<C> out{};
  if (!s.valid) return out;
  const std::span<const float> d = grid.data();
  for (int k = 0; k < 8; ++k) {
    const double w = s.weights[k];
    const float* f = d.data() + s.voxels[k] * C;
    for (int c = 0; c < C; ++c) out[c] += w * static_cast<double>(f[c]);
  }
  return out;
}

template <int C>
void scatter(std::span<float> grad, const TrilinearStencil& s, const FeatureVec<C>& upstream) {
  if (!s.valid) return;
  for (int k = 0; k < 8; ++k) {
    const double w = s.weights[k];
    if (w == 0.0) continue;
    float* g = grad.data() + s.voxels[k] * C;
    for (int c = 0; c < C; ++c) g[c] += static_cast<float>(w * upstream[c]);
  }
}

/// Trilinear interpolation of raw features; zero outside the bounds.
template <int C>
FeatureVec<C> trilinear_sample(const Grid<C>& grid, const Vec3& p) {
  return gather(grid, trilinear_stencil(grid.resolution(), grid.bounds(), p));
}

template <int C>
struct ScatterContribution {
  std::size_t voxel;
  FeatureVec<C> grad;
};

/// Adjoint of trilinear_sample: the per-voxel share of `upstream`. Empty outside the bounds.
template <int C>
std::vector<ScatterContribution<C>> trilinear_scatter_grad(int resolution, const Bounds& bounds, const Vec3& p,
                                                           const FeatureVec<C>& upstream) {
  std::vector<ScatterContribution<C>> out;
  const TrilinearStencil s = trilinear_stencil(resolution, bounds, p);
  if (!s.valid) return out;
  for (int k = 0; k < 8; ++k) {
    if (s.weights[k] == 0.0) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& c) { return c.voxel == s.voxels[k]; });
    if (it == out.end()) {
      out.push_back({s.voxels[k], {}});
      it = std::prev(out.end());
    }
    for (int c = 0; c < C; ++c) it->grad[c] += s.weights[k] * upstream[c];
  }
  return out;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
/// Subgradient at exactly 0 is 0.
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Activated {
  double density = 0.0;
  std::array<double, 3> color{};
};

Activated activate(std::span<const double, 4> raw);
inline Activated activate(const FeatureVec<4>& raw) { return activate(std::span<const double, 4>(raw)); }

/// d(activated)/d(raw) per channel, diagonal.
FeatureVec<4> activation_grad(const FeatureVec<4>& raw);

}  // namespace voxedit
