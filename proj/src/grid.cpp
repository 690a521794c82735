#include "voxedit/grid.hpp"

namespace voxedit {

AttentionGrid make_attention_grid(const FeatureGrid& source, float attn_init) {
  AttentionGrid out(source.resolution(), source.bounds(), attn_init);
  for (std::size_t v = 0; v < source.voxel_count(); ++v) {
    out.at(v, channel::kDensity) = source.at(v, channel::kDensity);
  }
  return out;
}

namespace {

struct AxisLerp {
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  double w1 = 0.0;  // weight of i1; i0 gets 1 - w1
};

// Cell-centred: continuous index u = t*N - 0.5, clamped to the outermost centres.
AxisLerp axis_lerp(double t, int n) {
  AxisLerp a;
  if (n == 1) return a;
  double u = t * n - 0.5;
  u = std::clamp(u, 0.0, static_cast<double>(n - 1));
  const int i0 = std::min(static_cast<int>(std::floor(u)), n - 2);
  a.i0 = static_cast<std::size_t>(i0);
  a.i1 = a.i0 + 1;
  a.w1 = u - i0;
  return a;
}

}  // namespace

TrilinearStencil trilinear_stencil(int resolution, const Bounds& bounds, const Vec3& p) {
  TrilinearStencil s;
  if (!bounds.contains(p)) return s;
  const Vec3 t = (p - bounds.min).cwiseQuotient(bounds.extent());
  const AxisLerp ax = axis_lerp(t.x(), resolution);
  const AxisLerp ay = axis_lerp(t.y(), resolution);
  const AxisLerp az = axis_lerp(t.z(), resolution);
  const auto n = static_cast<std::size_t>(resolution);
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    const std::size_t z = dz ? az.i1 : az.i0;
    const double wz = dz ? az.w1 : 1.0 - az.w1;
    for (int dy = 0; dy < 2; ++dy) {
      const std::size_t y = dy ? ay.i1 : ay.i0;
      const double wy = dy ? ay.w1 : 1.0 - ay.w1;
      for (int dx = 0; dx < 2; ++dx) {
        const std::size_t x = dx ? ax.i1 : ax.i0;
        const double wx = dx ? ax.w1 : 1.0 - ax.w1;
        s.voxels[k] = (z * n + y) * n + x;
        s.weights[k] = wx * wy * wz;
        ++k;
      }
    }
  }
  s.valid = true;
  return s;
}

Activated activate(std::span<const double, 4> raw) {
  Activated a;
  a.density = relu(raw[0]);
  for (int c = 0; c < 3; ++c) a.color[c] = sigmoid(raw[1 + c]);
  return a;
}

FeatureVec<4> activation_grad(const FeatureVec<4>& raw) {
  FeatureVec<4> g{};
  g[0] = relu_grad(raw[0]);
  for (int c = 1; c < 4; ++c) {
    const double s = sigmoid(raw[c]);
    g[c] = s * (1.0 - s);
  }
  return g;
}

}  // namespace voxedit
