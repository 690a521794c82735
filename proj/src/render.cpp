#include "voxedit/render.hpp"

#include <cmath>
#include <stdexcept>

#include "voxedit/parallel.hpp"

namespace voxedit {

namespace {

// splitmix64 finaliser; stateless so that jitter depends only on (seed, pixel, sample).
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double sample_offset(const RenderConfig& cfg, std::uint64_t pixel, int j) {
  if (!cfg.jitter) return 0.5;
  const std::uint64_t h = mix64(mix64(cfg.jitter_seed ^ mix64(pixel)) + static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

template <int C>
constexpr int kColors = C - 1;

template <int C>
struct Sample {
  TrilinearStencil stencil;
  double raw_density = 0.0;
  double sigma = 0.0;
  std::array<double, kColors<C>> color{};
};

struct Marching {
  int samples = 0;
  double delta = 0.0;
};

Marching marching(const Ray& ray, int samples) {
  return {samples, (ray.t_far - ray.t_near) / samples};
}

template <int C>
Sample<C> sample_at(const Grid<C>& grid, const Ray& ray, const Marching& m, const RenderConfig& cfg,
                    std::uint64_t pixel, int j) {
  Sample<C> s;
  const double t = ray.t_near + (j + sample_offset(cfg, pixel, j)) * m.delta;
  s.stencil = trilinear_stencil(grid.resolution(), grid.bounds(), ray.origin + t * ray.direction);
  const FeatureVec<C> raw = gather(grid, s.stencil);
  s.raw_density = raw[0];
  s.sigma = relu(raw[0]);
  for (int k = 0; k < kColors<C>; ++k) s.color[k] = sigmoid(raw[1 + k]);
  return s;
}

// Front-to-back compositing. Returns the final transmittance.
template <int C>
double composite(const Grid<C>& grid, const Ray& ray, int samples, const RenderConfig& cfg, std::uint64_t pixel,
                 std::array<double, kColors<C>>& color) {
  color.fill(0.0);
  if (!ray.hit) return 1.0;
  const Marching m = marching(ray, samples);
  double transmittance = 1.0;
  for (int j = 0; j < samples; ++j) {
    const Sample<C> s = sample_at(grid, ray, m, cfg, pixel, j);
    if (s.sigma == 0.0) continue;
    const double survive = std::exp(-s.sigma * m.delta);
    const double w = transmittance * (1.0 - survive);
    for (int k = 0; k < kColors<C>; ++k) color[k] += w * s.color[k];
    transmittance *= survive;
  }
  return transmittance;
}

// Accumulates d(<g, pixel>)/d(raw features) for one ray into `grad`.
template <int C>
void backprop_ray(const Grid<C>& grid, const Ray& ray, int samples, const RenderConfig& cfg, std::uint64_t pixel,
                  const std::array<double, kColors<C>>& g, const std::array<double, kColors<C>>& background,
                  std::vector<Sample<C>>& scratch, std::span<float> grad) {
  if (!ray.hit) return;
  const Marching m = marching(ray, samples);
  scratch.clear();
  for (int j = 0; j < samples; ++j) scratch.push_back(sample_at(grid, ray, m, cfg, pixel, j));

  // Forward quantities: T_j before each sample.
  std::vector<double> trans(static_cast<std::size_t>(samples) + 1);
  trans[0] = 1.0;
  for (int j = 0; j < samples; ++j) trans[j + 1] = trans[j] * std::exp(-scratch[j].sigma * m.delta);

  // behind = <g, sum_{k>j} w_k c_k + T_S * background>, swept back to front.
  double behind = 0.0;
  for (int k = 0; k < kColors<C>; ++k) behind += g[k] * background[k];
  behind *= trans[samples];

  for (int j = samples - 1; j >= 0; --j) {
    const Sample<C>& s = scratch[j];
    const double w = trans[j] - trans[j + 1];
    double g_dot_c = 0.0;
    for (int k = 0; k < kColors<C>; ++k) g_dot_c += g[k] * s.color[k];

    FeatureVec<C> up{};
    const double d_sigma = m.delta * (trans[j + 1] * g_dot_c - behind);
    up[0] = d_sigma * relu_grad(s.raw_density);
    for (int k = 0; k < kColors<C>; ++k) up[1 + k] = g[k] * w * s.color[k] * (1.0 - s.color[k]);
    scatter<C>(grad, s.stencil, up);

    behind += w * g_dot_c;
  }
}

template <int C>
Image render_generic(const Grid<C>& grid, const CameraPose& pose, const RenderConfig& cfg,
                     const std::array<double, kColors<C>>& background, Image* opacity) {
  const std::vector<Ray> rays = generate_rays(pose, grid.bounds());
  const int samples = effective_samples(cfg, grid.resolution());
  Image out(pose.width, pose.height, kColors<C>);
  if (opacity) *opacity = Image(pose.width, pose.height, 1);
  parallel_for(rays.size(), [&](std::size_t begin, std::size_t end, int) {
    std::array<double, kColors<C>> color{};
    for (std::size_t i = begin; i < end; ++i) {
      const double t_final = composite(grid, rays[i], samples, cfg, i, color);
      for (int k = 0; k < kColors<C>; ++k) out.data[i * kColors<C> + k] = color[k] + t_final * background[k];
      if (opacity) opacity->data[i] = 1.0 - t_final;
    }
  });
  return out;
}

template <int C>
Grid<C> backward_generic(const Grid<C>& grid, const CameraPose& pose, const RenderConfig& cfg,
                         const std::array<double, kColors<C>>& background, const Image& upstream) {
  if (upstream.width != pose.width || upstream.height != pose.height || upstream.channels != kColors<C>) {
    throw std::invalid_argument("upstream gradient dimensions do not match the render");
  }
  const std::vector<Ray> rays = generate_rays(pose, grid.bounds());
  const int samples = effective_samples(cfg, grid.resolution());
  const int workers = worker_count(rays.size());

  Grid<C> result = grid.zeros_like();
  std::vector<Grid<C>> partial(static_cast<std::size_t>(workers > 1 ? workers - 1 : 0));
  for (auto& p : partial) p = grid.zeros_like();

  parallel_for(rays.size(), [&](std::size_t begin, std::size_t end, int worker) {
    std::span<float> grad = worker == 0 ? result.data() : partial[static_cast<std::size_t>(worker - 1)].data();
    std::vector<Sample<C>> scratch;
    scratch.reserve(static_cast<std::size_t>(samples));
    std::array<double, kColors<C>> g{};
    for (std::size_t i = begin; i < end; ++i) {
      bool any = false;
      for (int k = 0; k < kColors<C>; ++k) {
        g[k] = upstream.data[i * kColors<C> + k];
        any = any || g[k] != 0.0;
      }
      if (any) backprop_ray(grid, rays[i], samples, cfg, i, g, background, scratch, grad);
    }
  });

  std::span<float> total = result.data();
  for (const auto& p : partial) {
    const std::span<const float> src = p.data();
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += src[i];
  }
  return result;
}

}  // namespace

int effective_samples(const RenderConfig& cfg, int resolution) {
  const int s = cfg.samples_per_ray > 0 ? cfg.samples_per_ray : 2 * resolution;
  if (s < 2) throw std::invalid_argument("samples_per_ray must be at least 2");
  return s;
}

RayWeights ray_weights(const FeatureGrid& grid, const Ray& ray, const RenderConfig& cfg, std::uint64_t pixel_index) {
  RayWeights out;
  if (!ray.hit) return out;
  const int samples = effective_samples(cfg, grid.resolution());
  const Marching m = marching(ray, samples);
  out.weights.resize(static_cast<std::size_t>(samples));
  double transmittance = 1.0;
  for (int j = 0; j < samples; ++j) {
    const Sample<4> s = sample_at(grid, ray, m, cfg, pixel_index, j);
    const double survive = std::exp(-s.sigma * m.delta);
    out.weights[static_cast<std::size_t>(j)] = transmittance * (1.0 - survive);
    transmittance *= survive;
  }
  out.final_transmittance = transmittance;
  return out;
}

RenderedImage render(const FeatureGrid& grid, const CameraPose& pose, const RenderConfig& cfg) {
  RenderedImage out;
  out.rgb = render_generic<4>(grid, pose, cfg, cfg.background, &out.opacity);
  return out;
}

FeatureGrid render_backward(const FeatureGrid& grid, const CameraPose& pose, const RenderConfig& cfg,
                            const Image& upstream) {
  return backward_generic<4>(grid, pose, cfg, cfg.background, upstream);
}

Image render_attention(const AttentionGrid& grid, const CameraPose& pose, const RenderConfig& cfg) {
  return render_generic<2>(grid, pose, cfg, {cfg.attention_background}, nullptr);
}

AttentionGrid render_attention_backward(const AttentionGrid& grid, const CameraPose& pose, const RenderConfig& cfg,
                                        const Image& upstream) {
  AttentionGrid g = backward_generic<2>(grid, pose, cfg, {cfg.attention_background}, upstream);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) g.at(v, channel::kDensity) = 0.0f;
  return g;
}

}  // namespace voxedit
