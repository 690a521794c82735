#include "voxedit/reconstruct.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "voxedit/adam.hpp"
#include "voxedit/losses.hpp"

namespace voxedit {

FeatureGrid make_initial_grid(int resolution, const Bounds& bounds, float density, float color) {
  FeatureGrid g(resolution, bounds, color);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) g.at(v, channel::kDensity) = density;
  return g;
}

FeatureGrid reconstruct(const Dataset& dataset, const ReconConfig& cfg) {
  validate_dataset(dataset);
  FeatureGrid grid = make_initial_grid(cfg.resolution, cfg.bounds, cfg.init_density, cfg.init_color);
  AdamState adam(grid.data().size(), cfg.lr);

  const std::size_t n_views = dataset.views.size();
  const long long total = cfg.iterations > 0 ? cfg.iterations : static_cast<long long>(cfg.epochs) * n_views;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n_views);
  std::iota(order.begin(), order.end(), 0);

  for (long long it = 0; it < total; ++it) {
    const std::size_t slot = static_cast<std::size_t>(it) % n_views;
    if (slot == 0 && cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    const View& view = dataset.views[order[slot]];

    const RenderedImage rendered = render(grid, view.pose, cfg.render);
    const ImageLoss l1 = image_loss(rendered.rgb, view.image, 1);
    const FeatureGrid grad = render_backward(grid, view.pose, cfg.render, l1.grad);
    adam_step(adam, grid.data(), grad.data());

    if (cfg.progress) {
      cfg.progress({static_cast<int>(it), static_cast<int>(it / static_cast<long long>(n_views)), order[slot], l1.loss});
    }
  }
  return grid;
}

double mean_psnr(const FeatureGrid& grid, const Dataset& dataset, const RenderConfig& cfg) {
  validate_dataset(dataset);
  double sum = 0.0;
  for (const View& v : dataset.views) sum += psnr(render(grid, v.pose, cfg).rgb, v.image);
  return sum / static_cast<double>(dataset.views.size());
}

}  // namespace voxedit
