#include "voxedit/edit.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "voxedit/adam.hpp"

namespace voxedit {

double anneal_multiplier(const AnnealSchedule& s, int iteration) {
  if (s.period <= 0) throw std::invalid_argument("anneal period must be positive");
  if (iteration < s.i_start) return 1.0;
  // Multiples of the period in [i_start, iteration].
  const int first = ((s.i_start + s.period - 1) / s.period) * s.period;
  const int steps = iteration < first ? 0 : (iteration - first) / s.period + 1;
  double k = 1.0;
  for (int n = 0; n < steps; ++n) {
    const double next = k * s.gamma;
    if (next >= s.k_floor) {
      k = next;
    } else {
      if (s.floor_mode == AnnealFloor::kClamp) k = s.k_floor;
      break;
    }
  }
  return k;
}

double anneal_tmax(const AnnealSchedule& s, int iteration) { return s.t_final * anneal_multiplier(s, iteration); }

double sample_timestep(const AnnealSchedule& s, int iteration, std::mt19937_64& rng) {
  const double lo = s.t0 + s.epsilon;
  const double hi = std::min(1.0, anneal_tmax(s, iteration) + s.epsilon);
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

CameraPose sample_pose(std::mt19937_64& rng, const PoseSampler& sampler) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double azimuth = 2.0 * std::numbers::pi * unit(rng);
  const double elevation =
      kDeg * (sampler.elevation_min_deg + (sampler.elevation_max_deg - sampler.elevation_min_deg) * unit(rng));
  return orbit_pose(sampler.center, sampler.radius, azimuth, elevation, sampler.fov_x, sampler.width, sampler.height);
}

namespace {

void add_scaled(std::span<float> dst, std::span<const float> src, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(dst[i] + scale * src[i]);
}

}  // namespace

FeatureGrid edit(const FeatureGrid& initial, const EditConfig& cfg, GuidanceBackend& backend) {
  if (cfg.iterations < 0) throw std::invalid_argument("edit: iterations must be non-negative");
  if (cfg.reg.weight < 0.0) throw std::invalid_argument("edit: regularizer weight must be non-negative");
  const bool image_reg = is_image_space(cfg.reg.kind) && cfg.reg.weight > 0.0;
  if (image_reg) {
    if (cfg.reference_views == nullptr) throw std::invalid_argument("edit: image-space regularizer needs input views");
    validate_dataset(*cfg.reference_views);
  }

  FeatureGrid edited = initial;
  AdamState adam(edited.data().size(), cfg.lr);
  std::mt19937_64 rng(cfg.seed);

  for (int i = 0; i < cfg.iterations; ++i) {
    const CameraPose pose = cfg.fixed_pose ? *cfg.fixed_pose : sample_pose(rng, cfg.poses);
    const RenderedImage rendered = render(edited, pose, cfg.render);
    const double t = sample_timestep(cfg.schedule, i, rng);

    SdsRequest req;
    req.image = &rendered.rgb;
    req.prompt = cfg.prompt;
    req.t = t;
    req.seed = cfg.seed + static_cast<std::uint64_t>(i);
    req.guidance_scale = cfg.guidance_scale;
    req.iteration = i;
    req.pose = pose;
    Image pixel_grad;
    try {
      pixel_grad = backend.sds_gradient(req);
    } catch (const std::exception& e) {
      throw std::runtime_error("edit iteration " + std::to_string(i) + ": guidance backend failed: " + e.what());
    }
    if (!pixel_grad.same_dims(rendered.rgb)) {
      throw std::runtime_error("edit iteration " + std::to_string(i) + ": guidance gradient has wrong dimensions");
    }

    FeatureGrid grad = render_backward(edited, pose, cfg.render, pixel_grad);

    double reg_loss = 0.0;
    if (cfg.reg.weight > 0.0 && cfg.reg.kind != RegularizerKind::kNone) {
      if (image_reg) {
        const auto& views = cfg.reference_views->views;
        const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, views.size() - 1)(rng);
        const View& view = views[idx];
        const RenderedImage at_input = render(edited, view.pose, cfg.render);
        const ImageLoss il =
            image_loss(at_input.rgb, view.image, cfg.reg.kind == RegularizerKind::kImageL1 ? 1 : 2);
        reg_loss = il.loss;
        const FeatureGrid reg_grad = render_backward(edited, view.pose, cfg.render, il.grad);
        add_scaled(grad.data(), reg_grad.data(), cfg.reg.weight);
      } else {
        const GridLoss gl = volumetric_regularizer(cfg.reg.kind, initial, edited);
        reg_loss = gl.loss;
        add_scaled(grad.data(), gl.grad.data(), cfg.reg.weight);
      }
    }

    for (std::size_t k = 0; k < grad.data().size(); ++k) {
      if (!std::isfinite(grad.data()[k])) {
        throw std::runtime_error("edit iteration " + std::to_string(i) + ": non-finite gradient at feature " +
                                 std::to_string(k));
      }
    }
    adam_step(adam, edited.data(), grad.data());
    if (cfg.progress) cfg.progress({i, t, reg_loss});
  }
  return edited;
}

}  // namespace voxedit
