#include "voxedit/attention.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "voxedit/adam.hpp"
#include "voxedit/dataset.hpp"
#include "voxedit/losses.hpp"

namespace voxedit {

namespace {

constexpr const char* kPoseManifest = "att_poses.json";

// Shared fit loop. `next(i)` yields the pose and supervision map for iteration i.
AttentionGrid fit_attention(const FeatureGrid& edited, const LiftConfig& cfg,
                            const std::function<std::pair<CameraPose, Image>(int)>& next) {
  if (cfg.iterations < 0) throw std::invalid_argument("lift_attention: iterations must be non-negative");
  AttentionGrid grid = make_attention_grid(edited, cfg.attn_init);
  const std::size_t n = grid.voxel_count();
  std::vector<float> attn(n);
  std::vector<float> attn_grad(n);
  for (std::size_t v = 0; v < n; ++v) attn[v] = grid.at(v, channel::kAttention);
  AdamState adam(n, cfg.lr);

  for (int i = 0; i < cfg.iterations; ++i) {
    const auto [pose, target] = next(i);
    if (target.channels != 1 || target.width != pose.width || target.height != pose.height) {
      throw std::runtime_error("lift_attention iteration " + std::to_string(i) + ": map does not match its pose");
    }
    const Image luma = render_attention(grid, pose, cfg.render);
    const ImageLoss l1 = image_loss(luma, target, 1);
    const AttentionGrid g = render_attention_backward(grid, pose, cfg.render, l1.grad);
    for (std::size_t v = 0; v < n; ++v) attn_grad[v] = g.at(v, channel::kAttention);
    adam_step(adam, attn, attn_grad);
    for (std::size_t v = 0; v < n; ++v) grid.at(v, channel::kAttention) = attn[v];
    if (cfg.progress) cfg.progress({i, l1.loss});
  }
  return grid;
}

}  // namespace

AttentionGrid lift_attention(const FeatureGrid& edited, GuidanceBackend& backend, AttentionRole role,
                             const LiftConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return fit_attention(edited, cfg, [&](int i) {
    const CameraPose pose = sample_pose(rng, cfg.poses);
    const Image rgb = render(edited, pose, cfg.render).rgb;
    AttentionRequest req;
    req.image = &rgb;
    req.prompt = cfg.prompt;
    req.token = cfg.token;
    req.role = role;
    req.t = cfg.timestep;
    req.seed = cfg.seed + static_cast<std::uint64_t>(i);
    req.iteration = i;
    req.pose = pose;
    try {
      return std::make_pair(pose, backend.attention_map(req));
    } catch (const std::exception& e) {
      throw std::runtime_error("lift_attention iteration " + std::to_string(i) + ": guidance backend failed: " +
                               e.what());
    }
  });
}

AttentionGrid lift_attention(const FeatureGrid& edited, const AttentionMapSet& maps, const LiftConfig& cfg) {
  if (maps.poses.size() != maps.maps.size()) throw std::invalid_argument("lift_attention: pose/map count mismatch");
  if (maps.poses.empty() && cfg.iterations > 0) throw std::invalid_argument("lift_attention: no attention maps");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(maps.poses.size());
  std::iota(order.begin(), order.end(), 0);
  return fit_attention(edited, cfg, [&](int i) {
    const std::size_t slot = static_cast<std::size_t>(i) % order.size();
    if (slot == 0) std::shuffle(order.begin(), order.end(), rng);
    return std::make_pair(maps.poses[order[slot]], maps.maps[order[slot]]);
  });
}

std::string attention_map_filename(AttentionRole role, int pose_index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "att_%s_pose_%04d.pfm", role_name(role).c_str(), pose_index);
  return buf;
}

void save_attention_maps(const std::filesystem::path& dir, const AttentionMapSet& maps) {
  if (maps.poses.size() != maps.maps.size()) throw std::invalid_argument("save_attention_maps: count mismatch");
  if (maps.poses.empty()) throw std::invalid_argument("save_attention_maps: nothing to save");
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["camera_angle_x"] = maps.poses.front().fov_x;
  j["width"] = maps.poses.front().width;
  j["height"] = maps.poses.front().height;
  j["timestep"] = maps.timestep;
  j["poses"] = nlohmann::json::array();
  for (std::size_t i = 0; i < maps.poses.size(); ++i) {
    const CameraPose& p = maps.poses[i];
    if (p.fov_x != maps.poses.front().fov_x || p.width != maps.poses.front().width ||
        p.height != maps.poses.front().height) {
      throw std::invalid_argument("save_attention_maps: poses must share intrinsics");
    }
    j["poses"].push_back({{"index", i}, {"transform_matrix", pose_matrix_json(p.camera_to_world)}});
    save_pfm(dir / attention_map_filename(maps.role, static_cast<int>(i)), maps.maps[i]);
  }
  std::ofstream out(dir / kPoseManifest);
  out << j.dump(2) << '\n';
}

AttentionMapSet load_attention_maps(const std::filesystem::path& dir, AttentionRole role) {
  std::ifstream in(dir / kPoseManifest);
  if (!in) throw std::runtime_error("cannot open " + (dir / kPoseManifest).string());
  const nlohmann::json j = nlohmann::json::parse(in);
  AttentionMapSet set;
  set.role = role;
  set.timestep = j.value("timestep", 0.2);
  for (const auto& entry : j.at("poses")) {
    CameraPose pose;
    pose.camera_to_world = pose_matrix_from_json(entry.at("transform_matrix"));
    pose.fov_x = j.at("camera_angle_x").get<double>();
    pose.width = j.at("width").get<int>();
    pose.height = j.at("height").get<int>();
    validate_pose(pose);
    const int index = entry.at("index").get<int>();
    Image map = load_pfm(dir / attention_map_filename(role, index));
    if (map.channels != 1 || map.width != pose.width || map.height != pose.height) {
      throw std::runtime_error("attention map " + attention_map_filename(role, index) + " does not match its pose");
    }
    set.poses.push_back(pose);
    set.maps.push_back(std::move(map));
  }
  return set;
}

}  // namespace voxedit
