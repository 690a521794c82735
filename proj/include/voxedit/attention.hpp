#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "voxedit/edit.hpp"
#include "voxedit/guidance.hpp"

namespace voxedit {

struct LiftProgress {
  int iteration = 0;
  double loss = 0.0;
};

struct LiftConfig {
  int iterations = 1500;
  double lr = 0.03;
  PoseSampler poses;
  RenderConfig render;
  std::uint64_t seed = 0;
  std::string prompt;
  std::string token;
  /// Diffusion timestep the map producer uses; passed through, not used by the fit.
  double timestep = 0.2;
  float attn_init = 0.0f;
  std::function<void(const LiftProgress&)> progress;
};

/// Pre-computed supervision: one W x H x 1 map per pose.
struct AttentionMapSet {
  AttentionRole role = AttentionRole::kEdit;
  double timestep = 0.2;
  std::vector<CameraPose> poses;
  std::vector<Image> maps;
};

/// Fits the attention channel of a grid whose density is frozen to `edited` channel 0, by L1
/// between rendered luma and the backend's map at a freshly sampled pose each iteration.
AttentionGrid lift_attention(const FeatureGrid& edited, GuidanceBackend& backend, AttentionRole role,
                             const LiftConfig& cfg);

/// Same fit against stored maps, visiting them in a seeded shuffled order.
AttentionGrid lift_attention(const FeatureGrid& edited, const AttentionMapSet& maps, const LiftConfig& cfg);

std::string attention_map_filename(AttentionRole role, int pose_index);

/// Writes `att_<role>_pose_%04d.pfm` files and `att_poses.json` listing the poses.
void save_attention_maps(const std::filesystem::path& dir, const AttentionMapSet& maps);
AttentionMapSet load_attention_maps(const std::filesystem::path& dir, AttentionRole role);

}  // namespace voxedit
