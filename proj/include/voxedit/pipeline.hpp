#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voxedit/attention.hpp"
#include "voxedit/edit.hpp"
#include "voxedit/reconstruct.hpp"
#include "voxedit/segment.hpp"

namespace voxedit {

inline constexpr const char* kVersion = "0.1.0";

/// Every stage's settings. Defaults are the published hyperparameters (160^3 grid, 8000 edit
/// iterations, weight 200, Adam lr 0.03, 266x266 renders, 1500 attention iterations at t = 0.2,
/// sigma 0.1, lambda 5, 300/200 seeds).
struct PipelineConfig {
  std::filesystem::path dataset;         // posed images; reconstruct G_i from these
  std::filesystem::path input_grid;      // or start from an existing G_i
  std::filesystem::path output_dir = ".";
  std::filesystem::path attention_maps;  // stored maps instead of backend queries
  std::string prompt;
  std::string edit_token;
  std::string backend;
  std::uint64_t seed = 0;
  bool skip_refine = false;

  ReconConfig recon;
  EditConfig edit;
  LiftConfig lift;
  SegmentConfig segment;
};

/// Reads the JSON layout written by pipeline_config_to_json; keys under "defaults" override
/// the built-in values, absent keys keep them.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  FeatureGrid initial;
  FeatureGrid edited;
  AttentionGrid attention_edit;
  AttentionGrid attention_object;
  VoxelMask mask;
  FeatureGrid refined;
  std::map<std::string, std::filesystem::path> artifacts;
  std::vector<std::string> warnings;
};

/// reconstruct -> edit -> lift (edit, object) -> segment -> merge, writing every artifact and
/// `manifest.json` into output_dir. A failing stage is reported by name; artifacts written so far
/// stay on disk and the manifest records the failure. `backend` overrides cfg.backend when given.
PipelineResult run_pipeline(const PipelineConfig& cfg, GuidanceBackend* backend = nullptr);

struct TurntableConfig {
  double elevation_deg = 30.0;
  double radius = 3.0;
  double fov_x = 0.8726646259971648;
  int width = 266;
  int height = 266;
  RenderConfig render;
};

/// n_views renders at evenly spaced azimuths (view k at 360 * k / n degrees). Writes
/// `frame_%04d.png` into out_dir unless it is empty.
std::vector<Image> render_turntable(const FeatureGrid& grid, int n_views, const std::filesystem::path& out_dir,
                                    const TurntableConfig& cfg);

}  // namespace voxedit
