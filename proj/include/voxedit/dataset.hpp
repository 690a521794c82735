#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voxedit/camera.hpp"
#include "voxedit/image.hpp"

namespace voxedit {

struct View {
  Image image;  // 3-channel RGB in [0,1]
  CameraPose pose;
};

/// Posed images sharing intrinsics and dimensions.
struct Dataset {
  std::vector<View> views;
};

/// Throws std::invalid_argument if empty, if dimensions differ, or if a pose is invalid.
void validate_dataset(const Dataset& dataset);

nlohmann::json pose_matrix_json(const Mat4& m);
Mat4 pose_matrix_from_json(const nlohmann::json& j);

/// Reads a NeRF-synthetic style manifest: `camera_angle_x` plus `frames[]` of
/// {file_path, transform_matrix (4x4 row-major camera-to-world)}. A file_path without extension
/// is resolved as .png, then .pfm. RGBA images are composited over `background`.
Dataset load_dataset(const std::filesystem::path& dir, const std::string& manifest = "transforms.json",
                     double background = 1.0);

enum class ImageFormat { kPng, kPfm };

/// Writes images as `r_%d.png|.pfm` plus the manifest into `dir`.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset, ImageFormat format = ImageFormat::kPfm,
                  const std::string& manifest = "transforms.json");

}  // namespace voxedit
