#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "voxedit/grid.hpp"
#include "voxedit/mask.hpp"

namespace voxedit {

// "VOXE" grid files: magic, u32 version (1), u32 N, u32 channel count, 6 x f32 bounds (min xyz, max xyz),
// then N^3 * channels f32 in voxel order. All little-endian.
// "VOXM" mask files: magic, u32 version (1), u32 N, then N^3 bytes of 0/1.

inline constexpr std::uint32_t kGridFormatVersion = 1;

struct GridHeader {
  std::uint32_t version = kGridFormatVersion;
  std::uint32_t resolution = 0;
  std::uint32_t channels = 0;
  Bounds bounds;
};

GridHeader read_grid_header(std::istream& in);

void write_grid(std::ostream& out, const FeatureGrid& grid);
void write_grid(std::ostream& out, const AttentionGrid& grid);
FeatureGrid read_feature_grid(std::istream& in);
AttentionGrid read_attention_grid(std::istream& in);

void save_grid(const std::filesystem::path& path, const FeatureGrid& grid);
void save_grid(const std::filesystem::path& path, const AttentionGrid& grid);
FeatureGrid load_feature_grid(const std::filesystem::path& path);
AttentionGrid load_attention_grid(const std::filesystem::path& path);

void write_mask(std::ostream& out, const VoxelMask& mask);
VoxelMask read_mask(std::istream& in);
void save_mask(const std::filesystem::path& path, const VoxelMask& mask);
VoxelMask load_mask(const std::filesystem::path& path);

}  // namespace voxedit
