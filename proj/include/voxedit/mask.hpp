#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace voxedit {

/// Binary per-voxel labels, 1 = edit, 0 = keep. Same voxel order as the grids.
struct VoxelMask {
  int resolution = 0;
  std::vector<std::uint8_t> labels;

  VoxelMask() = default;
  explicit VoxelMask(int n, std::uint8_t fill = 0) : resolution(n) {
    if (n <= 0) throw std::invalid_argument("mask resolution must be positive");
    const auto s = static_cast<std::size_t>(n);
    labels.assign(s * s * s, fill);
  }

  std::size_t voxel_count() const { return labels.size(); }
  std::size_t count_set() const {
    std::size_t c = 0;
    for (auto l : labels) c += l != 0;
    return c;
  }

  friend bool operator==(const VoxelMask&, const VoxelMask&) = default;
};

}  // namespace voxedit
