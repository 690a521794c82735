#include "voxedit/grid_io.hpp"

#include <array>
#include <fstream>
#include <limits>

#include "binary_io.hpp"

namespace voxedit {

namespace {

constexpr std::array<char, 4> kGridMagic{'V', 'O', 'X', 'E'};
constexpr std::array<char, 4> kMaskMagic{'V', 'O', 'X', 'M'};
constexpr std::uint32_t kMaxResolution = 4096;

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  detail::read_exact(in, got.data(), got.size(), "header");
  if (got != magic) throw std::runtime_error("bad magic, expected " + std::string(magic.begin(), magic.end()));
}

template <int C>
void write_grid_impl(std::ostream& out, const Grid<C>& grid) {
  out.write(kGridMagic.data(), kGridMagic.size());
  detail::write_u32_le(out, kGridFormatVersion);
  detail::write_u32_le(out, static_cast<std::uint32_t>(grid.resolution()));
  detail::write_u32_le(out, static_cast<std::uint32_t>(C));
  for (int i = 0; i < 3; ++i) detail::write_f32_le(out, static_cast<float>(grid.bounds().min[i]));
  for (int i = 0; i < 3; ++i) detail::write_f32_le(out, static_cast<float>(grid.bounds().max[i]));
  detail::write_f32_array_le(out, grid.data());
  if (!out) throw std::runtime_error("failed writing grid");
}

template <int C>
Grid<C> read_grid_impl(std::istream& in) {
  const GridHeader h = read_grid_header(in);
  if (h.channels != static_cast<std::uint32_t>(C)) {
    throw std::runtime_error("grid has " + std::to_string(h.channels) + " channels, expected " + std::to_string(C));
  }
  Grid<C> grid(static_cast<int>(h.resolution), h.bounds);
  detail::read_f32_array_le(in, grid.data(), "grid payload");
  return grid;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

GridHeader read_grid_header(std::istream& in) {
  expect_magic(in, kGridMagic);
  GridHeader h;
  h.version = detail::read_u32_le(in, "header");
  if (h.version != kGridFormatVersion) throw std::runtime_error("unsupported grid version " + std::to_string(h.version));
  h.resolution = detail::read_u32_le(in, "header");
  h.channels = detail::read_u32_le(in, "header");
  if (h.resolution == 0 || h.resolution > kMaxResolution) throw std::runtime_error("invalid grid resolution");
  for (int i = 0; i < 3; ++i) h.bounds.min[i] = detail::read_f32_le(in, "header");
  for (int i = 0; i < 3; ++i) h.bounds.max[i] = detail::read_f32_le(in, "header");
  return h;
}

void write_grid(std::ostream& out, const FeatureGrid& grid) { write_grid_impl(out, grid); }
void write_grid(std::ostream& out, const AttentionGrid& grid) { write_grid_impl(out, grid); }
FeatureGrid read_feature_grid(std::istream& in) { return read_grid_impl<4>(in); }
AttentionGrid read_attention_grid(std::istream& in) { return read_grid_impl<2>(in); }

void save_grid(const std::filesystem::path& path, const FeatureGrid& grid) {
  auto out = open_out(path);
  write_grid(out, grid);
}
void save_grid(const std::filesystem::path& path, const AttentionGrid& grid) {
  auto out = open_out(path);
  write_grid(out, grid);
}
FeatureGrid load_feature_grid(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_feature_grid(in);
}
AttentionGrid load_attention_grid(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_attention_grid(in);
}

void write_mask(std::ostream& out, const VoxelMask& mask) {
  out.write(kMaskMagic.data(), kMaskMagic.size());
  detail::write_u32_le(out, kGridFormatVersion);
  detail::write_u32_le(out, static_cast<std::uint32_t>(mask.resolution));
  out.write(reinterpret_cast<const char*>(mask.labels.data()), static_cast<std::streamsize>(mask.labels.size()));
  if (!out) throw std::runtime_error("failed writing mask");
}

VoxelMask read_mask(std::istream& in) {
  expect_magic(in, kMaskMagic);
  const auto version = detail::read_u32_le(in, "mask header");
  if (version != kGridFormatVersion) throw std::runtime_error("unsupported mask version " + std::to_string(version));
  const auto n = detail::read_u32_le(in, "mask header");
  if (n == 0 || n > kMaxResolution) throw std::runtime_error("invalid mask resolution");
  VoxelMask mask(static_cast<int>(n));
  detail::read_exact(in, mask.labels.data(), mask.labels.size(), "mask payload");
  for (auto l : mask.labels) {
    if (l > 1) throw std::runtime_error("mask labels must be 0 or 1");
  }
  return mask;
}

void save_mask(const std::filesystem::path& path, const VoxelMask& mask) {
  auto out = open_out(path);
  write_mask(out, mask);
}

VoxelMask load_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mask(in);
}

}  // namespace voxedit
