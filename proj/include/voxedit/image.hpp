#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace voxedit {

/// Row-major image, top row first, channels interleaved. Values are linear floats.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0) : width(w), height(h), channels(c) {
    if (w <= 0 || h <= 0 || c <= 0) throw std::invalid_argument("image dimensions must be positive");
    data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill);
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  bool same_dims(const Image& o) const { return width == o.width && height == o.height && channels == o.channels; }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Renderer output: RGB plus accumulated opacity per pixel.
struct RenderedImage {
  Image rgb;
  Image opacity;
};

// PFM: header "PF" (3 channels) or "Pf" (1 channel), "width height", scale -1.0 (little-endian),
// then float32 rows stored bottom-up.
void write_pfm(std::ostream& out, const Image& image);
Image read_pfm(std::istream& in);
void save_pfm(const std::filesystem::path& path, const Image& image);
Image load_pfm(const std::filesystem::path& path);

/// 8-bit PNG, value = round(255 * clamp(linear, 0, 1)). Accepts 1 or 3 channel images.
void save_png(const std::filesystem::path& path, const Image& image);
/// Loads as 3-channel RGB in [0,1]; an alpha channel is composited over `background`.
Image load_png_rgb(const std::filesystem::path& path, double background = 1.0);

/// Dispatch on extension (.pfm or .png).
Image load_image(const std::filesystem::path& path, double background = 1.0);

double mean_squared_error(const Image& a, const Image& b);
/// Peak signal-to-noise ratio for signals in [0,1].
double psnr(const Image& a, const Image& b);

}  // namespace voxedit
