#include "voxedit/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <png.h>

#include "binary_io.hpp"

namespace voxedit {

void write_pfm(std::ostream& out, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("PFM supports 1 or 3 channels");
  out << (image.channels == 3 ? "PF" : "Pf") << '\n' << image.width << ' ' << image.height << '\n' << "-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(image.width) * image.channels);
  for (int y = image.height - 1; y >= 0; --y) {
    const auto* src = image.data.data() + static_cast<std::size_t>(y) * row.size();
    std::transform(src, src + row.size(), row.begin(), [](double v) { return static_cast<float>(v); });
    detail::write_f32_array_le(out, row);
  }
  if (!out) throw std::runtime_error("failed writing PFM");
}

Image read_pfm(std::istream& in) {
  std::string tag;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> tag >> w >> h >> scale;
  if (!in || (tag != "PF" && tag != "Pf")) throw std::runtime_error("not a PFM stream");
  if (w <= 0 || h <= 0 || w > 65536 || h > 65536) throw std::runtime_error("invalid PFM dimensions");
  if (scale >= 0.0) throw std::runtime_error("big-endian PFM is not supported");
  in.get();  // single whitespace byte before the payload
  Image img(w, h, tag == "PF" ? 3 : 1);
  std::vector<float> row(static_cast<std::size_t>(w) * img.channels);
  for (int y = h - 1; y >= 0; --y) {
    detail::read_f32_array_le(in, row, "PFM payload");
    std::copy(row.begin(), row.end(), img.data.begin() + static_cast<std::ptrdiff_t>(y * row.size()));
  }
  return img;
}

void save_pfm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_pfm(out, image);
}

Image load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_pfm(in);
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("PNG export supports 1 or 3 channels");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), [](double v) {
    return static_cast<png_byte>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  });
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw std::runtime_error("failed writing " + path.string() + ": " + png.message);
  }
}

Image load_png_rgb(const std::filesystem::path& path, double background) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error("cannot read " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&png);
    throw std::runtime_error("cannot decode " + path.string() + ": " + png.message);
  }
  Image img(static_cast<int>(png.width), static_cast<int>(png.height), 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double a = bytes[i * 4 + 3] / 255.0;
    for (int c = 0; c < 3; ++c) {
      img.data[i * 3 + c] = bytes[i * 4 + c] / 255.0 * a + background * (1.0 - a);
    }
  }
  return img;
}

Image load_image(const std::filesystem::path& path, double background) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return load_pfm(path);
  if (ext == ".png") return load_png_rgb(path, background);
  throw std::runtime_error("unsupported image format: " + path.string());
}

double mean_squared_error(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw std::invalid_argument("image dimensions differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace voxedit
