#include "voxedit/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace voxedit {

void validate_dataset(const Dataset& dataset) {
  if (dataset.views.empty()) throw std::invalid_argument("dataset is empty");
  const Image& first = dataset.views.front().image;
  for (const View& v : dataset.views) {
    if (v.image.channels != 3) throw std::invalid_argument("dataset images must be RGB");
    if (v.image.width != first.width || v.image.height != first.height) {
      throw std::invalid_argument("dataset images differ in size");
    }
    if (v.pose.width != v.image.width || v.pose.height != v.image.height) {
      throw std::invalid_argument("pose image size does not match its image");
    }
    validate_pose(v.pose);
  }
}

nlohmann::json pose_matrix_json(const Mat4& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Mat4 pose_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw std::runtime_error("transform_matrix must be 4x4");
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) throw std::runtime_error("transform_matrix must be 4x4");
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& manifest, double background) {
  std::ifstream in(dir / manifest);
  if (!in) throw std::runtime_error("cannot open " + (dir / manifest).string());
  const nlohmann::json j = nlohmann::json::parse(in);
  const double fov = j.at("camera_angle_x").get<double>();
  Dataset ds;
  for (const auto& frame : j.at("frames")) {
    std::filesystem::path file = dir / frame.at("file_path").get<std::string>();
    if (!file.has_extension() || (file.extension() != ".png" && file.extension() != ".pfm")) {
      std::filesystem::path png = file;
      png += ".png";
      std::filesystem::path pfm = file;
      pfm += ".pfm";
      file = std::filesystem::exists(png) ? png : pfm;
    }
    View v;
    v.image = load_image(file, background);
    if (v.image.channels == 1) throw std::runtime_error("dataset image is single-channel: " + file.string());
    v.pose.camera_to_world = pose_matrix_from_json(frame.at("transform_matrix"));
    v.pose.fov_x = fov;
    v.pose.width = v.image.width;
    v.pose.height = v.image.height;
    ds.views.push_back(std::move(v));
  }
  validate_dataset(ds);
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset, ImageFormat format,
                  const std::string& manifest) {
  validate_dataset(dataset);
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["camera_angle_x"] = dataset.views.front().pose.fov_x;
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.views.size(); ++i) {
    const View& v = dataset.views[i];
    const std::string name = "r_" + std::to_string(i) + (format == ImageFormat::kPng ? ".png" : ".pfm");
    if (format == ImageFormat::kPng) {
      save_png(dir / name, v.image);
    } else {
      save_pfm(dir / name, v.image);
    }
    j["frames"].push_back({{"file_path", name}, {"transform_matrix", pose_matrix_json(v.pose.camera_to_world)}});
  }
  std::ofstream out(dir / manifest);
  out << j.dump(2) << '\n';
}

}  // namespace voxedit
