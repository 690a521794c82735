// Shared fixtures and hand-rolled generators for the test binaries.
#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "voxedit/camera.hpp"
#include "voxedit/dataset.hpp"
#include "voxedit/grid.hpp"
#include "voxedit/image.hpp"
#include "voxedit/mask.hpp"
#include "voxedit/render.hpp"
#include "voxedit/segment.hpp"

namespace testing {

using namespace voxedit;

inline constexpr double kPi = 3.14159265358979323846;

template <int C>
Grid<C> random_grid(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0, Bounds b = {}) {
  Grid<C> g(n, b, 0.0f);
  std::uniform_real_distribution<double> u(lo, hi);
  for (float& f : g.data()) f = static_cast<float>(u(rng));
  return g;
}

// Density channel strictly positive so no ReLU kink sits near a sample.
inline FeatureGrid random_positive_grid(std::mt19937_64& rng, int n, double dmin, double dmax) {
  FeatureGrid g = random_grid<4>(rng, n, -1.5, 1.5);
  std::uniform_real_distribution<double> d(dmin, dmax);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) g.at(v, channel::kDensity) = static_cast<float>(d(rng));
  return g;
}

inline VoxelMask random_mask(std::mt19937_64& rng, int n) {
  VoxelMask m(n);
  std::bernoulli_distribution b(0.5);
  for (auto& l : m.labels) l = b(rng) ? 1 : 0;
  return m;
}

inline Vec3 random_point(std::mt19937_64& rng, const Bounds& b, double margin = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    const double lo = b.min[i] + margin, hi = b.max[i] - margin;
    p[i] = lo + (hi - lo) * u(rng);
  }
  return p;
}

inline CameraPose random_orbit(std::mt19937_64& rng, int size, double radius = 3.0) {
  std::uniform_real_distribution<double> az(0.0, 2.0 * kPi), el(-1.2, 1.2);
  return orbit_pose(Vec3::Zero(), radius, az(rng), el(rng), 0.8726646259971648, size, size);
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int c, double lo = -1.0, double hi = 1.0) {
  Image img(w, h, c);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : img.data) v = u(rng);
  return img;
}

// Ring of views around the origin, alternating elevation so the grid is seen from above and below.
inline Dataset render_ring(const FeatureGrid& grid, int n_views, int size, const RenderConfig& cfg,
                           double azimuth_offset = 0.0) {
  Dataset ds;
  for (int k = 0; k < n_views; ++k) {
    const double az = azimuth_offset + 2.0 * kPi * k / n_views;
    const double el = (k % 3 - 1) * 0.55;
    const CameraPose pose = orbit_pose(Vec3::Zero(), 3.0, az, el, 0.8726646259971648, size, size);
    ds.views.push_back({render(grid, pose, cfg).rgb, pose});
  }
  return ds;
}

// Central difference of sum(upstream * render(grid)) w.r.t. one raw feature. The divisor is the
// step actually taken after float rounding.
template <int C, typename RenderFn>
double fd_feature(Grid<C>& grid, std::size_t voxel, int ch, double h, const Image& upstream, RenderFn&& render_fn) {
  const float orig = grid.at(voxel, ch);
  grid.at(voxel, ch) = static_cast<float>(orig + h);
  const float up_val = grid.at(voxel, ch);
  const Image fp = render_fn(grid);
  grid.at(voxel, ch) = static_cast<float>(orig - h);
  const float down_val = grid.at(voxel, ch);
  const Image fm = render_fn(grid);
  grid.at(voxel, ch) = orig;
  double acc = 0.0;
  for (std::size_t i = 0; i < upstream.data.size(); ++i) acc += upstream.data[i] * (fp.data[i] - fm.data[i]);
  return acc / (static_cast<double>(up_val) - static_cast<double>(down_val));
}

// Energy of a labelling (1 = source side): cut pairwise edges plus soft terminal terms.
// Seeds are handled by the caller.
inline double labelling_cost(const SegGraph& g, const std::vector<std::uint8_t>& labels) {
  double cost = 0.0;
  for (const GraphEdge& e : g.edges)
    if (labels[e.a] != labels[e.b]) cost += e.capacity;
  for (std::size_t k = 0; k < g.source_capacity.size(); ++k) cost += labels[k] ? 0.0 : g.source_capacity[k];
  for (std::size_t k = 0; k < g.sink_capacity.size(); ++k) cost += labels[k] ? g.sink_capacity[k] : 0.0;
  return cost;
}

// Exhaustive minimum over all labellings that respect the seeds.
inline double brute_force_min_cut(const SegGraph& g) {
  const std::size_t n = g.node_count();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> labels(n);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    for (std::size_t k = 0; k < n; ++k) labels[k] = (bits >> k) & 1;
    bool ok = true;
    for (auto s : g.source_seeds) ok = ok && labels[s] == 1;
    for (auto s : g.sink_seeds) ok = ok && labels[s] == 0;
    if (ok) best = std::min(best, labelling_cost(g, labels));
  }
  return best;
}

// Random graph over the first n voxels of a resolution-3 grid with dyadic capacities, so the
// cost sums are exact in double.
inline SegGraph random_seg_graph(std::mt19937_64& rng, std::size_t n, bool soft) {
  SegGraph g;
  g.resolution = 3;
  for (std::size_t k = 0; k < n; ++k) g.voxels.push_back(k);
  std::uniform_int_distribution<int> cap(0, 64);
  std::bernoulli_distribution edge(0.4), seed(0.15);
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = a + 1; b < n; ++b)
      if (edge(rng)) g.edges.push_back({a, b, cap(rng) / 8.0});
  for (std::uint32_t k = 0; k < n; ++k) {
    if (!seed(rng)) continue;
    (rng() & 1 ? g.source_seeds : g.sink_seeds).push_back(k);
  }
  if (soft) {
    for (std::size_t k = 0; k < n; ++k) {
      g.source_capacity.push_back(cap(rng) / 16.0);
      g.sink_capacity.push_back(cap(rng) / 16.0);
    }
  }
  return g;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("voxedit_" + tag + "_" + std::to_string(rng() % 1000000007));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline bool close_rel(double a, double b, double rel, double abs_tol) {
  return std::abs(a - b) <= abs_tol + rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace testing
