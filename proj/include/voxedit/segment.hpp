#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "voxedit/grid.hpp"
#include "voxedit/mask.hpp"

namespace voxedit {

/// Activated density above which a voxel counts as occupied (graph node).
inline constexpr double kDensityThreshold = 1e-2;
/// Terminal capacity used for hard seeds.
inline constexpr double kInfiniteCapacity = 1e9;

struct LabelProbabilities {
  std::vector<double> edit;    // P_e per voxel
  std::vector<double> object;  // P_obj per voxel
};

/// Per-voxel two-way softmax of the raw attention features of A_e and A_obj.
LabelProbabilities label_probabilities(const AttentionGrid& attn_edit, const AttentionGrid& attn_object);

enum class UnaryMode {
  kSeeds,  // only the top-ranked voxels are tied to the terminals
  kSoft,   // additionally every node gets lambda_u * (-log P) terminal capacities
};

struct SegmentConfig {
  double sigma = 0.1;
  double lambda = 5.0;
  int edit_seeds = 300;
  int object_seeds = 200;
  UnaryMode unary = UnaryMode::kSeeds;
  double unary_weight = 1.0;
  double density_threshold = kDensityThreshold;
};

struct GraphEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double capacity = 0.0;  // symmetric
};

/// s-t graph over occupied voxels. Node k stands for voxel `voxels[k]`.
struct SegGraph {
  int resolution = 0;
  std::vector<std::size_t> voxels;
  std::vector<std::uint32_t> source_seeds;  // edit
  std::vector<std::uint32_t> sink_seeds;    // object
  std::vector<GraphEdge> edges;
  /// Optional soft terminal capacities, one per node (empty when unused).
  std::vector<double> source_capacity;
  std::vector<double> sink_capacity;
  std::vector<std::string> warnings;

  std::size_t node_count() const { return voxels.size(); }
};

/// exp(-|c_p - c_q|^2 / (2 sigma^2)) on activated RGB.
double smoothness_weight(const std::array<double, 3>& cp, const std::array<double, 3>& cq, double sigma);

SegGraph build_graph(const FeatureGrid& edited, const LabelProbabilities& probs, const SegmentConfig& cfg);

struct CutResult {
  VoxelMask mask;
  std::vector<std::uint8_t> node_labels;  // 1 = source side (edit)
  double flow = 0.0;
};

/// Max-flow / min-cut; the source side is labelled edit. Voxels outside the graph stay 0.
CutResult min_cut(const SegGraph& graph);

/// Per voxel, all channels: the edited grid where the mask is set, the initial grid elsewhere.
FeatureGrid merge(const FeatureGrid& initial, const FeatureGrid& edited, const VoxelMask& mask);

/// label_probabilities -> build_graph -> min_cut.
CutResult segment(const FeatureGrid& edited, const AttentionGrid& attn_edit, const AttentionGrid& attn_object,
                  const SegmentConfig& cfg, std::vector<std::string>* warnings = nullptr);

}  // namespace voxedit
