#include "voxedit/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boykov_kolmogorov_max_flow.hpp>

namespace voxedit {

LabelProbabilities label_probabilities(const AttentionGrid& attn_edit, const AttentionGrid& attn_object) {
  if (attn_edit.resolution() != attn_object.resolution()) {
    throw std::invalid_argument("label_probabilities: attention grids differ in resolution");
  }
  const std::size_t n = attn_edit.voxel_count();
  LabelProbabilities p;
  p.edit.resize(n);
  p.object.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double a = attn_edit.at(v, channel::kAttention);
    const double b = attn_object.at(v, channel::kAttention);
    const double m = std::max(a, b);
    const double ea = std::exp(a - m);
    const double eb = std::exp(b - m);
    p.edit[v] = ea / (ea + eb);
    p.object[v] = eb / (ea + eb);
  }
  return p;
}

double smoothness_weight(const std::array<double, 3>& cp, const std::array<double, 3>& cq, double sigma) {
  double d2 = 0.0;
  for (int c = 0; c < 3; ++c) d2 += (cp[c] - cq[c]) * (cp[c] - cq[c]);
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

namespace {

// Node indices sorted by descending probability; ties keep the lower voxel index first.
std::vector<std::uint32_t> ranked(const std::vector<std::size_t>& voxels, const std::vector<double>& prob) {
  std::vector<std::uint32_t> order(voxels.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return prob[voxels[a]] > prob[voxels[b]]; });
  return order;
}

}  // namespace

SegGraph build_graph(const FeatureGrid& edited, const LabelProbabilities& probs, const SegmentConfig& cfg) {
  const std::size_t n_vox = edited.voxel_count();
  if (probs.edit.size() != n_vox || probs.object.size() != n_vox) {
    throw std::invalid_argument("build_graph: probabilities do not match the grid");
  }
  if (cfg.sigma <= 0.0 || cfg.lambda < 0.0 || cfg.edit_seeds < 0 || cfg.object_seeds < 0) {
    throw std::invalid_argument("build_graph: invalid configuration");
  }

  SegGraph g;
  g.resolution = edited.resolution();
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> node_of(n_vox, kNone);
  for (std::size_t v = 0; v < n_vox; ++v) {
    if (relu(edited.at(v, channel::kDensity)) > cfg.density_threshold) {
      node_of[v] = static_cast<std::uint32_t>(g.voxels.size());
      g.voxels.push_back(v);
    }
  }
  const std::size_t nodes = g.voxels.size();

  // Seeds.
  const auto by_edit = ranked(g.voxels, probs.edit);
  const auto by_object = ranked(g.voxels, probs.object);
  const auto n_edit = std::min<std::size_t>(static_cast<std::size_t>(cfg.edit_seeds), nodes);
  const auto n_obj = std::min<std::size_t>(static_cast<std::size_t>(cfg.object_seeds), nodes);
  if (n_edit < static_cast<std::size_t>(cfg.edit_seeds) || n_obj < static_cast<std::size_t>(cfg.object_seeds)) {
    g.warnings.push_back("only " + std::to_string(nodes) + " occupied voxels; requested " +
                         std::to_string(cfg.edit_seeds) + " edit and " + std::to_string(cfg.object_seeds) +
                         " object seeds");
  }
  std::vector<std::size_t> edit_rank(nodes, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> obj_rank(nodes, std::numeric_limits<std::size_t>::max());
  for (std::size_t r = 0; r < n_edit; ++r) edit_rank[by_edit[r]] = r;
  for (std::size_t r = 0; r < n_obj; ++r) obj_rank[by_object[r]] = r;
  for (std::size_t r = 0; r < n_edit; ++r) {
    const auto k = by_edit[r];
    if (edit_rank[k] <= obj_rank[k]) g.source_seeds.push_back(k);
  }
  for (std::size_t r = 0; r < n_obj; ++r) {
    const auto k = by_object[r];
    if (obj_rank[k] < edit_rank[k]) g.sink_seeds.push_back(k);
  }

  // 6-neighbourhood smoothness edges (each pair once, toward +x, +y, +z).
  std::vector<std::array<double, 3>> color(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    for (int c = 0; c < 3; ++c) color[k][c] = sigmoid(edited.at(g.voxels[k], channel::kColor + c));
  }
  const int n = edited.resolution();
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::size_t v = g.voxels[k];
    const int x = static_cast<int>(v % static_cast<std::size_t>(n));
    const int y = static_cast<int>((v / static_cast<std::size_t>(n)) % static_cast<std::size_t>(n));
    const int z = static_cast<int>(v / (static_cast<std::size_t>(n) * static_cast<std::size_t>(n)));
    const std::array<std::array<int, 3>, 3> steps{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (const auto& s : steps) {
      const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
      if (nx >= n || ny >= n || nz >= n) continue;
      const std::uint32_t other = node_of[edited.voxel_index(nx, ny, nz)];
      if (other == kNone) continue;
      g.edges.push_back({static_cast<std::uint32_t>(k), other,
                         cfg.lambda * smoothness_weight(color[k], color[other], cfg.sigma)});
    }
  }

  if (cfg.unary == UnaryMode::kSoft) {
    constexpr double kMinProb = 1e-12;
    g.source_capacity.resize(nodes);
    g.sink_capacity.resize(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
      // Cutting source->p labels p object; cutting p->sink labels p edit.
      g.source_capacity[k] = cfg.unary_weight * -std::log(std::max(probs.object[g.voxels[k]], kMinProb));
      g.sink_capacity[k] = cfg.unary_weight * -std::log(std::max(probs.edit[g.voxels[k]], kMinProb));
    }
  }
  return g;
}

namespace {

using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;

struct VertexProps {
  boost::default_color_type color{};
  long distance = 0;
  Traits::edge_descriptor predecessor;
};

struct EdgeProps {
  double capacity = 0.0;
  double residual = 0.0;
  Traits::edge_descriptor reverse;
};

using FlowGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS, VertexProps, EdgeProps>;

void add_pair(FlowGraph& fg, std::size_t a, std::size_t b, double cap_ab, double cap_ba) {
  const auto ab = boost::add_edge(a, b, fg).first;
  const auto ba = boost::add_edge(b, a, fg).first;
  fg[ab].capacity = cap_ab;
  fg[ba].capacity = cap_ba;
  fg[ab].reverse = ba;
  fg[ba].reverse = ab;
}

}  // namespace

CutResult min_cut(const SegGraph& graph) {
  CutResult out;
  out.mask = VoxelMask(graph.resolution > 0 ? graph.resolution : 1);
  const std::size_t nodes = graph.node_count();
  out.node_labels.assign(nodes, 0);
  if (nodes == 0) return out;

  std::vector<double> to_source(nodes, 0.0);
  std::vector<double> to_sink(nodes, 0.0);
  if (!graph.source_capacity.empty()) to_source = graph.source_capacity;
  if (!graph.sink_capacity.empty()) to_sink = graph.sink_capacity;
  for (auto k : graph.source_seeds) to_source.at(k) += kInfiniteCapacity;
  for (auto k : graph.sink_seeds) to_sink.at(k) += kInfiniteCapacity;

  const std::size_t source = nodes;
  const std::size_t sink = nodes + 1;
  FlowGraph fg(nodes + 2);
  for (std::size_t k = 0; k < nodes; ++k) {
    if (to_source[k] > 0.0) add_pair(fg, source, k, to_source[k], 0.0);
    if (to_sink[k] > 0.0) add_pair(fg, k, sink, to_sink[k], 0.0);
  }
  for (const GraphEdge& e : graph.edges) {
    if (e.capacity < 0.0) throw std::invalid_argument("min_cut: negative capacity");
    if (e.a >= nodes || e.b >= nodes) throw std::invalid_argument("min_cut: edge references unknown node");
    add_pair(fg, e.a, e.b, e.capacity, e.capacity);
  }

  out.flow = boost::boykov_kolmogorov_max_flow(
      fg, boost::get(&EdgeProps::capacity, fg), boost::get(&EdgeProps::residual, fg),
      boost::get(&EdgeProps::reverse, fg), boost::get(&VertexProps::predecessor, fg),
      boost::get(&VertexProps::color, fg), boost::get(&VertexProps::distance, fg), boost::get(boost::vertex_index, fg),
      source, sink);

  const auto black = boost::color_traits<boost::default_color_type>::black();
  for (std::size_t k = 0; k < nodes; ++k) {
    out.node_labels[k] = fg[k].color == black ? 1 : 0;
    if (graph.voxels[k] < out.mask.labels.size()) out.mask.labels[graph.voxels[k]] = out.node_labels[k];
  }
  return out;
}

FeatureGrid merge(const FeatureGrid& initial, const FeatureGrid& edited, const VoxelMask& mask) {
  if (!initial.same_shape(edited)) throw std::invalid_argument("merge: grids differ in shape");
  if (mask.resolution != initial.resolution()) throw std::invalid_argument("merge: mask resolution mismatch");
  FeatureGrid out = initial;
  for (std::size_t v = 0; v < out.voxel_count(); ++v) {
    if (mask.labels[v] == 0) continue;
    for (int c = 0; c < FeatureGrid::kChannels; ++c) out.at(v, c) = edited.at(v, c);
  }
  return out;
}

CutResult segment(const FeatureGrid& edited, const AttentionGrid& attn_edit, const AttentionGrid& attn_object,
                  const SegmentConfig& cfg, std::vector<std::string>* warnings) {
  if (attn_edit.resolution() != edited.resolution()) {
    throw std::invalid_argument("segment: attention grid resolution does not match the edited grid");
  }
  const LabelProbabilities probs = label_probabilities(attn_edit, attn_object);
  const SegGraph graph = build_graph(edited, probs, cfg);
  if (warnings) warnings->insert(warnings->end(), graph.warnings.begin(), graph.warnings.end());
  return min_cut(graph);
}

}  // namespace voxedit
