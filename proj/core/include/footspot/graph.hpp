#pragma once

#include <utility>
#include <vector>

#include "footspot/data_model.hpp"

namespace footspot {

inline constexpr int kNodeFeatureDim = 5;       // x_norm, y_norm, one-hot A/B/ball
inline constexpr double kEdgeThresholdM = 25.0;

// Proximity graph over one frame's entities. Node order follows entity
// order in the frame; features and the normalized adjacency are row-major.
struct FrameGraph {
  int n_nodes = 0;
  std::vector<double> features;              // n_nodes x kNodeFeatureDim
  std::vector<std::pair<int, int>> edges;    // undirected, u < v
  std::vector<double> norm_adjacency;        // n_nodes x n_nodes
};

// Pitch-relative coordinates clamped to [-0.5, 0.5].
std::pair<double, double> normalize_position(double x_m, double y_m,
                                             double pitch_length_m,
                                             double pitch_width_m);

// Symmetric normalization D^-1/2 (A + I) D^-1/2 of a dense 0/1 adjacency
// with self-loops already added; exposed separately for testing.
std::vector<double> degree_normalize(const std::vector<double>& adj_with_loops,
                                     int n);

// Edges connect entities strictly closer than threshold metres in real
// coordinates (ball included). An empty frame yields an empty graph.
FrameGraph build_graph(const TrackedFrame& frame, double pitch_length_m,
                       double pitch_width_m, double edge_threshold_m = kEdgeThresholdM);

// One-line JSON dump (nodes, edges, features) for debugging.
std::string graph_to_json(const FrameGraph& graph);

}  // namespace footspot
