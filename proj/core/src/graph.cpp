#include "footspot/graph.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace footspot {

std::pair<double, double> normalize_position(double x_m, double y_m,
                                             double pitch_length_m,
                                             double pitch_width_m) {
  const double x = std::clamp(x_m / pitch_length_m, -0.5, 0.5);
  const double y = std::clamp(y_m / pitch_width_m, -0.5, 0.5);
  return {x, y};
}

std::vector<double> degree_normalize(const std::vector<double>& adj_with_loops, int n) {
  std::vector<double> inv_sqrt_deg(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) {
      deg += adj_with_loops[static_cast<size_t>(i * n + j)];
    }
    inv_sqrt_deg[static_cast<size_t>(i)] = 1.0 / std::sqrt(deg);  // deg >= 1 via self-loop
  }
  std::vector<double> out(adj_with_loops.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<size_t>(i * n + j)] =
          adj_with_loops[static_cast<size_t>(i * n + j)] *
          inv_sqrt_deg[static_cast<size_t>(i)] * inv_sqrt_deg[static_cast<size_t>(j)];
    }
  }
  return out;
}

FrameGraph build_graph(const TrackedFrame& frame, double pitch_length_m,
                       double pitch_width_m, double edge_threshold_m) {
  FrameGraph g;
  g.n_nodes = static_cast<int>(frame.entities.size());
  const int n = g.n_nodes;
  if (n == 0) {
    return g;
  }
  g.features.resize(static_cast<size_t>(n) * kNodeFeatureDim, 0.0);
  for (int i = 0; i < n; ++i) {
    const EntityObservation& e = frame.entities[static_cast<size_t>(i)];
    const auto [x, y] = normalize_position(e.x_m, e.y_m, pitch_length_m, pitch_width_m);
    double* row = g.features.data() + static_cast<size_t>(i) * kNodeFeatureDim;
    row[0] = x;
    row[1] = y;
    row[2 + static_cast<int>(e.kind)] = 1.0;
  }
  std::vector<double> adj(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    adj[static_cast<size_t>(i * n + i)] = 1.0;
  }
  const double thr_sq = edge_threshold_m * edge_threshold_m;
  for (int u = 0; u < n; ++u) {
    const EntityObservation& a = frame.entities[static_cast<size_t>(u)];
    for (int v = u + 1; v < n; ++v) {
      const EntityObservation& b = frame.entities[static_cast<size_t>(v)];
      const double dx = a.x_m - b.x_m;
      const double dy = a.y_m - b.y_m;
      if (dx * dx + dy * dy < thr_sq) {  // strict inequality at the threshold
        g.edges.emplace_back(u, v);
        adj[static_cast<size_t>(u * n + v)] = 1.0;
        adj[static_cast<size_t>(v * n + u)] = 1.0;
      }
    }
  }
  g.norm_adjacency = degree_normalize(adj, n);
  return g;
}

std::string graph_to_json(const FrameGraph& graph) {
  nlohmann::ordered_json j;
  j["n_nodes"] = graph.n_nodes;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& [u, v] : graph.edges) {
    edges.push_back({u, v});
  }
  j["edges"] = std::move(edges);
  j["features"] = graph.features;
  return j.dump();
}

}  // namespace footspot
