#include "topomesh/adjacency.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "topomesh/error.hpp"

namespace topomesh {

int Adjacency::edge_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  const auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(i, j));
  if (it == edges.end() || *it != std::make_pair(i, j)) return -1;
  return static_cast<int>(it - edges.begin());
}

double Adjacency::weight(int i, int j) const {
  const int e = edge_index(i, j);
  return e >= 0 ? edge_weight[static_cast<std::size_t>(e)] : 0.0;
}

Adjacency build_adjacency(const Topology& topo, const std::vector<Vec3>& frame0_positions,
                          double lambda_w) {
  if (static_cast<int>(frame0_positions.size()) != topo.n_v)
    throw ValidationError("frame-0 position count does not match vertex count");
  if (lambda_w < 0.0) throw ValidationError("lambda_w must be >= 0");

  // Undirected edge -> incident faces, in face order.
  std::map<std::pair<int, int>, std::vector<int>> edge_to_faces;
  for (int f = 0; f < topo.n_f; ++f) {
    const QuadFace& q = topo.quad_faces[static_cast<std::size_t>(f)];
    for (int k = 0; k < 4; ++k) {
      const int a = q[k], b = q[(k + 1) % 4];
      edge_to_faces[{std::min(a, b), std::max(a, b)}].push_back(f);
    }
  }

  Adjacency adj;
  adj.one_ring.assign(static_cast<std::size_t>(topo.n_v), {});
  adj.edges.reserve(edge_to_faces.size());
  adj.edge_faces.reserve(edge_to_faces.size());
  adj.edge_weight.reserve(edge_to_faces.size());

  for (const auto& [e, faces] : edge_to_faces) {
    if (faces.size() > 2) {
      std::ostringstream os;
      os << "non-manifold edge (" << e.first << "," << e.second << ") shared by " << faces.size()
         << " faces";
      throw Error(os.str());
    }
    const int idx = static_cast<int>(adj.edges.size());
    adj.edges.push_back(e);
    adj.edge_faces.push_back({faces[0], faces.size() == 2 ? faces[1] : -1});
    if (faces.size() == 2) adj.interior_edges.push_back(idx);

    const double d2 =
        (frame0_positions[static_cast<std::size_t>(e.second)] -
         frame0_positions[static_cast<std::size_t>(e.first)])
            .squaredNorm();
    adj.edge_weight.push_back(std::exp(-lambda_w * d2));

    adj.one_ring[static_cast<std::size_t>(e.first)].push_back(e.second);
    adj.one_ring[static_cast<std::size_t>(e.second)].push_back(e.first);
  }

  for (auto& ring : adj.one_ring) std::sort(ring.begin(), ring.end());
  return adj;
}

double mean_edge_length(const Topology& topo, const std::vector<Vec3>& positions) {
  std::map<std::pair<int, int>, bool> seen;
  double total = 0.0;
  int count = 0;
  for (const QuadFace& q : topo.quad_faces) {
    for (int k = 0; k < 4; ++k) {
      const int a = q[k], b = q[(k + 1) % 4];
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      if (seen.emplace(key, true).second) {
        total += (positions[static_cast<std::size_t>(b)] - positions[static_cast<std::size_t>(a)]).norm();
        ++count;
      }
    }
  }
  return count > 0 ? total / count : 0.0;
}

double default_lambda_w(const Topology& topo, const std::vector<Vec3>& frame0_positions) {
  const double mean = mean_edge_length(topo, frame0_positions);
  return mean > 0.0 ? 1.0 / (mean * mean) : 0.0;
}

}  // namespace topomesh
