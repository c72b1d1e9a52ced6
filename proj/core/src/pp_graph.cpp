#include <algorithm>
#include <cmath>

#include "ephemera/errors.hpp"
#include "ephemera/parallel.hpp"
#include "ephemera/seed_labels.hpp"
#include "ephemera/voxel_grid.hpp"

namespace ephemera {

std::size_t PPGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : adjacency_) n += adj.size();
  return n / 2;
}

PPGraph build_graph(std::span<const Vec3> points, std::span<const float> tau,
                    const GraphParams& params, unsigned threads) {
  if (tau.size() != points.size()) {
    throw ContractError("build_graph: tau and points differ in length");
  }
  if (params.k == 0 || !(params.max_distance > 0.0)) {
    throw ContractError("build_graph: k must be >= 1 and r' > 0");
  }
  const std::size_t n = points.size();
  // Half-radius cells keep the candidate volume close to the query ball.
  const VoxelGrid grid(points, params.max_distance / 2.0);

  // k nearest neighbours of every point excluding itself, sorted by index.
  std::vector<std::vector<std::uint32_t>> knn(n);
  parallel_for(n, threads, 256, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto nn = grid.knn_within(points[i], params.k + 1, params.max_distance);
      std::erase(nn, static_cast<std::uint32_t>(i));
      if (nn.size() > params.k) nn.resize(params.k);
      std::sort(nn.begin(), nn.end());
      knn[i] = std::move(nn);
    }
  });

  std::vector<std::vector<PPGraph::Edge>> adjacency(n);
  parallel_for(n, threads, 1024, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::uint32_t j : knn[i]) {
        const auto& back = knn[j];
        if (!std::binary_search(back.begin(), back.end(), static_cast<std::uint32_t>(i))) {
          continue;
        }
        adjacency[i].push_back({j, std::abs(tau[i] - tau[j])});
      }
    }
  });
  return PPGraph(std::move(adjacency));
}

}  // namespace ephemera
