#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "stimpute/errors.hpp"

namespace stimpute {

using Vec3 = std::array<double, 3>;

struct MeshGraph {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::size_t, 3>> faces;
  // Sorted neighbor lists derived from faces; symmetric, no self loops.
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t num_nodes() const { return vertices.size(); }
  std::size_t num_edges() const;  // undirected count

  /// Directed edge list sorted by (target, source); both directions present.
  void directed_edges(std::vector<std::size_t>& src, std::vector<std::size_t>& tgt) const;
};

/// Rebuilds adjacency from the face list.
void derive_adjacency(MeshGraph& mesh);

bool is_connected(const MeshGraph& mesh);

/// Unit icosphere via repeated 4-way face subdivision of an icosahedron.
/// Vertex count is 10*4^s + 2.
MeshGraph build_icosphere(unsigned subdivisions);

/// BFS hop distances from a source node.
std::vector<std::size_t> graph_hops(const MeshGraph& mesh, std::size_t source);

void save_mesh_json(const std::filesystem::path& path, const MeshGraph& mesh);
MeshGraph load_mesh_json(const std::filesystem::path& path);

}  // namespace stimpute
