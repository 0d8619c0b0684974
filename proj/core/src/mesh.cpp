#include "stimpute/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace stimpute {

std::size_t MeshGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& nb : adjacency) total += nb.size();
  return total / 2;
}

void MeshGraph::directed_edges(std::vector<std::size_t>& src, std::vector<std::size_t>& tgt) const {
  src.clear();
  tgt.clear();
  for (std::size_t i = 0; i < adjacency.size(); ++i)
    for (std::size_t j : adjacency[i]) {
      tgt.push_back(i);
      src.push_back(j);
    }
}

void derive_adjacency(MeshGraph& mesh) {
  std::vector<std::set<std::size_t>> nb(mesh.vertices.size());
  for (const auto& f : mesh.faces) {
    for (int a = 0; a < 3; ++a) {
      std::size_t u = f[a], v = f[(a + 1) % 3];
      if (u == v) throw shape_error("degenerate face");
      nb[u].insert(v);
      nb[v].insert(u);
    }
  }
  mesh.adjacency.assign(mesh.vertices.size(), {});
  for (std::size_t i = 0; i < nb.size(); ++i)
    mesh.adjacency[i].assign(nb[i].begin(), nb[i].end());
}

bool is_connected(const MeshGraph& mesh) {
  if (mesh.num_nodes() == 0) return false;
  auto hops = graph_hops(mesh, 0);
  return std::all_of(hops.begin(), hops.end(),
                     [](std::size_t h) { return h != static_cast<std::size_t>(-1); });
}

std::vector<std::size_t> graph_hops(const MeshGraph& mesh, std::size_t source) {
  std::vector<std::size_t> dist(mesh.num_nodes(), static_cast<std::size_t>(-1));
  std::deque<std::size_t> q{source};
  dist[source] = 0;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop_front();
    for (std::size_t v : mesh.adjacency[u])
      if (dist[v] == static_cast<std::size_t>(-1)) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

namespace {
Vec3 normalized(const Vec3& v) {
  double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}
}  // namespace

MeshGraph build_icosphere(unsigned subdivisions) {
  if (subdivisions > 6) throw usage_error("icosphere: subdivisions > 6");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  MeshGraph mesh;
  mesh.vertices = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : mesh.vertices) v = normalized(v);
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (unsigned s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
    auto mid = [&](std::size_t a, std::size_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Vec3& va = mesh.vertices[a];
      const Vec3& vb = mesh.vertices[b];
      mesh.vertices.push_back(normalized(
          {(va[0] + vb[0]) / 2, (va[1] + vb[1]) / 2, (va[2] + vb[2]) / 2}));
      std::size_t idx = mesh.vertices.size() - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::size_t, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      std::size_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  derive_adjacency(mesh);
  return mesh;
}

void save_mesh_json(const std::filesystem::path& path, const MeshGraph& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back({v[0], v[1], v[2]});
  j["faces"] = nlohmann::json::array();
  for (const auto& f : mesh.faces) j["faces"].push_back({f[0], f[1], f[2]});
  std::ofstream os(path);
  if (!os) throw io_error("cannot write mesh: " + path.string());
  os << j.dump(2) << "\n";
}

MeshGraph load_mesh_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open mesh: " + path.string());
  nlohmann::json j;
  is >> j;
  MeshGraph mesh;
  for (const auto& v : j.at("vertices"))
    mesh.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
  for (const auto& f : j.at("faces"))
    mesh.faces.push_back({f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>(),
                          f.at(2).get<std::size_t>()});
  derive_adjacency(mesh);
  return mesh;
}

}  // namespace stimpute
