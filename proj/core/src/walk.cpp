#include "stimpute/walk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "stimpute/kmeans.hpp"

namespace stimpute {

namespace {
double dist(const Vec3& a, const Vec3& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 lerp(const Vec3& a, const Vec3& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}
}  // namespace

PatchSet make_patches(const MeshGraph& mesh, double area_fraction, unsigned overlap_level,
                      std::uint64_t seed) {
  if (!(area_fraction > 0.0 && area_fraction <= 1.0))
    throw usage_error("make_patches: area fraction outside (0,1]");
  std::size_t p = static_cast<std::size_t>(std::ceil(1.0 / area_fraction - 1e-9));
  if (p > mesh.num_nodes()) throw config_error("make_patches: more patches than nodes");

  auto km = kmeans3d(mesh.vertices, p, seed);
  PatchSet ps;
  ps.base_count = p;
  ps.base_assignment = km.assignment;
  ps.members.assign(p, {});
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) ps.members[km.assignment[i]].push_back(i);
  ps.centroids = km.centroids;

  if (overlap_level > 0 && p > 1) {
    // base patches are adjacent iff some mesh edge crosses them
    std::set<std::pair<std::size_t, std::size_t>> adj;
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
      for (std::size_t j : mesh.adjacency[i]) {
        std::size_t a = km.assignment[i], b = km.assignment[j];
        if (a != b) adj.insert(std::minmax(a, b));
      }
    for (const auto& [a, b] : adj) {
      std::vector<std::size_t> pool;
      pool.insert(pool.end(), ps.members[a].begin(), ps.members[a].end());
      pool.insert(pool.end(), ps.members[b].begin(), ps.members[b].end());
      std::size_t take = std::max<std::size_t>(
          1, (ps.members[a].size() + ps.members[b].size()) / (2 + overlap_level));
      for (unsigned s = 1; s <= overlap_level; ++s) {
        double t = static_cast<double>(s) / (overlap_level + 1);
        Vec3 anchor = lerp(ps.centroids[a], ps.centroids[b], t);
        std::vector<std::size_t> sorted = pool;
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t x, std::size_t y) {
          return dist(mesh.vertices[x], anchor) < dist(mesh.vertices[y], anchor);
        });
        sorted.resize(std::min(take, sorted.size()));
        std::sort(sorted.begin(), sorted.end());
        Vec3 c = {0, 0, 0};
        for (std::size_t v : sorted)
          for (int ax = 0; ax < 3; ++ax) c[ax] += mesh.vertices[v][ax];
        for (int ax = 0; ax < 3; ++ax) c[ax] /= static_cast<double>(sorted.size());
        ps.members.push_back(std::move(sorted));
        ps.centroids.push_back(c);
      }
    }
  }
  return ps;
}

namespace {
std::vector<std::size_t> draw_cycle(const PatchSet& patches, std::mt19937_64& rng) {
  std::size_t p = patches.members.size();
  std::vector<std::size_t> remaining(p);
  for (std::size_t i = 0; i < p; ++i) remaining[i] = i;
  std::vector<std::size_t> cycle;
  cycle.reserve(p);
  std::uniform_int_distribution<std::size_t> first(0, p - 1);
  std::size_t cur = first(rng);
  cycle.push_back(cur);
  remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(cur));
  while (!remaining.empty()) {
    std::vector<double> w(remaining.size());
    double total = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      w[i] = dist(patches.centroids[cur], patches.centroids[remaining[i]]);
      total += w[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      std::uniform_int_distribution<std::size_t> u(0, remaining.size() - 1);
      pick = u(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0.0;
      pick = remaining.size() - 1;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        acc += w[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    cur = remaining[pick];
    cycle.push_back(cur);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return cycle;
}
}  // namespace

WalkPlan sample_walk(const PatchSet& patches, std::size_t total_frames, double dwell_seconds,
                     double sampling_rate, std::uint64_t seed, bool repeat_first_cycle) {
  if (total_frames == 0) throw usage_error("sample_walk: zero frames");
  if (patches.members.empty()) throw usage_error("sample_walk: no patches");
  std::size_t dwell = static_cast<std::size_t>(std::llround(dwell_seconds * sampling_rate));
  if (dwell < 1) throw usage_error("sample_walk: dwell below one frame");

  WalkPlan plan;
  plan.patch_assignment = patches.base_assignment;
  plan.dwell_frames = dwell;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fixed_cycle;
  while (plan.order.size() * dwell < total_frames) {
    std::vector<std::size_t> cycle;
    if (repeat_first_cycle) {
      if (fixed_cycle.empty()) fixed_cycle = draw_cycle(patches, rng);
      cycle = fixed_cycle;
    } else {
      cycle = draw_cycle(patches, rng);
    }
    plan.order.insert(plan.order.end(), cycle.begin(), cycle.end());
  }
  return plan;
}

Tensor walk_to_mask(const WalkPlan& plan, const PatchSet& patches, std::size_t n_nodes,
                    std::size_t total_frames) {
  if (plan.order.size() * plan.dwell_frames < total_frames)
    throw usage_error("walk_to_mask: plan does not cover total frames");
  Tensor mask({n_nodes, total_frames}, 0.0);
  for (std::size_t t = 0; t < total_frames; ++t) {
    std::size_t patch = plan.order[t / plan.dwell_frames];
    for (std::size_t node : patches.members[patch]) mask[node * total_frames + t] = 1.0;
  }
  return mask;
}

void save_walk_json(const std::filesystem::path& path, const WalkPlan& plan) {
  nlohmann::json j;
  j["patch_assignment"] = plan.patch_assignment;
  j["order"] = plan.order;
  j["dwell_frames"] = plan.dwell_frames;
  j["overlap_level"] = plan.overlap_level;
  j["area_fraction"] = plan.area_fraction;
  j["seed"] = plan.seed;
  std::ofstream os(path);
  if (!os) throw io_error("cannot write walk plan: " + path.string());
  os << j.dump(2) << "\n";
}

WalkPlan load_walk_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open walk plan: " + path.string());
  nlohmann::json j;
  is >> j;
  WalkPlan plan;
  plan.patch_assignment = j.at("patch_assignment").get<std::vector<std::size_t>>();
  plan.order = j.at("order").get<std::vector<std::size_t>>();
  plan.dwell_frames = j.at("dwell_frames").get<std::size_t>();
  plan.overlap_level = j.at("overlap_level").get<unsigned>();
  plan.area_fraction = j.at("area_fraction").get<double>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  return plan;
}

}  // namespace stimpute
