#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stimpute/mesh.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

/// Patch decomposition of a mesh. The first `base_count` patches partition
/// the node set; any further entries are interstitial overlap patches that
/// share nodes with two adjacent base patches.
struct PatchSet {
  std::vector<std::vector<std::size_t>> members;  // sorted node lists
  std::vector<Vec3> centroids;
  std::size_t base_count = 0;
  std::vector<std::size_t> base_assignment;  // node -> base patch
};

/// Base patch count is ceil(1/areaFraction); patches come from k-means on the
/// node coordinates. overlap_level interstitial clusters are inserted between
/// every pair of adjacent base patches.
PatchSet make_patches(const MeshGraph& mesh, double area_fraction, unsigned overlap_level,
                      std::uint64_t seed);

struct WalkPlan {
  std::vector<std::size_t> patch_assignment;  // node -> base patch (bookkeeping)
  std::vector<std::size_t> order;             // concatenated cycles of patch ids
  std::size_t dwell_frames = 0;
  unsigned overlap_level = 0;
  double area_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Self-avoiding catheter walk. First patch of each cycle is uniform; each
/// following patch is drawn without replacement with probability proportional
/// to centroid distance from the current patch. With repeat_first_cycle the
/// initial cycle is tiled verbatim instead of re-randomised.
WalkPlan sample_walk(const PatchSet& patches, std::size_t total_frames, double dwell_seconds,
                     double sampling_rate, std::uint64_t seed, bool repeat_first_cycle = false);

/// N x totalFrames binary mask; node i observed at frame t iff it belongs to
/// the active patch.
Tensor walk_to_mask(const WalkPlan& plan, const PatchSet& patches, std::size_t n_nodes,
                    std::size_t total_frames);

void save_walk_json(const std::filesystem::path& path, const WalkPlan& plan);
WalkPlan load_walk_json(const std::filesystem::path& path);

}  // namespace stimpute
