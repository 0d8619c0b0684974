#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stimpute/mesh.hpp"
#include "stimpute/series.hpp"

namespace stimpute {

/// On-disk patient directory: mesh.json, values.sti, mask.sti, meta.json.
struct PatientBundle {
  std::string id;
  MeshGraph mesh;
  FieldSeries series;
};

void save_bundle(const std::filesystem::path& dir, const PatientBundle& bundle);
PatientBundle load_bundle(const std::filesystem::path& dir);

/// FNV-1a over a file's bytes; cheap reproducibility fingerprint, not
/// cryptographic.
std::uint64_t fnv1a_file(const std::filesystem::path& path);

struct ArtifactHash {
  std::string path;
  std::uint64_t hash = 0;
};

struct RunManifest {
  std::string command;
  std::string config_json;  // effective config snapshot, serialized
  std::uint64_t seed = 0;
  std::vector<ArtifactHash> artifacts;
  double wall_seconds = 0.0;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace stimpute
