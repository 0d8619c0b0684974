#include "stimpute/bundle.hpp"

#include <fstream>

#include <json.hpp>

#include "stimpute/errors.hpp"

namespace stimpute {

void save_bundle(const std::filesystem::path& dir, const PatientBundle& bundle) {
  std::filesystem::create_directories(dir);
  save_mesh_json(dir / "mesh.json", bundle.mesh);
  save_sti(dir / "values.sti", bundle.series.values);
  save_sti(dir / "mask.sti", bundle.series.mask);
  nlohmann::json meta;
  meta["id"] = bundle.id;
  meta["sampling_rate"] = bundle.series.sampling_rate;
  meta["norm_min"] = bundle.series.norm_min;
  meta["norm_max"] = bundle.series.norm_max;
  meta["normalised"] = bundle.series.normalised;
  meta["degenerate"] = bundle.series.degenerate;
  std::ofstream os(dir / "meta.json");
  if (!os) throw io_error("cannot write bundle meta: " + dir.string());
  os << meta.dump(2) << "\n";
}

PatientBundle load_bundle(const std::filesystem::path& dir) {
  PatientBundle b;
  b.mesh = load_mesh_json(dir / "mesh.json");
  b.series.values = load_sti(dir / "values.sti");
  b.series.mask = load_sti(dir / "mask.sti");
  std::ifstream is(dir / "meta.json");
  if (!is) throw io_error("cannot open bundle meta: " + dir.string());
  nlohmann::json meta;
  is >> meta;
  b.id = meta.at("id").get<std::string>();
  b.series.sampling_rate = meta.at("sampling_rate").get<double>();
  b.series.norm_min = meta.at("norm_min").get<double>();
  b.series.norm_max = meta.at("norm_max").get<double>();
  b.series.normalised = meta.at("normalised").get<bool>();
  b.series.degenerate = meta.at("degenerate").get<bool>();
  if (b.series.values.dims() != b.series.mask.dims())
    throw io_error("bundle values/mask shape mismatch: " + dir.string());
  return b;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open for hashing: " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["config"] = manifest.config_json.empty()
                    ? nlohmann::json::object()
                    : nlohmann::json::parse(manifest.config_json);
  j["seed"] = manifest.seed;
  j["wall_seconds"] = manifest.wall_seconds;
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& a : manifest.artifacts)
    arts.push_back({{"path", a.path}, {"hash", a.hash}});
  j["artifacts"] = arts;
  std::ofstream os(path);
  if (!os) throw io_error("cannot write manifest: " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace stimpute
