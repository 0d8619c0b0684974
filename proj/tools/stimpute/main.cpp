#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stimpute/align.hpp"
#include "stimpute/baselines.hpp"
#include "stimpute/bundle.hpp"
#include "stimpute/errors.hpp"
#include "stimpute/generators.hpp"
#include "stimpute/metrics.hpp"
#include "stimpute/model.hpp"
#include "stimpute/phase.hpp"
#include "stimpute/split.hpp"
#include "stimpute/trainer.hpp"
#include "stimpute/walk.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stimpute;

namespace {

std::uint64_t resolve_seed(std::uint64_t flag_seed, bool seed_given) {
  if (seed_given) return flag_seed;
  if (const char* env = std::getenv("STIMPUTE_SEED")) return std::stoull(env);
  return 0;
}

json load_json_checked(const fs::path& path, const std::vector<std::string>& allowed) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open config: " + path.string());
  json j;
  is >> j;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw config_error("unknown config key: " + it.key());
  return j;
}

struct ManifestScope {
  RunManifest manifest;
  fs::path path;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add(const fs::path& artifact) {
    manifest.artifacts.push_back({artifact.string(), fnv1a_file(artifact)});
  }
  ~ManifestScope() {
    if (path.empty()) return;
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      write_manifest(path, manifest);
    } catch (...) {
    }
  }
};

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("batch", cfg.batch);
  get("window", cfg.window);
  get("stride", cfg.stride);
  get("epochs", cfg.epochs);
  get("iterations", cfg.iterations);
  get("lr", cfg.lr);
  get("cosine", cfg.cosine);
  get("patience", cfg.patience);
  get("d", cfg.hp.d);
  get("q", cfg.hp.q);
  get("r", cfg.hp.r);
  get("layers", cfg.hp.layers);
  get("hidden", cfg.hp.hidden);
  get("quantiles", cfg.hp.quantiles);
  get("area_min", cfg.mask_ranges.area_min);
  get("area_max", cfg.mask_ranges.area_max);
  get("dwell_min", cfg.mask_ranges.dwell_min);
  get("dwell_max", cfg.mask_ranges.dwell_max);
  get("overlap_max", cfg.mask_ranges.overlap_max);
  get("seed", cfg.seed);
  return cfg;
}

const std::vector<std::string> kTrainKeys = {
    "batch",    "window",  "stride",    "epochs",    "iterations", "lr",
    "cosine",   "patience", "d",        "q",         "r",          "layers",
    "hidden",   "quantiles", "area_min", "area_max", "dwell_min",  "dwell_max",
    "overlap_max", "seed"};

json train_config_to_json(const TrainConfig& cfg) {
  return {{"batch", cfg.batch},
          {"window", cfg.window},
          {"stride", cfg.stride},
          {"epochs", cfg.epochs},
          {"iterations", cfg.iterations},
          {"lr", cfg.lr},
          {"cosine", cfg.cosine},
          {"patience", cfg.patience},
          {"d", cfg.hp.d},
          {"q", cfg.hp.q},
          {"r", cfg.hp.r},
          {"layers", cfg.hp.layers},
          {"hidden", cfg.hp.hidden},
          {"quantiles", cfg.hp.quantiles},
          {"area_min", cfg.mask_ranges.area_min},
          {"area_max", cfg.mask_ranges.area_max},
          {"dwell_min", cfg.mask_ranges.dwell_min},
          {"dwell_max", cfg.mask_ranges.dwell_max},
          {"overlap_max", cfg.mask_ranges.overlap_max},
          {"seed", cfg.seed}};
}

std::vector<PatientBundle> load_cohort(const fs::path& dir) {
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw io_error("no patient bundles under " + dir.string());
  std::vector<PatientBundle> out;
  for (const auto& d : subdirs) out.push_back(load_bundle(d));
  return out;
}

std::string patient_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%03zu", i);
  return buf;
}

Tensor median_channel_field(const Tensor& q, const std::vector<double>& quantiles) {
  if (q.dims().size() == 2) return q;
  std::size_t n = q.dims()[0], t = q.dims()[1], nc = q.dims()[2];
  std::size_t med = 0;
  double bestd = 1e300;
  for (std::size_t c = 0; c < nc && c < quantiles.size(); ++c)
    if (std::abs(quantiles[c] - 0.5) < bestd) {
      bestd = std::abs(quantiles[c] - 0.5);
      med = c;
    }
  Tensor out({n, t});
  for (std::size_t i = 0; i < n * t; ++i) out[i] = q[i * nc + med];
  return out;
}

int cmd_gen_mesh(unsigned subdiv, const fs::path& out) {
  MeshGraph mesh = build_icosphere(subdiv);
  save_mesh_json(out, mesh);
  ManifestScope m;
  m.manifest.command = "gen-mesh";
  m.manifest.config_json = json{{"subdiv", subdiv}}.dump();
  m.path = out.string() + ".manifest.json";
  m.add(out);
  return 0;
}

int cmd_gen_data(const fs::path& mesh_path, const std::string& generator,
                 std::size_t patients, std::size_t frames, double rate, double omega,
                 const fs::path& out, std::uint64_t seed) {
  MeshGraph mesh = load_mesh_json(mesh_path);
  ManifestScope m;
  m.manifest.command = "gen-data";
  m.manifest.seed = seed;
  m.manifest.config_json = json{{"generator", generator}, {"patients", patients},
                                {"frames", frames},      {"rate", rate},
                                {"omega", omega}}
                               .dump();
  m.path = out / "run_manifest.json";
  fs::create_directories(out);
  for (std::size_t p = 0; p < patients; ++p) {
    PatientBundle b;
    b.id = patient_name(p);
    b.mesh = mesh;
    if (generator == "fhn") {
      FhnParams fp;
      b.series = generate_fhn(mesh, fp, frames, rate, seed + p);
    } else if (generator == "spiral") {
      b.series = generate_spiral(mesh, omega, frames, rate, p % mesh.num_nodes());
    } else {
      throw usage_error("unknown generator: " + generator);
    }
    fs::path dir = out / b.id;
    save_bundle(dir, b);
    m.add(dir / "values.sti");
    m.add(dir / "mask.sti");
  }
  return 0;
}

int cmd_split(const fs::path& data, const fs::path& out, std::uint64_t seed) {
  auto cohort = load_cohort(data);
  std::vector<FieldSeries> series;
  for (auto& b : cohort) series.push_back(b.series);
  SplitConfig cfg;
  cfg.seed = seed;
  CohortSplit split = stratified_split(series, cfg);
  json j;
  auto names = [&](const std::vector<std::size_t>& idx) {
    json arr = json::array();
    for (std::size_t i : idx) arr.push_back(cohort[i].id);
    return arr;
  };
  j["train"] = names(split.train);
  j["validation"] = names(split.validation);
  j["test"] = names(split.test);
  j["cluster"] = split.cluster;
  std::ofstream os(out);
  if (!os) throw io_error("cannot write split: " + out.string());
  os << j.dump(2) << "\n";
  os.close();
  ManifestScope m;
  m.manifest.command = "split";
  m.manifest.seed = seed;
  m.path = out.string() + ".manifest.json";
  m.add(out);
  return 0;
}

int cmd_train(const fs::path& data, const fs::path& split_path, const fs::path& config_path,
              const fs::path& out, std::uint64_t seed, bool seed_given) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = train_config_from_json(load_json_checked(config_path, kTrainKeys));
  if (seed_given) cfg.seed = seed;

  auto cohort = load_cohort(data);
  std::vector<std::size_t> train_idx;
  if (!split_path.empty()) {
    std::ifstream is(split_path);
    if (!is) throw io_error("cannot open split: " + split_path.string());
    json j;
    is >> j;
    for (const auto& name : j.at("train")) {
      auto it = std::find_if(cohort.begin(), cohort.end(),
                             [&](const PatientBundle& b) { return b.id == name; });
      if (it == cohort.end()) throw io_error("split names unknown patient " + name.get<std::string>());
      train_idx.push_back(static_cast<std::size_t>(it - cohort.begin()));
    }
  } else {
    for (std::size_t i = 0; i < cohort.size(); ++i) train_idx.push_back(i);
  }

  std::vector<FieldSeries> series;
  for (std::size_t i : train_idx) series.push_back(cohort[i].series);
  TrainResult res = train_model(cohort[train_idx[0]].mesh, series, cfg);

  std::vector<std::pair<std::string, PatientEmbeddings>> embs;
  for (std::size_t k = 0; k < train_idx.size(); ++k)
    embs.emplace_back(cohort[train_idx[k]].id, res.embeddings[k]);
  save_checkpoint(out, res.state, embs, cfg.seed);

  std::ofstream csv(out / "loss_history.csv");
  csv << "epoch,train_loss,val_mae\n";
  for (std::size_t e = 0; e < res.history.size(); ++e)
    csv << e << "," << res.history[e].train_loss << "," << res.history[e].val_mae << "\n";
  csv.close();

  ManifestScope m;
  m.manifest.command = "train";
  m.manifest.seed = cfg.seed;
  m.manifest.config_json = train_config_to_json(cfg).dump();
  m.path = out / "run_manifest.json";
  m.add(out / "loss_history.csv");
  m.add(out / "manifest.json");
  return 0;
}

int cmd_finetune(const fs::path& ckpt, const fs::path& bundle_dir, const fs::path& mask_path,
                 const fs::path& out, double lr, std::size_t epochs, std::uint64_t seed) {
  Checkpoint ck = load_checkpoint(ckpt);
  PatientBundle b = load_bundle(bundle_dir);
  Tensor mask = mask_path.empty()
                    ? evaluation_mask(b.mesh, b.series.num_frames(), b.series.sampling_rate, seed)
                    : load_sti(mask_path);
  FineTuneConfig cfg;
  cfg.lr = lr;
  cfg.max_epochs = epochs;
  cfg.seed = seed;
  FineTuneResult ft = fine_tune(ck.state, b.mesh, b.series, mask, cfg);

  fs::create_directories(out);
  save_sti(out / "imputed.sti", ft.imputed);
  save_sti(out / "mask.sti", mask);
  save_sti(out / "node_emb.sti", ft.emb.node_emb.value());
  save_sti(out / "patient_emb.sti", ft.emb.patient_emb.value());
  std::ofstream csv(out / "observed_loss.csv");
  csv << "epoch,observed_loss\n";
  for (std::size_t e = 0; e < ft.observed_loss.size(); ++e)
    csv << e << "," << ft.observed_loss[e] << "\n";
  csv.close();

  ManifestScope m;
  m.manifest.command = "finetune";
  m.manifest.seed = seed;
  m.path = out / "run_manifest.json";
  m.add(out / "imputed.sti");
  m.add(out / "node_emb.sti");
  return 0;
}

int cmd_impute(const fs::path& ckpt, const fs::path& bundle_dir, const std::string& patient,
               const fs::path& mask_path, const fs::path& out, std::size_t window) {
  Checkpoint ck = load_checkpoint(ckpt);
  PatientBundle b = load_bundle(bundle_dir);
  auto it = std::find_if(ck.embeddings.begin(), ck.embeddings.end(),
                         [&](const auto& e) { return e.first == patient; });
  if (it == ck.embeddings.end())
    throw usage_error("checkpoint has no embeddings for patient " + patient);
  Tensor mask = mask_path.empty() ? b.series.mask : load_sti(mask_path);
  GraphCtx g = GraphCtx::from_mesh(b.mesh);
  Tensor q = impute_series(ck.state, b.series.values, mask, g, it->second, window);
  save_sti(out, q);
  ManifestScope m;
  m.manifest.command = "impute";
  m.path = out.string() + ".manifest.json";
  m.add(out);
  return 0;
}

int cmd_baseline(const std::string& method, const fs::path& bundle_dir,
                 const fs::path& mask_path, const fs::path& ckpt, const fs::path& out,
                 std::size_t window, std::uint64_t seed) {
  PatientBundle b = load_bundle(bundle_dir);
  Tensor mask = mask_path.empty() ? b.series.mask : load_sti(mask_path);
  Tensor filled;
  if (method == "mean") {
    filled = mean_impute(b.series.values, mask);
  } else if (method == "mf") {
    MfOptions opt;
    opt.seed = seed;
    filled = mf_impute(b.series.values, mask, opt).filled;
  } else if (method == "rnn") {
    if (ckpt.empty()) throw usage_error("baseline rnn needs --ckpt");
    Checkpoint ck = load_checkpoint(ckpt);
    filled = univariate_rnn_impute(ck.state, b.series.values, mask, window);
  } else {
    throw usage_error("unknown baseline method: " + method);
  }
  save_sti(out, filled);
  ManifestScope m;
  m.manifest.command = "baseline";
  m.manifest.seed = seed;
  m.manifest.config_json = json{{"method", method}}.dump();
  m.path = out.string() + ".manifest.json";
  m.add(out);
  return 0;
}

int cmd_eval(const fs::path& pred_path, const fs::path& truth_path, const fs::path& mask_path,
             const fs::path& out, const std::vector<double>& quantiles) {
  Tensor pred = median_channel_field(load_sti(pred_path), quantiles);
  Tensor truth = load_sti(truth_path);
  Tensor obs = load_sti(mask_path);
  Tensor eval_mask = obs;  // metrics on the complement of the observation mask
  bool any = false;
  for (auto& v : eval_mask.data()) {
    v = v == 0.0 ? 1.0 : 0.0;
    if (v != 0.0) any = true;
  }
  if (!any)
    for (auto& v : eval_mask.data()) v = 1.0;  // fully observed: evaluate everywhere
  MetricReport r = masked_metrics(pred, truth, eval_mask);
  json j = {{"mae", r.mae}, {"mse", r.mse}, {"mre", r.mre}, {"mape", r.mape},
            {"count", r.count}};
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream os(out);
    os << j.dump(2) << "\n";
    os.close();
    ManifestScope m;
    m.manifest.command = "eval";
    m.path = out.string() + ".manifest.json";
    m.add(out);
  }
  return 0;
}

int cmd_sweep(const fs::path& ckpt, const fs::path& data, const std::vector<double>& areas,
              const std::vector<double>& dwells, const fs::path& out, std::uint64_t seed) {
  Checkpoint ck = load_checkpoint(ckpt);
  auto cohort = load_cohort(data);
  std::vector<FieldSeries> series;
  for (auto& b : cohort) series.push_back(b.series);
  FineTuneConfig cfg;
  cfg.seed = seed;
  auto cells = sensitivity_sweep(ck.state, cohort[0].mesh, series, areas, dwells, cfg);
  std::ofstream os(out);
  if (!os) throw io_error("cannot write sweep: " + out.string());
  os << "area,dwell,skipped,mae,mae_low_entropy,mae_high_entropy,count\n";
  for (const auto& c : cells)
    os << c.area << "," << c.dwell << "," << (c.skipped ? 1 : 0) << "," << c.overall.mae << ","
       << c.low_entropy.mae << "," << c.high_entropy.mae << "," << c.overall.count << "\n";
  os.close();
  ManifestScope m;
  m.manifest.command = "sweep";
  m.manifest.seed = seed;
  m.path = out.string() + ".manifest.json";
  m.add(out);
  return 0;
}

int cmd_crosscorr(const fs::path& a_path, const fs::path& b_path, double window,
                  const fs::path& out, std::uint64_t seed) {
  PatientBundle a = load_bundle(a_path);
  PatientBundle b = load_bundle(b_path);
  PhaseResult pa = hilbert_phase(a.series.values);
  PhaseResult pb = hilbert_phase(b.series.values);
  CrossCorrResult cc =
      sliding_cross_corr(pa.phase, pb.phase, a.series.sampling_rate, window);
  Tensor shuffled = spatiotemporal_shuffle(pb.phase, seed);
  CrossCorrResult sh =
      sliding_cross_corr(pa.phase, shuffled, a.series.sampling_rate, window);
  PercentileCI ci = bootstrap_percentile_ci(cc.flat, 99.0, 1000, 10000, seed);
  PercentileCI ci_sh = bootstrap_percentile_ci(sh.flat, 99.0, 1000, 10000, seed);
  json j = {{"window_seconds", window},
            {"p99", ci.point},
            {"p99_ci", {ci.lo, ci.hi}},
            {"shuffled_p99", ci_sh.point},
            {"shuffled_p99_ci", {ci_sh.lo, ci_sh.hi}},
            {"zero_variance_pairs", cc.zero_variance_pairs}};
  std::ofstream os(out);
  if (!os) throw io_error("cannot write crosscorr report: " + out.string());
  os << j.dump(2) << "\n";
  os.close();
  ManifestScope m;
  m.manifest.command = "crosscorr";
  m.manifest.seed = seed;
  m.path = out.string() + ".manifest.json";
  m.add(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal graph imputation toolkit"};
  app.require_subcommand(1);

  std::string workdir;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--workdir", workdir, "base directory for relative paths");
  app.add_option("--jobs", jobs, "worker parallelism bound");
  auto* seed_opt = app.add_option("--seed", seed, "global random seed");

  // gen-mesh
  unsigned subdiv = 2;
  std::string out_path;
  auto* gen_mesh = app.add_subcommand("gen-mesh", "build an icosphere mesh");
  gen_mesh->add_option("--subdiv", subdiv, "subdivision level");
  gen_mesh->add_option("--out", out_path, "output mesh JSON")->required();

  // gen-data
  std::string mesh_path, generator = "fhn";
  std::size_t patients = 12, frames = 700;
  double rate = 70.0, omega = 2.0 * M_PI;
  auto* gen_data = app.add_subcommand("gen-data", "generate a synthetic cohort");
  gen_data->add_option("--mesh", mesh_path)->required();
  gen_data->add_option("--generator", generator, "fhn or spiral");
  gen_data->add_option("--patients", patients);
  gen_data->add_option("--frames", frames);
  gen_data->add_option("--rate", rate);
  gen_data->add_option("--omega", omega);
  gen_data->add_option("--out", out_path)->required();

  // split
  std::string data_path, split_out;
  auto* split_cmd = app.add_subcommand("split", "stratified cohort split");
  split_cmd->add_option("--data", data_path)->required();
  split_cmd->add_option("--out", split_out)->required();

  // train
  std::string split_path, config_path, ckpt_out;
  auto* train_cmd = app.add_subcommand("train", "self-supervised training");
  train_cmd->add_option("--data", data_path)->required();
  train_cmd->add_option("--split", split_path);
  train_cmd->add_option("--config", config_path);
  train_cmd->add_option("--out", ckpt_out)->required();

  // finetune
  std::string ckpt_path, bundle_path, mask_path;
  double ft_lr = 0.005;
  std::size_t ft_epochs = 100;
  auto* ft_cmd = app.add_subcommand("finetune", "fit embeddings for a new patient");
  ft_cmd->add_option("--ckpt", ckpt_path)->required();
  ft_cmd->add_option("--bundle", bundle_path)->required();
  ft_cmd->add_option("--mask", mask_path);
  ft_cmd->add_option("--lr", ft_lr);
  ft_cmd->add_option("--epochs", ft_epochs);
  ft_cmd->add_option("--out", out_path)->required();

  // impute
  std::string patient_id;
  std::size_t window = 20;
  auto* imp_cmd = app.add_subcommand("impute", "full-field quantile predictions");
  imp_cmd->add_option("--ckpt", ckpt_path)->required();
  imp_cmd->add_option("--bundle", bundle_path)->required();
  imp_cmd->add_option("--patient", patient_id)->required();
  imp_cmd->add_option("--mask", mask_path);
  imp_cmd->add_option("--window", window);
  imp_cmd->add_option("--out", out_path)->required();

  // baseline
  std::string method = "mean";
  auto* base_cmd = app.add_subcommand("baseline", "reference imputers");
  base_cmd->add_option("--method", method, "mean, mf or rnn")->required();
  base_cmd->add_option("--bundle", bundle_path)->required();
  base_cmd->add_option("--mask", mask_path);
  base_cmd->add_option("--ckpt", ckpt_path);
  base_cmd->add_option("--window", window);
  base_cmd->add_option("--out", out_path)->required();

  // eval
  std::string pred_path, truth_path, eval_out;
  std::vector<double> quantiles = {0.1, 0.5, 0.9};
  auto* eval_cmd = app.add_subcommand("eval", "masked error metrics");
  eval_cmd->add_option("--pred", pred_path)->required();
  eval_cmd->add_option("--truth", truth_path)->required();
  eval_cmd->add_option("--mask", mask_path)->required();
  eval_cmd->add_option("--quantiles", quantiles);
  eval_cmd->add_option("--out", eval_out);

  // sweep
  std::vector<double> areas = {0.05, 0.1, 0.2};
  std::vector<double> dwells = {0.2, 0.5};
  auto* sweep_cmd = app.add_subcommand("sweep", "area/dwell sensitivity grid");
  sweep_cmd->add_option("--ckpt", ckpt_path)->required();
  sweep_cmd->add_option("--data", data_path)->required();
  sweep_cmd->add_option("--areas", areas);
  sweep_cmd->add_option("--dwells", dwells);
  sweep_cmd->add_option("--out", out_path)->required();

  // crosscorr
  std::string b_path;
  double cc_window = 1.0;
  auto* cc_cmd = app.add_subcommand("crosscorr", "sliding-window phase correlation");
  cc_cmd->add_option("--a", bundle_path)->required();
  cc_cmd->add_option("--b", b_path)->required();
  cc_cmd->add_option("--window", cc_window);
  cc_cmd->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!workdir.empty()) fs::current_path(workdir);
    seed = resolve_seed(seed, seed_opt->count() > 0);
    (void)jobs;

    if (gen_mesh->parsed()) return cmd_gen_mesh(subdiv, out_path);
    if (gen_data->parsed())
      return cmd_gen_data(mesh_path, generator, patients, frames, rate, omega, out_path, seed);
    if (split_cmd->parsed()) return cmd_split(data_path, split_out, seed);
    if (train_cmd->parsed())
      return cmd_train(data_path, split_path, config_path, ckpt_out, seed,
                       seed_opt->count() > 0);
    if (ft_cmd->parsed())
      return cmd_finetune(ckpt_path, bundle_path, mask_path, out_path, ft_lr, ft_epochs, seed);
    if (imp_cmd->parsed())
      return cmd_impute(ckpt_path, bundle_path, patient_id, mask_path, out_path, window);
    if (base_cmd->parsed())
      return cmd_baseline(method, bundle_path, mask_path, ckpt_path, out_path, window, seed);
    if (eval_cmd->parsed()) return cmd_eval(pred_path, truth_path, mask_path, eval_out, quantiles);
    if (sweep_cmd->parsed()) return cmd_sweep(ckpt_path, data_path, areas, dwells, out_path, seed);
    if (cc_cmd->parsed()) return cmd_crosscorr(bundle_path, b_path, cc_window, out_path, seed);
  } catch (const usage_error& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << json{{"error", "io"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << json{{"error", "io"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << json{{"error", "numeric"}, {"message", e.what()}}.dump() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
