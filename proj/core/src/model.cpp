#include "stimpute/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace stimpute {

std::size_t HyperParams::median_channel() const {
  std::size_t best = 0;
  double bestd = 1e300;
  for (std::size_t c = 0; c < quantiles.size(); ++c) {
    double d = std::abs(quantiles[c] - 0.5);
    if (d < bestd) {
      bestd = d;
      best = c;
    }
  }
  return best;
}

namespace {
ad::Var make_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = u(rng);
  return ad::Var(std::move(t), true);
}

ad::Var make_bias(std::size_t cols) { return ad::Var(Tensor({std::size_t{1}, cols}), true); }

Mlp make_mlp(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
  Mlp m;
  m.w1 = make_weight(in, hidden, rng);
  m.b1 = make_bias(hidden);
  m.w2 = make_weight(hidden, out, rng);
  m.b2 = make_bias(out);
  return m;
}

GateParams make_gate(std::size_t d, std::mt19937_64& rng) {
  GateParams g;
  g.msg = make_mlp(4 * d, d, d, rng);
  g.w_alpha = make_weight(d, 1, rng);
  g.update = make_mlp(2 * d, d, d, rng);
  g.w_skip = make_weight(2 * d, d, rng);
  return g;
}

DirectionParams make_direction(const HyperParams& hp, std::mt19937_64& rng) {
  DirectionParams dir;
  std::size_t nc = hp.quantiles.size();
  dir.enc = make_mlp(1 + 1 + hp.r + hp.q, hp.hidden, hp.d, rng);
  for (std::size_t k = 0; k < hp.layers; ++k) {
    LayerParams lp;
    lp.reset = make_gate(hp.d, rng);
    lp.update_gate = make_gate(hp.d, rng);
    lp.candidate = make_gate(hp.d, rng);
    lp.w_init = make_weight(hp.q, hp.d, rng);
    lp.b_init = make_bias(hp.d);
    dir.layers.push_back(std::move(lp));
  }
  dir.w_stage1 = make_weight(hp.d, nc, rng);
  dir.b_stage1 = make_bias(nc);
  std::size_t f = nc + hp.d + 1;
  for (int p = 0; p < 3; ++p) dir.w_diff.push_back(make_weight(f, hp.d, rng));
  dir.b_diff = make_bias(hp.d);
  dir.w_stage2 = make_weight(2 * hp.d, nc, rng);
  dir.b_stage2 = make_bias(nc);
  return dir;
}

void name_mlp(std::vector<std::pair<std::string, ad::Var>>& out, const std::string& p,
              const Mlp& m) {
  out.emplace_back(p + ".w1", m.w1);
  out.emplace_back(p + ".b1", m.b1);
  out.emplace_back(p + ".w2", m.w2);
  out.emplace_back(p + ".b2", m.b2);
}

void name_gate(std::vector<std::pair<std::string, ad::Var>>& out, const std::string& p,
               const GateParams& g) {
  name_mlp(out, p + ".msg", g.msg);
  out.emplace_back(p + ".w_alpha", g.w_alpha);
  name_mlp(out, p + ".update", g.update);
  out.emplace_back(p + ".w_skip", g.w_skip);
}

void name_direction(std::vector<std::pair<std::string, ad::Var>>& out, const std::string& p,
                    const DirectionParams& dir) {
  name_mlp(out, p + ".enc", dir.enc);
  for (std::size_t k = 0; k < dir.layers.size(); ++k) {
    std::string lp = p + ".layer" + std::to_string(k);
    name_gate(out, lp + ".reset", dir.layers[k].reset);
    name_gate(out, lp + ".update", dir.layers[k].update_gate);
    name_gate(out, lp + ".candidate", dir.layers[k].candidate);
    out.emplace_back(lp + ".w_init", dir.layers[k].w_init);
    out.emplace_back(lp + ".b_init", dir.layers[k].b_init);
  }
  out.emplace_back(p + ".w_stage1", dir.w_stage1);
  out.emplace_back(p + ".b_stage1", dir.b_stage1);
  for (std::size_t i = 0; i < dir.w_diff.size(); ++i)
    out.emplace_back(p + ".w_diff" + std::to_string(i), dir.w_diff[i]);
  out.emplace_back(p + ".b_diff", dir.b_diff);
  out.emplace_back(p + ".w_stage2", dir.w_stage2);
  out.emplace_back(p + ".b_stage2", dir.b_stage2);
}
}  // namespace

ModelState ModelState::init(const HyperParams& hp, std::uint64_t seed) {
  if (hp.quantiles.empty()) throw config_error("model: empty quantile set");
  if (!std::is_sorted(hp.quantiles.begin(), hp.quantiles.end()))
    throw config_error("model: quantiles must be sorted ascending");
  std::mt19937_64 rng(seed);
  ModelState st;
  st.hp = hp;
  st.fwd = make_direction(hp, rng);
  st.bwd = make_direction(hp, rng);
  st.dec = make_mlp(4 * hp.d + 1 + hp.q + hp.r, hp.hidden, hp.quantiles.size(), rng);
  return st;
}

std::vector<std::pair<std::string, ad::Var>> ModelState::named_params() const {
  std::vector<std::pair<std::string, ad::Var>> out;
  name_direction(out, "fwd", fwd);
  name_direction(out, "bwd", bwd);
  name_mlp(out, "dec", dec);
  return out;
}

std::vector<ad::Var> ModelState::params() const {
  std::vector<ad::Var> out;
  for (auto& [name, v] : named_params()) out.push_back(v);
  return out;
}

std::uint64_t ModelState::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (auto& [name, v] : named_params()) {
    mix(name.data(), name.size());
    mix(v.value().data().data(), v.value().size() * sizeof(double));
  }
  return h;
}

PatientEmbeddings PatientEmbeddings::init(std::size_t n, const HyperParams& hp,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.02);
  PatientEmbeddings emb;
  Tensor v({n, hp.q});
  for (auto& x : v.data()) x = g(rng);
  Tensor pe({std::size_t{1}, hp.r});
  for (auto& x : pe.data()) x = g(rng);
  emb.node_emb = ad::Var(std::move(v), true);
  emb.patient_emb = ad::Var(std::move(pe), true);
  return emb;
}

PatientEmbeddings PatientEmbeddings::zeros(std::size_t n, const HyperParams& hp) {
  PatientEmbeddings emb;
  emb.node_emb = ad::Var(Tensor({n, hp.q}), false);
  emb.patient_emb = ad::Var(Tensor({std::size_t{1}, hp.r}), false);
  return emb;
}

GraphCtx GraphCtx::from_mesh(const MeshGraph& mesh) {
  GraphCtx g;
  g.n = mesh.num_nodes();
  mesh.directed_edges(g.edge_src, g.edge_tgt);
  Tensor a({g.n, g.n});
  std::vector<double> deg(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) deg[i] = static_cast<double>(mesh.adjacency[i].size());
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j : mesh.adjacency[i])
      a[i * g.n + j] = 1.0 / std::sqrt(std::max(deg[i], 1.0) * std::max(deg[j], 1.0));
  g.adj_norm = ad::Var(std::move(a), false);
  return g;
}

GraphCtx GraphCtx::edgeless(std::size_t n) {
  GraphCtx g;
  g.n = n;
  g.adj_norm = ad::Var(Tensor({n, n}), false);
  return g;
}

ad::Var mlp_apply(const Mlp& mlp, const ad::Var& in) {
  ad::Var h = ad::tanh(ad::add_rowvec(ad::matmul(in, mlp.w1), mlp.b1));
  return ad::add_rowvec(ad::matmul(h, mlp.w2), mlp.b2);
}

ad::Var encode_frame(const ad::Var& x_filled, const ad::Var& m, const PatientEmbeddings& emb,
                     const Mlp& enc) {
  std::size_t n = x_filled.value().dims()[0];
  std::size_t r = emb.patient_emb.value().dims()[1];
  // stack g across nodes
  std::vector<std::size_t> zeros(n, 0);
  ad::Var g_stack = ad::gather_rows(emb.patient_emb, zeros);
  (void)r;
  return mlp_apply(enc, ad::concat_cols({x_filled, m, g_stack, emb.node_emb}));
}

ad::Var init_hidden(const PatientEmbeddings& emb, const LayerParams& layer) {
  return ad::add_rowvec(ad::matmul(emb.node_emb, layer.w_init), layer.b_init);
}

ad::Var mp_gate(const ad::Var& o, const ad::Var& h_prev, const GraphCtx& g,
                const GateParams& gp) {
  std::size_t n = o.value().dims()[0];
  std::size_t d = h_prev.value().dims()[1];
  ad::Var agg;
  if (g.edge_src.empty()) {
    agg = ad::Var(Tensor({n, d}), false);  // empty neighbourhood sum
  } else {
    ad::Var oi = ad::gather_rows(o, g.edge_tgt);
    ad::Var oj = ad::gather_rows(o, g.edge_src);
    ad::Var msg = mlp_apply(gp.msg, ad::concat_cols({oi, oj}));
    ad::Var alpha = ad::sigmoid(ad::matmul(msg, gp.w_alpha));
    agg = ad::scatter_sum_rows(ad::mul_cols(msg, alpha), g.edge_tgt, n);
  }
  ad::Var u = mlp_apply(gp.update, ad::concat_cols({h_prev, agg}));
  return ad::add(u, ad::matmul(o, gp.w_skip));
}

ad::Var grnn_cell_step(const ad::Var& h_prev, const ad::Var& z, const GraphCtx& g,
                       const LayerParams& lp) {
  ad::Var o = ad::concat_cols({z, h_prev});
  ad::Var r = ad::sigmoid(mp_gate(o, h_prev, g, lp.reset));
  ad::Var u = ad::sigmoid(mp_gate(o, h_prev, g, lp.update_gate));
  ad::Var oc = ad::concat_cols({z, ad::mul(r, h_prev)});
  ad::Var c = ad::tanh(mp_gate(oc, h_prev, g, lp.candidate));
  ad::Var one_minus_u = ad::add_scalar(ad::scale(u, -1.0), 1.0);
  return ad::add(ad::mul(u, h_prev), ad::mul(one_minus_u, c));
}

ad::Var stage_one_impute(const ad::Var& h_top, const DirectionParams& dir) {
  return ad::add_rowvec(ad::matmul(h_top, dir.w_stage1), dir.b_stage1);
}

std::pair<ad::Var, ad::Var> stage_two_impute(const ad::Var& h_top, const ad::Var& x1,
                                             const ad::Var& m, const GraphCtx& g,
                                             const DirectionParams& dir) {
  ad::Var f = ad::concat_cols({x1, h_top, m});
  ad::Var a1 = ad::matmul(g.adj_norm, f);
  ad::Var a2 = ad::matmul(g.adj_norm, a1);
  ad::Var s = ad::add_rowvec(
      ad::add(ad::add(ad::matmul(f, dir.w_diff[0]), ad::matmul(a1, dir.w_diff[1])),
              ad::matmul(a2, dir.w_diff[2])),
      dir.b_diff);
  ad::Var x2 =
      ad::add_rowvec(ad::matmul(ad::concat_cols({s, h_top}), dir.w_stage2), dir.b_stage2);
  return {s, x2};
}

namespace {
ad::Var column_const(const Tensor& mat, std::size_t col) {
  std::size_t n = mat.dims()[0], t = mat.dims()[1];
  Tensor c({n, std::size_t{1}});
  for (std::size_t i = 0; i < n; ++i) c[i] = mat[i * t + col];
  return ad::Var(std::move(c), false);
}
}  // namespace

EncodeResult st_encode(const ModelState& state, Direction dir, const Tensor& x,
                       const Tensor& m, const GraphCtx& g, const PatientEmbeddings& emb) {
  if (x.dims() != m.dims()) throw shape_error("st_encode: values/mask dims differ");
  std::size_t w = x.dims()[1];
  if (w < 2) throw usage_error("st_encode: window length must be >= 2");
  const DirectionParams& dp = dir == Direction::forward ? state.fwd : state.bwd;
  std::size_t med = state.hp.median_channel();

  std::vector<ad::Var> h_prev;
  for (const auto& lp : dp.layers) h_prev.push_back(init_hidden(emb, lp));

  EncodeResult res;
  res.s.resize(w);
  res.h.resize(w);
  res.x1.resize(w);
  res.x2.resize(w);

  for (std::size_t step = 0; step < w; ++step) {
    std::size_t t = dir == Direction::forward ? step : w - 1 - step;
    ad::Var xc = column_const(x, t);
    ad::Var mc = column_const(m, t);
    ad::Var h_top = h_prev.back();

    ad::Var x1 = stage_one_impute(h_top, dp);
    auto [s, x2] = stage_two_impute(h_top, x1, mc, g, dp);
    ad::Var med2 = ad::slice_cols(x2, med, med + 1);
    ad::Var one_minus_m = ad::add_scalar(ad::scale(mc, -1.0), 1.0);
    ad::Var filled = ad::add(ad::mul(mc, xc), ad::mul(one_minus_m, med2));

    ad::Var z = encode_frame(filled, mc, emb, dp.enc);
    for (std::size_t k = 0; k < dp.layers.size(); ++k) {
      h_prev[k] = grnn_cell_step(h_prev[k], z, g, dp.layers[k]);
      z = h_prev[k];
    }

    res.s[t] = s;
    res.h[t] = h_prev.back();
    res.x1[t] = x1;
    res.x2[t] = x2;
  }
  return res;
}

ForwardResult model_forward(const ModelState& state, const Tensor& x, const Tensor& m,
                            const GraphCtx& g, const PatientEmbeddings& emb) {
  ForwardResult out;
  out.fwd = st_encode(state, Direction::forward, x, m, g, emb);
  out.bwd = st_encode(state, Direction::backward, x, m, g, emb);
  std::size_t w = x.dims()[1];
  std::size_t n = x.dims()[0];
  std::vector<std::size_t> zeros(n, 0);
  ad::Var g_stack = ad::gather_rows(emb.patient_emb, zeros);
  out.y.resize(w);
  for (std::size_t t = 0; t < w; ++t) {
    ad::Var mc = column_const(m, t);
    ad::Var in = ad::concat_cols({out.fwd.s[t], out.fwd.h[t], out.bwd.s[t], out.bwd.h[t], mc,
                                  emb.node_emb, g_stack});
    out.y[t] = mlp_apply(state.dec, in);
  }
  return out;
}

ad::Var pinball_loss(const std::vector<ad::Var>& pred, const Tensor& target,
                     const Tensor& eval_mask, const std::vector<double>& quantiles) {
  if (target.dims() != eval_mask.dims()) throw shape_error("pinball_loss: target/mask dims");
  std::size_t t = target.dims()[1];
  if (pred.size() != t) throw shape_error("pinball_loss: one prediction per frame");
  double count = 0.0;
  for (double v : eval_mask.data()) count += v;
  if (count <= 0.0) throw usage_error("pinball_loss: all-zero evaluation mask");

  ad::Var acc;
  for (std::size_t f = 0; f < t; ++f) {
    std::size_t n = target.dims()[0];
    Tensor tgt({n});
    for (std::size_t i = 0; i < n; ++i) tgt[i] = target[i * t + f];
    ad::Var per_row = ad::pinball_rows(pred[f], tgt, quantiles);
    ad::Var masked = ad::mul(per_row, column_const(eval_mask, f));
    ad::Var s = ad::sum(masked);
    acc = acc.defined() ? ad::add(acc, s) : s;
  }
  return ad::scale(acc, 1.0 / count);
}

ad::Var combined_loss(const ForwardResult& out, const Tensor& target, const Tensor& eval_mask,
                      const std::vector<double>& quantiles) {
  ad::Var l = pinball_loss(out.y, target, eval_mask, quantiles);
  l = ad::add(l, pinball_loss(out.fwd.x1, target, eval_mask, quantiles));
  l = ad::add(l, pinball_loss(out.fwd.x2, target, eval_mask, quantiles));
  l = ad::add(l, pinball_loss(out.bwd.x1, target, eval_mask, quantiles));
  l = ad::add(l, pinball_loss(out.bwd.x2, target, eval_mask, quantiles));
  return l;
}

Tensor impute_series(const ModelState& state, const Tensor& values, const Tensor& mask,
                     const GraphCtx& g, const PatientEmbeddings& emb, std::size_t window) {
  if (values.dims() != mask.dims()) throw shape_error("impute_series: values/mask dims");
  std::size_t n = values.dims()[0], t = values.dims()[1];
  std::size_t w = std::min(window, t);
  if (w < 2) throw usage_error("impute_series: window must be >= 2");
  std::size_t nc = state.hp.quantiles.size();

  Tensor acc({n, t, nc});
  std::vector<double> hits(t, 0.0);

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + w <= t; s += w) starts.push_back(s);
  if (starts.empty() || starts.back() + w < t) starts.push_back(t - w);

  bool prev = ad::finite_checks();
  ad::set_finite_checks(false);
  for (std::size_t s : starts) {
    Tensor xv({n, w}), mv({n, w});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < w; ++f) {
        xv[i * w + f] = values[i * t + s + f] * mask[i * t + s + f];
        mv[i * w + f] = mask[i * t + s + f];
      }
    ForwardResult fr = model_forward(state, xv, mv, g, emb);
    for (std::size_t f = 0; f < w; ++f) {
      const Tensor& y = fr.y[f].value();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < nc; ++c)
          acc[(i * t + s + f) * nc + c] += y[i * nc + c];
      hits[s + f] += 1.0;
    }
  }
  ad::set_finite_checks(prev);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < t; ++f)
      for (std::size_t c = 0; c < nc; ++c) acc[(i * t + f) * nc + c] /= hits[f];
  return acc;
}

void save_checkpoint(const std::filesystem::path& dir, const ModelState& state,
                     const std::vector<std::pair<std::string, PatientEmbeddings>>& embeddings,
                     std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["hyperparams"] = {{"d", state.hp.d},          {"q", state.hp.q},
                             {"r", state.hp.r},          {"layers", state.hp.layers},
                             {"hidden", state.hp.hidden}, {"quantiles", state.hp.quantiles}};
  manifest["seed"] = seed;
  nlohmann::json shared = nlohmann::json::array();
  for (auto& [name, v] : state.named_params()) {
    shared.push_back(name);
    save_sti(dir / (name + ".sti"), v.value());
  }
  manifest["shared"] = shared;
  nlohmann::json pats = nlohmann::json::array();
  for (auto& [pid, emb] : embeddings) {
    pats.push_back(pid);
    save_sti(dir / ("emb_" + pid + "_node.sti"), emb.node_emb.value());
    save_sti(dir / ("emb_" + pid + "_patient.sti"), emb.patient_emb.value());
  }
  manifest["patient_specific"] = pats;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw io_error("cannot write checkpoint manifest");
  os << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw io_error("cannot open checkpoint manifest: " + dir.string());
  nlohmann::json manifest;
  is >> manifest;
  HyperParams hp;
  const auto& h = manifest.at("hyperparams");
  hp.d = h.at("d").get<std::size_t>();
  hp.q = h.at("q").get<std::size_t>();
  hp.r = h.at("r").get<std::size_t>();
  hp.layers = h.at("layers").get<std::size_t>();
  hp.hidden = h.at("hidden").get<std::size_t>();
  hp.quantiles = h.at("quantiles").get<std::vector<double>>();

  Checkpoint ck;
  ck.state = ModelState::init(hp, 0);
  ck.seed = manifest.at("seed").get<std::uint64_t>();
  for (auto& [name, v] : ck.state.named_params()) {
    Tensor t = load_sti(dir / (name + ".sti"));
    if (t.dims() != v.value().dims()) throw io_error("checkpoint shape mismatch: " + name);
    v.node()->value = std::move(t);
  }
  for (const auto& pid_json : manifest.at("patient_specific")) {
    std::string pid = pid_json.get<std::string>();
    PatientEmbeddings emb;
    emb.node_emb = ad::Var(load_sti(dir / ("emb_" + pid + "_node.sti")), true);
    emb.patient_emb = ad::Var(load_sti(dir / ("emb_" + pid + "_patient.sti")), true);
    ck.embeddings.emplace_back(pid, std::move(emb));
  }
  return ck;
}

}  // namespace stimpute
