#include "stimpute/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace stimpute {

namespace {
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void window_slice(const Tensor& full, std::size_t start, std::size_t w, Tensor& out) {
  std::size_t n = full.dims()[0], t = full.dims()[1];
  out = Tensor({n, w});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < w; ++f) out[i * w + f] = full[i * t + start + f];
}

double median_mae_window(const ModelState& state, const PatientEmbeddings& emb,
                         const GraphCtx& g, const Tensor& truth_win, const Tensor& mask_win) {
  std::size_t n = truth_win.dims()[0], w = truth_win.dims()[1];
  Tensor xv = truth_win;
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= mask_win[i];
  ForwardResult fr = model_forward(state, xv, mask_win, g, emb);
  std::size_t med = state.hp.median_channel();
  std::size_t nc = state.hp.quantiles.size();
  double acc = 0.0;
  for (std::size_t f = 0; f < w; ++f) {
    const Tensor& y = fr.y[f].value();
    for (std::size_t i = 0; i < n; ++i)
      acc += std::abs(y[i * nc + med] - truth_win[i * w + f]);
  }
  return acc / static_cast<double>(n * w);
}

std::size_t param_count(const ModelState& state) {
  std::size_t c = 0;
  for (const auto& p : state.params()) c += p.value().size();
  return c;
}
}  // namespace

Adam::Adam(std::vector<ad::Var> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.value().dims());
    v_.emplace_back(p.value().dims());
  }
}

void Adam::zero_grad() {
  for (const auto& p : params_) p.zero_grad();
}

void Adam::step(double lr, double grad_scale) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& val = params_[k].node()->value;
    Tensor& grad = params_[k].grad();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < val.size(); ++i) {
      double g = grad[i] * grad_scale;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      val[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

MaskDraw draw_mask_params(const MaskRanges& r, std::uint64_t seed) {
  // area may be forced up to 1.0 (full observation) for diagnostics
  if (r.area_min < 0.025 || r.area_max > 1.0 || r.dwell_min < 0.2 || r.dwell_max > 4.0 ||
      r.overlap_max > 3)
    throw config_error("draw_mask_params: ranges outside supported bounds");
  std::mt19937_64 rng(seed);
  MaskDraw d;
  d.area = std::uniform_real_distribution<double>(r.area_min, r.area_max)(rng);
  d.dwell = std::uniform_real_distribution<double>(r.dwell_min, r.dwell_max)(rng);
  d.overlap = std::uniform_int_distribution<unsigned>(0, r.overlap_max)(rng);
  return d;
}

Tensor sample_training_mask(const MeshGraph& mesh, std::size_t frames, double sampling_rate,
                            const MaskRanges& r, std::uint64_t seed) {
  MaskDraw d = draw_mask_params(r, seed);
  PatchSet patches = make_patches(mesh, d.area, d.overlap, mix_seed(seed, 1));
  WalkPlan plan =
      sample_walk(patches, frames, d.dwell, sampling_rate, mix_seed(seed, 2), false);
  return walk_to_mask(plan, patches, mesh.num_nodes(), frames);
}

Tensor evaluation_mask(const MeshGraph& mesh, std::size_t frames, double sampling_rate,
                       std::uint64_t seed) {
  PatchSet patches = make_patches(mesh, 0.1, 0, mix_seed(seed, 11));
  WalkPlan plan = sample_walk(patches, frames, 1.0, sampling_rate, mix_seed(seed, 12), true);
  return walk_to_mask(plan, patches, mesh.num_nodes(), frames);
}

TrainResult train_model(const MeshGraph& mesh, const std::vector<FieldSeries>& patients,
                        const TrainConfig& cfg, bool use_graph, bool use_embeddings,
                        const std::vector<FieldSeries>* val_patients) {
  if (patients.empty()) throw usage_error("train_model: no training patients");
  if (cfg.window < 2) throw config_error("train_model: window must be >= 2");
  std::size_t n = mesh.num_nodes();
  for (const auto& p : patients) {
    if (p.num_nodes() != n) throw shape_error("train_model: patient/mesh node count");
    if (p.num_frames() < cfg.window) throw usage_error("train_model: recording shorter than window");
  }

  GraphCtx g = use_graph ? GraphCtx::from_mesh(mesh) : GraphCtx::edgeless(n);
  TrainResult res;
  res.state = ModelState::init(cfg.hp, cfg.seed);
  for (std::size_t p = 0; p < patients.size(); ++p)
    res.embeddings.push_back(use_embeddings
                                 ? PatientEmbeddings::init(n, cfg.hp, mix_seed(cfg.seed, 100 + p))
                                 : PatientEmbeddings::zeros(n, cfg.hp));

  std::vector<ad::Var> params = res.state.params();
  if (use_embeddings)
    for (const auto& e : res.embeddings) {
      params.push_back(e.node_emb);
      params.push_back(e.patient_emb);
    }
  Adam opt(params);

  // flat list of (patient, window start) pairs
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t p = 0; p < patients.size(); ++p)
    for (std::size_t s = 0; s + cfg.window <= patients[p].num_frames(); s += cfg.stride)
      slots.emplace_back(p, s);
  std::size_t iters =
      cfg.iterations > 0 ? cfg.iterations : std::max<std::size_t>(1, slots.size() / cfg.batch);
  std::size_t total_steps = iters * cfg.epochs;

  // per-patient validation masks, fixed for the whole run
  std::vector<Tensor> val_masks;
  const std::vector<FieldSeries>& vals = val_patients ? *val_patients : patients;
  for (std::size_t p = 0; p < vals.size(); ++p)
    val_masks.push_back(evaluation_mask(mesh, vals[p].num_frames(), vals[p].sampling_rate,
                                        mix_seed(cfg.seed, 200 + p)));

  std::mt19937_64 rng(mix_seed(cfg.seed, 7));
  std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);

  double best_val = 1e300;
  std::size_t best_age = 0;
  std::vector<Tensor> best_params;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Tensor> masks;
    for (std::size_t p = 0; p < patients.size(); ++p)
      masks.push_back(sample_training_mask(mesh, patients[p].num_frames(),
                                           patients[p].sampling_rate, cfg.mask_ranges,
                                           mix_seed(cfg.seed, epoch * 1000 + p)));

    double epoch_loss = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
      opt.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < cfg.batch; ++b) {
        auto [p, s] = slots[pick(rng)];
        Tensor truth_win, mask_win;
        window_slice(patients[p].values, s, cfg.window, truth_win);
        window_slice(masks[p], s, cfg.window, mask_win);
        Tensor xv = truth_win;
        for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= mask_win[i];
        ForwardResult fr = model_forward(res.state, xv, mask_win, g, res.embeddings[p]);
        Tensor ones(truth_win.dims(), 1.0);
        ad::Var loss = combined_loss(fr, truth_win, ones, cfg.hp.quantiles);
        double lv = loss.value()[0];
        if (!std::isfinite(lv))
          throw numeric_error("train_model: diverged at epoch " + std::to_string(epoch) +
                              " iteration " + std::to_string(it));
        batch_loss += lv;
        ad::backward(loss);
      }
      double lr = cfg.lr;
      if (cfg.cosine)
        lr *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) /
                                    static_cast<double>(total_steps)));
      opt.step(lr, 1.0 / static_cast<double>(cfg.batch));
      ++step;
      epoch_loss += batch_loss / static_cast<double>(cfg.batch);
    }

    EpochStat stat;
    stat.train_loss = epoch_loss / static_cast<double>(iters);
    double mae = 0.0;
    for (std::size_t p = 0; p < vals.size(); ++p) {
      std::size_t t = vals[p].num_frames();
      std::size_t start = t - cfg.window;
      Tensor truth_win, mask_win;
      window_slice(vals[p].values, start, cfg.window, truth_win);
      window_slice(val_masks[p], start, cfg.window, mask_win);
      const PatientEmbeddings& emb =
          res.embeddings[std::min(p, res.embeddings.size() - 1)];
      mae += median_mae_window(res.state, emb, g, truth_win, mask_win);
    }
    stat.val_mae = mae / static_cast<double>(vals.size());
    res.history.push_back(stat);

    if (cfg.patience > 0) {
      if (stat.val_mae < best_val) {
        best_val = stat.val_mae;
        best_age = 0;
        best_params.clear();
        for (const auto& pv : params) best_params.push_back(pv.value());
      } else if (++best_age >= cfg.patience) {
        break;
      }
    }
  }

  if (cfg.patience > 0 && !best_params.empty())
    for (std::size_t k = 0; k < params.size(); ++k) params[k].node()->value = best_params[k];
  return res;
}

FineTuneResult fine_tune(const ModelState& state, const MeshGraph& mesh,
                         const FieldSeries& series, const Tensor& mask,
                         const FineTuneConfig& cfg, const Tensor* truth) {
  if (series.values.dims() != mask.dims()) throw shape_error("fine_tune: series/mask dims");
  bool any = false;
  for (double m : mask.data())
    if (m != 0.0) any = true;
  if (!any) throw usage_error("fine_tune: empty observation mask");
  std::size_t n = series.num_nodes(), t = series.num_frames();
  std::size_t w = std::min(cfg.window, t);
  if (w < 2) throw usage_error("fine_tune: window must be >= 2");

  GraphCtx g = GraphCtx::from_mesh(mesh);
  PatientEmbeddings emb = PatientEmbeddings::init(n, state.hp, cfg.seed);
  std::vector<ad::Var> params = {emb.node_emb, emb.patient_emb};
  Adam opt(params);

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + w <= t; s += w) starts.push_back(s);
  if (starts.back() + w < t) starts.push_back(t - w);

  FineTuneResult res;
  double best = 1e300;
  std::size_t age = 0;
  Tensor best_node = emb.node_emb.value(), best_patient = emb.patient_emb.value();

  std::mt19937_64 rng(mix_seed(cfg.seed, 31));
  std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t iters = std::max<std::size_t>(1, starts.size() / cfg.batch + 1);
    for (std::size_t it = 0; it < iters; ++it) {
      opt.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < cfg.batch; ++b) {
        std::size_t s = starts[pick(rng)];
        Tensor truth_win, mask_win;
        window_slice(series.values, s, w, truth_win);
        window_slice(mask, s, w, mask_win);
        Tensor xv = truth_win;
        for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= mask_win[i];
        ForwardResult fr = model_forward(state, xv, mask_win, g, emb);
        ad::Var loss = combined_loss(fr, truth_win, mask_win, state.hp.quantiles);
        double lv = loss.value()[0];
        if (!std::isfinite(lv))
          throw numeric_error("fine_tune: diverged at epoch " + std::to_string(epoch));
        batch_loss += lv;
        ad::backward(loss);
      }
      opt.step(cfg.lr, 1.0 / static_cast<double>(cfg.batch));
      epoch_loss += batch_loss / static_cast<double>(cfg.batch);
    }
    double observed = epoch_loss / static_cast<double>(
                                       std::max<std::size_t>(1, starts.size() / cfg.batch + 1));
    res.observed_loss.push_back(observed);

    if (truth) {
      Tensor truth_win, mask_win;
      window_slice(*truth, starts[0], w, truth_win);
      window_slice(mask, starts[0], w, mask_win);
      res.whole_field_mae.push_back(median_mae_window(state, emb, g, truth_win, mask_win));
    }

    if (observed < best) {
      best = observed;
      age = 0;
      res.best_epoch = epoch;
      best_node = emb.node_emb.value();
      best_patient = emb.patient_emb.value();
    } else if (++age >= cfg.patience) {
      break;
    }
  }

  emb.node_emb.node()->value = best_node;
  emb.patient_emb.node()->value = best_patient;
  res.imputed = impute_series(state, series.values, mask, g, emb, w);
  res.emb = emb;
  return res;
}

SearchResult hyper_search(const MeshGraph& mesh, const std::vector<FieldSeries>& patients,
                          const std::vector<TrainConfig>& candidates) {
  if (candidates.empty()) throw usage_error("hyper_search: empty grid");
  GraphCtx g = GraphCtx::from_mesh(mesh);

  auto segment = [](const FieldSeries& s, double from, double to) {
    std::size_t t = s.num_frames();
    std::size_t a = static_cast<std::size_t>(std::floor(from * static_cast<double>(t)));
    std::size_t b = static_cast<std::size_t>(std::floor(to * static_cast<double>(t)));
    FieldSeries out = s;
    Tensor v({s.num_nodes(), b - a}), m({s.num_nodes(), b - a});
    for (std::size_t i = 0; i < s.num_nodes(); ++i)
      for (std::size_t f = a; f < b; ++f) {
        v[i * (b - a) + f - a] = s.values[i * t + f];
        m[i * (b - a) + f - a] = s.mask[i * t + f];
      }
    out.values = std::move(v);
    out.mask = std::move(m);
    return out;
  };

  std::vector<FieldSeries> train_seg, val_seg, test_seg;
  for (const auto& p : patients) {
    train_seg.push_back(segment(p, 0.0, 0.85));
    val_seg.push_back(segment(p, 0.85, 0.90));
    test_seg.push_back(segment(p, 0.90, 1.0));
  }

  SearchResult out;
  double best = 1e300;
  std::size_t best_count = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    TrainConfig cfg = candidates[c];
    if (cfg.patience == 0) cfg.patience = 10;
    // validation segments can be shorter than the window; fall back to tails
    bool val_ok = true;
    for (const auto& v : val_seg)
      if (v.num_frames() < cfg.window) val_ok = false;
    TrainResult tr = train_model(mesh, train_seg, cfg, true, true,
                                 val_ok ? &val_seg : nullptr);
    double mae = 0.0;
    for (std::size_t p = 0; p < patients.size(); ++p) {
      const FieldSeries& ts = test_seg[p];
      std::size_t w = std::min(cfg.window, ts.num_frames());
      Tensor emask = evaluation_mask(mesh, ts.num_frames(), ts.sampling_rate,
                                     mix_seed(cfg.seed, 300 + p));
      Tensor q = impute_series(tr.state, ts.values, emask, g, tr.embeddings[p], w);
      std::size_t med = cfg.hp.median_channel();
      std::size_t nc = cfg.hp.quantiles.size();
      double acc = 0.0;
      for (std::size_t i = 0; i < ts.values.size(); ++i)
        acc += std::abs(q[i * nc + med] - ts.values[i]);
      mae += acc / static_cast<double>(ts.values.size());
    }
    mae /= static_cast<double>(patients.size());
    out.test_mae.push_back(mae);
    std::size_t count = param_count(tr.state);
    if (mae < best || (mae == best && count < best_count)) {
      best = mae;
      best_count = count;
      out.best_index = c;
    }
  }
  return out;
}

std::vector<SweepCell> sensitivity_sweep(const ModelState& state, const MeshGraph& mesh,
                                         const std::vector<FieldSeries>& patients,
                                         const std::vector<double>& areas,
                                         const std::vector<double>& dwells,
                                         const FineTuneConfig& cfg) {
  // median split on mean node entropy
  std::vector<double> mean_entropy;
  for (const auto& p : patients) {
    double acc = 0.0;
    std::size_t t = p.num_frames();
    std::vector<double> row(t);
    for (std::size_t i = 0; i < p.num_nodes(); ++i) {
      for (std::size_t f = 0; f < t; ++f) row[f] = p.values[i * t + f];
      acc += shannon_entropy(row);
    }
    mean_entropy.push_back(acc / static_cast<double>(p.num_nodes()));
  }
  std::vector<double> sorted = mean_entropy;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted[sorted.size() / 2];

  std::vector<SweepCell> cells;
  for (double area : areas)
    for (double dwell : dwells) {
      SweepCell cell;
      cell.area = area;
      cell.dwell = dwell;

      struct Acc {
        double abs = 0, sq = 0, y = 0, ape = 0;
        std::size_t n = 0;
      } acc_all, acc_lo, acc_hi;

      for (std::size_t p = 0; p < patients.size(); ++p) {
        const FieldSeries& s = patients[p];
        std::uint64_t seed = mix_seed(cfg.seed, p * 131 + cells.size());
        PatchSet patches = make_patches(mesh, area, 0, seed);
        std::size_t dwell_frames = static_cast<std::size_t>(
            std::llround(dwell * s.sampling_rate));
        if (patches.base_count * std::max<std::size_t>(1, dwell_frames) > s.num_frames()) {
          cell.skipped = true;
          break;
        }
        WalkPlan plan =
            sample_walk(patches, s.num_frames(), dwell, s.sampling_rate, seed + 1, true);
        Tensor mask = walk_to_mask(plan, patches, mesh.num_nodes(), s.num_frames());
        FineTuneResult ft = fine_tune(state, mesh, s, mask, cfg);
        std::size_t med = state.hp.median_channel();
        std::size_t nc = state.hp.quantiles.size();
        Acc& grp = mean_entropy[p] < median ? acc_lo : acc_hi;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
          if (mask[i] != 0.0) continue;  // evaluate on unobserved entries
          double e = ft.imputed[i * nc + med] - s.values[i];
          for (Acc* a : {&acc_all, &grp}) {
            a->abs += std::abs(e);
            a->sq += e * e;
            a->y += std::abs(s.values[i]);
            a->ape += std::abs(e) / std::max(std::abs(s.values[i]), 1e-8);
            ++a->n;
          }
        }
      }

      auto report = [](const Acc& a) {
        MetricReport r;
        if (a.n == 0) return r;
        double n = static_cast<double>(a.n);
        r.mae = a.abs / n;
        r.mse = a.sq / n;
        r.mre = a.y > 0 ? 100.0 * a.abs / a.y : 0.0;
        r.mape = 100.0 * a.ape / n;
        r.count = a.n;
        return r;
      };
      if (!cell.skipped) {
        cell.overall = report(acc_all);
        cell.low_entropy = report(acc_lo);
        cell.high_entropy = report(acc_hi);
      }
      cells.push_back(cell);
    }
  return cells;
}

}  // namespace stimpute
