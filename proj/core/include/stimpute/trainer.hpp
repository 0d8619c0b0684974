#pragma once

#include <cstdint>
#include <vector>

#include "stimpute/metrics.hpp"
#include "stimpute/model.hpp"
#include "stimpute/series.hpp"
#include "stimpute/walk.hpp"

namespace stimpute {

struct MaskRanges {
  double area_min = 0.025;
  double area_max = 0.5;
  double dwell_min = 0.2;  // seconds
  double dwell_max = 4.0;
  unsigned overlap_max = 3;
};

struct TrainConfig {
  HyperParams hp;
  std::size_t batch = 4;
  std::size_t window = 20;
  std::size_t stride = 1;
  std::size_t epochs = 30;
  std::size_t iterations = 0;  // per epoch; 0 derives windows/batch
  double lr = 9e-4;
  bool cosine = true;
  std::size_t patience = 0;  // 0 disables early stopping on validation MAE
  MaskRanges mask_ranges;
  std::uint64_t seed = 0;
};

struct FineTuneConfig {
  double lr = 0.005;
  std::size_t batch = 16;
  std::size_t patience = 10;
  std::size_t max_epochs = 100;
  std::size_t window = 20;
  std::uint64_t seed = 0;
};

/// Adam over a fixed parameter list; step() consumes accumulated gradients.
class Adam {
 public:
  explicit Adam(std::vector<ad::Var> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(double lr, double grad_scale = 1.0);
  void zero_grad();

 private:
  std::vector<ad::Var> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct MaskDraw {
  double area = 0.0;
  double dwell = 0.0;
  unsigned overlap = 0;
};

/// Uniform draw of walk parameters from the configured ranges.
MaskDraw draw_mask_params(const MaskRanges& ranges, std::uint64_t seed);

/// Random catheter-walk observation mask: area, dwell and overlap drawn
/// uniformly from the configured ranges.
Tensor sample_training_mask(const MeshGraph& mesh, std::size_t frames, double sampling_rate,
                            const MaskRanges& ranges, std::uint64_t seed);

/// The fixed evaluation walk: 10% area, 1 s dwell, no overlap, first cycle
/// tiled verbatim.
Tensor evaluation_mask(const MeshGraph& mesh, std::size_t frames, double sampling_rate,
                       std::uint64_t seed);

struct EpochStat {
  double train_loss = 0.0;
  double val_mae = 0.0;
};

struct TrainResult {
  ModelState state;
  std::vector<PatientEmbeddings> embeddings;  // one per training patient
  std::vector<EpochStat> history;
};

/// Self-supervised training: windows observed through freshly sampled walk
/// masks, loss evaluated against the full field (evaluation mask all ones).
/// When val_patients is given, per-epoch validation MAE comes from those
/// series (same patient order); otherwise from the training series' temporal
/// tails. With cfg.patience > 0 the best-validation state is returned.
TrainResult train_model(const MeshGraph& mesh, const std::vector<FieldSeries>& patients,
                        const TrainConfig& cfg, bool use_graph = true,
                        bool use_embeddings = true,
                        const std::vector<FieldSeries>* val_patients = nullptr);

struct FineTuneResult {
  PatientEmbeddings emb;
  std::vector<double> observed_loss;     // per epoch
  std::vector<double> whole_field_mae;   // per epoch, only when truth given
  std::size_t best_epoch = 0;
  Tensor imputed;  // N x T x |C|
};

/// Freezes every shared parameter; optimises fresh node/patient embeddings on
/// the observed entries only, early-stopping on that observed-patch loss.
FineTuneResult fine_tune(const ModelState& state, const MeshGraph& mesh,
                         const FieldSeries& series, const Tensor& mask,
                         const FineTuneConfig& cfg, const Tensor* truth = nullptr);

struct SearchResult {
  std::size_t best_index = 0;
  std::vector<double> test_mae;  // per candidate
};

/// Sequential 85/5/10 temporal split per patient; candidates trained with
/// early stopping on the validation segment, ranked by test-segment MAE.
/// Ties break toward the smaller parameter count.
SearchResult hyper_search(const MeshGraph& mesh, const std::vector<FieldSeries>& patients,
                          const std::vector<TrainConfig>& candidates);

struct SweepCell {
  double area = 0.0;
  double dwell = 0.0;
  bool skipped = false;  // walk cannot complete one full cycle
  MetricReport overall, low_entropy, high_entropy;
};

/// Fine-tune + evaluate every (area, dwell) combination; patients grouped by
/// median mean-node-entropy.
std::vector<SweepCell> sensitivity_sweep(const ModelState& state, const MeshGraph& mesh,
                                         const std::vector<FieldSeries>& patients,
                                         const std::vector<double>& areas,
                                         const std::vector<double>& dwells,
                                         const FineTuneConfig& cfg);

}  // namespace stimpute
