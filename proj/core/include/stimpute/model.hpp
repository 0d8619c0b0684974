#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stimpute/autodiff.hpp"
#include "stimpute/mesh.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

struct HyperParams {
  std::size_t d = 16;       // hidden size
  std::size_t q = 8;        // node embedding size
  std::size_t r = 4;        // patient embedding size
  std::size_t layers = 1;   // K
  std::size_t hidden = 64;  // MLP_enc / MLP_dec hidden width
  std::vector<double> quantiles = {0.1, 0.5, 0.9};

  std::size_t median_channel() const;
};

/// One-hidden-layer MLP, tanh hidden activation, linear output.
struct Mlp {
  ad::Var w1, b1, w2, b2;
  std::size_t in_dim() const { return w1.value().dims()[0]; }
};

ad::Var mlp_apply(const Mlp& mlp, const ad::Var& in);

struct GateParams {
  Mlp msg;          // [o_i || o_j] -> message
  ad::Var w_alpha;  // message -> scalar edge gate, through sigmoid
  Mlp update;       // [h || m] -> pre-activation state
  ad::Var w_skip;   // o_i -> residual
};

struct LayerParams {
  GateParams reset, update_gate, candidate;
  ad::Var w_init, b_init;  // hidden-state init from node embeddings
};

struct DirectionParams {
  Mlp enc;
  std::vector<LayerParams> layers;
  ad::Var w_stage1, b_stage1;
  std::vector<ad::Var> w_diff;  // diffusion-convolution taps, order 0..2
  ad::Var b_diff;
  ad::Var w_stage2, b_stage2;
};

/// All shared learnable parameters; forward and backward encoders do not
/// share weights. Patient embeddings live outside this struct.
struct ModelState {
  HyperParams hp;
  DirectionParams fwd, bwd;
  Mlp dec;

  static ModelState init(const HyperParams& hp, std::uint64_t seed);
  std::vector<std::pair<std::string, ad::Var>> named_params() const;
  std::vector<ad::Var> params() const;
  /// FNV-1a over all parameter bytes in name order; freeze-contract checks.
  std::uint64_t checksum() const;
};

struct PatientEmbeddings {
  ad::Var node_emb;     // N x q
  ad::Var patient_emb;  // 1 x r

  static PatientEmbeddings init(std::size_t n, const HyperParams& hp, std::uint64_t seed);
  static PatientEmbeddings zeros(std::size_t n, const HyperParams& hp);
};

/// Precomputed per-mesh context: deterministic directed edge list sorted by
/// (target, source) and the dense symmetric-normalised adjacency.
struct GraphCtx {
  std::size_t n = 0;
  std::vector<std::size_t> edge_src, edge_tgt;
  ad::Var adj_norm;  // constant N x N

  static GraphCtx from_mesh(const MeshGraph& mesh);
  static GraphCtx edgeless(std::size_t n);  // univariate baselines
};

// --- architecture pieces (exposed for unit tests) -------------------------

ad::Var encode_frame(const ad::Var& x_filled, const ad::Var& m, const PatientEmbeddings& emb,
                     const Mlp& enc);
ad::Var init_hidden(const PatientEmbeddings& emb, const LayerParams& layer);
/// Gated anisotropic message passing with residual skip; pre-activation.
ad::Var mp_gate(const ad::Var& o, const ad::Var& h_prev, const GraphCtx& g,
                const GateParams& gp);
ad::Var grnn_cell_step(const ad::Var& h_prev, const ad::Var& z, const GraphCtx& g,
                       const LayerParams& lp);
ad::Var stage_one_impute(const ad::Var& h_top, const DirectionParams& dir);
std::pair<ad::Var, ad::Var> stage_two_impute(const ad::Var& h_top, const ad::Var& x1,
                                             const ad::Var& m, const GraphCtx& g,
                                             const DirectionParams& dir);

struct EncodeResult {
  // per frame, in original time order regardless of direction
  std::vector<ad::Var> s, h, x1, x2;
};

enum class Direction { forward, backward };

EncodeResult st_encode(const ModelState& state, Direction dir, const Tensor& x,
                       const Tensor& m, const GraphCtx& g, const PatientEmbeddings& emb);

struct ForwardResult {
  std::vector<ad::Var> y;  // per frame N x |C|
  EncodeResult fwd, bwd;
};

ForwardResult model_forward(const ModelState& state, const Tensor& x, const Tensor& m,
                            const GraphCtx& g, const PatientEmbeddings& emb);

// --- losses ----------------------------------------------------------------

/// Masked mean over nodes/frames of the per-entry mean-over-quantiles pinball
/// value. Throws when the evaluation mask is all zero.
ad::Var pinball_loss(const std::vector<ad::Var>& pred, const Tensor& target,
                     const Tensor& eval_mask, const std::vector<double>& quantiles);

/// Sum of the five per-head pinball terms.
ad::Var combined_loss(const ForwardResult& out, const Tensor& target, const Tensor& eval_mask,
                      const std::vector<double>& quantiles);

/// Whole-recording quantile predictions from tiled windows; overlapping
/// window predictions are averaged. Output N x T x |C| row-major.
Tensor impute_series(const ModelState& state, const Tensor& values, const Tensor& mask,
                     const GraphCtx& g, const PatientEmbeddings& emb, std::size_t window);

// --- checkpoints -----------------------------------------------------------

void save_checkpoint(const std::filesystem::path& dir, const ModelState& state,
                     const std::vector<std::pair<std::string, PatientEmbeddings>>& embeddings,
                     std::uint64_t seed);
struct Checkpoint {
  ModelState state;
  std::vector<std::pair<std::string, PatientEmbeddings>> embeddings;
  std::uint64_t seed = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace stimpute
