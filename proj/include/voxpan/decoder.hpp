#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "voxpan/grid.hpp"
#include "voxpan/merging.hpp"

namespace voxpan {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct DecoderConfig {
  std::size_t num_queries = 300;
  std::size_t num_heads = 8;
  std::size_t num_layers = 3;
  std::size_t embed_dim = 256;
  // Width of the sinusoidal encoding of reference points fed to the query MLP.
  std::size_t pe_dim = 192;
  std::size_t num_classes = 8;
  GridDims voxel_dims{64, 64, 8, 0.8};
  std::uint64_t seed = 0;

  std::size_t head_dim() const { return embed_dim / num_heads; }
  std::size_t voxel_count() const { return voxel_dims.count(); }
  void validate() const;
};

struct DecoderLayerWeights {
  Matrix key_proj;    // embed x embed
  Matrix value_proj;  // embed x embed
  Vector fusion_w;    // one weight per head
  double fusion_b = 0.0;
  Matrix cls_w;  // embed x classes
  Vector cls_b;  // classes
};

struct DecoderWeights {
  Matrix reference_points;  // queries x 3, in [0, 1]
  Matrix mlp_w1;            // pe_dim x embed
  Vector mlp_b1;
  Matrix mlp_w2;  // embed x embed
  Vector mlp_b2;
  std::vector<DecoderLayerWeights> layers;

  // Seeded random weights; reference points come from init_reference_points.
  static DecoderWeights random(const DecoderConfig& cfg);
  // Throws ShapeMismatch or InvalidInput when shapes disagree with cfg or
  // values are not finite.
  void validate(const DecoderConfig& cfg) const;
};

// cfg.num_queries points drawn uniformly from [0, 1]^3, deterministic in cfg.seed.
Matrix init_reference_points(const DecoderConfig& cfg);

// Per axis, dim/6 frequencies w_i = 2*pi * 10000^(-i / (dim/6)) laid out as
// [sin(w_0 p), cos(w_0 p), sin(w_1 p), ...]; axis blocks concatenated x, y, z.
Matrix positional_encoding(const Matrix& points, std::size_t dim);

// MLP(PE(reference points)): linear, ReLU, linear.
Matrix initial_queries(const DecoderConfig& cfg, const DecoderWeights& weights);

struct AttentionOutput {
  // Raw scaled scores Q_k K_k^T / sqrt(d_k), one queries x voxels matrix per head.
  std::vector<Matrix> maps;
  // Row-wise softmax of each map.
  std::vector<Matrix> weights;
  Matrix refined;  // queries x embed, heads concatenated
};

// Keys and values are projected from the voxel features; queries split into
// heads of d_k = embed / heads columns; refined = softmax(A) V per head.
AttentionOutput attention_layer(const Matrix& queries, const Matrix& voxel_features, const DecoderLayerWeights& lw,
                                std::size_t num_heads);

// logit(q, v) = sum_k w_k * A_k(q, v) + b, reshaped onto `dims`.
std::vector<MaskLogits3D> fuse_heads(const std::vector<Matrix>& maps, const Vector& fusion_w, double fusion_b,
                                     const GridDims& dims);

// Per-class sigmoid probabilities from refined queries.
Matrix classify(const Matrix& refined, const DecoderLayerWeights& lw);

struct LayerOutput {
  std::optional<AttentionOutput> attention;  // kept only on request
  Matrix refined;
  std::vector<MaskLogits3D> mask_logits;
  Matrix class_probs;  // queries x classes
};

struct ForwardOptions {
  // Retaining maps costs queries * heads * voxels doubles per layer.
  bool keep_attention = false;
};

// Runs every layer in order; layer l consumes the refined queries of layer l-1.
std::vector<LayerOutput> forward_stack(const DecoderConfig& cfg, const DecoderWeights& weights,
                                       const Matrix& voxel_features, const ForwardOptions& opts = {});

// Mask predictions for merging/matching from one layer's output.
std::vector<MaskPrediction> to_predictions(const LayerOutput& layer);

// Seeded standard-normal voxel features (voxels x embed).
Matrix random_voxel_features(const DecoderConfig& cfg, std::uint64_t seed);

}  // namespace voxpan
