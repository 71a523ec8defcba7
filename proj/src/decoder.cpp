#include "voxpan/decoder.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace voxpan {

namespace {

constexpr std::uint64_t kWeightStream = 0x9e3779b97f4a7c15ULL;

Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Vector random_vector(std::size_t n, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Vector v(n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return v;
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    throw ShapeMismatch(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void require_size(const Vector& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n) {
    throw ShapeMismatch(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                        std::to_string(v.size()));
  }
}

template <typename M>
void require_finite(const M& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite weight");
}

// Shared by the streaming layer pass and fuse_heads so both round identically.
[[gnu::noinline]] void accumulate_head(Matrix& acc, const Matrix& map, double weight, bool first) {
  if (first) {
    acc = weight * map;
  } else {
    acc += weight * map;
  }
}

[[gnu::noinline]] void add_bias(Matrix& acc, double bias) { acc.array() += bias; }

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    row /= row.sum();
  }
}

std::vector<MaskLogits3D> to_grids(const Matrix& fused, const GridDims& dims) {
  if (static_cast<std::size_t>(fused.cols()) != dims.count()) {
    throw ShapeMismatch("fused mask has " + std::to_string(fused.cols()) + " voxels, dims " + dims.str() +
                        " need " + std::to_string(dims.count()));
  }
  std::vector<MaskLogits3D> out;
  out.reserve(static_cast<std::size_t>(fused.rows()));
  for (Eigen::Index q = 0; q < fused.rows(); ++q) {
    std::vector<float> values(dims.count());
    const double* row = fused.data() + q * fused.cols();
    for (std::size_t v = 0; v < values.size(); ++v) values[v] = static_cast<float>(row[v]);
    out.emplace_back(dims, std::move(values));
  }
  return out;
}

struct LayerPass {
  std::optional<AttentionOutput> attention;
  Matrix refined;
  Matrix fused;
};

LayerPass layer_pass(const Matrix& queries, const Matrix& features, const DecoderLayerWeights& lw,
                     std::size_t num_heads, bool keep_maps, bool fuse) {
  const auto embed = static_cast<std::size_t>(queries.cols());
  if (num_heads == 0 || embed % num_heads != 0) {
    throw InvalidInput("attention: embed dim " + std::to_string(embed) + " not divisible by " +
                       std::to_string(num_heads) + " heads");
  }
  if (static_cast<std::size_t>(features.cols()) != embed) {
    throw ShapeMismatch("attention: voxel features have " + std::to_string(features.cols()) +
                        " channels, queries have " + std::to_string(embed));
  }
  require_shape(lw.key_proj, embed, embed, "key projection");
  require_shape(lw.value_proj, embed, embed, "value projection");
  if (fuse) require_size(lw.fusion_w, num_heads, "head fusion weights");

  const Eigen::Index dk = static_cast<Eigen::Index>(embed / num_heads);
  const double scale = std::sqrt(static_cast<double>(dk));
  const Matrix keys = features * lw.key_proj;
  const Matrix values = features * lw.value_proj;

  LayerPass out;
  if (keep_maps) out.attention.emplace();
  out.refined.resize(queries.rows(), static_cast<Eigen::Index>(embed));
  Matrix scores(queries.rows(), features.rows());
  for (std::size_t k = 0; k < num_heads; ++k) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(k) * dk;
    scores.noalias() = queries.middleCols(c0, dk) * keys.middleCols(c0, dk).transpose();
    scores /= scale;
    if (fuse) accumulate_head(out.fused, scores, lw.fusion_w[static_cast<Eigen::Index>(k)], k == 0);
    if (keep_maps) out.attention->maps.push_back(scores);
    softmax_rows(scores);
    if (keep_maps) out.attention->weights.push_back(scores);
    out.refined.middleCols(c0, dk).noalias() = scores * values.middleCols(c0, dk);
  }
  if (fuse) add_bias(out.fused, lw.fusion_b);
  if (keep_maps) out.attention->refined = out.refined;
  return out;
}

}  // namespace

void DecoderConfig::validate() const {
  if (num_queries == 0 || num_layers == 0 || num_classes == 0) {
    throw InvalidInput("decoder config: queries, layers and classes must be >= 1");
  }
  if (num_heads == 0 || embed_dim % num_heads != 0) {
    throw InvalidInput("decoder config: embed_dim must be divisible by num_heads");
  }
  if (pe_dim == 0 || pe_dim % 6 != 0) throw InvalidInput("decoder config: pe_dim must be a positive multiple of 6");
  voxel_dims.validate();
}

DecoderWeights DecoderWeights::random(const DecoderConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed ^ kWeightStream);
  const std::size_t c = cfg.embed_dim;
  DecoderWeights w;
  w.reference_points = init_reference_points(cfg);
  w.mlp_w1 = random_normal(cfg.pe_dim, c, 1.0 / std::sqrt(static_cast<double>(cfg.pe_dim)), rng);
  w.mlp_b1 = random_vector(c, 0.1, rng);
  w.mlp_w2 = random_normal(c, c, 1.0 / std::sqrt(static_cast<double>(c)), rng);
  w.mlp_b2 = random_vector(c, 0.1, rng);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    DecoderLayerWeights lw;
    lw.key_proj = random_normal(c, c, 1.0 / std::sqrt(static_cast<double>(c)), rng);
    lw.value_proj = random_normal(c, c, 1.0 / std::sqrt(static_cast<double>(c)), rng);
    lw.fusion_w = random_vector(cfg.num_heads, 1.0 / std::sqrt(static_cast<double>(cfg.num_heads)), rng);
    lw.fusion_b = random_vector(1, 0.1, rng)[0];
    lw.cls_w = random_normal(c, cfg.num_classes, 1.0 / std::sqrt(static_cast<double>(c)), rng);
    lw.cls_b = random_vector(cfg.num_classes, 0.1, rng);
    w.layers.push_back(std::move(lw));
  }
  return w;
}

void DecoderWeights::validate(const DecoderConfig& cfg) const {
  cfg.validate();
  const std::size_t c = cfg.embed_dim;
  require_shape(reference_points, cfg.num_queries, 3, "reference points");
  require_shape(mlp_w1, cfg.pe_dim, c, "query mlp layer 1");
  require_size(mlp_b1, c, "query mlp bias 1");
  require_shape(mlp_w2, c, c, "query mlp layer 2");
  require_size(mlp_b2, c, "query mlp bias 2");
  require_finite(reference_points, "reference points");
  require_finite(mlp_w1, "query mlp");
  require_finite(mlp_b1, "query mlp");
  require_finite(mlp_w2, "query mlp");
  require_finite(mlp_b2, "query mlp");
  if (layers.size() != cfg.num_layers) {
    throw ShapeMismatch("decoder weights hold " + std::to_string(layers.size()) + " layers, config wants " +
                        std::to_string(cfg.num_layers));
  }
  for (const auto& lw : layers) {
    require_shape(lw.key_proj, c, c, "key projection");
    require_shape(lw.value_proj, c, c, "value projection");
    require_size(lw.fusion_w, cfg.num_heads, "head fusion weights");
    require_shape(lw.cls_w, c, cfg.num_classes, "classifier");
    require_size(lw.cls_b, cfg.num_classes, "classifier bias");
    require_finite(lw.key_proj, "key projection");
    require_finite(lw.value_proj, "value projection");
    require_finite(lw.fusion_w, "head fusion");
    require_finite(lw.cls_w, "classifier");
    require_finite(lw.cls_b, "classifier");
    if (!std::isfinite(lw.fusion_b)) throw InvalidInput("head fusion bias: non-finite weight");
  }
}

Matrix init_reference_points(const DecoderConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix pts(static_cast<Eigen::Index>(cfg.num_queries), 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = dist(rng);
  return pts;
}

Matrix positional_encoding(const Matrix& points, std::size_t dim) {
  if (dim == 0 || dim % 6 != 0) {
    throw InvalidInput("positional_encoding: dim " + std::to_string(dim) + " is not a positive multiple of 6");
  }
  if (points.cols() != 3) throw ShapeMismatch("positional_encoding: points must have 3 columns");
  const std::size_t freqs = dim / 6;
  const std::size_t block = dim / 3;
  Matrix out(points.rows(), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const double p = points(r, static_cast<Eigen::Index>(axis));
      for (std::size_t i = 0; i < freqs; ++i) {
        const double w = 2.0 * std::numbers::pi *
                         std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(freqs));
        const auto col = static_cast<Eigen::Index>(axis * block + 2 * i);
        out(r, col) = std::sin(w * p);
        out(r, col + 1) = std::cos(w * p);
      }
    }
  }
  return out;
}

Matrix initial_queries(const DecoderConfig& cfg, const DecoderWeights& weights) {
  const Matrix pe = positional_encoding(weights.reference_points, cfg.pe_dim);
  Matrix hidden = pe * weights.mlp_w1;
  hidden.rowwise() += weights.mlp_b1.transpose();
  hidden = hidden.cwiseMax(0.0);
  Matrix q = hidden * weights.mlp_w2;
  q.rowwise() += weights.mlp_b2.transpose();
  return q;
}

AttentionOutput attention_layer(const Matrix& queries, const Matrix& voxel_features, const DecoderLayerWeights& lw,
                                std::size_t num_heads) {
  return std::move(*layer_pass(queries, voxel_features, lw, num_heads, true, false).attention);
}

std::vector<MaskLogits3D> fuse_heads(const std::vector<Matrix>& maps, const Vector& fusion_w, double fusion_b,
                                     const GridDims& dims) {
  if (maps.empty()) throw InvalidInput("fuse_heads: no attention maps");
  require_size(fusion_w, maps.size(), "head fusion weights");
  Matrix fused;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    require_shape(maps[k], static_cast<std::size_t>(maps[0].rows()), static_cast<std::size_t>(maps[0].cols()),
                  "attention map");
    accumulate_head(fused, maps[k], fusion_w[static_cast<Eigen::Index>(k)], k == 0);
  }
  add_bias(fused, fusion_b);
  return to_grids(fused, dims);
}

Matrix classify(const Matrix& refined, const DecoderLayerWeights& lw) {
  Matrix logits = refined * lw.cls_w;
  logits.rowwise() += lw.cls_b.transpose();
  return logits.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

std::vector<LayerOutput> forward_stack(const DecoderConfig& cfg, const DecoderWeights& weights,
                                       const Matrix& voxel_features, const ForwardOptions& opts) {
  weights.validate(cfg);
  require_shape(voxel_features, cfg.voxel_count(), cfg.embed_dim, "voxel features");
  std::vector<LayerOutput> out;
  out.reserve(cfg.num_layers);
  Matrix queries = initial_queries(cfg, weights);
  for (const auto& lw : weights.layers) {
    LayerPass pass = layer_pass(queries, voxel_features, lw, cfg.num_heads, opts.keep_attention, true);
    LayerOutput lo;
    lo.mask_logits = to_grids(pass.fused, cfg.voxel_dims);
    lo.class_probs = classify(pass.refined, lw);
    lo.attention = std::move(pass.attention);
    lo.refined = std::move(pass.refined);
    queries = lo.refined;
    out.push_back(std::move(lo));
  }
  return out;
}

std::vector<MaskPrediction> to_predictions(const LayerOutput& layer) {
  std::vector<MaskPrediction> preds;
  preds.reserve(layer.mask_logits.size());
  for (std::size_t q = 0; q < layer.mask_logits.size(); ++q) {
    MaskPrediction p;
    const auto row = layer.class_probs.row(static_cast<Eigen::Index>(q));
    p.class_probs.assign(row.data(), row.data() + row.size());
    p.logits = layer.mask_logits[q];
    preds.push_back(std::move(p));
  }
  return preds;
}

Matrix random_voxel_features(const DecoderConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_normal(cfg.voxel_count(), cfg.embed_dim, 1.0, rng);
}

}  // namespace voxpan
