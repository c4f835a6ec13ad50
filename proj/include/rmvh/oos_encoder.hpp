#pragma once

#include <cstdint>

#include "rmvh/codes.hpp"
#include "rmvh/common.hpp"
#include "rmvh/dataset.hpp"

namespace rmvh {

struct HashModel;

/// Prototype set for out-of-sample encoding. Centers live in the
/// concatenated feature space (d x Z); embeddings are the real-valued
/// pre-sign hash outputs of the centers (Z x P).
struct BaseSet {
  Matrix centers;
  Matrix embeddings;
  double sigma = 1.0;
  Index k = 25;  // neighbors used per query; k == Z is the full-sum form

  Index size() const { return centers.cols(); }
};

struct BaseSetConfig {
  Index size = 300;          // Z, clamped to N
  Index neighbors = 25;      // k_oos, clamped to Z
  Index self_tuning_k = 7;
  int kmeans_iters = 30;
};

/// K-means over the concatenated features, embeddings W^T k(c_j) + b through
/// the model's query kernel path, sigma self-tuned over center-to-center
/// distances (k-th nearest other center, median).
BaseSet build_base_set(const MultiViewDataset& ds, const HashModel& model, const BaseSetConfig& cfg,
                       std::uint64_t seed);

/// Gaussian-weighted average of `embeddings` rows over the k columns of
/// `points` nearest to x, weights exp(-||x - x_i||^2 / sigma^2). If every
/// weight underflows, returns the nearest neighbor's embedding.
Vector inductive_embed(const Vector& x, const Matrix& points, const Matrix& embeddings, Index k, double sigma);

/// Real-valued prototype embedding of x against the base set.
Vector prototype_embed(const Vector& x, const BaseSet& base);

/// sign(prototype_embed), sign(0) = +1. Single-row CodeMatrix.
CodeMatrix prototype_encode(const Vector& x, const BaseSet& base);

/// Batched prototype codes for the N samples of ds (concatenated features).
CodeMatrix prototype_encode_all(const MultiViewDataset& ds, const BaseSet& base);

}  // namespace rmvh
