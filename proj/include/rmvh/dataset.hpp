#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rmvh/common.hpp"

namespace rmvh {

/// N samples observed under M views. View m is a d_m x N matrix (one sample
/// per column). Values are held in double precision but every value produced
/// by this module is representable as a 32-bit float, so that the MVH1 file
/// format round-trips exactly.
struct MultiViewDataset {
  std::string name;
  std::vector<Matrix> views;
  std::optional<std::vector<int>> labels;
  std::vector<std::uint64_t> ids;

  Index num_samples() const { return views.empty() ? 0 : views.front().cols(); }
  Index num_views() const { return static_cast<Index>(views.size()); }
  std::vector<Index> dims() const;
  Index total_dim() const;

  /// Throws FormatError when the views disagree on N, a view is empty, the
  /// label/id counts are off, or an entry is not finite.
  void validate() const;

  /// Stacks all views into a (sum d_m) x N matrix.
  Matrix concatenated() const;

  /// Column subset, preserving labels and ids.
  MultiViewDataset subset(const std::vector<Index>& columns) const;
};

enum class CorruptionKind { gaussian_fraction, block_zero };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_fraction;
  double fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Reads one MVH1 view file ("MVH1", u64 rows, u64 cols, rows*cols f32, all
/// little-endian, row-major). Files ending in ".gz" are gunzipped on the fly.
Matrix read_view(const std::filesystem::path& path);
void write_view(const std::filesystem::path& path, const Matrix& view);

/// Manifest: UTF-8 "key = value" lines; keys `name`, `view` (repeated, in
/// view order), `labels`, `ids`. Relative paths resolve against the
/// manifest's directory. '#' starts a comment.
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes `<stem>.view<m>.mvh` files (plus labels/ids text files) next to the
/// manifest and returns the written paths, manifest first.
std::vector<std::filesystem::path> save_dataset(const MultiViewDataset& ds,
                                                const std::filesystem::path& manifest_path,
                                                bool gzip = false);

/// Clustered multi-view data: samples share a latent cluster identity; view m
/// is an independent random linear embedding of the latent cluster centers
/// plus isotropic Gaussian noise of scale `view_noise`. Labels are
/// i / per_cluster.
MultiViewDataset synth_multiview(Index n_clusters, Index per_cluster, const std::vector<Index>& dims,
                                 double view_noise, std::uint64_t seed);

/// Adds an independent N(0,1) draw to a uniformly sampled fraction of entries
/// of every view (exactly round(fraction * d_m * N) entries per view).
MultiViewDataset corrupt_gaussian(const MultiViewDataset& ds, const CorruptionSpec& spec);

/// For every sample and view, zeroes ceil(fraction * d_m) consecutive
/// coordinates starting at a uniformly drawn offset.
MultiViewDataset corrupt_block(const MultiViewDataset& ds, const CorruptionSpec& spec);

/// Dispatches on spec.kind.
MultiViewDataset corrupt(const MultiViewDataset& ds, const CorruptionSpec& spec);

struct Split {
  MultiViewDataset train;
  MultiViewDataset query;
  std::vector<Index> train_index;  // ascending
  std::vector<Index> query_index;  // ascending
};

Split split(const MultiViewDataset& ds, Index n_query, std::uint64_t seed);

/// Rounds every entry to the nearest float.
Matrix round_to_float(const Matrix& m);

}  // namespace rmvh
