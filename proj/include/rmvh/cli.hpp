#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rmvh/dataset.hpp"
#include "rmvh/hash_trainer.hpp"

namespace rmvh {

enum class Preset { none, l300_k3, l500_k5 };
enum class EncoderPath { kernel, prototype };

/// Everything a command can be configured with. Field names map one to one
/// onto flat config keys and same-named command-line flags.
struct RunConfig {
  TrainConfig train;
  Preset preset = Preset::none;

  // synth
  Index clusters = 10;
  Index per_cluster = 200;
  std::vector<Index> dims{64, 64};
  double view_noise = 1.0;
  Index n_query = 0;
  bool gzip = false;

  // corrupt
  CorruptionKind corruption = CorruptionKind::gaussian_fraction;
  double fraction = 0.2;

  // encode / query / eval
  EncoderPath encoder = EncoderPath::kernel;
  Index top_k = 100;
  Index radius = 2;

  // paths
  std::string data;
  std::string db;
  std::string query_out;
  std::string model;
  std::string out;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// Applies the L / k preset unless `explicit_graph` says the user set them.
void apply_preset(RunConfig& cfg, bool explicit_landmarks, bool explicit_k);

/// Throws InvalidArgument naming the expected and actual per-view dims.
void check_model_dims(const HashModel& model, const MultiViewDataset& ds);

/// Codes for every sample of ds via the chosen encoder path.
CodeMatrix encode_dataset(const HashModel& model, const MultiViewDataset& ds, EncoderPath path);

/// Entry point of the command-line tool. args excludes the program name.
/// Returns the process exit code; 0 iff the command wrote all its outputs.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rmvh
