#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rmvh/anchor_graph.hpp"
#include "rmvh/codes.hpp"
#include "rmvh/common.hpp"
#include "rmvh/dataset.hpp"
#include "rmvh/kernel_sim.hpp"
#include "rmvh/lowrank_alm.hpp"
#include "rmvh/oos_encoder.hpp"

namespace rmvh {

// Orientation: relaxed codes Y and per-view codes Y^(m) are N x P (one row
// per sample), W is R x P, b is a P-vector, Khat and K^(m) are R x N.
// The regression residual is Khat^T W + 1 b^T - Y.

struct HyperParams {
  double gamma = 1e-4;   // per-view code consensus
  double delta = 1e-6;   // ridge on W
  double alpha = 1e-1;   // nuclear norm on Khat
  double beta = 1.0;     // regression of Y on the kernel hash functions
  double lambda = 1e-3;  // l2,1 on E^(m)
  Index bits = 32;       // P
  int outer_iters = 60;
  double objective_tol = 1e-4;  // relative change that ends the alternation
  bool orthogonalize = true;    // enforce Y^T Y = N I after each code update
  double cg_tol = 1e-8;
  int cg_max_iters = 500;

  void validate() const;
};

struct GraphConfig {
  Index landmarks = 300;  // L
  Index k = 3;
  LandmarkMode mode = LandmarkMode::kmeans;
  int kmeans_iters = 15;
  std::optional<double> bandwidth;  // default: per-view self-scaling
};

struct KernelSetup {
  Index landmarks = 0;  // R; 0 means R = L
  KernelLandmarkMode mode = KernelLandmarkMode::kmeans;
  Index self_tuning_k = 7;
  QueryKernelMode query_mode = QueryKernelMode::view_mean;
  int kmeans_iters = 15;
  // With R == L, graph landmarks of view m are the m-th block of the kernel
  // landmarks instead of a separate per-view clustering.
  bool share_landmarks = true;
};

enum class RecoveryMode {
  alm,        // Khat from the low-rank recovery
  view_mean,  // ablation: Khat fixed to (1/M) sum_m K^(m)
};

struct TrainConfig {
  HyperParams hp;
  ALMConfig alm;  // alpha / lambda are overwritten from hp
  GraphConfig graph;
  KernelSetup kernel;
  BaseSetConfig base;
  bool build_base = true;
  RecoveryMode recovery = RecoveryMode::alm;
  int alm_refresh_every = 0;  // > 0: re-run the recovery every T outer iterations
  std::uint64_t seed = 0;
};

struct HashModel {
  Matrix w;  // R x P
  Vector b;  // P
  KernelLandmarks landmarks;
  KernelConfig kernel;
  std::optional<BaseSet> base;

  Index bits() const { return w.cols(); }
  Index num_landmarks() const { return w.rows(); }

  /// Pre-sign outputs K^T W + 1 b^T for kernel columns K (R x n), n x P.
  Matrix project(const Matrix& kernel_columns) const;
};

struct CodeState {
  Matrix y;                    // N x P relaxed codes
  std::vector<Matrix> y_view;  // M matrices, N x P

  CodeMatrix binary() const { return CodeMatrix::from_real(y); }
};

struct TrainDiagnostics {
  ALMDiagnostics alm;
  std::vector<double> objective;          // after each outer iteration
  std::vector<double> iteration_seconds;  // wall time of each outer iteration
  std::vector<int> cg_iterations;         // worst column, per outer iteration
  double setup_seconds = 0.0;             // landmarks, graphs, kernels
  double recovery_seconds = 0.0;
  int outer_iterations = 0;
  bool converged = false;

  /// CSV: "iteration,objective,seconds,cg_iterations".
  void write_objective_csv(std::ostream& out) const;
};

struct TrainResult {
  HashModel model;
  CodeState codes;
  Matrix khat;
  std::vector<Matrix> e;
  std::vector<AnchorGraph> graphs;
  KernelizedSimilarity kernels;
  CodeMatrix database_codes;  // sign(W^T Khat_i + b)
  TrainDiagnostics diagnostics;
};

struct WbSolution {
  Matrix w;
  Vector b;
};

/// Closed-form minimizer of ||Khat^T W + 1 b^T - Y||_F^2 + delta ||W||_F^2:
/// W = (Khat Lc Khat^T + delta I)^-1 Khat Lc Y, b = (Y^T 1 - W^T Khat 1) / N,
/// Lc the centering matrix. Throws NumericFailure when delta = 0 and the
/// system is singular.
WbSolution update_wb(const Matrix& khat, const Matrix& y, double delta);

struct CodeUpdateInfo {
  int max_cg_iterations = 0;
};

/// One block sweep over the codes:
///  (a) Y^(m) solves (2 L_m + gamma I) Y^(m) = gamma Y by conjugate gradients
///      (warm-started from the current Y^(m));
///  (b) Y = (gamma sum_m Y^(m) + beta (Khat^T W + 1 b^T)) / (gamma M + beta);
///  (c) if hp.orthogonalize, Y = sqrt(N) Y (Y^T Y)^-1/2.
/// With gamma = 0 the per-view problem has no unique minimizer; Y^(m) is
/// then set to the column means of Y (the gamma -> 0 limit on a connected graph).
CodeState update_codes(const CodeState& state, const std::vector<AnchorGraph>& graphs, const Matrix& khat,
                       const WbSolution& wb, const HyperParams& hp, CodeUpdateInfo* info = nullptr);

/// Symmetric orthogonalization Y (Y^T Y)^-1/2 scaled so that Y^T Y = N I,
/// computed as the polar factor so rank-deficient Y is handled too.
Matrix orthogonalize_codes(const Matrix& y);

struct ObjectiveTerms {
  double graph = 0.0;      // sum_m 2 tr(Y_m^T L_m Y_m)
  double consensus = 0.0;  // gamma sum_m ||Y - Y_m||^2
  double nuclear = 0.0;    // alpha ||Khat||_*
  double sparse = 0.0;     // lambda sum_m ||E_m||_{2,1}
  double regression = 0.0; // beta (||Khat^T W + 1 b^T - Y||^2 + delta ||W||^2)

  double total() const { return graph + consensus + nuclear + sparse + regression; }
};

/// Relaxed training objective, Laplacian terms evaluated in factored form.
/// `khat_nuclear` skips the SVD of Khat when supplied.
ObjectiveTerms objective_terms(const CodeState& state, const std::vector<AnchorGraph>& graphs, const Matrix& khat,
                               const std::vector<Matrix>& e, const WbSolution& wb, const HyperParams& hp,
                               std::optional<double> khat_nuclear = std::nullopt);

double objective(const CodeState& state, const std::vector<AnchorGraph>& graphs, const Matrix& khat,
                 const std::vector<Matrix>& e, const WbSolution& wb, const HyperParams& hp);

/// Full pipeline: landmarks, graphs and kernels; recovery of Khat; spectral
/// initialization of Y; alternation of update_wb and update_codes until the
/// relative objective change drops below hp.objective_tol or hp.outer_iters
/// is reached; final refit of W, b; base set for out-of-sample encoding.
TrainResult train(const MultiViewDataset& ds, const TrainConfig& cfg);

/// sign(W^T Khat_i + b) per column of khat, sign(0) = +1.
CodeMatrix encode_database(const HashModel& model, const Matrix& khat);

/// sign(W^T k(x) + b) with k(x) the query kernel vector in `mode`.
CodeMatrix encode_query(const HashModel& model, const std::vector<Vector>& x, QueryKernelMode mode);
CodeMatrix encode_query(const HashModel& model, const std::vector<Vector>& x);

/// Query-path codes for every sample of ds.
CodeMatrix encode_queries(const HashModel& model, const MultiViewDataset& ds);
CodeMatrix encode_queries(const HashModel& model, const MultiViewDataset& ds, QueryKernelMode mode);

/// Pre-sign query-path embeddings (n x P).
Matrix embed_queries(const HashModel& model, const MultiViewDataset& ds, QueryKernelMode mode);

}  // namespace rmvh
