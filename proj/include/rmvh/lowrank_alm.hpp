#pragma once

#include <iosfwd>
#include <vector>

#include "rmvh/common.hpp"

namespace rmvh {

enum class ConstraintMode { nonneg, simplex };
enum class ShrinkMode { column_l21, elementwise };

/// Q-step variant.
///  exact:         Q = svt(Khat + B/mu, alpha/mu), the minimizer of the
///                 augmented Lagrangian in Q.
///  scaled:        Q = svt(Khat + B/(mu alpha), 1/(mu alpha)).
enum class QStepMode { exact, scaled };

/// Averaging weight of the Khat step: 1/(M+1) is the exact minimizer of the
/// M view terms plus the Q coupling term; 1/M is the literal variant.
enum class AveragingMode { m_plus_one, m };

struct ALMConfig {
  double alpha = 0.1;   // nuclear-norm weight
  double lambda = 1e-3; // l2,1 weight
  double mu0 = 0.0;     // <= 0: 1 / ||mean_m K^(m)||_2
  double rho = 1.3;
  double mu_max = 1e8;
  double tol = 1e-6;
  int max_iters = 300;
  ConstraintMode constraint = ConstraintMode::nonneg;
  ShrinkMode shrink = ShrinkMode::column_l21;
  QStepMode q_step = QStepMode::exact;
  AveragingMode averaging = AveragingMode::m_plus_one;

  void validate() const;
};

/// Iterates of the recovery. All matrices are R x N.
struct ALMState {
  Matrix khat;
  Matrix q;
  std::vector<Matrix> e;
  std::vector<Matrix> a;
  Matrix b;
  double mu = 1.0;
  double q_nuclear = 0.0;  // ||Q||_* from the last Q step
};

struct ALMDiagnostics {
  std::vector<double> view_residual;       // max_m ||Khat + E_m - K_m||_F / ||K_m||_F
  std::vector<double> consensus_residual;  // ||Khat - Q||_F / ||Khat||_F
  std::vector<double> objective;           // alpha ||Q||_* + lambda sum_m ||E_m||_{2,1}
  std::vector<double> mu;
  int iterations = 0;
  bool converged = false;

  /// CSV with header "iteration,view_residual,consensus_residual,objective,mu".
  void write_csv(std::ostream& out) const;
};

struct ALMResult {
  Matrix khat;
  std::vector<Matrix> e;
  ALMDiagnostics diagnostics;
};

/// Khat = mean of the K^(m) projected onto the constraint set; Q = Khat;
/// E, A, B = 0; mu = cfg.mu0 or the spectral default.
ALMState init_state(const std::vector<Matrix>& k_list, const ALMConfig& cfg);

/// Projects every column onto the constraint set.
Matrix project_constraint(const Matrix& c, ConstraintMode mode);

Matrix update_q(const ALMState& s, const ALMConfig& cfg, double* nuclear = nullptr);
Matrix update_e(const ALMState& s, const ALMConfig& cfg, const std::vector<Matrix>& k_list, Index view);
Matrix update_khat(const ALMState& s, const ALMConfig& cfg, const std::vector<Matrix>& k_list);
/// A_m += mu (Khat + E_m - K_m); B += mu (Khat - Q); mu = min(rho mu, mu_max).
void update_multipliers(ALMState& s, const ALMConfig& cfg, const std::vector<Matrix>& k_list);

/// min alpha ||Khat||_* + lambda sum_m ||E_m||_{2,1}
/// s.t. K_m = Khat + E_m, Khat in the constraint set,
/// by inexact ALM: one Q / E / Khat sweep per multiplier update.
/// Stops when both relative residuals drop below cfg.tol; hitting max_iters
/// is reported through diagnostics.converged, not thrown.
ALMResult recover(const std::vector<Matrix>& k_list, const ALMConfig& cfg);

}  // namespace rmvh
