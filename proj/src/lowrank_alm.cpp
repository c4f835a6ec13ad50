#include "rmvh/lowrank_alm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "rmvh/core_math.hpp"

namespace rmvh {

void ALMConfig::validate() const {
  require(alpha > 0.0, "ALMConfig: alpha must be positive");
  require(lambda >= 0.0, "ALMConfig: lambda must be nonnegative");
  require(rho > 1.0, "ALMConfig: rho must exceed 1");
  require(mu_max > 0.0, "ALMConfig: mu_max must be positive");
  require(tol > 0.0, "ALMConfig: tol must be positive");
  require(max_iters >= 1, "ALMConfig: max_iters must be >= 1");
}

void ALMDiagnostics::write_csv(std::ostream& out) const {
  out << "iteration,view_residual,consensus_residual,objective,mu\n";
  out.precision(17);
  for (std::size_t i = 0; i < view_residual.size(); ++i) {
    out << i + 1 << ',' << view_residual[i] << ',' << consensus_residual[i] << ',' << objective[i] << ','
        << mu[i] << '\n';
  }
}

namespace {

void check_inputs(const std::vector<Matrix>& k_list) {
  require(!k_list.empty(), "recover: need at least one view");
  const Index r = k_list.front().rows(), n = k_list.front().cols();
  for (std::size_t m = 0; m < k_list.size(); ++m) {
    require(k_list[m].rows() == r && k_list[m].cols() == n,
            "recover: view " + std::to_string(m) + " is " + std::to_string(k_list[m].rows()) + "x" +
                std::to_string(k_list[m].cols()) + ", expected " + std::to_string(r) + "x" + std::to_string(n));
    require(k_list[m].allFinite(), "recover: view " + std::to_string(m) + " has non-finite entries");
  }
}

Matrix view_mean(const std::vector<Matrix>& k_list) {
  Matrix mean = k_list.front();
  for (std::size_t m = 1; m < k_list.size(); ++m) mean += k_list[m];
  return mean / static_cast<double>(k_list.size());
}

}  // namespace

Matrix project_constraint(const Matrix& c, ConstraintMode mode) {
  if (mode == ConstraintMode::nonneg) return project_nonneg(c);
  Matrix out(c.rows(), c.cols());
  for (Index j = 0; j < c.cols(); ++j) out.col(j) = project_simplex(c.col(j));
  return out;
}

ALMState init_state(const std::vector<Matrix>& k_list, const ALMConfig& cfg) {
  check_inputs(k_list);
  cfg.validate();
  const Matrix mean = view_mean(k_list);
  ALMState s;
  s.khat = project_constraint(mean, cfg.constraint);
  s.q = s.khat;
  s.e.assign(k_list.size(), Matrix::Zero(mean.rows(), mean.cols()));
  s.a = s.e;
  s.b = Matrix::Zero(mean.rows(), mean.cols());
  if (cfg.mu0 > 0.0) {
    s.mu = cfg.mu0;
  } else {
    const Vector sv = singular_values(mean);
    s.mu = (sv.size() > 0 && sv(0) > 0.0) ? 1.0 / sv(0) : 1.0;
  }
  s.mu = std::min(s.mu, cfg.mu_max);
  return s;
}

Matrix update_q(const ALMState& s, const ALMConfig& cfg, double* nuclear) {
  if (cfg.q_step == QStepMode::exact) return svt(s.khat + s.b / s.mu, cfg.alpha / s.mu, nuclear);
  const double ma = s.mu * cfg.alpha;
  return svt(s.khat + s.b / ma, 1.0 / ma, nuclear);
}

Matrix update_e(const ALMState& s, const ALMConfig& cfg, const std::vector<Matrix>& k_list, Index view) {
  require(view >= 0 && view < static_cast<Index>(k_list.size()), "update_e: view index out of range");
  const Matrix residual = k_list[view] - s.khat - s.a[view] / s.mu;
  const double kappa = cfg.lambda / s.mu;
  return cfg.shrink == ShrinkMode::column_l21 ? col_l21_prox(residual, kappa) : shrink(residual, kappa);
}

Matrix update_khat(const ALMState& s, const ALMConfig& cfg, const std::vector<Matrix>& k_list) {
  Matrix c = s.q - s.b / s.mu;
  for (std::size_t m = 0; m < k_list.size(); ++m) c += k_list[m] - s.e[m] - s.a[m] / s.mu;
  const double m_views = static_cast<double>(k_list.size());
  c /= cfg.averaging == AveragingMode::m_plus_one ? m_views + 1.0 : m_views;
  return project_constraint(c, cfg.constraint);
}

void update_multipliers(ALMState& s, const ALMConfig& cfg, const std::vector<Matrix>& k_list) {
  for (std::size_t m = 0; m < k_list.size(); ++m) s.a[m] += s.mu * (s.khat + s.e[m] - k_list[m]);
  s.b += s.mu * (s.khat - s.q);
  s.mu = std::min(cfg.rho * s.mu, cfg.mu_max);
}

ALMResult recover(const std::vector<Matrix>& k_list, const ALMConfig& cfg) {
  ALMState s = init_state(k_list, cfg);
  std::vector<double> k_norm;
  for (const auto& k : k_list) k_norm.push_back(std::max(k.norm(), 1e-300));

  ALMDiagnostics diag;
  for (int it = 0; it < cfg.max_iters; ++it) {
    s.q = update_q(s, cfg, &s.q_nuclear);
    for (std::size_t m = 0; m < k_list.size(); ++m) s.e[m] = update_e(s, cfg, k_list, static_cast<Index>(m));
    s.khat = update_khat(s, cfg, k_list);

    double view_res = 0.0, l21 = 0.0;
    for (std::size_t m = 0; m < k_list.size(); ++m) {
      view_res = std::max(view_res, (s.khat + s.e[m] - k_list[m]).norm() / k_norm[m]);
      l21 += l21_norm(s.e[m]);
    }
    const double consensus_res = (s.khat - s.q).norm() / std::max(s.khat.norm(), 1e-300);
    diag.view_residual.push_back(view_res);
    diag.consensus_residual.push_back(consensus_res);
    diag.objective.push_back(cfg.alpha * s.q_nuclear + cfg.lambda * l21);
    diag.mu.push_back(s.mu);
    diag.iterations = it + 1;
    if (view_res < cfg.tol && consensus_res < cfg.tol) {
      diag.converged = true;
      break;
    }
    update_multipliers(s, cfg, k_list);
  }
  return {std::move(s.khat), std::move(s.e), std::move(diag)};
}

}  // namespace rmvh
