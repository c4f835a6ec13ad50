#include "rmvh/hash_trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "rmvh/core_math.hpp"

namespace rmvh {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{seed, stream, std::uint64_t{0x6873}};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (std::uint64_t{words[0]} << 32) | words[1];
}

}  // namespace

void HyperParams::validate() const {
  require(bits >= 1, "HyperParams: code length P must be >= 1");
  require(gamma >= 0.0 && delta >= 0.0 && alpha >= 0.0 && beta >= 0.0 && lambda >= 0.0,
          "HyperParams: all weights must be nonnegative");
  require(outer_iters >= 1, "HyperParams: outer_iters must be >= 1");
  require(beta > 0.0 || gamma > 0.0, "HyperParams: beta and gamma cannot both be zero");
}

void TrainDiagnostics::write_objective_csv(std::ostream& out) const {
  out << "iteration,objective,seconds,cg_iterations\n";
  out.precision(17);
  for (std::size_t i = 0; i < objective.size(); ++i) {
    out << i + 1 << ',' << objective[i] << ',' << iteration_seconds[i] << ',' << cg_iterations[i] << '\n';
  }
}

Matrix HashModel::project(const Matrix& kernel_columns) const {
  require(kernel_columns.rows() == w.rows(), "HashModel::project: kernel columns have " +
                                                 std::to_string(kernel_columns.rows()) + " rows, model has R = " +
                                                 std::to_string(w.rows()));
  Matrix out = kernel_columns.transpose() * w;
  out.rowwise() += b.transpose();
  return out;
}

WbSolution update_wb(const Matrix& khat, const Matrix& y, double delta) {
  require(khat.cols() == y.rows(), "update_wb: Khat has " + std::to_string(khat.cols()) + " columns but Y has " +
                                       std::to_string(y.rows()) + " rows");
  require(delta >= 0.0, "update_wb: delta must be nonnegative");
  const auto n = static_cast<double>(khat.cols());
  Matrix centered = khat;
  centered.colwise() -= khat.rowwise().mean();  // Khat Lc
  Matrix system = centered * centered.transpose();
  system.diagonal().array() += delta;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success || (delta == 0.0 && llt.rcond() < 1e-13)) {
    throw NumericFailure("update_wb: Khat Lc Khat^T + delta I is singular (delta = " + std::to_string(delta) +
                         "); use delta > 0");
  }
  WbSolution s;
  s.w = llt.solve(centered * y);
  s.b = (y.colwise().sum().transpose() - s.w.transpose() * khat.rowwise().sum()) / n;
  return s;
}

Matrix orthogonalize_codes(const Matrix& y) {
  require(y.rows() >= y.cols(), "orthogonalize_codes: need N >= P to decorrelate " + std::to_string(y.cols()) +
                                    " bits over " + std::to_string(y.rows()) + " samples");
  if (!y.allFinite()) throw NumericFailure("orthogonalize_codes: relaxed codes contain non-finite values");
  // Polar factor U V^T. It equals Y (Y^T Y)^-1/2 when Y has full column rank and
  // stays defined, with a deterministic completion, when it does not.
  Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return std::sqrt(static_cast<double>(y.rows())) * (svd.matrixU() * svd.matrixV().transpose());
}

namespace {

// Column-wise conjugate gradients for (2 L + gamma I) X = rhs.
Matrix solve_view_codes(const AnchorGraph& g, const Matrix& rhs, const Matrix& guess, double gamma, double tol,
                        int max_iters, int* iterations) {
  auto apply = [&](const Matrix& v) -> Matrix { return (2.0 + gamma) * v - 2.0 * adjacency_apply(g, v); };
  const Index cols = rhs.cols();
  Matrix x = guess;
  Matrix r = rhs - apply(x);
  Matrix p = r;
  Vector rr = r.colwise().squaredNorm().transpose();
  const Vector target = (rhs.colwise().norm().transpose() * tol).cwiseMax(1e-300);
  std::vector<bool> active(static_cast<std::size_t>(cols));
  auto any_active = [&] {
    bool any = false;
    for (Index c = 0; c < cols; ++c) {
      active[c] = std::sqrt(rr(c)) > target(c);
      any = any || active[c];
    }
    return any;
  };
  int it = 0;
  while (any_active()) {
    if (it == max_iters) {
      double worst = 0.0;
      for (Index c = 0; c < cols; ++c) worst = std::max(worst, std::sqrt(rr(c)) / target(c) * tol);
      throw NumericFailure("update_codes: conjugate gradients did not converge in " + std::to_string(max_iters) +
                           " iterations (worst relative residual " + std::to_string(worst) + ")");
    }
    const Matrix ap = apply(p);
    for (Index c = 0; c < cols; ++c) {
      if (!active[c]) continue;
      const double step = rr(c) / p.col(c).dot(ap.col(c));
      x.col(c) += step * p.col(c);
      r.col(c) -= step * ap.col(c);
      const double rr_new = r.col(c).squaredNorm();
      p.col(c) = r.col(c) + (rr_new / rr(c)) * p.col(c);
      rr(c) = rr_new;
    }
    ++it;
  }
  if (iterations) *iterations = it;
  return x;
}

}  // namespace

CodeState update_codes(const CodeState& state, const std::vector<AnchorGraph>& graphs, const Matrix& khat,
                       const WbSolution& wb, const HyperParams& hp, CodeUpdateInfo* info) {
  const Index n = state.y.rows();
  require(state.y_view.size() == graphs.size(), "update_codes: one Y^(m) per graph expected");
  require(khat.cols() == n && wb.w.rows() == khat.rows() && wb.w.cols() == state.y.cols(),
          "update_codes: inconsistent shapes");
  CodeState next;
  int worst = 0;
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    require(graphs[m].num_samples() == n, "update_codes: graph " + std::to_string(m) + " has the wrong N");
    if (hp.gamma == 0.0) {
      Matrix means = state.y;
      means.rowwise() = state.y.colwise().mean();
      next.y_view.push_back(std::move(means));
      continue;
    }
    int iters = 0;
    next.y_view.push_back(solve_view_codes(graphs[m], hp.gamma * state.y, state.y_view[m], hp.gamma, hp.cg_tol,
                                           hp.cg_max_iters, &iters));
    worst = std::max(worst, iters);
  }
  if (info) info->max_cg_iterations = worst;

  Matrix predicted = khat.transpose() * wb.w;
  predicted.rowwise() += wb.b.transpose();
  Matrix y = hp.beta * predicted;
  for (const auto& ym : next.y_view) y += hp.gamma * ym;
  y /= hp.gamma * static_cast<double>(graphs.size()) + hp.beta;
  next.y = hp.orthogonalize ? orthogonalize_codes(y) : std::move(y);
  return next;
}

ObjectiveTerms objective_terms(const CodeState& state, const std::vector<AnchorGraph>& graphs, const Matrix& khat,
                               const std::vector<Matrix>& e, const WbSolution& wb, const HyperParams& hp,
                               std::optional<double> khat_nuclear) {
  ObjectiveTerms t;
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const Matrix& ym = state.y_view[m];
    t.graph += 2.0 * ym.cwiseProduct(laplacian_apply(graphs[m], ym)).sum();
    t.consensus += hp.gamma * (state.y - ym).squaredNorm();
  }
  t.nuclear = hp.alpha * (khat_nuclear ? *khat_nuclear : nuclear_norm(khat));
  for (const auto& em : e) t.sparse += hp.lambda * l21_norm(em);
  Matrix residual = khat.transpose() * wb.w - state.y;
  residual.rowwise() += wb.b.transpose();
  t.regression = hp.beta * (residual.squaredNorm() + hp.delta * wb.w.squaredNorm());
  return t;
}

double objective(const CodeState& state, const std::vector<AnchorGraph>& graphs, const Matrix& khat,
                 const std::vector<Matrix>& e, const WbSolution& wb, const HyperParams& hp) {
  return objective_terms(state, graphs, khat, e, wb, hp).total();
}

CodeMatrix encode_database(const HashModel& model, const Matrix& khat) {
  require(khat.rows() == model.num_landmarks(), "encode_database: Khat has " + std::to_string(khat.rows()) +
                                                    " rows, model expects R = " +
                                                    std::to_string(model.num_landmarks()));
  return CodeMatrix::from_real(model.project(khat));
}

CodeMatrix encode_query(const HashModel& model, const std::vector<Vector>& x, QueryKernelMode mode) {
  const Vector k = query_kernel_vector(x, model.landmarks, model.kernel, mode);
  return CodeMatrix::from_real(model.project(k));
}

CodeMatrix encode_query(const HashModel& model, const std::vector<Vector>& x) {
  return encode_query(model, x, model.kernel.query_mode);
}

Matrix embed_queries(const HashModel& model, const MultiViewDataset& ds, QueryKernelMode mode) {
  return model.project(query_kernel_matrix(ds, model.landmarks, model.kernel, mode));
}

CodeMatrix encode_queries(const HashModel& model, const MultiViewDataset& ds, QueryKernelMode mode) {
  return CodeMatrix::from_real(embed_queries(model, ds, mode));
}

CodeMatrix encode_queries(const HashModel& model, const MultiViewDataset& ds) {
  return encode_queries(model, ds, model.kernel.query_mode);
}

namespace {

// Spectral warm start, topped up with seeded random directions when the
// graphs carry fewer than P non-trivial eigenvectors.
Matrix initial_codes(const std::vector<AnchorGraph>& graphs, Index bits, std::uint64_t seed) {
  Matrix spectral = spectral_embedding(graphs, bits);
  const Index n = graphs.front().num_samples();
  if (spectral.cols() == bits) return spectral;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix y(n, bits);
  y.leftCols(spectral.cols()) = spectral;
  for (Index c = spectral.cols(); c < bits; ++c) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
    v.array() -= v.mean();
    for (Index prev = 0; prev < c; ++prev) v -= (y.col(prev).dot(v) / y.col(prev).squaredNorm()) * y.col(prev);
    y.col(c) = v * (std::sqrt(static_cast<double>(n)) / v.norm());
  }
  return y;
}

}  // namespace

TrainResult train(const MultiViewDataset& ds, const TrainConfig& cfg) {
  ds.validate();
  cfg.hp.validate();
  const Index n = ds.num_samples();
  const Index l = cfg.graph.landmarks;
  const Index r = cfg.kernel.landmarks > 0 ? cfg.kernel.landmarks : l;
  require(l >= 1 && l <= n, "train: L = " + std::to_string(l) + " must be in [1, N = " + std::to_string(n) + "]");
  require(r >= 1 && r <= n, "train: R = " + std::to_string(r) + " must be in [1, N = " + std::to_string(n) + "]");
  require(cfg.graph.k >= 1 && cfg.graph.k <= l, "train: graph k must be in [1, L]");

  TrainResult out;
  auto& diag = out.diagnostics;
  const auto setup_start = Clock::now();

  out.model.landmarks =
      select_kernel_landmarks(ds, r, cfg.kernel.mode, sub_seed(cfg.seed, 1), cfg.kernel.kmeans_iters);
  for (Index m = 0; m < ds.num_views(); ++m) {
    Matrix graph_landmarks =
        (cfg.kernel.share_landmarks && r == l)
            ? out.model.landmarks.views[m]
            : select_graph_landmarks(ds.views[m], l, cfg.graph.mode, sub_seed(cfg.seed, 100 + m),
                                     cfg.graph.kmeans_iters);
    out.graphs.push_back(build_truncated_affinity(ds.views[m], graph_landmarks, cfg.graph.k, cfg.graph.bandwidth));
  }
  out.model.kernel =
      tune_kernel_config(ds, out.model.landmarks, cfg.kernel.self_tuning_k, cfg.kernel.query_mode);
  out.kernels = build_kernelized_similarity(ds, out.model.landmarks, out.model.kernel);
  diag.setup_seconds = seconds_since(setup_start);

  ALMConfig alm = cfg.alm;
  alm.alpha = cfg.hp.alpha;
  alm.lambda = cfg.hp.lambda;
  auto recover_khat = [&] {
    const auto t0 = Clock::now();
    if (cfg.recovery == RecoveryMode::alm) {
      ALMResult rec = recover(out.kernels.views, alm);
      out.khat = std::move(rec.khat);
      out.e = std::move(rec.e);
      diag.alm = std::move(rec.diagnostics);
    } else {
      out.khat = project_constraint(out.kernels.mean(), alm.constraint);
      out.e.clear();
      for (const auto& k : out.kernels.views) out.e.push_back(k - out.khat);
    }
    diag.recovery_seconds += seconds_since(t0);
  };
  recover_khat();
  double khat_nuclear = nuclear_norm(out.khat);

  CodeState& codes = out.codes;
  codes.y = initial_codes(out.graphs, cfg.hp.bits, sub_seed(cfg.seed, 2));
  codes.y_view.assign(out.graphs.size(), codes.y);

  WbSolution wb;
  double previous = 0.0;
  for (int it = 0; it < cfg.hp.outer_iters; ++it) {
    const auto t0 = Clock::now();
    if (cfg.alm_refresh_every > 0 && it > 0 && it % cfg.alm_refresh_every == 0) {
      recover_khat();
      khat_nuclear = nuclear_norm(out.khat);
    }
    wb = update_wb(out.khat, codes.y, cfg.hp.delta);
    CodeUpdateInfo info;
    codes = update_codes(codes, out.graphs, out.khat, wb, cfg.hp, &info);
    diag.iteration_seconds.push_back(seconds_since(t0));
    diag.cg_iterations.push_back(info.max_cg_iterations);
    const double value = objective_terms(codes, out.graphs, out.khat, out.e, wb, cfg.hp, khat_nuclear).total();
    diag.objective.push_back(value);
    diag.outer_iterations = it + 1;
    if (it > 0 && std::abs(previous - value) < cfg.hp.objective_tol * std::max(std::abs(previous), 1e-300)) {
      diag.converged = true;
      break;
    }
    previous = value;
  }

  // Final hash functions regress the final codes.
  wb = update_wb(out.khat, codes.y, cfg.hp.delta);
  out.model.w = std::move(wb.w);
  out.model.b = std::move(wb.b);
  out.database_codes = encode_database(out.model, out.khat);
  if (cfg.build_base) {
    BaseSetConfig base = cfg.base;
    base.size = std::min(base.size, n);
    out.model.base = build_base_set(ds, out.model, base, sub_seed(cfg.seed, 3));
  }
  return out;
}

}  // namespace rmvh
