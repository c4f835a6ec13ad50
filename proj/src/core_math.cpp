#include "rmvh/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace rmvh {

double scalar_shrink(double x, double rho) {
  require(rho >= 0.0, "scalar_shrink: negative threshold " + std::to_string(rho));
  return std::max(x - rho, 0.0) + std::min(x + rho, 0.0);
}

Matrix shrink(const Matrix& m, double rho) {
  require(rho >= 0.0, "shrink: negative threshold " + std::to_string(rho));
  return m.unaryExpr([rho](double x) { return std::max(x - rho, 0.0) + std::min(x + rho, 0.0); });
}

namespace {

using Svd = Eigen::BDCSVD<Matrix>;

struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

void check_svd(const Svd& svd, Index rows, Index cols) {
  if (svd.info() != Eigen::Success) {
    throw NumericFailure("SVD failed to converge on a " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " matrix (Eigen info code " +
                         std::to_string(static_cast<int>(svd.info())) + ")");
  }
}

// m = U diag(s) V^T. For aspect ratios beyond 2:1 the long side is first
// compressed with a Householder QR: if m = R^T Q^T (m^T = Q R) and R^T = U' S V'^T
// then m = U' S (Q V')^T.
ThinSvd thin_svd(const Matrix& m) {
  const Index rows = m.rows(), cols = m.cols();
  if (!m.allFinite()) throw InvalidArgument("svd: input contains non-finite entries");
  if (cols > 2 * rows) {
    Eigen::HouseholderQR<Matrix> qr(m.transpose());
    const Matrix r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
    Svd svd(r.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    check_svd(svd, rows, cols);
    Matrix q = qr.householderQ() * Matrix::Identity(cols, rows);
    return {svd.matrixU(), svd.singularValues(), q * svd.matrixV()};
  }
  if (rows > 2 * cols) {
    Eigen::HouseholderQR<Matrix> qr(m);
    const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    Svd svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    check_svd(svd, rows, cols);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    return {q * svd.matrixU(), svd.singularValues(), svd.matrixV()};
  }
  Svd svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_svd(svd, rows, cols);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

Matrix svt(const Matrix& m, double tau, double* nuclear_norm) {
  require(tau >= 0.0, "svt: negative threshold " + std::to_string(tau));
  if (m.size() == 0) {
    if (nuclear_norm) *nuclear_norm = 0.0;
    return m;
  }
  ThinSvd svd = thin_svd(m);
  Index keep = 0;
  while (keep < svd.s.size() && svd.s(keep) > tau) ++keep;
  const Vector s = (svd.s.head(keep).array() - tau).matrix();
  if (nuclear_norm) *nuclear_norm = s.sum();
  if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
  return svd.u.leftCols(keep) * s.asDiagonal() * svd.v.leftCols(keep).transpose();
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return thin_svd(m).s;
}

double nuclear_norm(const Matrix& m) { return singular_values(m).sum(); }

Index numerical_rank(const Matrix& m, double rel_tol) {
  const Vector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > rel_tol * s(0)).count();
}

double l21_norm(const Matrix& m) { return m.colwise().norm().sum(); }

Matrix col_l21_prox(const Matrix& c, double kappa) {
  require(kappa >= 0.0, "col_l21_prox: negative threshold " + std::to_string(kappa));
  Matrix out(c.rows(), c.cols());
  for (Index j = 0; j < c.cols(); ++j) {
    const double norm = c.col(j).norm();
    if (norm <= kappa) {
      out.col(j).setZero();
    } else {
      out.col(j) = (1.0 - kappa / norm) * c.col(j);
    }
  }
  return out;
}

Matrix project_nonneg(const Matrix& v) { return v.cwiseMax(0.0); }

Vector project_simplex(const Vector& v) {
  require(v.size() > 0, "project_simplex: empty vector");
  require(v.allFinite(), "project_simplex: non-finite input");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // theta = (sum of the rho largest - 1) / rho, rho the last index with a
  // positive shifted value.
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "pairwise_sq_dists: dimension mismatch " +
                                    std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
  Matrix d(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 0; i < a.cols(); ++i) {
      d(i, j) = (a.col(i) - b.col(j)).squaredNorm();
    }
  }
  return d;
}

namespace {

// Nearest center per point; ties go to the lower center index.
double assign_points(const Matrix& points, const Matrix& centers, std::vector<Index>& assign,
                     std::vector<double>& dist) {
  const Index n = points.cols(), l = centers.cols();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = 0;
    for (Index c = 0; c < l; ++c) {
      const double d = (points.col(i) - centers.col(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    assign[i] = arg;
    dist[i] = best;
    total += best;
  }
  return total;
}

Matrix seed_plus_plus(const Matrix& points, Index l, std::mt19937_64& rng) {
  const Index n = points.cols();
  Matrix centers(points.rows(), l);
  std::uniform_int_distribution<Index> first(0, n - 1);
  centers.col(0) = points.col(first(rng));
  std::vector<double> closest(n);
  for (Index i = 0; i < n; ++i) closest[i] = (points.col(i) - centers.col(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index c = 1; c < l; ++c) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    Index pick = 0;
    if (total <= 0.0) {
      // All remaining mass is zero: every point already coincides with a
      // center. Take the first point in index order.
      pick = c % n;
    } else {
      double target = unit(rng) * total;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= closest[i];
        if (target < 0.0 && closest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.col(c) = points.col(pick);
    for (Index i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], (points.col(i) - centers.col(c)).squaredNorm());
    }
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, Index num_centers, int max_iters, std::uint64_t seed) {
  const Index n = points.cols();
  require(num_centers >= 1, "kmeans: need at least one center");
  require(num_centers <= n, "kmeans: " + std::to_string(num_centers) + " centers requested for " +
                                std::to_string(n) + " points");
  require(max_iters >= 1, "kmeans: max_iters must be >= 1");
  require(points.allFinite(), "kmeans: non-finite input");

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centers = seed_plus_plus(points, num_centers, rng);
  res.assignments.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<Index> counts(num_centers);

  for (int it = 0; it < max_iters; ++it) {
    const std::vector<Index> previous = res.assignments;
    assign_points(points, res.centers, res.assignments, dist);

    // Re-seed empty clusters at the worst-served point.
    std::fill(counts.begin(), counts.end(), 0);
    for (Index a : res.assignments) ++counts[a];
    for (Index c = 0; c < num_centers; ++c) {
      if (counts[c] > 0) continue;
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        if (counts[res.assignments[i]] <= 1) continue;
        if (far < 0 || dist[i] > dist[far]) far = i;
      }
      if (far < 0) break;  // cannot happen when num_centers <= n
      --counts[res.assignments[far]];
      res.assignments[far] = c;
      counts[c] = 1;
      dist[far] = 0.0;
    }

    res.centers.setZero();
    for (Index i = 0; i < n; ++i) res.centers.col(res.assignments[i]) += points.col(i);
    for (Index c = 0; c < num_centers; ++c) res.centers.col(c) /= static_cast<double>(counts[c]);

    double inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      inertia += (points.col(i) - res.centers.col(res.assignments[i])).squaredNorm();
    }
    res.inertia = inertia;
    res.inertia_trace.push_back(inertia);
    res.iterations = it + 1;
    if (it > 0 && previous == res.assignments) break;
  }
  return res;
}

}  // namespace rmvh
