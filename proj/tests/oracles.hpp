#pragma once

// Independent reference implementations used by the tests. They favor
// directness over speed and share no code with the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

inline double nuclear(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues().sum(); }

inline double l21(const Mat& m) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) s += m.col(j).norm();
  return s;
}

inline double svt_objective(const Mat& q, const Mat& m, double tau) {
  return tau * nuclear(q) + 0.5 * (q - m).squaredNorm();
}

inline double l21_objective(const Mat& e, const Mat& c, double kappa) {
  return kappa * l21(e) + 0.5 * (e - c).squaredNorm();
}

// Best column-wise scaling s*C_j over a grid of s in [0, 1].
inline double l21_grid_objective(const Mat& c, double kappa, int steps = 20000) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const double norm = c.col(j).norm();
    double best = 0.5 * norm * norm;
    for (int i = 0; i <= steps; ++i) {
      const double s = static_cast<double>(i) / steps;
      best = std::min(best, kappa * s * norm + 0.5 * (1.0 - s) * (1.0 - s) * norm * norm);
    }
    total += best;
  }
  return total;
}

// Brute-force simplex projection in 2-D: scan w = (t, 1 - t).
inline Vec simplex2_grid(const Vec& v, int steps = 2000000) {
  double best = 1e300, arg = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const double d = (t - v(0)) * (t - v(0)) + (1 - t - v(1)) * (1 - t - v(1));
    if (d < best) {
      best = d;
      arg = t;
    }
  }
  Vec w(2);
  w << arg, 1.0 - arg;
  return w;
}

// Simplex projection via bisection on the threshold (different algorithm
// from the sort-based one).
inline Vec simplex_bisect(const Vec& v) {
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = (v.array() - mid).max(0.0).sum();
    (s > 1.0 ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0);
}

// Dense truncated affinity F (N x L), points and landmarks as columns.
inline Mat dense_affinity(const Mat& x, const Mat& u, int k, double t) {
  const auto n = x.cols(), l = u.cols();
  Mat f = Mat::Zero(n, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> d;
    for (Eigen::Index j = 0; j < l; ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) s += (x(r, i) - u(r, j)) * (x(r, i) - u(r, j));
      d.push_back({s, j});
    }
    std::sort(d.begin(), d.end());
    double z = 0.0;
    for (int p = 0; p < k; ++p) z += std::exp(-d[p].first / t);
    for (int p = 0; p < k; ++p) f(i, d[p].second) = std::exp(-d[p].first / t) / z;
  }
  return f;
}

inline Mat dense_adjacency(const Mat& f) {
  const Vec lambda = f.colwise().sum().transpose();
  return f * lambda.cwiseInverse().asDiagonal() * f.transpose();
}

// ---- retrieval metrics over +-1 code rows ----

using Codes = std::vector<std::vector<int>>;

inline int hamming(const std::vector<int>& a, const std::vector<int>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

inline Codes random_codes(int n, int bits, std::mt19937_64& rng) {
  Codes c(n, std::vector<int>(bits));
  for (auto& row : c)
    for (auto& v : row) v = (rng() & 1) ? 1 : -1;
  return c;
}

inline double ref_map(const Codes& q, const Codes& db, const std::vector<int>& ql, const std::vector<int>& dl,
                      int top_k) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<int> idx(db.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return hamming(q[i], db[a]) < hamming(q[i], db[b]); });
    int lq = 0;
    for (std::size_t j = 0; j < db.size(); ++j) lq += dl[j] == ql[i];
    if (lq == 0) continue;
    double ap = 0.0;
    int hits = 0;
    for (int z = 0; z < std::min<int>(top_k, static_cast<int>(db.size())); ++z) {
      if (dl[idx[z]] == ql[i]) {
        ++hits;
        ap += static_cast<double>(hits) / (z + 1);
      }
    }
    total += ap / lq;
  }
  return total / static_cast<double>(q.size());
}

struct RefLookup {
  double mean, stddev, coverage;
};

inline RefLookup ref_lookup(const Codes& q, const Codes& db, const std::vector<int>& ql, const std::vector<int>& dl,
                            int radius) {
  std::vector<double> p;
  int covered = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    int got = 0, good = 0;
    for (std::size_t j = 0; j < db.size(); ++j) {
      if (hamming(q[i], db[j]) <= radius) {
        ++got;
        good += dl[j] == ql[i];
      }
    }
    covered += got > 0;
    p.push_back(got ? static_cast<double>(good) / got : 0.0);
  }
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(p.size())), static_cast<double>(covered) / q.size()};
}

struct RefPr {
  std::vector<double> recall, precision;
};

inline RefPr ref_pr(const Codes& q, const Codes& db, const std::vector<int>& ql, const std::vector<int>& dl) {
  const int bits = static_cast<int>(q.front().size());
  RefPr out{std::vector<double>(bits + 1, 0.0), std::vector<double>(bits + 1, 0.0)};
  for (int r = 0; r <= bits; ++r) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      int got = 0, good = 0, lq = 0;
      for (std::size_t j = 0; j < db.size(); ++j) {
        const bool rel = dl[j] == ql[i];
        lq += rel;
        if (hamming(q[i], db[j]) <= r) {
          ++got;
          good += rel;
        }
      }
      out.precision[r] += got ? static_cast<double>(good) / got : 0.0;
      out.recall[r] += lq ? static_cast<double>(good) / lq : 0.0;
    }
    out.precision[r] /= static_cast<double>(q.size());
    out.recall[r] /= static_cast<double>(q.size());
  }
  return out;
}

}  // namespace oracle
