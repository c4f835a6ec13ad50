#include "rmvh/anchor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rmvh/core_math.hpp"

namespace rmvh {

Matrix AnchorGraph::dense_affinity() const {
  const Index n = num_samples();
  Matrix f = Matrix::Zero(n, num_landmarks());
  for (Index i = 0; i < n; ++i)
    for (Index p = 0; p < k; ++p) f(i, neighbors[i * k + p]) += weights[i * k + p];
  return f;
}

Matrix AnchorGraph::dense_adjacency() const {
  require(num_samples() <= 5000, "dense_adjacency: refusing to materialize N = " +
                                     std::to_string(num_samples()));
  const Matrix f = dense_affinity();
  return f * lambda.cwiseInverse().asDiagonal() * f.transpose();
}

Matrix select_graph_landmarks(const Matrix& view, Index num_landmarks, LandmarkMode mode,
                              std::uint64_t seed, int kmeans_iters) {
  const Index n = view.cols();
  require(num_landmarks >= 1 && num_landmarks <= n,
          "select_graph_landmarks: L = " + std::to_string(num_landmarks) + " must be in [1, N = " +
              std::to_string(n) + "]");
  if (mode == LandmarkMode::kmeans) return kmeans(view, num_landmarks, kmeans_iters, seed).centers;

  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < num_landmarks; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(static_cast<std::size_t>(num_landmarks));
  return view(Eigen::all, idx);
}

namespace {

struct Nearest {
  std::vector<Index> index;   // N * k
  std::vector<double> sqdist; // N * k
};

// k nearest landmarks per sample by exhaustive scan; ties to the lower index.
Nearest nearest_landmarks(const Matrix& view, const Matrix& landmarks, Index k) {
  const Index n = view.cols(), l = landmarks.cols();
  Nearest out;
  out.index.resize(static_cast<std::size_t>(n * k));
  out.sqdist.resize(static_cast<std::size_t>(n * k));
  std::vector<double> d(static_cast<std::size_t>(l));
  std::vector<Index> order(static_cast<std::size_t>(l));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < l; ++j) d[j] = (view.col(i) - landmarks.col(j)).squaredNorm();
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
      return d[a] < d[b] || (d[a] == d[b] && a < b);
    });
    for (Index p = 0; p < k; ++p) {
      out.index[i * k + p] = order[p];
      out.sqdist[i * k + p] = d[order[p]];
    }
  }
  return out;
}

}  // namespace

double default_bandwidth(const Matrix& view, const Matrix& landmarks, Index k) {
  require(k >= 1 && k <= landmarks.cols(), "default_bandwidth: k out of range");
  const Nearest nn = nearest_landmarks(view, landmarks, k);
  double sum = 0.0;
  for (Index i = 0; i < view.cols(); ++i) sum += nn.sqdist[i * k + k - 1];
  return sum / static_cast<double>(view.cols());
}

AnchorGraph build_truncated_affinity(const Matrix& view, const Matrix& landmarks, Index k,
                                     std::optional<double> bandwidth) {
  require(view.rows() == landmarks.rows(), "build_truncated_affinity: view has " +
                                               std::to_string(view.rows()) + " dims, landmarks have " +
                                               std::to_string(landmarks.rows()));
  require(k >= 1, "build_truncated_affinity: k must be >= 1");
  require(k <= landmarks.cols(), "build_truncated_affinity: k = " + std::to_string(k) +
                                     " exceeds L = " + std::to_string(landmarks.cols()));
  require(!bandwidth || *bandwidth > 0.0, "build_truncated_affinity: bandwidth must be positive");

  Matrix current = landmarks;
  for (;;) {
    const Index n = view.cols(), l = current.cols();
    const Nearest nn = nearest_landmarks(view, current, k);
    double t = 0.0;
    if (bandwidth) {
      t = *bandwidth;
    } else {
      for (Index i = 0; i < n; ++i) t += nn.sqdist[i * k + k - 1];
      t /= static_cast<double>(n);
      if (!(t > 0.0)) t = 1.0;  // every sample sits on its k landmarks; weights are uniform anyway
    }

    AnchorGraph g;
    g.landmarks = current;
    g.k = k;
    g.bandwidth = t;
    g.neighbors = nn.index;
    g.weights.resize(nn.sqdist.size());
    g.lambda = Vector::Zero(l);
    for (Index i = 0; i < n; ++i) {
      const double base = nn.sqdist[i * k];
      double sum = 0.0;
      for (Index p = 0; p < k; ++p) {
        const double w = std::exp(-(nn.sqdist[i * k + p] - base) / t);
        g.weights[i * k + p] = w;
        sum += w;
      }
      for (Index p = 0; p < k; ++p) {
        g.weights[i * k + p] /= sum;
        g.lambda(g.neighbors[i * k + p]) += g.weights[i * k + p];
      }
    }

    std::vector<Index> keep;
    for (Index j = 0; j < l; ++j)
      if (g.lambda(j) > 0.0) keep.push_back(j);
    if (static_cast<Index>(keep.size()) == l) return g;
    require(static_cast<Index>(keep.size()) >= k,
            "build_truncated_affinity: fewer than k landmarks have any neighbor");
    current = Matrix(current(Eigen::all, keep));
  }
}

Matrix affinity_transpose_apply(const AnchorGraph& g, const Matrix& v) {
  require(v.rows() == g.num_samples(), "affinity_transpose_apply: expected " +
                                           std::to_string(g.num_samples()) + " rows, got " +
                                           std::to_string(v.rows()));
  Matrix out = Matrix::Zero(g.num_landmarks(), v.cols());
  const Index n = g.num_samples(), k = g.k;
  for (Index c = 0; c < v.cols(); ++c) {
    for (Index i = 0; i < n; ++i) {
      const double x = v(i, c);
      for (Index p = 0; p < k; ++p) out(g.neighbors[i * k + p], c) += g.weights[i * k + p] * x;
    }
  }
  return out;
}

Matrix affinity_apply(const AnchorGraph& g, const Matrix& u) {
  require(u.rows() == g.num_landmarks(), "affinity_apply: expected " + std::to_string(g.num_landmarks()) +
                                             " rows, got " + std::to_string(u.rows()));
  const Index n = g.num_samples(), k = g.k;
  Matrix out(n, u.cols());
  for (Index c = 0; c < u.cols(); ++c) {
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index p = 0; p < k; ++p) s += g.weights[i * k + p] * u(g.neighbors[i * k + p], c);
      out(i, c) = s;
    }
  }
  return out;
}

Matrix adjacency_apply(const AnchorGraph& g, const Matrix& v) {
  Matrix u = affinity_transpose_apply(g, v);
  u.array().colwise() /= g.lambda.array();
  return affinity_apply(g, u);
}

Matrix laplacian_apply(const AnchorGraph& g, const Matrix& v) { return v - adjacency_apply(g, v); }

Matrix spectral_embedding(const std::vector<AnchorGraph>& graphs, Index count) {
  require(!graphs.empty(), "spectral_embedding: no graphs");
  require(count >= 1, "spectral_embedding: count must be >= 1");
  const Index n = graphs.front().num_samples();
  for (const auto& g : graphs) require(g.num_samples() == n, "spectral_embedding: graphs disagree on N");
  const auto m = static_cast<double>(graphs.size());

  std::vector<Index> offset{0};
  for (const auto& g : graphs) offset.push_back(offset.back() + g.num_landmarks());
  const Index total = offset.back();

  // Column scale of G: 1 / sqrt(M * lambda_j).
  Vector scale(total);
  for (std::size_t a = 0; a < graphs.size(); ++a)
    scale.segment(offset[a], graphs[a].num_landmarks()) =
        (graphs[a].lambda.array() * m).rsqrt().matrix();

  Matrix gram = Matrix::Zero(total, total);
  Vector col_sum = Vector::Zero(total);  // G^T 1
  for (Index i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < graphs.size(); ++a) {
      const auto& ga = graphs[a];
      for (Index p = 0; p < ga.k; ++p) {
        const Index ja = offset[a] + ga.neighbors[i * ga.k + p];
        const double wa = ga.weights[i * ga.k + p] * scale(ja);
        col_sum(ja) += wa;
        for (std::size_t b = 0; b < graphs.size(); ++b) {
          const auto& gb = graphs[b];
          for (Index q = 0; q < gb.k; ++q) {
            const Index jb = offset[b] + gb.neighbors[i * gb.k + q];
            gram(ja, jb) += wa * gb.weights[i * gb.k + q] * scale(jb);
          }
        }
      }
    }
  }
  // Centering G removes the constant eigenvector: (PG)^T (PG) = G^T G - (G^T 1)(1^T G) / N.
  gram -= col_sum * col_sum.transpose() / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericFailure("spectral_embedding: eigensolver failed");
  const Vector& evals = eig.eigenvalues();  // ascending
  const double top = evals(total - 1);
  Index usable = 0;
  while (usable < count && usable < total && evals(total - 1 - usable) > 1e-10 * std::max(top, 1e-300)) {
    ++usable;
  }

  Matrix y(n, usable);
  for (Index c = 0; c < usable; ++c) {
    const Vector v = eig.eigenvectors().col(total - 1 - c).cwiseProduct(scale);
    Vector col = Vector::Zero(n);
    for (std::size_t a = 0; a < graphs.size(); ++a) {
      const auto& ga = graphs[a];
      for (Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Index p = 0; p < ga.k; ++p) s += ga.weights[i * ga.k + p] * v(offset[a] + ga.neighbors[i * ga.k + p]);
        col(i) += s;
      }
    }
    col.array() -= col.mean();
    y.col(c) = col * (std::sqrt(static_cast<double>(n)) / col.norm());
  }
  return y;
}

}  // namespace rmvh
