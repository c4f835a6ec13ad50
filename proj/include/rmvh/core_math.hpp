#pragma once

#include <cstdint>
#include <vector>

#include "rmvh/common.hpp"

namespace rmvh {

/// Soft threshold S_rho(x) = max(x - rho, 0) + min(x + rho, 0).
double scalar_shrink(double x, double rho);

/// Elementwise soft threshold.
Matrix shrink(const Matrix& m, double rho);

/// Singular value thresholding: U * S_tau(Sigma) * V^T, the proximal
/// operator of tau * ||.||_*.
///
/// Wide or tall inputs are first reduced by a Householder QR of the long
/// side, so the cost is O(min^2 * max) rather than a full bidiagonalization
/// of the long matrix. If `nuclear_norm` is non-null it receives the nuclear
/// norm of the result. Throws NumericFailure if the SVD does not converge.
Matrix svt(const Matrix& m, double tau, double* nuclear_norm = nullptr);

/// Singular values in descending order.
Vector singular_values(const Matrix& m);

double nuclear_norm(const Matrix& m);

/// Number of singular values above rel_tol * sigma_max.
Index numerical_rank(const Matrix& m, double rel_tol = 1e-10);

/// Sum of column l2 norms.
double l21_norm(const Matrix& m);

/// Proximal operator of kappa * ||.||_{2,1}: column i scaled by
/// max(0, 1 - kappa / ||c_i||).
Matrix col_l21_prox(const Matrix& c, double kappa);

Matrix project_nonneg(const Matrix& v);

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1}
/// (sort-based, O(n log n)).
Vector project_simplex(const Vector& v);

struct KMeansResult {
  Matrix centers;                    // d x L, one center per column
  std::vector<Index> assignments;    // per point, in [0, L)
  double inertia = 0.0;              // sum of squared point-to-center distances
  std::vector<double> inertia_trace; // inertia after each Lloyd iteration
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. `points` holds one point per
/// column. Deterministic for a fixed seed. An emptied cluster is re-seeded at
/// the point farthest from its current center (lowest index on ties).
KMeansResult kmeans(const Matrix& points, Index num_centers, int max_iters,
                    std::uint64_t seed);

/// Squared Euclidean distances between the columns of a (d x n) and b (d x m),
/// returned as n x m. Computed from explicit differences so that coincident
/// points give exactly zero.
Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b);

}  // namespace rmvh
