#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "rmvh/core_math.hpp"

using namespace rmvh;

TEST_CASE("scalar_shrink examples and oddness") {
  CHECK(scalar_shrink(1.2, 0.5) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(scalar_shrink(0.3, 0.5) == 0.0);
  CHECK(scalar_shrink(-1.0, 0.5) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(scalar_shrink(1.0, -0.1), InvalidArgument);
  for (double x : {-3.0, -0.2, 0.0, 0.7, 5.5})
    for (double rho : {0.0, 0.5, 2.0}) CHECK(scalar_shrink(-x, rho) == -scalar_shrink(x, rho));
}

TEST_CASE("svt examples") {
  Matrix d = Eigen::Vector3d(3, 1, 0.2).asDiagonal();
  Matrix out = svt(d, 1.0);
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = 2.0;
  CHECK((out - expect).norm() < 1e-12);

  std::mt19937_64 rng(1);
  Matrix m = oracle::random_matrix(7, 5, rng);
  CHECK((svt(m, 0.0) - m).norm() < 1e-10);
  CHECK_THROWS_AS(svt(m, -1.0), InvalidArgument);
}

TEST_CASE("svt nuclear norm identity on tall and wide inputs") {
  std::mt19937_64 rng(2);
  for (auto [r, c] : {std::pair{10, 8}, std::pair{8, 40}, std::pair{50, 6}}) {
    Matrix m = oracle::random_matrix(r, c, rng);
    const double tau = 0.7;
    double reported = 0.0;
    Matrix q = svt(m, tau, &reported);
    const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
    const double expect = (s.array() - tau).max(0.0).sum();
    CHECK(oracle::nuclear(q) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(reported == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("svt beats random perturbations") {
  std::mt19937_64 rng(3);
  Matrix m = oracle::random_matrix(10, 8, rng);
  const double tau = 0.7;
  const Matrix q = svt(m, tau);
  const double base = oracle::svt_objective(q, m, tau);
  for (int t = 0; t < 1000; ++t) {
    const Matrix p = q + oracle::random_matrix(10, 8, rng, 1e-3);
    CHECK(base <= oracle::svt_objective(p, m, tau) + 1e-12);
  }
}

TEST_CASE("col_l21_prox examples and properties") {
  Matrix c(2, 1);
  c << 3, 4;
  Matrix e = col_l21_prox(c, 1.0);
  CHECK(e(0, 0) == doctest::Approx(2.4));
  CHECK(e(1, 0) == doctest::Approx(3.2));
  CHECK(col_l21_prox(c, 5.0).norm() == 0.0);
  CHECK(col_l21_prox(Matrix::Zero(3, 2), 0.5).norm() == 0.0);
  CHECK_THROWS_AS(col_l21_prox(c, -1.0), InvalidArgument);

  std::mt19937_64 rng(4);
  Matrix r = oracle::random_matrix(6, 5, rng);
  Matrix out = col_l21_prox(r, 0.5);
  CHECK(oracle::l21_objective(out, r, 0.5) <= oracle::l21_grid_objective(r, 0.5) + 1e-9);
  for (Index j = 0; j < r.cols(); ++j) {
    CHECK(out.col(j).norm() <= r.col(j).norm() + 1e-15);
    // Parallel: zero cross-product residue against the input direction.
    const double dot = out.col(j).dot(r.col(j));
    CHECK(std::abs(dot - out.col(j).norm() * r.col(j).norm()) < 1e-12);
  }
}

TEST_CASE("project_nonneg") {
  Matrix v(1, 2);
  v << 0.5, -0.3;
  Matrix p = project_nonneg(v);
  CHECK(p(0, 0) == 0.5);
  CHECK(p(0, 1) == 0.0);
  Matrix pos = Matrix::Constant(3, 3, 0.25);
  CHECK(project_nonneg(pos) == pos);
  CHECK(project_nonneg(-pos).norm() == 0.0);
  std::mt19937_64 rng(5);
  Matrix r = oracle::random_matrix(4, 4, rng);
  CHECK(project_nonneg(project_nonneg(r)) == project_nonneg(r));
}

TEST_CASE("project_simplex") {
  Vector a(2);
  a << 0.6, 0.6;
  CHECK((project_simplex(a) - Vector::Constant(2, 0.5)).norm() < 1e-15);

  Vector on(3);
  on << 0.2, 0.3, 0.5;
  CHECK((project_simplex(on) - on).norm() < 1e-15);

  // Grid oracle for [1.2, 0.3], frozen at [0.95, 0.05].
  Vector b(2);
  b << 1.2, 0.3;
  const Vector grid = oracle::simplex2_grid(b);
  CHECK(grid(0) == doctest::Approx(0.95).epsilon(1e-6));
  CHECK((project_simplex(b) - grid).norm() < 1e-6);
  CHECK(project_simplex(b)(0) == doctest::Approx(0.95).epsilon(1e-12));

  CHECK_THROWS_AS(project_simplex(Vector()), InvalidArgument);

  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    Vector v = oracle::random_matrix(7, 1, rng, 2.0);
    Vector p = project_simplex(v);
    CHECK((p - oracle::simplex_bisect(v)).norm() < 1e-9);
    CHECK((project_simplex(p) - p).norm() < 1e-12);
  }
}

TEST_CASE("kmeans exact locations and single center") {
  Matrix pts(2, 12);
  const double loc[3][2] = {{0, 0}, {5, 5}, {-4, 6}};
  for (Index i = 0; i < 12; ++i) {
    pts(0, i) = loc[i % 3][0];
    pts(1, i) = loc[i % 3][1];
  }
  KMeansResult r = kmeans(pts, 3, 20, 7);
  CHECK(r.inertia == 0.0);
  for (const auto& l : loc) {
    bool found = false;
    for (Index c = 0; c < 3; ++c) found |= r.centers(0, c) == l[0] && r.centers(1, c) == l[1];
    CHECK(found);
  }

  std::mt19937_64 rng(8);
  Matrix x = oracle::random_matrix(3, 50, rng);
  KMeansResult one = kmeans(x, 1, 5, 1);
  CHECK((one.centers.col(0) - x.rowwise().mean()).norm() < 1e-12);
  CHECK_THROWS_AS(kmeans(x, 51, 5, 1), InvalidArgument);
  CHECK_THROWS_AS(kmeans(x, 3, 0, 1), InvalidArgument);
}

TEST_CASE("kmeans inertia trace is non-increasing and matches a recomputation") {
  std::mt19937_64 rng(9);
  Matrix x = oracle::random_matrix(4, 200, rng);
  KMeansResult r = kmeans(x, 5, 50, 11);
  for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
    CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] * (1 + 1e-12));
  double inertia = 0.0;
  for (Index i = 0; i < x.cols(); ++i) {
    const Index a = r.assignments[static_cast<std::size_t>(i)];
    CHECK(a >= 0);
    CHECK(a < 5);
    inertia += (x.col(i) - r.centers.col(a)).squaredNorm();
  }
  CHECK(r.inertia == doctest::Approx(inertia).epsilon(1e-9));

  KMeansResult again = kmeans(x, 5, 50, 11);
  CHECK(again.centers == r.centers);
  CHECK(again.assignments == r.assignments);
}

TEST_CASE("numerical rank and norms") {
  std::mt19937_64 rng(10);
  Matrix a = oracle::random_matrix(20, 3, rng) * oracle::random_matrix(3, 30, rng);
  CHECK(numerical_rank(a) == 3);
  CHECK(nuclear_norm(a) == doctest::Approx(oracle::nuclear(a)).epsilon(1e-10));
  CHECK(l21_norm(a) == doctest::Approx(oracle::l21(a)).epsilon(1e-12));
}
