#include <random>

#include <gtest/gtest.h>

#include "kdc/linalg.hpp"

using namespace kdc;

namespace {

Matrix random_symmetric(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = g(rng);
  }
  return symmetric_part(m);
}

}  // namespace

TEST(SpectralNorm, DiagonalPicksLargestMagnitude) {
  Matrix m = Vector(Eigen::Vector2d(1.0, -3.0)).asDiagonal();
  EXPECT_DOUBLE_EQ(spectral_norm(m), 3.0);
}

TEST(SpectralNorm, AllOnesHasNormN) {
  for (Index n : {1, 5, 17}) {
    EXPECT_NEAR(spectral_norm(Matrix::Ones(n, n)), static_cast<double>(n), 1e-12);
  }
}

TEST(SpectralNorm, MatchesReferenceSolverOnRandomInput) {
  std::mt19937_64 rng(11);
  const Matrix m = random_symmetric(50, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(m);
  const double expected = ref.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_NEAR(spectral_norm(m), expected, 1e-8);
}

TEST(SpectralNorm, PowerIterationPathAboveDenseLimit) {
  std::mt19937_64 rng(5);
  const Index n = kDenseSpectralLimit + 40;
  // A planted dominant direction keeps power iteration fast.
  Matrix m = 0.05 * random_symmetric(n, rng);
  Vector u = Vector::Ones(n).normalized();
  m -= 30.0 * u * u.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> ref(m, Eigen::EigenvaluesOnly);
  const double expected = ref.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_NEAR(spectral_norm(m), expected, 1e-6 * expected);
}

TEST(SpectralNorm, RejectsNonSymmetric) {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  EXPECT_THROW(spectral_norm(m), std::invalid_argument);
}

TEST(SimplexProjection, HandWorkedCases) {
  // (3, 1) onto {x >= 0, sum = 1}: threshold 2 leaves (1, 0).
  const Vector p = project_onto_simplex(Eigen::Vector2d(3.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(p(0), 1.0);
  EXPECT_DOUBLE_EQ(p(1), 0.0);
  // (0.5, 0.7) onto sum = 1: uniform shift of 0.1.
  const Vector r = project_onto_simplex(Eigen::Vector2d(0.5, 0.7), 1.0);
  EXPECT_NEAR(r(0), 0.4, 1e-15);
  EXPECT_NEAR(r(1), 0.6, 1e-15);
}

TEST(SimplexProjection, TiedEntriesStayTied) {
  const Vector p = project_onto_simplex(Eigen::Vector3d(2.0, 2.0, -1.0), 3.0);
  EXPECT_DOUBLE_EQ(p(0), 1.5);
  EXPECT_DOUBLE_EQ(p(1), 1.5);
  EXPECT_DOUBLE_EQ(p(2), 0.0);
}
