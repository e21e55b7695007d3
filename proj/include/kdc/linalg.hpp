#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kdc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a numerical kernel (eigendecomposition) fails.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values[i]
};

/// Full eigendecomposition of a symmetric matrix. Only the lower triangle is
/// read.
inline SymmetricEigen symmetric_eigen(const Matrix& m, bool want_vectors = true) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("symmetric_eigen: matrix is not square");
  }
  if (m.rows() == 0) return {};
  const int options = want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, options);
  // The tridiagonal QR can stall on a large cluster of eigenvalues at zero.
  // A diagonal shift moves the cluster off zero and leaves eigenvectors intact.
  double shift = 0.0;
  if (solver.info() != Eigen::Success && m.allFinite()) {
    shift = std::max(1.0, m.cwiseAbs().rowwise().sum().maxCoeff());
    Matrix shifted = m;
    shifted.diagonal().array() += shift;
    solver.compute(shifted, options);
  }
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition did not converge");
  }
  SymmetricEigen out;
  out.values = solver.eigenvalues().array() - shift;
  if (want_vectors) out.vectors = solver.eigenvectors();
  return out;
}

inline double max_abs_entry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, max_abs_entry(m));
  return max_abs_entry(m - m.transpose()) <= rel_tol * scale;
}

inline Matrix symmetric_part(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigen(m, false).values(0);
}

/// Size above which spectral_norm switches from a dense solve to power
/// iteration.
inline constexpr Index kDenseSpectralLimit = 512;

/// Largest absolute eigenvalue of a symmetric matrix.
inline double spectral_norm(const Matrix& m, double power_tol = 1e-10,
                            int power_max_iters = 100000) {
  if (!is_symmetric(m, 1e-10)) {
    throw std::invalid_argument("spectral_norm: input is not symmetric");
  }
  const Index n = m.rows();
  if (n == 0) return 0.0;
  if (n <= kDenseSpectralLimit) {
    const Vector ev = symmetric_eigen(m, false).values;
    return std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  }
  // Iterates on M^2 so that +/- eigenvalue pairs of equal magnitude do not
  // make the estimate oscillate; sqrt(||M^2 v||) -> max |eigenvalue| for unit v.
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(static_cast<double>(i + 1));
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < power_max_iters; ++it) {
    Vector mv = m * v;
    const double norm = mv.norm();
    if (norm == 0.0) return 0.0;
    Vector mmv = m * (mv / norm);
    const double next = std::sqrt(mmv.norm() * norm);
    v = mmv.normalized();
    if (std::abs(next - estimate) <= power_tol * std::max(1.0, next)) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

/// Euclidean projection of v onto {x >= 0, sum(x) = total}; sort-and-threshold.
inline Vector project_onto_simplex(const Vector& v, double total) {
  const Index n = v.size();
  if (n == 0) return v;
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumulative += sorted[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - total) / static_cast<double>(j + 1);
    // >= keeps ties inside the support; the projection is the same either way.
    if (sorted[static_cast<std::size_t>(j)] - candidate >= 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

}  // namespace kdc
