#pragma once

// ADMM for the densest k-disjoint-clique SDP relaxation
//
//   max tr(W Y)  s.t.  X = Y,  X e <= e,  X >= 0,  tr(Y) = k,  Y PSD.
//
// Z is the multiplier of X - Y with the sign convention Z <- Z - rho (X - Y);
// with that convention the Y and X steps read
//
//   Y <- P_psd,k( X + (W - Z) / rho )
//   X <- P_rows ( Y + Z / rho )
//
// which is scaled ADMM with the usual multiplier equal to -Z.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "kdc/errors.hpp"
#include "kdc/graph_model.hpp"
#include "kdc/linalg.hpp"

namespace kdc {

/// Penalty rule min{max{5n/k, 80}, 500} / 2.
inline double default_rho(Index n, Index k) {
  const double raw = 5.0 * static_cast<double>(n) / static_cast<double>(k);
  return std::min(std::max(raw, 80.0), 500.0) / 2.0;
}

struct AdmmParams {
  std::optional<double> rho;  // unset: default_rho(n, k)
  double tol = 1e-4;
  int max_iters = 100;

  double resolved_rho(Index n, Index k) const { return rho.value_or(default_rho(n, k)); }

  void validate() const {
    if (rho && !(*rho > 0.0)) throw ValidationError("rho must be positive");
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  }
};

enum class SolveStatus { converged, max_iters_reached };

inline const char* to_string(SolveStatus s) {
  return s == SolveStatus::converged ? "converged" : "max_iters_reached";
}

struct SdpSolution {
  Matrix x;  // polyhedral iterate, rows in the capped simplex
  Matrix y;  // PSD iterate with trace k; the reported solution
  Matrix z;
  int iters = 0;
  double primal_residual = 0.0;  // ||X - Y||_F at exit
  double dual_residual = 0.0;    // rho ||Y_t - Y_{t-1}||_F at exit
  double objective = 0.0;        // tr(W Y)
  double rho = 0.0;
  SolveStatus status = SolveStatus::max_iters_reached;

  bool converged() const { return status == SolveStatus::converged; }
};

struct IterationRecord {
  int iter;
  double objective;
  double primal_residual;
  double dual_residual;
};

/// Raised when the eigendecomposition inside an ADMM step fails.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, int iteration)
      : NumericalError(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Frobenius projection of a symmetric matrix onto {Y PSD, tr(Y) = k}:
/// eigendecompose, then project the spectrum onto the scaled simplex.
inline Matrix project_psd_trace(const Matrix& m, double k) {
  if (m.rows() != m.cols()) throw DimensionError("project_psd_trace: matrix is not square");
  const SymmetricEigen eig = symmetric_eigen(m);
  const Vector lam = project_onto_simplex(eig.values, k);
  Index support = 0;
  for (Index i = 0; i < lam.size(); ++i) support += lam(i) > 0.0 ? 1 : 0;
  // Ascending order puts the positive part of lam in the trailing columns.
  const auto v = eig.vectors.rightCols(support);
  Matrix y = v * lam.tail(support).asDiagonal() * v.transpose();
  return symmetric_part(y);
}

/// Each row replaced by its projection onto {x >= 0, sum(x) <= 1}.
inline Matrix project_rows_capped_simplex(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    Vector row = m.row(i).transpose().cwiseMax(0.0);
    if (row.sum() > 1.0) row = project_onto_simplex(m.row(i).transpose(), 1.0);
    out.row(i) = row.transpose();
  }
  return out;
}

using IterationObserver = std::function<void(const IterationRecord&)>;

inline SdpSolution admm_solve(const WeightMatrix& w, Index k, const AdmmParams& params = {},
                              const IterationObserver& observer = {}) {
  const Index n = w.n();
  if (k < 1 || k > n) throw ValidationError("admm_solve: k must lie in 1..n");
  params.validate();
  const double rho = params.resolved_rho(n, k);
  const double kk = static_cast<double>(k);
  const Matrix& wm = w.matrix();

  SdpSolution sol;
  sol.rho = rho;
  sol.x = (kk / static_cast<double>(n)) * Matrix::Identity(n, n);
  sol.y = sol.x;
  sol.z = Matrix::Zero(n, n);

  for (int it = 1; it <= params.max_iters; ++it) {
    Matrix y_prev = sol.y;
    try {
      sol.y = project_psd_trace(symmetric_part(sol.x + (wm - sol.z) / rho), kk);
    } catch (const NumericalError& e) {
      throw SolverError(e.what(), it);
    }
    sol.x = project_rows_capped_simplex(sol.y + sol.z / rho);
    const Matrix gap = sol.x - sol.y;
    sol.z -= rho * gap;

    sol.iters = it;
    sol.primal_residual = gap.norm();
    sol.dual_residual = rho * (sol.y - y_prev).norm();
    sol.objective = wm.cwiseProduct(sol.y).sum();
    if (observer) observer({it, sol.objective, sol.primal_residual, sol.dual_residual});
    const double scale = std::max(1.0, sol.y.norm());
    if (sol.primal_residual / scale < params.tol &&
        (sol.y - y_prev).norm() / scale < params.tol) {
      sol.status = SolveStatus::converged;
      break;
    }
  }
  return sol;
}

}  // namespace kdc
