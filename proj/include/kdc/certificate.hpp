#pragma once

// Dual certificate for the optimality of the ideal solution X_0 of a
// candidate partition.
//
// The dual variables (mu, lambda, Xi, S) are chosen so that the S blocks have
// zero row sums against every cluster and outlier block, which makes
// tr(X_0 S) = 0 automatic; X_0 is then optimal as soon as lambda >= 0,
// Xi >= 0 and S is PSD. The spectral bound ||S~|| <= mu on the auxiliary
// matrix S~ replaces the PSD test for S, and every entry of lambda and Xi is
// affine and non-increasing in mu, so the admissible mu form the interval
// [||S~||, mu_max].

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kdc/errors.hpp"
#include "kdc/graph_model.hpp"
#include "kdc/linalg.hpp"

namespace kdc {

enum class Verdict { certified_unique, certified, not_certified };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::certified_unique: return "certified_unique";
    case Verdict::certified: return "certified";
    case Verdict::not_certified: return "not_certified";
  }
  return "?";
}

struct CertificateFlags {
  bool lambda_nonneg = false;
  bool xi_nonneg = false;
  bool s_tilde_bound = false;  // ||S~|| <= mu_max
  bool block_weights = false;  // r_s e'W_qq e > r_q e'W_qs e for all q != s
};

struct DualCertificate {
  double mu = 0.0;
  Vector lambda;
  Matrix xi;
  Matrix s;
  Matrix s_tilde;
  double s_tilde_norm = 0.0;
  double mu_max = 0.0;
  double lambda_min_entry = 0.0;
  double xi_min_entry = 0.0;
  Verdict verdict = Verdict::not_certified;
  CertificateFlags flags;
};

namespace detail {

inline void check_inputs(const WeightMatrix& w, const Partition& p) {
  if (w.n() != p.n()) {
    throw DimensionError("certificate: weight matrix has " + std::to_string(w.n()) +
                         " nodes, partition has " + std::to_string(p.n()));
  }
  if (p.k() < 1) throw ValidationError("certificate: partition has no clusters");
}

inline double block_sum(const WeightMatrix& w, const std::vector<Index>& rows,
                        const std::vector<Index>& cols) {
  double total = 0.0;
  for (Index u : rows) {
    for (Index v : cols) total += w(u, v);
  }
  return total;
}

/// Mean of W on block (q, s) under the planted model; block k is the outlier
/// set.
inline double expected_block_weight(const Partition& p, Index q, Index s, double alpha,
                                    double beta) {
  const Index out = p.k();
  if (q == s) return q == out ? beta : alpha;
  if (q == out || s == out) return 0.5 * beta;
  return beta;
}

}  // namespace detail

/// lambda_{C_q} = (1/r_q)(W_qq e - (mu + e'W_qq e / r_q) e / 2); zero on
/// outliers.
inline Vector build_lambda(const WeightMatrix& w, const Partition& partition, double mu) {
  detail::check_inputs(w, partition);
  Vector lambda = Vector::Zero(w.n());
  for (const auto& c : partition.clusters()) {
    const double r = static_cast<double>(c.size());
    std::vector<double> row_sums;
    double total = 0.0;
    for (Index u : c) {
      double sum = 0.0;
      for (Index v : c) sum += w(u, v);
      row_sums.push_back(sum);
      total += sum;
    }
    const double shift = 0.5 * (mu + total / r);
    for (std::size_t i = 0; i < c.size(); ++i) lambda(c[i]) = (row_sums[i] - shift) / r;
  }
  return lambda;
}

/// E[lambda_{C_q}] = (alpha - mu / r_q) / 2; zero on outliers.
inline Vector expected_lambda(const Partition& partition, double alpha, double mu) {
  Vector out = Vector::Zero(partition.n());
  for (const auto& c : partition.clusters()) {
    const double value = 0.5 * (alpha - mu / static_cast<double>(c.size()));
    for (Index u : c) out(u) = value;
  }
  return out;
}

/// Xi with zero diagonal blocks and off-diagonal blocks equal to their
/// expectation plus the rank-two correction y e' + e z' that zeroes the row
/// and column sums of the matching S block.
inline Matrix build_xi(const WeightMatrix& w, const Partition& partition, double mu,
                       double alpha, double beta) {
  detail::check_inputs(w, partition);
  const Index k = partition.k();
  const Vector lambda = build_lambda(w, partition, mu);
  const Vector mean_lambda = expected_lambda(partition, alpha, mu);
  const Vector dev = lambda - mean_lambda;

  // Deviation sums per block, sum_{i in C_s} (lambda_i - E lambda_i).
  std::vector<double> dev_sum(static_cast<std::size_t>(k + 1), 0.0);
  for (Index q = 0; q <= k; ++q) {
    for (Index u : partition.block(q)) dev_sum[static_cast<std::size_t>(q)] += dev(u);
  }

  // b_{q,s} = (lambda_q e' + e lambda_s' - W_qs - E[...]) e
  auto b_vector = [&](Index q, Index s) {
    const auto& rows = partition.block(q);
    const auto& cols = partition.block(s);
    const double rs = static_cast<double>(cols.size());
    const double mean_w = detail::expected_block_weight(partition, q, s, alpha, beta);
    Vector b(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double w_row = 0.0;
      for (Index v : cols) w_row += w(rows[i], v);
      b(static_cast<Index>(i)) =
          rs * dev(rows[i]) + dev_sum[static_cast<std::size_t>(s)] - w_row + mean_w * rs;
    }
    return b;
  };

  Matrix xi = Matrix::Zero(w.n(), w.n());
  for (Index q = 0; q <= k; ++q) {
    for (Index s = q + 1; s <= k; ++s) {
      const auto& rows = partition.block(q);
      const auto& cols = partition.block(s);
      if (rows.empty() || cols.empty()) continue;
      const double rq = static_cast<double>(rows.size());
      const double rs = static_cast<double>(cols.size());
      auto half_term = [&](Index block, double r) {
        return block == k ? 0.0 : 0.5 * (alpha - beta - mu / r);
      };
      const double coef = half_term(q, rq) + half_term(s, rs);
      const Vector b_qs = b_vector(q, s);
      const Vector b_sq = b_vector(s, q);
      const Vector y = (b_qs.array() - b_qs.sum() / (rq + rs)).matrix() / rs;
      const Vector z = (b_sq.array() - b_sq.sum() / (rq + rs)).matrix() / rq;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
          const double value =
              coef + y(static_cast<Index>(i)) + z(static_cast<Index>(j));
          xi(rows[i], cols[j]) = value;
          xi(cols[j], rows[i]) = value;
        }
      }
    }
  }
  return xi;
}

/// S = -W + lambda e' + e lambda' - Xi + mu I.
inline Matrix assemble_s(const WeightMatrix& w, const Vector& lambda, const Matrix& xi,
                         double mu) {
  const Index n = w.n();
  const Vector ones = Vector::Ones(n);
  Matrix s = -w.matrix() + lambda * ones.transpose() + ones * lambda.transpose() - xi;
  s.diagonal().array() += mu;
  return s;
}

/// Components of S~ = S~1 + S~2 + S~3: the centred weights E[W] - W, the
/// lambda deviations on cluster/outlier blocks, and -beta J on the outlier
/// block.
struct STildeParts {
  Matrix centred;
  Matrix lambda_dev;
  Matrix outlier;
};

inline STildeParts s_tilde_parts(const WeightMatrix& w, const Partition& partition,
                                 double alpha, double beta, double mu = 0.0) {
  detail::check_inputs(w, partition);
  const Index n = w.n();
  const Index k = partition.k();
  const Vector dev = build_lambda(w, partition, mu) - expected_lambda(partition, alpha, mu);
  STildeParts parts{Matrix(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (Index q = 0; q <= k; ++q) {
    for (Index s = 0; s <= k; ++s) {
      const double mean_w = detail::expected_block_weight(partition, q, s, alpha, beta);
      for (Index u : partition.block(q)) {
        for (Index v : partition.block(s)) parts.centred(u, v) = mean_w - w(u, v);
      }
    }
  }
  for (Index q = 0; q < k; ++q) {
    for (Index u : partition.cluster(q)) {
      for (Index v : partition.outliers()) {
        parts.lambda_dev(u, v) = dev(u);
        parts.lambda_dev(v, u) = dev(u);
      }
    }
  }
  for (Index u : partition.outliers()) {
    for (Index v : partition.outliers()) parts.outlier(u, v) = -beta;
  }
  return parts;
}

/// S~; mu cancels in lambda - E[lambda], so any mu gives the same matrix.
inline Matrix build_s_tilde(const WeightMatrix& w, const Partition& partition, double alpha,
                            double beta, double mu = 0.0) {
  STildeParts parts = s_tilde_parts(w, partition, alpha, beta, mu);
  return parts.centred + parts.lambda_dev + parts.outlier;
}

struct STildeNorms {
  double centred;
  double lambda_dev;
  double outlier;
};

/// Spectral norms of the three S~ components, for comparison against their
/// individual high-probability bounds.
inline STildeNorms s_tilde_part_norms(const WeightMatrix& w, const Partition& partition,
                                      double alpha, double beta) {
  const STildeParts parts = s_tilde_parts(w, partition, alpha, beta);
  return {spectral_norm(parts.centred), spectral_norm(parts.lambda_dev),
          spectral_norm(parts.outlier)};
}

/// Largest mu >= 0 at which every entry of lambda and Xi stays nonnegative;
/// 0 if some entry is already negative at mu = 0.
inline double mu_max(const WeightMatrix& w, const Partition& partition, double alpha,
                     double beta) {
  detail::check_inputs(w, partition);
  if (!(alpha - beta > 0.0)) throw GapError("mu_max: alpha must exceed beta");
  const Index k = partition.k();
  double bound = std::numeric_limits<double>::infinity();
  auto limit = [&](double at_zero, double slope) {
    if (at_zero < 0.0) return false;
    if (slope > 0.0) bound = std::min(bound, at_zero / slope);
    return true;
  };

  const Vector lambda0 = build_lambda(w, partition, 0.0);
  for (Index q = 0; q < k; ++q) {
    const double slope = 0.5 / static_cast<double>(partition.block_size(q));
    for (Index u : partition.cluster(q)) {
      if (!limit(lambda0(u), slope)) return 0.0;
    }
  }

  const Matrix xi0 = build_xi(w, partition, 0.0, alpha, beta);
  auto decay = [&](Index q) {
    return q == k ? 0.0 : 0.5 / static_cast<double>(partition.block_size(q));
  };
  for (Index q = 0; q <= k; ++q) {
    for (Index s = q + 1; s <= k; ++s) {
      const double slope = decay(q) + decay(s);
      for (Index u : partition.block(q)) {
        for (Index v : partition.block(s)) {
          if (!limit(xi0(u, v), slope)) return 0.0;
        }
      }
    }
  }
  return bound;
}

/// r_s e'W_qq e > r_q e'W_qs e for every ordered pair of distinct clusters.
inline bool block_weights_hold(const WeightMatrix& w, const Partition& partition) {
  const Index k = partition.k();
  for (Index q = 0; q < k; ++q) {
    const double within = detail::block_sum(w, partition.cluster(q), partition.cluster(q));
    for (Index s = 0; s < k; ++s) {
      if (s == q) continue;
      const double across = detail::block_sum(w, partition.cluster(q), partition.cluster(s));
      if (!(static_cast<double>(partition.block_size(s)) * within >
            static_cast<double>(partition.block_size(q)) * across)) {
        return false;
      }
    }
  }
  return true;
}

/// Relative slack required between ||S~|| and mu_max for a uniqueness verdict.
inline constexpr double kUniqueMargin = 1e-9;

/// Dual variables at a fixed mu together with the verdict quantities. The
/// verdict reflects mu_max and ||S~||, not the chosen mu.
inline DualCertificate build_certificate(const WeightMatrix& w, const Partition& partition,
                                         double alpha, double beta, double mu) {
  detail::check_inputs(w, partition);
  if (!(alpha - beta > 0.0)) {
    throw GapError("certificate: gap alpha - beta must be positive");
  }
  DualCertificate cert;
  cert.s_tilde = build_s_tilde(w, partition, alpha, beta);
  cert.s_tilde_norm = spectral_norm(cert.s_tilde);
  cert.mu_max = mu_max(w, partition, alpha, beta);
  cert.mu = mu;
  cert.lambda = build_lambda(w, partition, mu);
  cert.xi = build_xi(w, partition, mu, alpha, beta);
  cert.s = assemble_s(w, cert.lambda, cert.xi, mu);
  cert.lambda_min_entry = cert.lambda.minCoeff();
  cert.xi_min_entry = cert.xi.minCoeff();

  cert.flags.lambda_nonneg = cert.lambda_min_entry >= 0.0;
  cert.flags.xi_nonneg = cert.xi_min_entry >= 0.0;
  cert.flags.s_tilde_bound = cert.s_tilde_norm <= cert.mu_max;
  cert.flags.block_weights = block_weights_hold(w, partition);
  if (cert.flags.s_tilde_bound) {
    // At ||S~|| = mu_max some lambda or Xi entry vanishes and S can gain null
    // directions beyond the cluster indicators, so ties with other partitions
    // are possible. Uniqueness needs the bound to hold strictly.
    const bool strict =
        cert.s_tilde_norm < cert.mu_max - kUniqueMargin * std::max(1.0, cert.mu_max);
    cert.verdict = cert.flags.block_weights && strict ? Verdict::certified_unique
                                                      : Verdict::certified;
  }
  return cert;
}

/// Certificate at the smallest admissible mu = ||S~|| when the admissible
/// interval is nonempty, otherwise at mu = mu_max.
inline DualCertificate verify_certificate(const WeightMatrix& w, const Partition& partition,
                                          double alpha, double beta) {
  detail::check_inputs(w, partition);
  if (!(alpha - beta > 0.0)) {
    throw GapError("certificate: gap alpha - beta must be positive");
  }
  const Matrix s_tilde = build_s_tilde(w, partition, alpha, beta);
  const double norm = spectral_norm(s_tilde);
  const double upper = mu_max(w, partition, alpha, beta);
  return build_certificate(w, partition, alpha, beta, norm <= upper ? norm : upper);
}

struct KktReport {
  double stationarity_error = 0.0;  // max |S(mu, lambda, Xi) - S_stored|
  double lambda_min = 0.0;
  double xi_min = 0.0;
  double rowsum_slack = 0.0;  // lambda'(X e - e)
  double nonneg_slack = 0.0;  // tr(X Xi)
  double sdp_slack = 0.0;     // tr(X S)
  double s_min_eigenvalue = 0.0;
  double s_norm = 0.0;

  bool stationarity = false;
  bool lambda_nonneg = false;
  bool xi_nonneg = false;
  bool rowsum = false;
  bool nonneg = false;
  bool sdp = false;  // tr(X S) = 0 and S PSD

  bool primal_feasible = false;  // informational: symmetric, X >= 0, Xe <= e, PSD

  bool all_passed() const {
    return stationarity && lambda_nonneg && xi_nonneg && rowsum && nonneg && sdp;
  }
};

/// Checks each KKT condition for the pair (X, certificate) separately. S is
/// PSD when its smallest eigenvalue is >= -tol * max(1, ||S||).
inline KktReport check_kkt(const Matrix& x, const WeightMatrix& w,
                           const DualCertificate& cert, double tol) {
  const Index n = w.n();
  if (x.rows() != n || x.cols() != n || cert.lambda.size() != n || cert.xi.rows() != n ||
      cert.xi.cols() != n || cert.s.rows() != n || cert.s.cols() != n) {
    throw DimensionError("check_kkt: operand sizes disagree");
  }
  KktReport r;
  r.stationarity_error = max_abs_entry(assemble_s(w, cert.lambda, cert.xi, cert.mu) - cert.s);
  r.lambda_min = cert.lambda.minCoeff();
  r.xi_min = cert.xi.minCoeff();
  const Vector ones = Vector::Ones(n);
  r.rowsum_slack = cert.lambda.dot(x * ones - ones);
  r.nonneg_slack = x.cwiseProduct(cert.xi.transpose()).sum();
  r.sdp_slack = x.cwiseProduct(cert.s.transpose()).sum();
  const Matrix s_sym = symmetric_part(cert.s);
  const Vector s_eigs = symmetric_eigen(s_sym, false).values;
  r.s_min_eigenvalue = s_eigs(0);
  r.s_norm = std::max(std::abs(s_eigs(0)), std::abs(s_eigs(n - 1)));

  r.stationarity = r.stationarity_error <= tol;
  r.lambda_nonneg = r.lambda_min >= -tol;
  r.xi_nonneg = r.xi_min >= -tol;
  r.rowsum = std::abs(r.rowsum_slack) <= tol;
  r.nonneg = std::abs(r.nonneg_slack) <= tol;
  r.sdp = std::abs(r.sdp_slack) <= tol &&
          r.s_min_eigenvalue >= -tol * std::max(1.0, r.s_norm);

  const Matrix xs = symmetric_part(x);
  r.primal_feasible = max_abs_entry(x - x.transpose()) <= tol && x.minCoeff() >= -tol &&
                      (x * ones).maxCoeff() <= 1.0 + tol &&
                      symmetric_eigen(xs, false).values(0) >= -tol;
  return r;
}

}  // namespace kdc
