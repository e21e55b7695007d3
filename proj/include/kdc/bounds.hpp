#pragma once

// Closed-form recovery thresholds for the planted cluster model. All
// logarithms are natural. The constants are not fixed by the theory; they
// default to 1 apart from c_unique = 12.

#include <algorithm>
#include <cmath>

#include "kdc/errors.hpp"

namespace kdc::bounds {

struct TheoryConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double c4 = 1.0;
  double c5 = 1.0;
  double c_unique = 12.0;
  double big_c = 1.0;        // C in the S~ norm bound
  double big_c_prime = 1.0;  // C'

  void validate() const {
    for (double c : {c1, c2, c3, c4, c5, c_unique, big_c, big_c_prime}) {
      if (!(c > 0.0)) throw ValidationError("theory constants must be strictly positive");
    }
  }
};

/// 6 max{sqrt(sigma^2 m log t), log t}; |S - m mean| exceeds it with
/// probability at most 2 t^-6 for a sum S of m i.i.d. bounded draws.
inline double bernstein_threshold(double m, double sigma2, double t) {
  if (!(t > 1.0)) throw ValidationError("bernstein_threshold: t must exceed 1");
  if (!(m >= 1.0)) throw ValidationError("bernstein_threshold: m must be at least 1");
  if (!(sigma2 >= 0.0)) throw ValidationError("bernstein_threshold: negative variance");
  const double log_t = std::log(t);
  return 6.0 * std::max(std::sqrt(sigma2 * m * log_t), log_t);
}

/// Tail probability attached to bernstein_threshold.
inline double bernstein_tail(double t) { return 2.0 * std::pow(t, -6.0); }

/// max{sqrt(sigma^2 log n / r), log n / r}, the fluctuation scale shared by
/// the gap and nonnegativity conditions.
inline double fluctuation_scale(double sigma2, double r, double n) {
  const double log_n = std::log(n);
  return std::max(std::sqrt(sigma2 * log_n / r), log_n / r);
}

/// alpha - beta > c5 max{sqrt(sigma~^2 log n / r^), log n / r^}.
inline bool gap_condition(double alpha, double beta, double sigma_tilde2, double r_hat,
                          double n, const TheoryConstants& c = {}) {
  if (n < 2) throw ValidationError("gap_condition: n must be at least 2");
  if (r_hat < 1) throw ValidationError("gap_condition: r_hat must be at least 1");
  return alpha - beta > c.c5 * fluctuation_scale(sigma_tilde2, r_hat, n);
}

struct RecoveryTerms {
  double noise;     // c1 max{sigma2 sqrt(n), sqrt(log n)}
  double cluster;   // c2 max{sigma1 sqrt(r~), sqrt(log n)}
  double outlier;   // c3 (max{sigma1^2, log n / r^} k r_out)^(1/2)
  double mass;      // c4 beta r_out
  double total() const { return noise + cluster + outlier + mass; }
};

/// Right-hand side of the recovery condition, term by term. sigma1 and
/// sigma2 are standard deviations.
inline RecoveryTerms recovery_terms(double r_hat, double r_tilde, double n, double k,
                                    double r_out, double sigma1, double sigma2, double beta,
                                    const TheoryConstants& c = {}) {
  if (n < 2 || r_hat < 1 || r_tilde < r_hat || k < 1 || r_out < 0) {
    throw ValidationError("recovery_condition: inconsistent sizes");
  }
  const double log_n = std::log(n);
  const double sqrt_log_n = std::sqrt(log_n);
  return {
      c.c1 * std::max(sigma2 * std::sqrt(n), sqrt_log_n),
      c.c2 * std::max(sigma1 * std::sqrt(r_tilde), sqrt_log_n),
      c.c3 * std::sqrt(std::max(sigma1 * sigma1, log_n / r_hat) * k * r_out),
      c.c4 * beta * r_out,
  };
}

/// gamma r^ >= recovery_terms(...).total().
inline bool recovery_condition(double gamma, double r_hat, double r_tilde, double n, double k,
                               double r_out, double sigma1, double sigma2, double beta,
                               const TheoryConstants& c = {}) {
  return gamma * r_hat >=
         recovery_terms(r_hat, r_tilde, n, k, r_out, sigma1, sigma2, beta, c).total();
}

/// c_unique max{sqrt(sigma~^2 log n / r^2), log n / r^2}; a gap above it makes
/// the block-weight inequality hold with high probability.
inline double uniqueness_bound(double sigma_tilde2, double r_hat, double n,
                               double c_unique = 12.0) {
  if (r_hat < 1) throw ValidationError("uniqueness_bound: r_hat must be at least 1");
  const double log_n = std::log(n);
  const double r2 = r_hat * r_hat;
  return c_unique * std::max(std::sqrt(sigma_tilde2 * log_n / r2), log_n / r2);
}

/// Predicted Bernoulli(1)/Bernoulli(q) recovery frontier
/// r^ = 12/(1-q) max{sqrt(q(1-q) n log n), log n}.
inline double phase_curve(double n, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw ValidationError("phase_curve: q must lie in [0,1)");
  const double log_n = std::log(n);
  return 12.0 / (1.0 - q) * std::max(std::sqrt(q * (1.0 - q) * n * log_n), log_n);
}

/// 2C max{sigma2 sqrt(n), sqrt(log n)} + C max{sigma1 sqrt(r~), sqrt(log n)}
///   + C' (max{sigma1^2, log n / r^} k r_out)^(1/2) + beta r_out.
inline double s_tilde_norm_bound(double sigma1, double sigma2, double n, double r_tilde,
                                 double r_hat, double k, double r_out, double beta,
                                 double big_c = 1.0, double big_c_prime = 1.0) {
  if (n < 2 || r_hat < 1 || r_tilde < r_hat || k < 1 || r_out < 0) {
    throw ValidationError("s_tilde_norm_bound: inconsistent sizes");
  }
  const double log_n = std::log(n);
  const double sqrt_log_n = std::sqrt(log_n);
  return 2.0 * big_c * std::max(sigma2 * std::sqrt(n), sqrt_log_n) +
         big_c * std::max(sigma1 * std::sqrt(r_tilde), sqrt_log_n) +
         big_c_prime * std::sqrt(std::max(sigma1 * sigma1, log_n / r_hat) * k * r_out) +
         beta * r_out;
}

}  // namespace kdc::bounds
