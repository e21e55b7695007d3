#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdc/errors.hpp"
#include "kdc/linalg.hpp"

namespace kdc {

/// Symmetric matrix of edge weights in [0, 1]. Immutable after construction.
class WeightMatrix {
 public:
  /// Entries must lie in [0, 1] and mirror each other to within `sym_tol`;
  /// the stored matrix is exactly symmetric.
  explicit WeightMatrix(Matrix w, double sym_tol = 1e-12) : w_(std::move(w)) {
    if (w_.rows() != w_.cols()) {
      throw ValidationError("weight matrix is not square");
    }
    for (Index j = 0; j < w_.cols(); ++j) {
      for (Index i = 0; i < w_.rows(); ++i) {
        const double v = w_(i, j);
        if (!(v >= 0.0 && v <= 1.0)) {
          std::ostringstream msg;
          msg << "weight (" << i + 1 << "," << j + 1 << ") = " << v
              << " is outside [0,1]";
          throw ValidationError(msg.str());
        }
        if (std::abs(v - w_(j, i)) > sym_tol) {
          std::ostringstream msg;
          msg << "weight matrix is not symmetric at (" << i + 1 << "," << j + 1
              << ")";
          throw ValidationError(msg.str());
        }
      }
    }
    w_ = symmetric_part(w_);
  }

  Index n() const { return w_.rows(); }
  const Matrix& matrix() const { return w_; }
  double operator()(Index i, Index j) const { return w_(i, j); }

  friend bool operator==(const WeightMatrix& a, const WeightMatrix& b) {
    return a.w_.rows() == b.w_.rows() && a.w_ == b.w_;
  }

 private:
  Matrix w_;
};

/// Disjoint clusters C_1..C_k plus the outlier set C_{k+1}. Node indices are
/// 0-based; each index set is kept sorted.
class Partition {
 public:
  Partition() = default;

  Partition(std::vector<std::vector<Index>> clusters, std::vector<Index> outliers,
            Index n)
      : n_(n), clusters_(std::move(clusters)), outliers_(std::move(outliers)) {
    if (n_ < 0) throw ValidationError("partition: negative node count");
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    auto claim = [&](std::vector<Index>& set) {
      std::sort(set.begin(), set.end());
      for (Index v : set) {
        if (v < 0 || v >= n_) {
          throw ValidationError("partition: node index " + std::to_string(v + 1) +
                                " is outside 1.." + std::to_string(n_));
        }
        if (seen[static_cast<std::size_t>(v)]) {
          throw ValidationError("partition: node " + std::to_string(v + 1) +
                                " appears more than once");
        }
        seen[static_cast<std::size_t>(v)] = 1;
      }
    };
    for (auto& c : clusters_) {
      if (c.empty()) throw ValidationError("partition: empty cluster");
      claim(c);
    }
    claim(outliers_);
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw ValidationError("partition: clusters and outliers do not cover all nodes");
    }
  }

  /// Consecutive blocks of the given sizes; nodes past the last block are
  /// outliers.
  static Partition from_sizes(std::span<const Index> sizes, Index n) {
    std::vector<std::vector<Index>> clusters;
    Index next = 0;
    for (Index s : sizes) {
      if (s <= 0) throw ValidationError("partition: cluster size must be positive");
      std::vector<Index> c;
      for (Index i = 0; i < s; ++i) c.push_back(next++);
      clusters.push_back(std::move(c));
    }
    if (next > n) throw ValidationError("partition: cluster sizes exceed n");
    std::vector<Index> outliers;
    for (Index i = next; i < n; ++i) outliers.push_back(i);
    return Partition(std::move(clusters), std::move(outliers), n);
  }

  /// labels[i] in 0..k-1 names a cluster, -1 marks an outlier.
  static Partition from_labels(std::span<const int> labels) {
    int k = 0;
    for (int l : labels) {
      if (l < -1) throw ValidationError("partition: label below -1");
      k = std::max(k, l + 1);
    }
    std::vector<std::vector<Index>> clusters(static_cast<std::size_t>(k));
    std::vector<Index> outliers;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0) {
        outliers.push_back(static_cast<Index>(i));
      } else {
        clusters[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
      }
    }
    return Partition(std::move(clusters), std::move(outliers),
                     static_cast<Index>(labels.size()));
  }

  Index n() const { return n_; }
  Index k() const { return static_cast<Index>(clusters_.size()); }
  const std::vector<std::vector<Index>>& clusters() const { return clusters_; }
  const std::vector<Index>& cluster(Index q) const {
    return clusters_[static_cast<std::size_t>(q)];
  }
  const std::vector<Index>& outliers() const { return outliers_; }

  /// Block q for q in 0..k; block k is the outlier set.
  const std::vector<Index>& block(Index q) const {
    return q == k() ? outliers_ : cluster(q);
  }
  Index block_size(Index q) const { return static_cast<Index>(block(q).size()); }

  Index r_hat() const {
    Index r = n_;
    for (const auto& c : clusters_) r = std::min(r, static_cast<Index>(c.size()));
    return clusters_.empty() ? 0 : r;
  }
  Index r_tilde() const {
    Index r = 0;
    for (const auto& c : clusters_) r = std::max(r, static_cast<Index>(c.size()));
    return r;
  }
  Index r_out() const { return static_cast<Index>(outliers_.size()); }

  std::vector<int> labels() const {
    std::vector<int> out(static_cast<std::size_t>(n_), -1);
    for (std::size_t q = 0; q < clusters_.size(); ++q) {
      for (Index v : clusters_[q]) out[static_cast<std::size_t>(v)] = static_cast<int>(q);
    }
    return out;
  }

  /// Clusters reordered by their smallest member.
  Partition canonical() const {
    auto clusters = clusters_;
    std::sort(clusters.begin(), clusters.end());
    return Partition(std::move(clusters), outliers_, n_);
  }

  /// Equality as unordered collections of clusters.
  bool same_as(const Partition& other) const {
    return canonical() == other.canonical();
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.n_ == b.n_ && a.clusters_ == b.clusters_ && a.outliers_ == b.outliers_;
  }

 private:
  Index n_ = 0;
  std::vector<std::vector<Index>> clusters_;
  std::vector<Index> outliers_;
};

/// Edge-weight law from the bounded family used by the planted model.
class EdgeDistribution {
 public:
  enum class Kind { bernoulli, uniform, point };

  EdgeDistribution() = default;
  EdgeDistribution(Kind kind, double a, double b = 0.0) : kind_(kind), a_(a), b_(b) {}

  static EdgeDistribution bernoulli(double p) { return {Kind::bernoulli, p}; }
  static EdgeDistribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static EdgeDistribution point(double mass) { return {Kind::point, mass}; }

  /// Parses "bernoulli:p", "uniform:lo:hi" or "point:m".
  static EdgeDistribution parse(std::string_view text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
    auto num = [&](std::size_t i) {
      try {
        std::size_t used = 0;
        const double v = std::stod(parts.at(i), &used);
        if (used != parts[i].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw ValidationError("bad distribution parameter in '" + std::string(text) + "'");
      }
    };
    if (parts[0] == "bernoulli" && parts.size() == 2) return bernoulli(num(1));
    if (parts[0] == "uniform" && parts.size() == 3) return uniform(num(1), num(2));
    if (parts[0] == "point" && parts.size() == 2) return point(num(1));
    throw ValidationError("unknown distribution '" + std::string(text) +
                          "' (expected bernoulli:p, uniform:lo:hi or point:m)");
  }

  Kind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  double mean() const {
    switch (kind_) {
      case Kind::bernoulli: return a_;
      case Kind::uniform: return 0.5 * (a_ + b_);
      case Kind::point: return a_;
    }
    return 0.0;
  }

  double variance() const {
    switch (kind_) {
      case Kind::bernoulli: return a_ * (1.0 - a_);
      case Kind::uniform: return (b_ - a_) * (b_ - a_) / 12.0;
      case Kind::point: return 0.0;
    }
    return 0.0;
  }

  bool valid() const {
    switch (kind_) {
      case Kind::bernoulli: return a_ >= 0.0 && a_ <= 1.0;
      case Kind::uniform: return a_ >= 0.0 && a_ <= b_ && b_ <= 1.0;
      case Kind::point: return a_ >= 0.0 && a_ <= 1.0;
    }
    return false;
  }

  /// Same family with half the mean: bernoulli(p/2), uniform(lo/2, hi/2),
  /// point(m/2).
  EdgeDistribution halved() const { return {kind_, 0.5 * a_, 0.5 * b_}; }

  template <class Rng>
  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::bernoulli: return std::bernoulli_distribution(a_)(rng) ? 1.0 : 0.0;
      case Kind::uniform: return std::uniform_real_distribution<double>(a_, b_)(rng);
      case Kind::point: return a_;
    }
    return 0.0;
  }

  /// Shortest text that parses back to the same distribution.
  std::string to_string() const {
    auto num = [](double v) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, res.ptr);
    };
    switch (kind_) {
      case Kind::bernoulli: return "bernoulli:" + num(a_);
      case Kind::uniform: return "uniform:" + num(a_) + ":" + num(b_);
      case Kind::point: return "point:" + num(a_);
    }
    return {};
  }

 private:
  Kind kind_ = Kind::point;
  double a_ = 0.0;
  double b_ = 0.0;
};

struct PlantedModelSpec {
  Partition partition;
  EdgeDistribution within;
  EdgeDistribution between;
  /// Defaults to between.halved() when unset.
  std::optional<EdgeDistribution> cluster_outlier;
  std::uint64_t seed = 0;

  EdgeDistribution resolved_cluster_outlier() const {
    return cluster_outlier.value_or(between.halved());
  }
  double alpha() const { return within.mean(); }
  double beta() const { return between.mean(); }
  double gamma() const { return alpha() - beta(); }
  double sigma1_sq() const { return within.variance(); }
  double sigma2_sq() const { return between.variance(); }
  double sigma_tilde_sq() const { return std::max(sigma1_sq(), sigma2_sq()); }

  void validate() const {
    if (!within.valid() || !between.valid() || !resolved_cluster_outlier().valid()) {
      throw ValidationError("edge distribution support must lie in [0,1]");
    }
    if (!(gamma() > 0.0)) {
      throw GapError("within-cluster mean must exceed between-cluster mean");
    }
  }
};

/// Draws W from the planted cluster model. Diagonal entries follow the
/// within-block law of their node (within for cluster nodes, between for
/// outliers). Entries are drawn over the upper triangle in row-major order,
/// so the result is a pure function of the spec.
inline WeightMatrix sample_weight_matrix(const PlantedModelSpec& spec) {
  spec.validate();
  const Partition& part = spec.partition;
  const Index n = part.n();
  const std::vector<int> label = part.labels();
  const EdgeDistribution mixed = spec.resolved_cluster_outlier();
  std::mt19937_64 rng(spec.seed);
  Matrix w(n, n);
  for (Index i = 0; i < n; ++i) {
    const int li = label[static_cast<std::size_t>(i)];
    for (Index j = i; j < n; ++j) {
      const int lj = label[static_cast<std::size_t>(j)];
      const EdgeDistribution* dist = &spec.between;
      if (li >= 0 && li == lj) {
        dist = &spec.within;
      } else if ((li < 0) != (lj < 0)) {
        dist = &mixed;
      }
      const double v = dist->sample(rng);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return WeightMatrix(std::move(w));
}

/// Sum of W over s x s divided by |s|.
inline double subgraph_density(const WeightMatrix& w, std::span<const Index> s) {
  if (s.empty()) throw ValidationError("subgraph_density: empty node set");
  double total = 0.0;
  for (Index u : s) {
    if (u < 0 || u >= w.n()) throw ValidationError("subgraph_density: node out of range");
    for (Index v : s) total += w(u, v);
  }
  return total / static_cast<double>(s.size());
}

/// X_0 = sum_q v_q v_q^T / |C_q| for the characteristic vectors v_q.
inline Matrix build_ideal_solution(const Partition& partition) {
  const Index n = partition.n();
  Matrix x = Matrix::Zero(n, n);
  for (const auto& c : partition.clusters()) {
    const double value = 1.0 / static_cast<double>(c.size());
    for (Index u : c) {
      for (Index v : c) x(u, v) = value;
    }
  }
  return x;
}

/// Sum of cluster densities, i.e. tr(W X_0).
inline double kdc_objective(const WeightMatrix& w, const Partition& partition) {
  if (w.n() != partition.n()) {
    throw DimensionError("kdc_objective: matrix and partition sizes differ");
  }
  double total = 0.0;
  for (const auto& c : partition.clusters()) total += subgraph_density(w, c);
  return total;
}

}  // namespace kdc
