#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "act/common.hpp"
#include "act/tensor.hpp"

namespace act {

enum class DensityLabel { dense, sparse };

template <typename Scalar>
struct ClusterPartition {
  std::vector<Index> assignments;    // firm -> cluster id
  Matrix<Scalar> centroids;          // K x (T*L)
  Vector<Scalar> densities;          // per cluster, filled by label_clusters
  std::vector<DensityLabel> labels;  // per cluster, filled by label_clusters
  Scalar tau = 0;
  Index k = 0;

  std::vector<std::vector<Index>> cluster_firms() const {
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(k));
    for (Index f = 0; f < static_cast<Index>(assignments.size()); ++f)
      out[static_cast<std::size_t>(assignments[static_cast<std::size_t>(f)])]
          .push_back(f);
    return out;
  }
};

/// Binary observation indicator of one firm's T x L slice, column-stacked:
/// entry l * T + t is 1 when cell (t, firm, l) is observed. A firm observed
/// only at (t = 0, l = 1) in a 2 x 2 x 2 panel therefore has its single 1 at
/// position 2.
template <typename Scalar>
Vector<Scalar> firm_signature(const MaskedTensor<Scalar>& x, Index firm) {
  if (firm < 0 || firm >= x.dim_firm())
    throw StructuralError("firm_signature: firm index out of range");
  const Index t = x.dim_time(), l = x.dim_char();
  Vector<Scalar> sig = Vector<Scalar>::Zero(t * l);
  for (Index il = 0; il < l; ++il)
    for (Index it = 0; it < t; ++it)
      if (x.observed(it, firm, il)) sig[il * t + it] = Scalar(1);
  return sig;
}

template <typename Scalar>
Matrix<Scalar> signature_matrix(const MaskedTensor<Scalar>& x) {
  Matrix<Scalar> sigs(x.dim_firm(), x.dim_time() * x.dim_char());
  for (Index f = 0; f < x.dim_firm(); ++f)
    sigs.row(f) = firm_signature(x, f).transpose();
  return sigs;
}

template <typename Scalar>
Scalar kmeans_objective(const Matrix<Scalar>& points,
                        const ClusterPartition<Scalar>& p) {
  Scalar total = 0;
  for (Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) -
              p.centroids.row(p.assignments[static_cast<std::size_t>(i)]))
                 .squaredNorm();
  return total;
}

namespace detail {

template <typename Scalar>
Index nearest_centroid(const Matrix<Scalar>& points, Index i,
                       const Matrix<Scalar>& centroids, Index k) {
  Index best = 0;
  Scalar best_d = (points.row(i) - centroids.row(0)).squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const Scalar d = (points.row(i) - centroids.row(c)).squaredNorm();
    if (d < best_d) {  // ties keep the lowest cluster index
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

/*
 * Lloyd's algorithm with k-means++ seeding.
 *
 * Deterministic for a fixed seed: assignment ties go to the lowest cluster
 * index, and a cluster emptied during assignment is reseeded with the point
 * farthest from its own centroid (taken from a donor cluster of size at
 * least two), which prevents K from silently shrinking and never increases
 * the objective.
 */
template <typename Scalar>
ClusterPartition<Scalar> kmeans(const Matrix<Scalar>& points, Index k,
                                std::uint64_t seed, int max_iters = 100) {
  const Index n = points.rows();
  if (k < 1) throw StructuralError("kmeans: k must be at least 1");
  if (k > n)
    throw StructuralError("kmeans: k = " + std::to_string(k) +
                          " exceeds the number of points " +
                          std::to_string(n));

  Rng rng(seed);
  Matrix<Scalar> centroids(k, points.cols());
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  chosen.push_back(rng.index(n));
  centroids.row(0) = points.row(chosen[0]);
  Vector<Scalar> d2(n);
  for (Index c = 1; c < k; ++c) {
    for (Index i = 0; i < n; ++i) {
      Scalar best = (points.row(i) - centroids.row(0)).squaredNorm();
      for (Index j = 1; j < c; ++j)
        best = std::min(best,
                        (points.row(i) - centroids.row(j)).squaredNorm());
      d2[i] = best;
    }
    const Scalar total = d2.sum();
    Index pick = -1;
    if (total > 0) {
      const Scalar r = static_cast<Scalar>(rng.uniform()) * total;
      Scalar cum = 0;
      for (Index i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // All points coincide with existing centroids; take the lowest index
      // not already used so that k centers still come out.
      for (Index i = 0; i < n && pick < 0; ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end())
          pick = i;
      if (pick < 0) pick = 0;
    }
    chosen.push_back(pick);
    centroids.row(c) = points.row(pick);
  }

  std::vector<Index> assign(static_cast<std::size_t>(n), 0);
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    std::fill(sizes.begin(), sizes.end(), 0);
    for (Index i = 0; i < n; ++i) {
      const Index c = detail::nearest_centroid(points, i, centroids, k);
      if (c != assign[static_cast<std::size_t>(i)]) changed = true;
      assign[static_cast<std::size_t>(i)] = c;
      ++sizes[static_cast<std::size_t>(c)];
    }
    bool repaired = false;
    for (Index c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] != 0) continue;
      Index far = -1;
      Scalar far_d = -1;
      for (Index i = 0; i < n; ++i) {
        const Index owner = assign[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
        const Scalar d =
            (points.row(i) - centroids.row(owner)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;
      --sizes[static_cast<std::size_t>(
          assign[static_cast<std::size_t>(far)])];
      assign[static_cast<std::size_t>(far)] = c;
      ++sizes[static_cast<std::size_t>(c)];
      centroids.row(c) = points.row(far);
      repaired = true;
    }
    if (!changed && !repaired && iter > 0) break;
    // Mean update; repaired clusters currently hold a single point, so the
    // mean keeps them where they were reseeded.
    Matrix<Scalar> sums = Matrix<Scalar>::Zero(k, points.cols());
    for (Index i = 0; i < n; ++i)
      sums.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
    for (Index c = 0; c < k; ++c)
      centroids.row(c) =
          sums.row(c) / static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
  }

  ClusterPartition<Scalar> out;
  out.assignments = std::move(assign);
  out.centroids = std::move(centroids);
  out.k = k;
  return out;
}

/// Computes per-cluster observed-entry ratios and marks clusters dense when
/// the ratio reaches tau. The threshold comparison is inclusive.
template <typename Scalar>
ClusterPartition<Scalar> label_clusters(ClusterPartition<Scalar> partition,
                                        const MaskedTensor<Scalar>& x,
                                        Scalar tau) {
  if (!(tau >= 0 && tau <= 1))
    throw ConfigError("label_clusters: tau must lie in [0, 1]");
  if (static_cast<Index>(partition.assignments.size()) != x.dim_firm())
    throw StructuralError(
        "label_clusters: partition does not match the panel's firm count");
  partition.tau = tau;
  partition.densities = Vector<Scalar>::Zero(partition.k);
  partition.labels.assign(static_cast<std::size_t>(partition.k),
                          DensityLabel::sparse);
  const Index t = x.dim_time(), l = x.dim_char();
  std::vector<Index> observed(static_cast<std::size_t>(partition.k), 0);
  std::vector<Index> firms(static_cast<std::size_t>(partition.k), 0);
  for (Index f = 0; f < x.dim_firm(); ++f) {
    const Index c = partition.assignments[static_cast<std::size_t>(f)];
    ++firms[static_cast<std::size_t>(c)];
    for (Index it = 0; it < t; ++it)
      for (Index il = 0; il < l; ++il)
        if (x.observed(it, f, il)) ++observed[static_cast<std::size_t>(c)];
  }
  for (Index c = 0; c < partition.k; ++c) {
    const Index cells = firms[static_cast<std::size_t>(c)] * t * l;
    const Scalar rho =
        cells == 0 ? Scalar(0)
                   : static_cast<Scalar>(observed[static_cast<std::size_t>(c)]) /
                         static_cast<Scalar>(cells);
    partition.densities[c] = rho;
    partition.labels[static_cast<std::size_t>(c)] =
        rho >= tau ? DensityLabel::dense : DensityLabel::sparse;
  }
  return partition;
}

}  // namespace act
