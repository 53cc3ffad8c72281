#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "act/clustering.hpp"
#include "act/common.hpp"
#include "act/cp_als.hpp"
#include "act/smoothing.hpp"
#include "act/tensor.hpp"

namespace act {

template <typename Scalar>
struct ActConfig {
  SolverConfig<Scalar> solver;
  Index clusters = 10;
  Scalar tau = static_cast<Scalar>(0.4);
  SmootherSpec<Scalar> smoother;
  std::uint64_t seed = 0;
  bool keep_observed = false;  // restore observed cells in the output

  void validate() const {
    solver.validate();
    smoother.validate();
    if (clusters < 1)
      throw ConfigError("ActConfig: cluster count must be at least 1");
    if (!(tau >= 0 && tau <= 1))
      throw ConfigError("ActConfig: tau must lie in [0, 1]");
  }
};

template <typename Scalar>
struct ClusterFit {
  Index cluster = 0;
  DensityLabel label = DensityLabel::dense;
  std::vector<Index> firms;
  FitReport<Scalar> report;
};

template <typename Scalar>
struct RunReport {
  ClusterPartition<Scalar> partition;
  std::vector<ClusterFit<Scalar>> fits;
  std::vector<std::string> warnings;
  double seconds_clustering = 0;
  double seconds_completion = 0;
  double seconds_smoothing = 0;
  double seconds_total = 0;
};

/// Completes a dense cluster by fitting its firms alone. Dense solves are
/// always unpenalized regardless of the configured ridge weight.
template <typename Scalar>
std::pair<Tensor3<Scalar>, FitReport<Scalar>> complete_dense(
    const MaskedTensor<Scalar>& x, const std::vector<Index>& firms,
    const SolverConfig<Scalar>& cfg) {
  if (firms.empty())
    throw StructuralError("complete_dense: empty firm set");
  SolverConfig<Scalar> local = cfg;
  local.lambda = 0;
  const MaskedTensor<Scalar> sub = extract_subtensor(x, firms);
  auto [model, report] = fit_cp(sub, local);
  return {reconstruct(model), std::move(report)};
}

template <typename Scalar>
struct SparseCompletion {
  Tensor3<Scalar> values;  // slices for the sparse firms, in their order
  FitReport<Scalar> report;
  bool joint_fallback = false;  // no dense clusters were available
};

/// Completes a sparse cluster on the aggregate of its own firms and every
/// dense firm; only the sparse firms' slices are returned. The sparse firms
/// come first in the aggregate, keeping their relative order, so slicing
/// them back out is positional. Without any dense firms the aggregate falls
/// back to the whole panel (the union of all sparse clusters) and the
/// returned report flags the fallback.
template <typename Scalar>
SparseCompletion<Scalar> complete_sparse(const MaskedTensor<Scalar>& x,
                                         const std::vector<Index>& sparse_firms,
                                         const std::vector<Index>& dense_firms,
                                         const SolverConfig<Scalar>& cfg) {
  if (sparse_firms.empty())
    throw StructuralError("complete_sparse: empty sparse firm set");
  std::vector<Index> agg = sparse_firms;
  bool fallback = false;
  if (!dense_firms.empty()) {
    agg.insert(agg.end(), dense_firms.begin(), dense_firms.end());
  } else {
    fallback = true;
    std::vector<char> in_sparse(static_cast<std::size_t>(x.dim_firm()), 0);
    for (const Index f : sparse_firms)
      in_sparse[static_cast<std::size_t>(f)] = 1;
    for (Index f = 0; f < x.dim_firm(); ++f)
      if (!in_sparse[static_cast<std::size_t>(f)]) agg.push_back(f);
  }
  const MaskedTensor<Scalar> sub = extract_subtensor(x, agg);
  auto [model, report] = fit_cp(sub, cfg);
  const Tensor3<Scalar> full = reconstruct(model);
  const Index t = full.dim_time(), l = full.dim_char();
  const Index s = static_cast<Index>(sparse_firms.size());
  Tensor3<Scalar> out(t, s, l);
  for (Index it = 0; it < t; ++it)
    for (Index j = 0; j < s; ++j)
      for (Index il = 0; il < l; ++il) out(it, j, il) = full(it, j, il);
  return {std::move(out), std::move(report), fallback};
}

/// Reassembles per-cluster slices into a full T x N x L tensor. The firm
/// lists must partition [0, firm_count) exactly; gaps and overlaps name the
/// offending firm.
template <typename Scalar>
Tensor3<Scalar> assemble(
    const std::vector<std::pair<std::vector<Index>, Tensor3<Scalar>>>& parts,
    Index firm_count, const AxisLabels* labels = nullptr) {
  if (parts.empty()) throw StructuralError("assemble: no slices given");
  const Index t = parts.front().second.dim_time();
  const Index l = parts.front().second.dim_char();
  std::vector<Index> hits(static_cast<std::size_t>(firm_count), 0);
  auto firm_name = [&](Index f) {
    std::string name = "firm " + std::to_string(f);
    if (labels && f < static_cast<Index>(labels->firms.size()))
      name += " (" + labels->firms[static_cast<std::size_t>(f)] + ")";
    return name;
  };
  for (const auto& [firms, slice] : parts) {
    if (slice.dim_time() != t || slice.dim_char() != l)
      throw StructuralError("assemble: slice shapes disagree");
    if (slice.dim_firm() != static_cast<Index>(firms.size()))
      throw StructuralError(
          "assemble: slice firm axis does not match its index list");
    for (const Index f : firms) {
      if (f < 0 || f >= firm_count)
        throw StructuralError("assemble: " + firm_name(f) + " out of range");
      if (++hits[static_cast<std::size_t>(f)] > 1)
        throw StructuralError("assemble: " + firm_name(f) +
                              " covered more than once");
    }
  }
  for (Index f = 0; f < firm_count; ++f)
    if (hits[static_cast<std::size_t>(f)] == 0)
      throw StructuralError("assemble: " + firm_name(f) + " not covered");
  Tensor3<Scalar> out(t, firm_count, l);
  for (const auto& [firms, slice] : parts)
    for (Index j = 0; j < static_cast<Index>(firms.size()); ++j) {
      const Index f = firms[static_cast<std::size_t>(j)];
      for (Index it = 0; it < t; ++it)
        for (Index il = 0; il < l; ++il) out(it, f, il) = slice(it, j, il);
    }
  return out;
}

/*
 * Cluster-then-complete imputation.
 *
 * Firms are clustered on their binary observation signatures, clusters are
 * labeled dense or sparse against tau, each dense cluster is completed on
 * its own, each sparse cluster is completed jointly with all dense firms,
 * and the assembled tensor is run through the configured temporal smoother.
 *
 * Every cluster solve draws its seed as seed + cluster id, so changing the
 * cluster count never perturbs the solves of unrelated clusters. With a
 * single cluster and tau = 0 the pipeline degenerates to one unpenalized
 * whole-panel fit: the vanilla baseline, bit for bit.
 *
 * The output replaces every cell, observed or not, with the model value;
 * keep_observed = true copies the observed entries back instead.
 */
template <typename Scalar>
std::pair<Tensor3<Scalar>, RunReport<Scalar>> run_act(
    const MaskedTensor<Scalar>& x, const ActConfig<Scalar>& cfg) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  RunReport<Scalar> report;

  const Matrix<Scalar> sigs = signature_matrix(x);
  ClusterPartition<Scalar> partition =
      kmeans(sigs, cfg.clusters, splitmix64(cfg.seed ^ 0x5bd1e995u));
  partition = label_clusters(std::move(partition), x, cfg.tau);
  const auto t1 = clock::now();

  const std::vector<std::vector<Index>> firms = partition.cluster_firms();
  std::vector<Index> dense_firms;
  bool any_dense = false, any_sparse = false;
  for (Index c = 0; c < partition.k; ++c) {
    if (partition.labels[static_cast<std::size_t>(c)] == DensityLabel::dense) {
      any_dense = true;
      dense_firms.insert(dense_firms.end(),
                         firms[static_cast<std::size_t>(c)].begin(),
                         firms[static_cast<std::size_t>(c)].end());
    } else {
      any_sparse = true;
    }
  }

  std::vector<std::pair<std::vector<Index>, Tensor3<Scalar>>> parts(
      static_cast<std::size_t>(partition.k));
  std::vector<ClusterFit<Scalar>> fits(static_cast<std::size_t>(partition.k));

  if (!any_dense && any_sparse) {
    // No dense cluster to borrow strength from: complete the union of all
    // sparse clusters (the whole panel) in a single joint solve and slice
    // each cluster out of it.
    report.warnings.push_back(
        "no dense clusters at tau = " + std::to_string(double(cfg.tau)) +
        "; completing all sparse clusters jointly");
    SolverConfig<Scalar> scfg = cfg.solver;
    scfg.seed = cfg.seed;
    auto [model, fit] = fit_cp(x, scfg);
    const Tensor3<Scalar> full = reconstruct(model);
    for (Index c = 0; c < partition.k; ++c) {
      const auto& members = firms[static_cast<std::size_t>(c)];
      Tensor3<Scalar> slice(x.dim_time(), static_cast<Index>(members.size()),
                            x.dim_char());
      for (Index it = 0; it < x.dim_time(); ++it)
        for (Index j = 0; j < static_cast<Index>(members.size()); ++j)
          for (Index il = 0; il < x.dim_char(); ++il)
            slice(it, j, il) = full(it, members[static_cast<std::size_t>(j)], il);
      parts[static_cast<std::size_t>(c)] = {members, std::move(slice)};
      fits[static_cast<std::size_t>(c)] =
          ClusterFit<Scalar>{c, DensityLabel::sparse, members, fit};
    }
  } else {
    parallel_for(partition.k, [&](Index c) {
      const auto& members = firms[static_cast<std::size_t>(c)];
      SolverConfig<Scalar> scfg = cfg.solver;
      scfg.seed = cfg.seed + static_cast<std::uint64_t>(c);
      ClusterFit<Scalar>& fit = fits[static_cast<std::size_t>(c)];
      fit.cluster = c;
      fit.label = partition.labels[static_cast<std::size_t>(c)];
      fit.firms = members;
      if (fit.label == DensityLabel::dense) {
        auto [values, rep] = complete_dense(x, members, scfg);
        parts[static_cast<std::size_t>(c)] = {members, std::move(values)};
        fit.report = std::move(rep);
      } else {
        SparseCompletion<Scalar> sc =
            complete_sparse(x, members, dense_firms, scfg);
        parts[static_cast<std::size_t>(c)] = {members, std::move(sc.values)};
        fit.report = std::move(sc.report);
      }
    });
  }
  report.partition = std::move(partition);
  report.fits = std::move(fits);

  Tensor3<Scalar> completed = assemble(parts, x.dim_firm(), &x.labels());
  if (cfg.keep_observed) {
    for (Index it = 0; it < x.dim_time(); ++it)
      for (Index in = 0; in < x.dim_firm(); ++in)
        for (Index il = 0; il < x.dim_char(); ++il)
          if (x.observed(it, in, il))
            completed(it, in, il) = x.value(it, in, il);
  }
  const auto t2 = clock::now();

  Tensor3<Scalar> smoothed = smooth_tensor(completed, cfg.smoother);
  const auto t3 = clock::now();

  const auto secs = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };
  report.seconds_clustering = secs(t0, t1);
  report.seconds_completion = secs(t1, t2);
  report.seconds_smoothing = secs(t2, t3);
  report.seconds_total = secs(t0, t3);
  return {std::move(smoothed), std::move(report)};
}

}  // namespace act
