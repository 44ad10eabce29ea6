#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "uvds/dataset.hpp"
#include "uvds/error.hpp"
#include "uvds/types.hpp"

namespace uvds {

/// k is fixed to 10 unless overridden; tiny datasets clamp it to N-1.
inline constexpr Index kDefaultGraphK = 10;

/// Dual similarity graphs over the training rows plus their mean and its
/// Laplacian. All weight matrices are symmetric, non-negative, zero-diagonal;
/// laplacian rows sum to zero and the matrix is positive semi-definite.
struct GraphSet {
  Matrix w_visual;
  Matrix w_semantic;
  Matrix w_mean;
  Matrix laplacian;
};

/// Binary symmetrized-union kNN graph under the Euclidean metric:
/// w_ij = 1 iff i is among j's k nearest or j among i's k nearest.
/// Distance ties at the k-th neighbor break toward the lower index.
inline Matrix knn_graph(const Matrix& points, Index k) {
  const Index n = points.rows();
  if (n < 2)
    fail(ErrorKind::BadK, "knn graph needs at least 2 points, got " +
                              std::to_string(n));
  if (k < 1 || k > n - 1)
    fail(ErrorKind::BadK, "k must lie in [1, N-1], got " + std::to_string(k) +
                              " for N = " + std::to_string(n));
  require_finite(points, "knn_graph points");

  // Squared Euclidean distances via the Gram expansion.
  const Vector sq = points.rowwise().squaredNorm();
  Matrix dist2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                 2.0 * points * points.transpose();

  Matrix w = Matrix::Zero(n, n);
  std::vector<std::pair<double, Index>> order;
  order.reserve(n - 1);
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) order.emplace_back(dist2(i, j), j);
    std::sort(order.begin(), order.end());
    for (Index r = 0; r < k; ++r) {
      const Index j = order[static_cast<size_t>(r)].second;
      w(i, j) = 1.0;
      w(j, i) = 1.0;
    }
  }
  return w;
}

/// Normalized within-class graph: w_ij = k / n_c whenever i != j share class
/// c of size n_c, zero elsewhere (singleton classes have no edges).
inline Matrix class_graph(const Labels& labels, Index k) {
  if (labels.empty()) fail(ErrorKind::EmptySide, "class_graph got no labels");
  if (k < 1) fail(ErrorKind::BadK, "k must be >= 1");
  const Index n = static_cast<Index>(labels.size());
  std::map<int, Index> class_size;
  for (const int label : labels) ++class_size[label];
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j || labels[static_cast<size_t>(i)] !=
                        labels[static_cast<size_t>(j)])
        continue;
      w(i, j) = static_cast<double>(k) /
                static_cast<double>(class_size[labels[static_cast<size_t>(i)]]);
    }
  return w;
}

/// Builds the visual graph (kNN on features), the semantic graph (kNN on
/// attributes for image-level data, class graph for class-level data), their
/// mean W = (W_X + W_A)/2, and L = diag(row sums of W) - W.
inline GraphSet build_graphset(const Dataset& ds, Index k) {
  const Index n = ds.n();
  if (n < 2)
    fail(ErrorKind::BadK,
         "graph construction needs at least 2 rows, got " + std::to_string(n));
  const Index k_nn = std::min(k, n - 1);
  GraphSet gs;
  gs.w_visual = knn_graph(ds.features, k_nn);
  gs.w_semantic = ds.attribute_level == AttributeLevel::ImageLevel
                      ? knn_graph(ds.attributes, k_nn)
                      : class_graph(ds.labels, k);
  gs.w_mean = 0.5 * (gs.w_visual + gs.w_semantic);
  gs.laplacian = Matrix(gs.w_mean.rowwise().sum().asDiagonal()) - gs.w_mean;
  return gs;
}

inline GraphSet build_graphset(const Dataset& ds) {
  return build_graphset(ds, kDefaultGraphK);
}

}  // namespace uvds
