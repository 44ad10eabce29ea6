#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uvds/csv.hpp"
#include "uvds/dataset.hpp"
#include "uvds/error.hpp"
#include "uvds/solver.hpp"
#include "uvds/types.hpp"

namespace uvds {

enum class SynthesisMode { Prototype, Sample };
enum class PrototypeMode { CA, MF };  // class-mean attributes vs mean features

/// Synthesized features with their class labels. Prototype sets carry
/// exactly one row per class.
struct SynthesizedSet {
  Matrix features;
  Labels labels;
  SynthesisMode mode = SynthesisMode::Sample;
};

/// X = A * P * Q; rows land in the centered feature space.
inline Matrix synthesize(const Matrix& attrs, const Matrix& p,
                         const Matrix& q) {
  if (attrs.cols() != p.rows())
    fail(ErrorKind::ShapeMismatch,
         "synthesize: attributes have " + std::to_string(attrs.cols()) +
             " columns but the projection expects " + std::to_string(p.rows()));
  if (p.cols() != q.rows() || q.rows() != q.cols())
    fail(ErrorKind::ShapeMismatch, "synthesize: projection/rotation mismatch");
  return attrs * p * q;
}

inline Matrix synthesize(const Matrix& attrs, const ModelParams& params) {
  return synthesize(attrs, params.P, params.Q);
}

/// Per-class mean rows of an arbitrary (rows, labels) pair; ids ascending.
inline std::pair<Matrix, std::vector<int>> class_mean_rows(
    const Matrix& rows, const Labels& labels) {
  if (rows.rows() != static_cast<Index>(labels.size()))
    fail(ErrorKind::ShapeMismatch, "class_mean_rows: label count mismatch");
  if (labels.empty()) fail(ErrorKind::EmptySide, "class_mean_rows: no rows");
  std::map<int, std::pair<Vector, Index>> sums;
  for (Index i = 0; i < rows.rows(); ++i) {
    auto [it, inserted] = sums.try_emplace(
        labels[static_cast<size_t>(i)],
        std::make_pair(Vector::Zero(rows.cols()).eval(), Index{0}));
    it->second.first += rows.row(i).transpose();
    it->second.second += 1;
  }
  Matrix means(static_cast<Index>(sums.size()), rows.cols());
  std::vector<int> ids;
  Index r = 0;
  for (const auto& [id, acc] : sums) {
    means.row(r) = (acc.first / static_cast<double>(acc.second)).transpose();
    ids.push_back(id);
    ++r;
  }
  return {std::move(means), std::move(ids)};
}

/// One synthesized row per class: CA synthesizes the class-mean attributes;
/// MF synthesizes every row and averages per class. On class-level
/// attributes MF degenerates to CA exactly (identical rows share one mean).
inline SynthesizedSet prototype_set(const Matrix& attrs, const Labels& labels,
                                    AttributeLevel level,
                                    const ModelParams& params,
                                    PrototypeMode mode) {
  SynthesizedSet out;
  out.mode = SynthesisMode::Prototype;
  if (mode == PrototypeMode::CA || level == AttributeLevel::ClassLevel) {
    const auto [mean_attrs, ids] = class_mean_rows(attrs, labels);
    out.features = synthesize(mean_attrs, params);
    out.labels = ids;
  } else {
    const Matrix samples = synthesize(attrs, params);
    auto [mean_feats, ids] = class_mean_rows(samples, labels);
    out.features = std::move(mean_feats);
    out.labels = ids;
  }
  return out;
}

inline SynthesizedSet prototype_set(const UnseenSet& us, AttributeLevel level,
                                    const ModelParams& params,
                                    PrototypeMode mode) {
  return prototype_set(us.attributes, us.labels, level, params, mode);
}

/// One synthesized row per unseen instance.
inline SynthesizedSet sample_set(const UnseenSet& us,
                                 const ModelParams& params) {
  SynthesizedSet out;
  out.features = synthesize(us.attributes, params);
  out.labels = us.labels;
  out.mode = SynthesisMode::Sample;
  return out;
}

/// Euclidean nearest anchor; distance ties go to the lowest label id.
inline Labels nn_classify(const Matrix& queries,
                          const SynthesizedSet& anchors) {
  if (anchors.features.rows() == 0)
    fail(ErrorKind::EmptyAnchors, "nn_classify: no anchor rows");
  if (anchors.features.rows() != static_cast<Index>(anchors.labels.size()))
    fail(ErrorKind::ShapeMismatch, "nn_classify: anchor label count mismatch");
  if (queries.cols() != anchors.features.cols())
    fail(ErrorKind::ShapeMismatch,
         "nn_classify: query dimension " + std::to_string(queries.cols()) +
             " does not match anchors " +
             std::to_string(anchors.features.cols()));
  Labels out(static_cast<size_t>(queries.rows()));
  for (Index t = 0; t < queries.rows(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    int best_label = 0;
    for (Index a = 0; a < anchors.features.rows(); ++a) {
      const double d2 =
          (queries.row(t) - anchors.features.row(a)).squaredNorm();
      const int label = anchors.labels[static_cast<size_t>(a)];
      if (d2 < best || (d2 == best && label < best_label)) {
        best = d2;
        best_label = label;
      }
    }
    out[static_cast<size_t>(t)] = best_label;
  }
  return out;
}

/// One-vs-rest linear classifiers; row r of weights scores class_ids[r].
struct LinearSvmModel {
  Matrix weights;  // C x D
  Vector biases;   // C
  std::vector<int> class_ids;
  double reg_c = 1.0;
  Index iters = 500;
};

/// Deterministic full-batch subgradient descent on the L2-regularized hinge
/// loss, one binary problem per class, step 1/(reg_c * t) at iteration t.
/// Weights start at zero, so the result depends only on the data.
inline LinearSvmModel svm_train(const Matrix& features, const Labels& labels,
                                double reg_c = 1.0, Index iters = 500,
                                uint64_t seed = 0) {
  (void)seed;  // kept for interface stability; the solver is deterministic
  if (features.rows() != static_cast<Index>(labels.size()))
    fail(ErrorKind::ShapeMismatch, "svm_train: label count mismatch");
  if (features.rows() == 0) fail(ErrorKind::EmptySide, "svm_train: no rows");
  if (!(reg_c > 0.0))
    fail(ErrorKind::InvalidArgument, "svm_train: reg_c must be > 0");
  require_finite(features, "svm_train features");
  const std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2)
    fail(ErrorKind::SingleClass, "svm_train needs at least 2 classes");

  const Index n = features.rows();
  const Index d = features.cols();
  LinearSvmModel model;
  model.reg_c = reg_c;
  model.iters = iters;
  model.class_ids.assign(classes.begin(), classes.end());
  model.weights = Matrix::Zero(static_cast<Index>(classes.size()), d);
  model.biases = Vector::Zero(static_cast<Index>(classes.size()));

  for (size_t c = 0; c < model.class_ids.size(); ++c) {
    Vector y(n);
    for (Index i = 0; i < n; ++i)
      y(i) = labels[static_cast<size_t>(i)] == model.class_ids[c] ? 1.0 : -1.0;
    Vector w = Vector::Zero(d);
    double b = 0.0;
    for (Index t = 1; t <= iters; ++t) {
      const Vector scores = features * w + Vector::Constant(n, b);
      const Vector margins = y.cwiseProduct(scores);
      Vector grad_w = reg_c * w;
      double grad_b = 0.0;
      for (Index i = 0; i < n; ++i)
        if (margins(i) < 1.0) {
          grad_w -= (y(i) / static_cast<double>(n)) *
                    features.row(i).transpose();
          grad_b -= y(i) / static_cast<double>(n);
        }
      const double step = 1.0 / (reg_c * static_cast<double>(t));
      w -= step * grad_w;
      b -= step * grad_b;
    }
    model.weights.row(static_cast<Index>(c)) = w.transpose();
    model.biases(static_cast<Index>(c)) = b;
  }
  require_finite(model.weights, "svm weights");
  return model;
}

/// argmax over class scores w^T x + b; ties go to the lowest class id.
inline Labels svm_predict(const LinearSvmModel& model, const Matrix& queries) {
  if (queries.cols() != model.weights.cols())
    fail(ErrorKind::ShapeMismatch,
         "svm_predict: query dimension " + std::to_string(queries.cols()) +
             " does not match model " + std::to_string(model.weights.cols()));
  const Matrix scores = (queries * model.weights.transpose()).rowwise() +
                        model.biases.transpose();
  Labels out(static_cast<size_t>(queries.rows()));
  for (Index t = 0; t < queries.rows(); ++t) {
    Index best = 0;
    for (Index c = 1; c < scores.cols(); ++c)
      if (scores(t, c) > scores(t, best)) best = c;
    // class_ids ascend, so the first maximum already is the lowest id
    out[static_cast<size_t>(t)] =
        model.class_ids[static_cast<size_t>(best)];
  }
  return out;
}

///// Prediction export: `row_index,predicted_label,true_label`, row_index
/// zero-based.
inline void write_predictions_csv(const std::string& path, const Labels& pred,
                                  const Labels& truth) {
  if (pred.size() != truth.size())
    fail(ErrorKind::LengthMismatch, "predictions/truth length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  for (size_t i = 0; i < pred.size(); ++i)
    out << i << ',' << pred[i] << ',' << truth[i] << '\n';
}

}  // namespace uvds
