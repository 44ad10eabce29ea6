#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "uvds/csv.hpp"
#include "uvds/dataset.hpp"
#include "uvds/error.hpp"
#include "uvds/graphs.hpp"
#include "uvds/matrix_kernels.hpp"
#include "uvds/rng.hpp"
#include "uvds/solver.hpp"
#include "uvds/types.hpp"
#include "uvds/zsl.hpp"

namespace uvds {

struct AccuracyResult {
  double overall = 0.0;
  std::map<int, double> per_class;  // classes present in the truth
  double mean_class = 0.0;          // unweighted mean of per_class values
};

inline AccuracyResult accuracy(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size() || truth.empty())
    fail(ErrorKind::LengthMismatch,
         "accuracy: need equal, non-empty prediction/truth vectors");
  AccuracyResult result;
  std::map<int, std::pair<long, long>> counts;  // class -> (correct, total)
  long correct = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    auto& cell = counts[truth[i]];
    ++cell.second;
    if (pred[i] == truth[i]) {
      ++cell.first;
      ++correct;
    }
  }
  result.overall =
      static_cast<double>(correct) / static_cast<double>(truth.size());
  double sum = 0.0;
  for (const auto& [cls, cell] : counts) {
    const double acc =
        static_cast<double>(cell.first) / static_cast<double>(cell.second);
    result.per_class[cls] = acc;
    sum += acc;
  }
  result.mean_class = sum / static_cast<double>(counts.size());
  return result;
}

/// The plain attribute-to-feature regression baseline: a ridge-regularized
/// least-squares map from attributes to centered features.
inline Matrix linear_regression_map(const Matrix& attributes,
                                    const Matrix& features,
                                    double ridge = 1e-3) {
  if (!(ridge >= 0.0))
    fail(ErrorKind::InvalidArgument, "ridge weight must be >= 0");
  return ridge_regression(attributes, features, ridge);
}

struct GridSpec {
  std::vector<double> lambda_values;
  std::vector<double> beta_values;
  double validation_fraction = 0.5;
  Index repeats = 10;
  Index graph_k = kDefaultGraphK;
  uint64_t seed = 0;
};

inline std::vector<double> default_grid_values() {
  return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2};
}

struct CvCell {
  double lambda = 0.0;
  double beta = 0.0;
  double mean_accuracy = 0.0;
  Index failures = 0;  // repeats that ended in a numerical error (scored 0)
};

struct CvResult {
  double best_lambda = 0.0;
  double best_beta = 0.0;
  std::vector<CvCell> table;  // lambda-major, beta-minor order
};

/// Stratified hold-out model selection on the seen classes only: each repeat
/// splits off validation_fraction of every class, fits each (lambda, beta)
/// on the remainder, and scores nearest-neighbour accuracy of the held-out
/// rows against prototypes synthesized from the train-side class-mean
/// attributes. Numerical failures score 0 for that repeat. Ties prefer the
/// smaller lambda, then the smaller beta.
inline CvResult cross_validate(const Dataset& ds, const GridSpec& grid,
                               const SolverConfig& cfg_template) {
  if (grid.lambda_values.empty() || grid.beta_values.empty())
    fail(ErrorKind::InvalidArgument, "cross_validate: empty grid");
  if (grid.repeats < 1)
    fail(ErrorKind::InvalidArgument, "cross_validate: repeats must be >= 1");
  validate(cfg_template);

  const size_t cells =
      grid.lambda_values.size() * grid.beta_values.size();
  std::vector<double> score_sum(cells, 0.0);
  std::vector<Index> failures(cells, 0);

  for (Index r = 0; r < grid.repeats; ++r) {
    const auto [train, val] =
        split_validation(ds, grid.validation_fraction, grid.seed + r);
    const GraphSet gs = build_graphset(train, grid.graph_k);
    size_t cell = 0;
    for (const double lambda : grid.lambda_values) {
      SolverConfig cfg = cfg_template;
      cfg.lambda = lambda;
      // The V-step left operand depends only on (graph, lambda, gamma), so
      // its eigendecomposition is shared across the beta sweep.
      const SymEig left_eig = sym_eig(v_left_operand(gs, cfg, train.n()));
      for (const double beta : grid.beta_values) {
        cfg.beta = beta;
        try {
          const FitResult fitted = fit(train, gs, cfg, &left_eig);
          const auto [mean_attrs, ids] =
              class_mean_rows(train.attributes, train.labels);
          SynthesizedSet anchors;
          anchors.features = synthesize(mean_attrs, fitted.params);
          anchors.labels = ids;
          anchors.mode = SynthesisMode::Prototype;
          const Labels pred = nn_classify(val.features, anchors);
          score_sum[cell] += accuracy(pred, val.labels).overall;
        } catch (const Error& e) {
          if (e.is_validation()) throw;
          ++failures[cell];
        }
        ++cell;
      }
    }
  }

  CvResult result;
  size_t cell = 0;
  size_t best_cell = 0;
  for (const double lambda : grid.lambda_values)
    for (const double beta : grid.beta_values) {
      CvCell entry;
      entry.lambda = lambda;
      entry.beta = beta;
      entry.mean_accuracy =
          score_sum[cell] / static_cast<double>(grid.repeats);
      entry.failures = failures[cell];
      result.table.push_back(entry);
      if (entry.mean_accuracy > result.table[best_cell].mean_accuracy)
        best_cell = cell;
      ++cell;
    }
  result.best_lambda = result.table[best_cell].lambda;
  result.best_beta = result.table[best_cell].beta;
  return result;
}

struct SyntheticSpec {
  Index n_seen_classes = 20;
  Index n_unseen_classes = 5;
  Index per_class = 20;
  Index d = 64;  // feature dimensions
  Index m = 16;  // attribute dimensions
  double noise_sigma = 0.01;
  double attribute_jitter = 0.05;  // per-row attribute spread (image level)
  double variance_decay = 0.93;    // per-dimension scale decay of the map
  AttributeLevel level = AttributeLevel::ImageLevel;
  uint64_t seed = 0;
};

/// Draws class attribute signatures and a ground-truth linear map whose
/// column scales decay geometrically (so later feature dimensions carry
/// less variance), then emits per-row attributes and noisy features.
/// Classes 1..n_seen are marked seen, the rest unseen. Deterministic per
/// seed.
inline RawCorpus gen_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 2 || spec.d < spec.m)
    fail(ErrorKind::InvalidArgument,
         "gen_synthetic requires D >= M >= 2");
  if (spec.per_class < 2)
    fail(ErrorKind::InvalidArgument, "gen_synthetic requires per_class >= 2");
  if (spec.n_seen_classes < 1 || spec.n_unseen_classes < 1)
    fail(ErrorKind::InvalidArgument,
         "gen_synthetic requires at least one class per side");
  if (!(spec.noise_sigma >= 0.0) || !(spec.attribute_jitter >= 0.0) ||
      !(spec.variance_decay > 0.0))
    fail(ErrorKind::InvalidArgument, "gen_synthetic: bad noise parameters");

  Rng rng(spec.seed);
  const Index classes = spec.n_seen_classes + spec.n_unseen_classes;
  Matrix signatures(classes, spec.m);
  for (Index c = 0; c < classes; ++c)
    for (Index j = 0; j < spec.m; ++j) signatures(c, j) = rng.normal();

  Matrix map(spec.m, spec.d);
  double scale = 1.0;
  for (Index j = 0; j < spec.d; ++j) {
    for (Index i = 0; i < spec.m; ++i) map(i, j) = scale * rng.normal();
    scale *= spec.variance_decay;
  }

  const Index n = classes * spec.per_class;
  RawCorpus corpus;
  corpus.features.resize(n, spec.d);
  corpus.attributes.resize(n, spec.m);
  corpus.labels.resize(static_cast<size_t>(n));
  corpus.attribute_level = spec.level;
  Index row = 0;
  for (Index c = 0; c < classes; ++c) {
    for (Index s = 0; s < spec.per_class; ++s) {
      Vector attr = signatures.row(c).transpose();
      if (spec.level == AttributeLevel::ImageLevel)
        for (Index j = 0; j < spec.m; ++j)
          attr(j) += spec.attribute_jitter * rng.normal();
      corpus.attributes.row(row) = attr.transpose();
      Vector feat = map.transpose() * attr;
      for (Index j = 0; j < spec.d; ++j)
        feat(j) += spec.noise_sigma * rng.normal();
      corpus.features.row(row) = feat.transpose();
      corpus.labels[static_cast<size_t>(row)] = static_cast<int>(c) + 1;
      ++row;
    }
  }
  for (Index c = 0; c < spec.n_seen_classes; ++c)
    corpus.seen_classes.push_back(static_cast<int>(c) + 1);
  for (Index c = spec.n_seen_classes; c < classes; ++c)
    corpus.unseen_classes.push_back(static_cast<int>(c) + 1);
  return corpus;
}

/// Column variances of a data matrix, for spread diagnostics.
inline Vector column_variances(const Matrix& x) {
  const Matrix centered = x.rowwise() - x.colwise().mean();
  return (centered.colwise().squaredNorm() /
          static_cast<double>(x.rows()))
      .transpose();
}

/// Balance statistic of an already-synthesized feature matrix: the variance
/// of the per-dimension standard deviations after dividing by the largest
/// one. Scale-free, so it measures how evenly variance spreads over
/// dimensions rather than how much variance there is; 0 means perfectly
/// balanced columns.
inline double synthesized_pi_variance(const Matrix& synth) {
  const auto stats = diffusion_stats(
      center_columns(synth).first,
      Matrix::Identity(synth.cols(), synth.cols()));
  const double top = stats.pi.maxCoeff();
  if (top <= 0.0) return 0.0;
  const Vector rel = stats.pi / top;
  const double mean = rel.mean();
  return (rel.array() - mean).square().mean();
}

struct AblationCell {
  std::string method;      // linear-regression | gr-only | dr-only | full
  std::string scenario;    // ca | mf | sample
  std::string classifier;  // nn | svm
  double seen_accuracy = 0.0;
  double unseen_accuracy = 0.0;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  std::map<std::string, double> unseen_pi;  // spread of synthesized samples
  std::map<std::string, std::vector<double>> loss_traces;
};

namespace detail {

inline double evaluate_scenario(const SynthesizedSet& train_side,
                                const Matrix& queries, const Labels& truth,
                                const std::string& classifier) {
  if (classifier == "nn")
    return accuracy(nn_classify(queries, train_side), truth).overall;
  const LinearSvmModel svm =
      svm_train(train_side.features, train_side.labels);
  return accuracy(svm_predict(svm, queries), truth).overall;
}

}  // namespace detail

/// Table-style comparison of the plain regression baseline against the
/// graph-only, diffusion-only, and full solver. Seen-side numbers come from
/// a stratified half hold-out (models are fitted on the retained half);
/// unseen-side numbers use the true unseen features against synthesized
/// anchors. Every method is scored in prototype (ca, mf) and sample
/// scenarios with both classifiers.
inline AblationReport run_ablation(const Dataset& ds, const UnseenSet& us,
                                   const SolverConfig& cfg,
                                   Index graph_k = kDefaultGraphK) {
  validate(cfg);
  if (!us.true_features)
    fail(ErrorKind::InvalidArgument,
         "run_ablation needs unseen true features for evaluation");
  const auto [train, val] =
      split_validation(ds, 0.5, cfg.seed);
  const GraphSet gs = build_graphset(train, graph_k);

  AblationReport report;
  const std::vector<std::pair<std::string, SolverConfig>> methods = [&] {
    SolverConfig gr = cfg;
    gr.beta = 0.0;
    SolverConfig dr = cfg;
    dr.lambda = 0.0;
    return std::vector<std::pair<std::string, SolverConfig>>{
        {"linear-regression", cfg},
        {"gr-only", gr},
        {"dr-only", dr},
        {"full", cfg}};
  }();

  for (const auto& [name, method_cfg] : methods) {
    ModelParams params;
    if (name == "linear-regression") {
      params.P = linear_regression_map(train.attributes, train.features);
      params.Q = Matrix::Identity(train.feature_dim(), train.feature_dim());
      params.V = train.features;
    } else {
      const FitResult fitted = fit(train, gs, method_cfg);
      params = fitted.params;
      report.loss_traces[name] = fitted.loss_trace;
    }

    const SynthesizedSet unseen_samples = sample_set(us, params);
    report.unseen_pi[name] =
        synthesized_pi_variance(unseen_samples.features);

    SynthesizedSet seen_samples;
    seen_samples.features = synthesize(train.attributes, params);
    seen_samples.labels = train.labels;
    seen_samples.mode = SynthesisMode::Sample;

    for (const std::string scenario : {"ca", "mf", "sample"}) {
      SynthesizedSet seen_side, unseen_side;
      if (scenario == "sample") {
        seen_side = seen_samples;
        unseen_side = unseen_samples;
      } else {
        const PrototypeMode mode =
            scenario == "ca" ? PrototypeMode::CA : PrototypeMode::MF;
        seen_side = prototype_set(train.attributes, train.labels,
                                  train.attribute_level, params, mode);
        unseen_side = prototype_set(us, ds.attribute_level, params, mode);
      }
      for (const std::string classifier : {"nn", "svm"}) {
        AblationCell cell;
        cell.method = name;
        cell.scenario = scenario;
        cell.classifier = classifier;
        cell.seen_accuracy = detail::evaluate_scenario(
            seen_side, val.features, val.labels, classifier);
        cell.unseen_accuracy = detail::evaluate_scenario(
            unseen_side, *us.true_features, us.labels, classifier);
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

struct VarianceDiagnostic {
  Vector real;        // normalized column variances, sorted descending
  Vector with_dr;     // same for the diffusion-regularized synthesis
  Vector without_dr;  // same for the beta = 0 synthesis
};

namespace detail {

inline Vector normalized_sorted_variances(const Matrix& x) {
  Vector v = column_variances(x);
  const double top = v.maxCoeff();
  if (top > 0.0) v /= top;
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  return v;
}

}  // namespace detail

/// Per-source normalized (max = 1) column variances sorted descending.
inline VarianceDiagnostic variance_diagnostic(const Matrix& real_x,
                                              const Matrix& synth_with_dr,
                                              const Matrix& synth_without_dr) {
  if (real_x.cols() != synth_with_dr.cols() ||
      real_x.cols() != synth_without_dr.cols())
    fail(ErrorKind::ShapeMismatch,
         "variance_diagnostic: sources must share the column count");
  VarianceDiagnostic diag;
  diag.real = detail::normalized_sorted_variances(real_x);
  diag.with_dr = detail::normalized_sorted_variances(synth_with_dr);
  diag.without_dr = detail::normalized_sorted_variances(synth_without_dr);
  return diag;
}

/// CSV with header `dim,real,with_dr,without_dr`; dim is the 0-based rank.
inline void write_variance_csv(const std::string& path,
                               const VarianceDiagnostic& diag) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "dim,real,with_dr,without_dr\n";
  for (Index i = 0; i < diag.real.size(); ++i)
    out << i << ',' << format_double(diag.real(i)) << ','
        << format_double(diag.with_dr(i)) << ','
        << format_double(diag.without_dr(i)) << '\n';
}

/// Fraction of the total carried by the top ceil(10%) entries of a
/// descending profile.
inline double top_decile_share(const Vector& sorted_desc) {
  if (sorted_desc.size() == 0)
    fail(ErrorKind::InvalidArgument, "top_decile_share: empty profile");
  const Index take = (sorted_desc.size() + 9) / 10;
  const double total = sorted_desc.sum();
  if (total <= 0.0) return 0.0;
  return sorted_desc.head(take).sum() / total;
}

}  // namespace uvds
