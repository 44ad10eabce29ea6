// Command-line front end: dataset generation, training, synthesis,
// evaluation, cross-validation, the ablation grid, and the variance
// diagnostic. All outputs are deterministic for fixed flags and seed.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uvds/uvds.hpp"

namespace {

using nlohmann::json;
using uvds::Index;
using uvds::Matrix;
using uvds::Vector;

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) uvds::fail(uvds::ErrorKind::IoError, "cannot write " + path);
  out << body;
}

void write_report(const std::string& path, const json& report) {
  write_text(path, report.dump(2) + "\n");
}

json accuracy_json(const uvds::AccuracyResult& acc) {
  json per = json::object();
  for (const auto& [label, value] : acc.per_class)
    per[std::to_string(label)] = value;
  return json{{"overall", acc.overall},
              {"mean_class", acc.mean_class},
              {"per_class", per}};
}

/// Scale-only attribute normalization: divides each column by its standard
/// deviation (zero-std columns pass through). Returns the scales so the
/// trained map can be folded back to raw attribute units.
Vector normalize_attribute_columns(Matrix& attrs) {
  const Vector mean = attrs.colwise().mean();
  Vector scales(attrs.cols());
  for (Index j = 0; j < attrs.cols(); ++j) {
    const double var =
        (attrs.col(j).array() - mean(j)).square().mean();
    const double sd = std::sqrt(var);
    scales(j) = sd > 0.0 ? sd : 1.0;
    attrs.col(j) /= scales(j);
  }
  return scales;
}

struct CommonFitFlags {
  double lambda = 0.01;
  double beta = 0.01;
  double gamma = 1.0;
  double alpha = 1.0;
  double eps_pi = 1e-10;
  Index iters = 10;
  Index k = uvds::kDefaultGraphK;
  uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "graph regularization weight");
    cmd->add_option("--beta", beta, "diffusion regularization weight");
    cmd->add_option("--gamma", gamma, "centering penalty weight");
    cmd->add_option("--alpha", alpha, "attribute embedding weight");
    cmd->add_option("--eps-pi", eps_pi,
                    "floor for per-dimension deviations in the diffusion "
                    "reweighting");
    cmd->add_option("--iters", iters, "outer iterations");
    cmd->add_option("--k", k, "k-nearest-neighbor graph degree");
    cmd->add_option("--seed", seed, "random seed");
  }

  uvds::SolverConfig config() const {
    uvds::SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.beta = beta;
    cfg.gamma = gamma;
    cfg.alpha = alpha;
    cfg.eps_pi = eps_pi;
    cfg.outer_iters = iters;
    cfg.seed = seed;
    return cfg;
  }
};

void add_gen_synthetic(CLI::App& app) {
  auto* cmd = app.add_subcommand("gen-synthetic",
                                 "generate a synthetic dataset directory");
  auto spec = std::make_shared<uvds::SyntheticSpec>();
  auto out = std::make_shared<std::string>();
  auto level = std::make_shared<std::string>("image");
  cmd->add_option("--out", *out, "output dataset directory")->required();
  cmd->add_option("--seen", spec->n_seen_classes, "number of seen classes");
  cmd->add_option("--unseen", spec->n_unseen_classes,
                  "number of unseen classes");
  cmd->add_option("--per-class", spec->per_class, "samples per class");
  cmd->add_option("--dim", spec->d, "feature dimensions");
  cmd->add_option("--attr-dim", spec->m, "attribute dimensions");
  cmd->add_option("--noise", spec->noise_sigma, "feature noise sigma");
  cmd->add_option("--jitter", spec->attribute_jitter,
                  "image-level attribute jitter");
  cmd->add_option("--decay", spec->variance_decay,
                  "per-dimension variance decay of the ground-truth map");
  cmd->add_option("--level", *level, "attribute granularity")
      ->check(CLI::IsMember({"image", "class"}));
  cmd->add_option("--seed", spec->seed, "random seed");
  cmd->callback([spec, out, level] {
    spec->level = *level == "class" ? uvds::AttributeLevel::ClassLevel
                                    : uvds::AttributeLevel::ImageLevel;
    uvds::write_corpus(*out, uvds::gen_synthetic(*spec));
    std::cout << "wrote " << *out << "\n";
  });
}

void add_train(CLI::App& app) {
  auto* cmd = app.add_subcommand("train", "fit the embedding on a dataset");
  auto flags = std::make_shared<CommonFitFlags>();
  auto data = std::make_shared<std::string>();
  auto model_out = std::make_shared<std::string>();
  auto dump_graph = std::make_shared<std::string>();
  auto normalize = std::make_shared<bool>(false);
  cmd->add_option("--data", *data, "dataset directory")->required();
  cmd->add_option("--model-out", *model_out, "model file to write")
      ->required();
  flags->attach(cmd);
  cmd->add_flag("--normalize-attributes", *normalize,
                "divide attribute columns by their standard deviation "
                "before fitting (folded back into the saved map)");
  cmd->add_option("--dump-graph", *dump_graph,
                  "also write the fused graph weights as dense CSV");
  cmd->callback([flags, data, model_out, dump_graph, normalize] {
    auto [ds, us] = uvds::load_dataset(*data);
    (void)us;
    Vector scales = Vector::Ones(ds.attribute_dim());
    if (*normalize) scales = normalize_attribute_columns(ds.attributes);
    const uvds::GraphSet gs = uvds::build_graphset(ds, flags->k);
    if (!dump_graph->empty()) uvds::write_csv_matrix(*dump_graph, gs.w_mean);
    const uvds::SolverConfig cfg = flags->config();
    uvds::FitResult fitted = uvds::fit(ds, gs, cfg);
    if (*normalize)
      fitted.params.P.array().colwise() /= scales.array();
    uvds::save_model(*model_out,
                     uvds::make_saved_model(ds, fitted.params, cfg));
    std::cout << "iterations " << fitted.iterations << "\n"
              << "final_loss " << uvds::format_double(fitted.loss_trace.back())
              << "\n"
              << "early_stopped " << (fitted.early_stopped ? 1 : 0) << "\n"
              << "line_search_warned " << (fitted.line_search_warned ? 1 : 0)
              << "\n"
              << "wrote " << *model_out << "\n";
  });
}

void add_synth(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "synth", "synthesize features for attribute rows with a saved model");
  auto model_path = std::make_shared<std::string>();
  auto attr_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--model", *model_path, "model file")->required();
  cmd->add_option("--attributes", *attr_path, "attribute rows (CSV)")
      ->required();
  cmd->add_option("--out", *out, "output feature CSV")->required();
  cmd->callback([model_path, attr_path, out] {
    const uvds::SavedModel model = uvds::load_model(*model_path);
    const Matrix attrs = uvds::read_csv_matrix(*attr_path);
    Matrix synth = uvds::synthesize(attrs, model.P, model.Q);
    synth.rowwise() += model.feature_mean.transpose();
    uvds::write_csv_matrix(*out, synth);
    std::cout << "wrote " << *out << "\n";
  });
}

uvds::SynthesizedSet anchors_for_mode(const std::string& mode,
                                      const uvds::UnseenSet& us,
                                      uvds::AttributeLevel level,
                                      const uvds::ModelParams& params) {
  if (mode == "sample") return uvds::sample_set(us, params);
  const uvds::PrototypeMode proto = mode == "ca" ? uvds::PrototypeMode::CA
                                                 : uvds::PrototypeMode::MF;
  return uvds::prototype_set(us, level, params, proto);
}

void add_eval(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "eval", "classify real unseen features against synthesized anchors");
  auto model_path = std::make_shared<std::string>();
  auto data = std::make_shared<std::string>();
  auto classifier = std::make_shared<std::string>("nn");
  auto mode = std::make_shared<std::string>("ca");
  auto report_out = std::make_shared<std::string>();
  auto predictions_out = std::make_shared<std::string>();
  cmd->add_option("--model", *model_path, "model file")->required();
  cmd->add_option("--data", *data, "dataset directory")->required();
  cmd->add_option("--classifier", *classifier, "classifier")
      ->check(CLI::IsMember({"nn", "svm"}));
  cmd->add_option("--mode", *mode, "anchor construction")
      ->check(CLI::IsMember({"ca", "mf", "sample"}));
  cmd->add_option("--report-out", *report_out, "JSON report path")
      ->required();
  cmd->add_option("--predictions-out", *predictions_out,
                  "per-row prediction CSV");
  cmd->callback([model_path, data, classifier, mode, report_out,
                 predictions_out] {
    const uvds::SavedModel model = uvds::load_model(*model_path);
    const auto [ds, us] = uvds::load_dataset(*data);
    if (!us.true_features)
      uvds::fail(uvds::ErrorKind::InvalidArgument,
                 "eval: dataset has no unseen features to classify");
    if (ds.feature_dim() != model.d || ds.attribute_dim() != model.m)
      uvds::fail(uvds::ErrorKind::ShapeMismatch,
                 "eval: dataset dimensions do not match the model");
    // true_features are centered with the dataset's seen mean; re-center
    // with the model's mean so anchors and queries share one origin.
    Matrix queries = *us.true_features;
    queries.rowwise() +=
        (ds.feature_mean - model.feature_mean).transpose();

    uvds::ModelParams params;
    params.P = model.P;
    params.Q = model.Q;
    const uvds::SynthesizedSet anchors =
        anchors_for_mode(*mode, us, ds.attribute_level, params);
    uvds::Labels pred;
    if (*classifier == "nn") {
      pred = uvds::nn_classify(queries, anchors);
    } else {
      const uvds::LinearSvmModel svm =
          uvds::svm_train(anchors.features, anchors.labels);
      pred = uvds::svm_predict(svm, queries);
    }
    const uvds::AccuracyResult acc = uvds::accuracy(pred, us.labels);
    json report = accuracy_json(acc);
    report["classifier"] = *classifier;
    report["mode"] = *mode;
    report["n_queries"] = static_cast<long>(queries.rows());
    write_report(*report_out, report);
    if (!predictions_out->empty())
      uvds::write_predictions_csv(*predictions_out, pred, us.labels);
    std::cout << "overall " << uvds::format_double(acc.overall) << "\n"
              << "mean_class " << uvds::format_double(acc.mean_class) << "\n";
  });
}

void add_cv(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "cv", "grid-search lambda and beta by repeated stratified hold-out");
  auto flags = std::make_shared<CommonFitFlags>();
  auto data = std::make_shared<std::string>();
  auto report_out = std::make_shared<std::string>();
  auto grid = std::make_shared<uvds::GridSpec>();
  grid->lambda_values = uvds::default_grid_values();
  grid->beta_values = uvds::default_grid_values();
  cmd->add_option("--data", *data, "dataset directory")->required();
  cmd->add_option("--grid-lambda", grid->lambda_values,
                  "lambda grid values (comma separated)")
      ->delimiter(',');
  cmd->add_option("--grid-beta", grid->beta_values,
                  "beta grid values (comma separated)")
      ->delimiter(',');
  cmd->add_option("--repeats", grid->repeats, "hold-out repeats");
  cmd->add_option("--fraction", grid->validation_fraction,
                  "held-out fraction per class");
  cmd->add_option("--report-out", *report_out, "JSON report path")
      ->required();
  flags->attach(cmd);
  cmd->callback([flags, data, report_out, grid] {
    const auto [ds, us] = uvds::load_dataset(*data);
    (void)us;
    grid->graph_k = flags->k;
    grid->seed = flags->seed;
    const uvds::CvResult result =
        uvds::cross_validate(ds, *grid, flags->config());
    json table = json::array();
    for (const auto& cell : result.table)
      table.push_back(json{{"lambda", cell.lambda},
                           {"beta", cell.beta},
                           {"mean_accuracy", cell.mean_accuracy},
                           {"failures", cell.failures}});
    write_report(*report_out, json{{"best_lambda", result.best_lambda},
                                   {"best_beta", result.best_beta},
                                   {"table", table}});
    std::cout << "best_lambda " << uvds::format_double(result.best_lambda)
              << "\n"
              << "best_beta " << uvds::format_double(result.best_beta)
              << "\n";
  });
}

void add_ablate(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "ablate",
      "compare linear regression, graph-only, diffusion-only, and the full "
      "model");
  auto flags = std::make_shared<CommonFitFlags>();
  auto data = std::make_shared<std::string>();
  auto report_out = std::make_shared<std::string>();
  cmd->add_option("--data", *data, "dataset directory")->required();
  cmd->add_option("--report-out", *report_out, "JSON report path")
      ->required();
  flags->attach(cmd);
  cmd->callback([flags, data, report_out] {
    const auto [ds, us] = uvds::load_dataset(*data);
    const uvds::AblationReport report =
        uvds::run_ablation(ds, us, flags->config(), flags->k);
    json cells = json::array();
    for (const auto& cell : report.cells)
      cells.push_back(json{{"method", cell.method},
                           {"scenario", cell.scenario},
                           {"classifier", cell.classifier},
                           {"seen_accuracy", cell.seen_accuracy},
                           {"unseen_accuracy", cell.unseen_accuracy}});
    json pi = json::object();
    for (const auto& [method, value] : report.unseen_pi) pi[method] = value;
    json traces = json::object();
    for (const auto& [method, trace] : report.loss_traces)
      traces[method] = trace;
    write_report(*report_out, json{{"cells", cells},
                                   {"unseen_pi", pi},
                                   {"loss_traces", traces}});
    std::cout << "cells " << report.cells.size() << "\n";
  });
}

void add_diag_variance(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "diag-variance",
      "compare per-dimension variance profiles of real and synthesized "
      "unseen features with and without diffusion regularization");
  auto flags = std::make_shared<CommonFitFlags>();
  auto data = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto report_out = std::make_shared<std::string>();
  cmd->add_option("--data", *data, "dataset directory")->required();
  cmd->add_option("--out", *out, "profile CSV path")->required();
  cmd->add_option("--report-out", *report_out, "JSON report path");
  flags->attach(cmd);
  cmd->callback([flags, data, out, report_out] {
    if (flags->beta <= 0.0)
      uvds::fail(uvds::ErrorKind::InvalidArgument,
                 "diag-variance needs --beta > 0 for the regularized run");
    const auto [ds, us] = uvds::load_dataset(*data);
    if (!us.true_features)
      uvds::fail(uvds::ErrorKind::InvalidArgument,
                 "diag-variance: dataset has no unseen features");
    const uvds::GraphSet gs = uvds::build_graphset(ds, flags->k);
    const uvds::SolverConfig with_cfg = flags->config();
    uvds::SolverConfig without_cfg = with_cfg;
    without_cfg.beta = 0.0;
    const Matrix with_dr =
        uvds::sample_set(us, uvds::fit(ds, gs, with_cfg).params).features;
    const Matrix without_dr =
        uvds::sample_set(us, uvds::fit(ds, gs, without_cfg).params).features;
    const uvds::VarianceDiagnostic diag =
        uvds::variance_diagnostic(*us.true_features, with_dr, without_dr);
    uvds::write_variance_csv(*out, diag);
    const double pi_with = uvds::synthesized_pi_variance(with_dr);
    const double pi_without = uvds::synthesized_pi_variance(without_dr);
    if (!report_out->empty())
      write_report(*report_out,
                   json{{"pi_with_dr", pi_with},
                        {"pi_without_dr", pi_without},
                        {"top_decile_real", uvds::top_decile_share(diag.real)},
                        {"top_decile_with_dr",
                         uvds::top_decile_share(diag.with_dr)},
                        {"top_decile_without_dr",
                         uvds::top_decile_share(diag.without_dr)}});
    std::cout << "pi_with_dr " << uvds::format_double(pi_with) << "\n"
              << "pi_without_dr " << uvds::format_double(pi_without) << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unseen visual data synthesis toolkit"};
  app.require_subcommand(1);
  add_gen_synthetic(app);
  add_train(app);
  add_synth(app);
  add_eval(app);
  add_cv(app);
  add_ablate(app);
  add_diag_variance(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const uvds::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
