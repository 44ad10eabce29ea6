#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uvds/csv.hpp"
#include "uvds/dataset.hpp"
#include "uvds/error.hpp"
#include "uvds/solver.hpp"
#include "uvds/types.hpp"

namespace uvds {

/// Everything needed to synthesize features later: the learned projections,
/// the training feature mean, the training dimensions, and the config used.
struct SavedModel {
  Index n = 0;  // training rows
  Index d = 0;  // feature dimensions
  Index m = 0;  // attribute dimensions
  SolverConfig config;
  Vector feature_mean;
  Matrix P;  // m x d
  Matrix Q;  // d x d
};

inline SavedModel make_saved_model(const Dataset& ds,
                                   const ModelParams& params,
                                   const SolverConfig& cfg) {
  SavedModel model;
  model.n = ds.n();
  model.d = ds.feature_dim();
  model.m = ds.attribute_dim();
  model.config = cfg;
  model.feature_mean = ds.feature_mean;
  model.P = params.P;
  model.Q = params.Q;
  return model;
}

namespace detail {

inline void write_csv_row(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ',';
    out << format_double(v(i));
  }
  out << '\n';
}

inline void write_csv_block(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r)
    write_csv_row(out, m.row(r).transpose());
}

inline std::string expect_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorKind::IoError, path + ": truncated model file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline Vector parse_csv_row(const std::string& line, Index expected,
                            const std::string& where) {
  const auto cells = split_commas(line);
  if (static_cast<Index>(cells.size()) != expected)
    fail(ErrorKind::IoError, where + ": expected " + std::to_string(expected) +
                                 " values, got " +
                                 std::to_string(cells.size()));
  Vector v(expected);
  for (Index i = 0; i < expected; ++i)
    v(i) = parse_double(cells[static_cast<size_t>(i)], where);
  return v;
}

}  // namespace detail

/// Flat text layout: a version line, `dims N D M`, a `config` line with the
/// solver settings in fixed order, the feature mean as one CSV row, then `P`
/// and `Q` as labeled CSV blocks. Doubles are written in shortest
/// round-trip form, so save/load is bit-identical.
inline void save_model(const std::string& path, const SavedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "uvds-model 1\n";
  out << "dims " << model.n << ' ' << model.d << ' ' << model.m << '\n';
  const SolverConfig& c = model.config;
  out << "config " << format_double(c.lambda) << ' ' << format_double(c.beta)
      << ' ' << format_double(c.gamma) << ' ' << format_double(c.alpha) << ' '
      << c.outer_iters << ' ' << c.q_max_iters << ' ' << format_double(c.q_tol)
      << ' ' << format_double(c.tau_init) << ' ' << format_double(c.eps_pi)
      << ' ' << format_double(c.conv_tol) << ' ' << (c.refresh_e_inner ? 1 : 0)
      << ' ' << c.seed << '\n';
  out << "feature_mean\n";
  detail::write_csv_row(out, model.feature_mean);
  out << "P\n";
  detail::write_csv_block(out, model.P);
  out << "Q\n";
  detail::write_csv_block(out, model.Q);
  if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

inline SavedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  SavedModel model;

  if (detail::expect_line(in, path) != "uvds-model 1")
    fail(ErrorKind::IoError, path + ": not a recognized model file");

  std::istringstream dims(detail::expect_line(in, path));
  std::string tag;
  if (!(dims >> tag >> model.n >> model.d >> model.m) || tag != "dims" ||
      model.n < 1 || model.d < 1 || model.m < 1)
    fail(ErrorKind::IoError, path + ": malformed dims line");

  const std::string config_line = detail::expect_line(in, path);
  std::istringstream cfg_in(config_line);
  std::string lambda_s, beta_s, gamma_s, alpha_s, q_tol_s, tau_s, eps_s,
      conv_s;
  int refresh = 0;
  SolverConfig& c = model.config;
  if (!(cfg_in >> tag >> lambda_s >> beta_s >> gamma_s >> alpha_s >>
        c.outer_iters >> c.q_max_iters >> q_tol_s >> tau_s >> eps_s >>
        conv_s >> refresh >> c.seed) ||
      tag != "config")
    fail(ErrorKind::IoError, path + ": malformed config line");
  c.lambda = parse_double(lambda_s, path + " config");
  c.beta = parse_double(beta_s, path + " config");
  c.gamma = parse_double(gamma_s, path + " config");
  c.alpha = parse_double(alpha_s, path + " config");
  c.q_tol = parse_double(q_tol_s, path + " config");
  c.tau_init = parse_double(tau_s, path + " config");
  c.eps_pi = parse_double(eps_s, path + " config");
  c.conv_tol = parse_double(conv_s, path + " config");
  c.refresh_e_inner = refresh != 0;

  if (detail::expect_line(in, path) != "feature_mean")
    fail(ErrorKind::IoError, path + ": expected feature_mean block");
  model.feature_mean = detail::parse_csv_row(detail::expect_line(in, path),
                                             model.d, path + " feature_mean");

  if (detail::expect_line(in, path) != "P")
    fail(ErrorKind::IoError, path + ": expected P block");
  model.P.resize(model.m, model.d);
  for (Index r = 0; r < model.m; ++r)
    model.P.row(r) = detail::parse_csv_row(detail::expect_line(in, path),
                                           model.d, path + " P")
                         .transpose();

  if (detail::expect_line(in, path) != "Q")
    fail(ErrorKind::IoError, path + ": expected Q block");
  model.Q.resize(model.d, model.d);
  for (Index r = 0; r < model.d; ++r)
    model.Q.row(r) = detail::parse_csv_row(detail::expect_line(in, path),
                                           model.d, path + " Q")
                         .transpose();
  return model;
}

}  // namespace uvds
