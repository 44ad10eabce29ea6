#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvds/csv.hpp"
#include "uvds/error.hpp"
#include "uvds/matrix_kernels.hpp"
#include "uvds/rng.hpp"
#include "uvds/types.hpp"

namespace uvds {

enum class AttributeLevel { ClassLevel, ImageLevel };

inline std::string to_string(AttributeLevel level) {
  return level == AttributeLevel::ClassLevel ? "class" : "image";
}

inline AttributeLevel attribute_level_from_string(const std::string& s) {
  if (s == "class") return AttributeLevel::ClassLevel;
  if (s == "image") return AttributeLevel::ImageLevel;
  fail(ErrorKind::IoError,
       "attribute_level must be 'class' or 'image', got '" + s + "'");
}

struct SplitSpec {
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
  double validation_fraction = 0.5;
};

/// Training-side data: centered features, raw attributes, labels relabeled to
/// a contiguous 1..C range.
struct Dataset {
  Matrix features;
  Matrix attributes;
  Labels labels;
  AttributeLevel attribute_level = AttributeLevel::ImageLevel;
  Vector feature_mean;

  Index n() const { return features.rows(); }
  Index feature_dim() const { return features.cols(); }
  Index attribute_dim() const { return attributes.cols(); }
  int num_classes() const {
    int c = 0;
    for (const int label : labels) c = std::max(c, label);
    return c;
  }
};

/// Test-side data. true_features, when present, are centered with the SEEN
/// feature mean; they exist only for evaluation, never for training.
struct UnseenSet {
  Matrix attributes;
  Labels labels;
  std::optional<Matrix> true_features;

  Index n() const { return attributes.rows(); }
  int num_classes() const {
    int c = 0;
    for (const int label : labels) c = std::max(c, label);
    return c;
  }
};

/// On-disk corpus exactly as stored: uncentered features, original label ids,
/// and the split recorded in meta.json.
struct RawCorpus {
  Matrix features;
  Matrix attributes;
  Labels labels;
  AttributeLevel attribute_level = AttributeLevel::ImageLevel;
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
};

inline RawCorpus read_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  RawCorpus corpus;
  corpus.features = read_csv_matrix((base / "features.csv").string());
  corpus.attributes = read_csv_matrix((base / "attributes.csv").string());
  corpus.labels = read_csv_labels((base / "labels.csv").string());

  const std::string meta_path = (base / "meta.json").string();
  std::ifstream meta_in(meta_path, std::ios::binary);
  if (!meta_in) fail(ErrorKind::IoError, "cannot open " + meta_path);
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, meta_path + ": " + e.what());
  }
  try {
    corpus.attribute_level =
        attribute_level_from_string(meta.at("attribute_level").get<std::string>());
    corpus.seen_classes = meta.at("seen_classes").get<std::vector<int>>();
    corpus.unseen_classes = meta.at("unseen_classes").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, meta_path + ": " + e.what());
  }
  return corpus;
}

inline void write_corpus(const std::string& dir, const RawCorpus& corpus) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create directory " + dir);
  write_csv_matrix((base / "features.csv").string(), corpus.features);
  write_csv_matrix((base / "attributes.csv").string(), corpus.attributes);
  write_csv_labels((base / "labels.csv").string(), corpus.labels);
  nlohmann::json meta;
  meta["attribute_level"] = to_string(corpus.attribute_level);
  meta["seen_classes"] = corpus.seen_classes;
  meta["unseen_classes"] = corpus.unseen_classes;
  std::ofstream out((base / "meta.json").string(), std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + dir + "/meta.json");
  out << meta.dump(2) << '\n';
}

namespace detail {

inline void check_corpus_shapes(const RawCorpus& corpus) {
  const Index n = corpus.features.rows();
  if (corpus.attributes.rows() != n)
    fail(ErrorKind::ShapeMismatch,
         "features have " + std::to_string(n) + " rows but attributes have " +
             std::to_string(corpus.attributes.rows()));
  if (static_cast<Index>(corpus.labels.size()) != n)
    fail(ErrorKind::ShapeMismatch,
         "features have " + std::to_string(n) + " rows but labels have " +
             std::to_string(corpus.labels.size()));
}

inline void check_split(const SplitSpec& split, const Labels& labels) {
  if (split.seen_classes.empty())
    fail(ErrorKind::EmptySide, "seen class list is empty");
  if (split.unseen_classes.empty())
    fail(ErrorKind::EmptySide, "unseen class list is empty");
  const std::set<int> seen(split.seen_classes.begin(),
                           split.seen_classes.end());
  for (const int c : split.unseen_classes)
    if (seen.count(c))
      fail(ErrorKind::UnknownClass,
           "class " + std::to_string(c) + " appears on both split sides");
  const std::set<int> present(labels.begin(), labels.end());
  for (const int c : split.seen_classes)
    if (!present.count(c))
      fail(ErrorKind::UnknownClass,
           "seen class " + std::to_string(c) + " has no rows");
  for (const int c : split.unseen_classes)
    if (!present.count(c))
      fail(ErrorKind::UnknownClass,
           "unseen class " + std::to_string(c) + " has no rows");
}

/// Maps original class ids (sorted ascending) to 1..C.
inline std::map<int, int> contiguous_relabeling(const std::vector<int>& ids) {
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::map<int, int> mapping;
  for (size_t i = 0; i < sorted.size(); ++i)
    mapping[sorted[i]] = static_cast<int>(i) + 1;
  return mapping;
}

inline std::vector<Index> rows_with_classes(const Labels& labels,
                                            const std::vector<int>& classes) {
  const std::set<int> wanted(classes.begin(), classes.end());
  std::vector<Index> rows;
  for (size_t i = 0; i < labels.size(); ++i)
    if (wanted.count(labels[i])) rows.push_back(static_cast<Index>(i));
  return rows;
}

inline Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

inline void check_class_level_rows(const Matrix& attributes,
                                   const Labels& labels) {
  std::map<int, Index> first_row;
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i) {
    const auto [it, inserted] = first_row.try_emplace(labels[i], i);
    if (!inserted && attributes.row(i) != attributes.row(it->second))
      fail(ErrorKind::InvalidArgument,
           "class-level attributes differ within class " +
               std::to_string(labels[i]));
  }
}

}  // namespace detail

/// Loads a corpus directory and splits it into a centered seen-side Dataset
/// and an UnseenSet whose true features are centered with the seen mean.
inline std::pair<Dataset, UnseenSet> load_dataset(const RawCorpus& corpus,
                                                  const SplitSpec& split) {
  detail::check_corpus_shapes(corpus);
  detail::check_split(split, corpus.labels);

  const std::vector<Index> seen_rows =
      detail::rows_with_classes(corpus.labels, split.seen_classes);
  const std::vector<Index> unseen_rows =
      detail::rows_with_classes(corpus.labels, split.unseen_classes);
  if (seen_rows.empty()) fail(ErrorKind::EmptySide, "seen side has no rows");
  if (unseen_rows.empty())
    fail(ErrorKind::EmptySide, "unseen side has no rows");

  const auto seen_map = detail::contiguous_relabeling(split.seen_classes);
  const auto unseen_map = detail::contiguous_relabeling(split.unseen_classes);

  Dataset ds;
  ds.attribute_level = corpus.attribute_level;
  auto [centered, mean] = center_columns(detail::take_rows(corpus.features, seen_rows));
  ds.features = std::move(centered);
  ds.feature_mean = std::move(mean);
  ds.attributes = detail::take_rows(corpus.attributes, seen_rows);
  ds.labels.reserve(seen_rows.size());
  for (const Index r : seen_rows)
    ds.labels.push_back(seen_map.at(corpus.labels[static_cast<size_t>(r)]));

  UnseenSet us;
  us.attributes = detail::take_rows(corpus.attributes, unseen_rows);
  us.labels.reserve(unseen_rows.size());
  for (const Index r : unseen_rows)
    us.labels.push_back(unseen_map.at(corpus.labels[static_cast<size_t>(r)]));
  Matrix unseen_features = detail::take_rows(corpus.features, unseen_rows);
  us.true_features =
      unseen_features.rowwise() - ds.feature_mean.transpose();

  if (ds.attribute_level == AttributeLevel::ClassLevel) {
    detail::check_class_level_rows(ds.attributes, ds.labels);
    detail::check_class_level_rows(us.attributes, us.labels);
  }
  return {std::move(ds), std::move(us)};
}

inline std::pair<Dataset, UnseenSet> load_dataset(const std::string& dir,
                                                  const SplitSpec& split) {
  return load_dataset(read_corpus(dir), split);
}

/// Split taken from the corpus's own meta.json.
inline std::pair<Dataset, UnseenSet> load_dataset(const std::string& dir) {
  const RawCorpus corpus = read_corpus(dir);
  SplitSpec split;
  split.seen_classes = corpus.seen_classes;
  split.unseen_classes = corpus.unseen_classes;
  return load_dataset(corpus, split);
}

/// Per-class arithmetic mean of attribute rows; class ids sorted ascending.
inline std::pair<Matrix, std::vector<int>> class_mean_attributes(
    const Dataset& ds) {
  if (ds.n() == 0) fail(ErrorKind::EmptySide, "dataset has no rows");
  std::map<int, std::pair<Vector, Index>> sums;
  for (Index i = 0; i < ds.n(); ++i) {
    auto [it, inserted] = sums.try_emplace(
        ds.labels[static_cast<size_t>(i)],
        std::make_pair(Vector::Zero(ds.attribute_dim()).eval(), Index{0}));
    it->second.first += ds.attributes.row(i).transpose();
    it->second.second += 1;
  }
  Matrix means(static_cast<Index>(sums.size()), ds.attribute_dim());
  std::vector<int> class_ids;
  Index r = 0;
  for (const auto& [id, acc] : sums) {
    means.row(r) = (acc.first / static_cast<double>(acc.second)).transpose();
    class_ids.push_back(id);
    ++r;
  }
  return {std::move(means), std::move(class_ids)};
}

/// Class-stratified hold-out split: each class contributes
/// ceil(fraction * n_c) rows to the validation side. Deterministic per seed.
inline std::pair<Dataset, Dataset> split_validation(const Dataset& ds,
                                                    double fraction,
                                                    uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(ErrorKind::InvalidArgument, "validation fraction must be in (0,1)");
  std::map<int, std::vector<Index>> by_class;
  for (Index i = 0; i < ds.n(); ++i)
    by_class[ds.labels[static_cast<size_t>(i)]].push_back(i);
  Rng rng(seed);
  std::vector<Index> train_rows, val_rows;
  for (auto& [id, rows] : by_class) {
    if (rows.size() < 2)
      fail(ErrorKind::ClassTooSmall,
           "class " + std::to_string(id) + " has fewer than 2 rows");
    rng.shuffle(rows);
    const size_t take = static_cast<size_t>(
        std::ceil(fraction * static_cast<double>(rows.size())));
    for (size_t i = 0; i < rows.size(); ++i)
      (i < take ? val_rows : train_rows).push_back(rows[i]);
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(val_rows.begin(), val_rows.end());

  const auto subset = [&ds](const std::vector<Index>& rows) {
    Dataset out;
    out.features = detail::take_rows(ds.features, rows);
    out.attributes = detail::take_rows(ds.attributes, rows);
    out.labels.reserve(rows.size());
    for (const Index r : rows)
      out.labels.push_back(ds.labels[static_cast<size_t>(r)]);
    out.attribute_level = ds.attribute_level;
    out.feature_mean = ds.feature_mean;
    return out;
  };
  return {subset(train_rows), subset(val_rows)};
}

}  // namespace uvds
