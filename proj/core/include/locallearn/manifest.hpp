#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "locallearn/feature_matrix.hpp"
#include "locallearn/io.hpp"

namespace locallearn {

/// Dataset description for `pipeline`. Grammar (see KvConfig), relative
/// paths resolved against the manifest's directory:
///
///   source.<name>    = features file           (one or more)
///   dim.<name>       = expected dim            (optional)
///   normalize.<name> = true|false              (default true)
///   fusion.order     = name,name,...           (default: sorted names)
///   post_normalize   = true|false              (default false)
///   labels           = label file              (sample_id,class_name)
///   label_map        = label map file          (optional; else sorted names)
///   splits           = split file              (sample_id,train|validation|test)
///   seed             = integer                 (default 0)
///   class_cap        = per-class cap on train  (optional)
///   global.C, local.C, local.k, knn.k, svm.tolerance, svm.max_passes
struct FeatureSource {
  std::string name;
  std::filesystem::path path;
  std::optional<std::size_t> expected_dim;
  bool normalize = true;
};

struct DatasetManifest {
  std::vector<FeatureSource> sources;
  bool post_normalize = false;
  std::filesystem::path label_file;
  std::optional<std::filesystem::path> label_map_file;
  std::filesystem::path split_file;
  std::uint64_t seed = 0;
  std::optional<std::size_t> class_cap;

  double global_C = 100.0;
  double local_C = 100.0;
  std::size_t local_k = 200;
  std::size_t knn_k = 200;
  double svm_tolerance = 1e-4;
  std::size_t svm_max_passes = 10000;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

/// Loaded and cross-checked manifest inputs.
struct Dataset {
  LabelMap label_map;
  std::map<std::string, FeatureMatrix> sources;  // unlabeled, file row order
  LabelList labels;
  std::map<std::string, Split> splits;
};

/// Loads every source, the labels and the splits. Throws IdMismatch when the
/// sources disagree on the sample id set or when a sample has no split.
Dataset ingest(const DatasetManifest& manifest);

}  // namespace locallearn
