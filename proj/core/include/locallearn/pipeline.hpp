#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "locallearn/eval.hpp"
#include "locallearn/manifest.hpp"

namespace locallearn {

struct PipelineOptions {
  /// Replaces the manifest seed when set.
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
};

struct PipelineResult {
  /// global, local, knn in that order.
  std::vector<EvalReport> reports;
  std::vector<LabelList> predictions;
  StageTimings timings;
};

/// Ingest, fuse, train on the train split (optionally class-capped), and
/// score global OvA SVM, local SVM and k-NN on the test split. Errors keep
/// their kind and gain the failing stage as message prefix.
PipelineResult run_pipeline(const DatasetManifest& manifest, const PipelineOptions& options = {});

/// <method>_report.txt/.csv, <method>_predictions.csv, comparison.txt/.csv
/// and timing.csv under `dir` (created if missing).
void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result);

}  // namespace locallearn
