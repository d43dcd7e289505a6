#include "locallearn/pipeline.hpp"

#include <chrono>
#include <sstream>

#include "locallearn/errors.hpp"
#include "locallearn/features.hpp"
#include "locallearn/local.hpp"
#include "locallearn/svm.hpp"

namespace locallearn {

namespace {

template <typename F>
auto stage(const char* name, StageTimings& timings, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else {
      auto out = fn();
      timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return out;
    }
  } catch (const Error& e) {
    throw with_context(e, name);
  }
}

LabelList name_predictions(const FeatureMatrix& rows, const std::vector<int>& labels, const LabelMap& map) {
  LabelList out;
  for (std::size_t i = 0; i < rows.n_samples(); ++i) out.emplace_back(rows.sample_id(i), map.name(labels[i]));
  return out;
}

}  // namespace

PipelineResult run_pipeline(const DatasetManifest& manifest, const PipelineOptions& options) {
  PipelineResult result;
  auto& timings = result.timings;
  const std::uint64_t seed = options.seed.value_or(manifest.seed);

  const Dataset data = stage("ingest", timings, [&] { return ingest(manifest); });

  const FeatureMatrix fused = stage("fuse", timings, [&] {
    features::FusionSpec spec;
    for (const auto& s : manifest.sources) spec.sources.push_back({s.name, s.normalize});
    spec.post_normalize = manifest.post_normalize;
    return attach_labels(features::fuse(spec, data.sources), data.labels, data.label_map);
  });

  FeatureMatrix train, test;
  stage("split", timings, [&] {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < fused.n_samples(); ++i) {
      const Split s = data.splits.at(fused.sample_id(i));
      if (s == Split::Train) train_rows.push_back(i);
      if (s == Split::Test) test_rows.push_back(i);
    }
    if (train_rows.empty()) fail(ErrorKind::InvalidArgument, "no samples in the train split");
    if (test_rows.empty()) fail(ErrorKind::InvalidArgument, "no samples in the test split");
    train = fused.select(train_rows);
    test = fused.select(test_rows);
    if (manifest.class_cap) train = balanced_downsample(train, *manifest.class_cap, seed);
  });

  LabelList truth;
  for (std::size_t i = 0; i < test.n_samples(); ++i)
    truth.emplace_back(test.sample_id(i), data.label_map.name(test.label(i)));

  svm::SvmConfig svm_cfg;
  svm_cfg.tolerance = manifest.svm_tolerance;
  svm_cfg.max_passes = manifest.svm_max_passes;
  svm_cfg.seed = seed;

  const auto global = stage("global", timings, [&] {
    auto cfg = svm_cfg;
    cfg.C = manifest.global_C;
    const auto model = svm::train_ova(train, cfg, options.workers);
    std::vector<int> labels;
    for (std::size_t i = 0; i < test.n_samples(); ++i) labels.push_back(svm::predict_ova(model, test.row(i)).label);
    return labels;
  });

  const auto local = stage("local", timings, [&] {
    local::LocalLearnerConfig cfg;
    cfg.k = manifest.local_k;
    cfg.svm = svm_cfg;
    cfg.svm.C = manifest.local_C;
    const auto batch = local::local_predict_batch(train, test, cfg, options.workers);
    std::vector<int> labels;
    for (const auto& p : batch.predictions) labels.push_back(p.label);
    return labels;
  });

  const auto knn = stage("knn", timings,
                         [&] { return local::knn_classify_batch(train, test, manifest.knn_k, options.workers); });

  stage("evaluate", timings, [&] {
    const std::pair<const char*, const std::vector<int>*> methods[] = {
        {"global", &global}, {"local", &local}, {"knn", &knn}};
    for (const auto& [name, labels] : methods) {
      result.predictions.push_back(name_predictions(test, *labels, data.label_map));
      result.reports.push_back(evaluate(result.predictions.back(), truth, data.label_map, name));
    }
  });
  return result;
}

void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create output directory '" + dir.string() + "': " + ec.message());
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    std::ostringstream text, csv;
    write_report_text(text, r);
    write_report_csv(csv, r);
    write_text_file(dir / (r.method + "_report.txt"), text.str());
    write_text_file(dir / (r.method + "_report.csv"), csv.str());
    save_label_file(dir / (r.method + "_predictions.csv"), result.predictions.at(i));
  }
  std::ostringstream cmp_text, cmp_csv, timing;
  write_comparison_text(cmp_text, result.reports);
  write_comparison_csv(cmp_csv, result.reports);
  write_timings(timing, result.timings);
  write_text_file(dir / "comparison.txt", cmp_text.str());
  write_text_file(dir / "comparison.csv", cmp_csv.str());
  write_text_file(dir / "timing.csv", timing.str());
}

}  // namespace locallearn
