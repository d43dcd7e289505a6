#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "locallearn/bovw.hpp"
#include "locallearn/dsd.hpp"
#include "locallearn/errors.hpp"
#include "locallearn/eval.hpp"
#include "locallearn/features.hpp"
#include "locallearn/io.hpp"
#include "locallearn/kv_config.hpp"
#include "locallearn/local.hpp"
#include "locallearn/manifest.hpp"
#include "locallearn/pipeline.hpp"
#include "locallearn/svm.hpp"

namespace ll = locallearn;
namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitCompute = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;

  // --seed, else LOCALLEARN_SEED, else `fallback`.
  std::uint64_t resolve_seed(std::uint64_t fallback = 0) const {
    if (seed) return *seed;
    if (const char* env = std::getenv("LOCALLEARN_SEED"); env && *env) {
      try {
        return ll::parse_count(env);
      } catch (const ll::Error&) {
        ll::fail(ll::ErrorKind::InvalidArgument, std::string("LOCALLEARN_SEED is not an integer: '") + env + "'");
      }
    }
    return fallback;
  }

  bool has_seed() const { return seed || (std::getenv("LOCALLEARN_SEED") && *std::getenv("LOCALLEARN_SEED")); }
};

ll::FeatureFormat parse_format(const std::string& s) {
  if (s == "text") return ll::FeatureFormat::Text;
  if (s == "binary") return ll::FeatureFormat::Binary;
  ll::fail(ll::ErrorKind::InvalidArgument, "format must be text or binary, got '" + s + "'");
}

ll::LabelMap label_map_for(const std::string& map_path, const ll::LabelList& labels) {
  return map_path.empty() ? ll::infer_label_map(labels) : ll::load_label_map(map_path);
}

ll::FeatureMatrix load_labeled(const std::string& features, const std::string& labels, const ll::LabelMap& map) {
  return ll::attach_labels(ll::load_features(features), ll::load_label_file(labels), map);
}

ll::LabelList name_rows(const ll::FeatureMatrix& rows, const std::vector<int>& labels, const ll::LabelMap& map) {
  ll::LabelList out;
  for (std::size_t i = 0; i < rows.n_samples(); ++i) out.emplace_back(rows.sample_id(i), map.name(labels[i]));
  return out;
}

fs::path classes_path(const fs::path& model) { return fs::path(model.string() + ".classes"); }

ll::bovw::BovwConfig bovw_config(const std::string& preset, const std::string& config, std::uint64_t seed) {
  ll::bovw::BovwConfig cfg;
  if (preset == "desk")
    cfg = ll::bovw::BovwConfig::desk();
  else if (preset != "full")
    ll::fail(ll::ErrorKind::InvalidArgument, "preset must be desk or full, got '" + preset + "'");
  cfg.vocab.seed = seed;
  if (!config.empty()) cfg = ll::bovw::BovwConfig::load(config, cfg);
  return cfg;
}

std::vector<std::pair<std::string, ll::bovw::GrayImage>> load_images(const std::string& dir, const std::string& split,
                                                                      bool train_only) {
  auto images = ll::bovw::load_pgm_directory(dir);
  if (split.empty()) return images;
  std::map<std::string, ll::Split> splits;
  for (const auto& [id, s] : ll::load_split_file(split)) splits[id] = s;
  std::vector<std::pair<std::string, ll::bovw::GrayImage>> kept;
  for (auto& img : images) {
    auto it = splits.find(img.first);
    if (it == splits.end()) {
      ll::Error e(ll::ErrorKind::IdMismatch, "image '" + img.first + "' has no split");
      e.ids = {img.first};
      throw e;
    }
    if (!train_only || it->second == ll::Split::Train) kept.push_back(std::move(img));
  }
  return kept;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    ll::write_text_file(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local learning toolkit: feature fusion, global and local linear SVMs, BOVW, DSD training"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool workers) {
    sub->add_option("--seed", common.seed, "Random seed (falls back to LOCALLEARN_SEED, then 0)");
    if (workers) sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  // ingest
  std::string manifest_path, out_path, labels_out, format = "text";
  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and write the fused, labeled feature matrix");
  ingest->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  ingest->add_option("--out", out_path, "Fused features output")->required();
  ingest->add_option("--labels-out", labels_out, "Labels output (sample_id,class_name)");
  ingest->add_option("--format", format, "text or binary");

  // build-vocab
  std::string images_dir, split_path, preset = "desk", bovw_cfg_path;
  auto* build_vocab = app.add_subcommand("build-vocab", "Cluster dense SIFT descriptors into per-level vocabularies");
  build_vocab->add_option("--images", images_dir, "Directory of binary PGM images")->required();
  build_vocab->add_option("--split", split_path, "Split file; only train images are used");
  build_vocab->add_option("--preset", preset, "desk or full vocabulary sizes");
  build_vocab->add_option("--config", bovw_cfg_path, "key = value overrides");
  build_vocab->add_option("--out", out_path, "Vocabulary output")->required();
  add_common(build_vocab, true);

  // encode
  std::string vocab_path;
  auto* encode = app.add_subcommand("encode", "Encode images as spatial-pyramid visual word vectors");
  encode->add_option("--images", images_dir, "Directory of binary PGM images")->required();
  encode->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  encode->add_option("--preset", preset, "desk or full vocabulary sizes");
  encode->add_option("--config", bovw_cfg_path, "key = value overrides");
  encode->add_option("--out", out_path, "Features output")->required();
  encode->add_option("--format", format, "text or binary");
  add_common(encode, true);

  // fuse
  std::vector<std::string> fuse_sources, raw_sources;
  bool post_normalize = false;
  auto* fuse = app.add_subcommand("fuse", "Concatenate feature sources by sample id");
  fuse->add_option("--source", fuse_sources, "name=path, in fusion order")->required();
  fuse->add_option("--raw", raw_sources, "Source names to leave unnormalized");
  fuse->add_flag("--post-normalize", post_normalize, "L2-normalize the fused rows");
  fuse->add_option("--out", out_path, "Fused features output")->required();
  fuse->add_option("--format", format, "text or binary");

  // train-global
  std::string features_path, labels_path, label_map_path, model_path;
  double C = 100.0, tolerance = 1e-4;
  std::size_t max_passes = 10000;
  auto* train_global = app.add_subcommand("train-global", "Train a one-versus-all linear SVM");
  train_global->add_option("--features", features_path, "Training features")->required();
  train_global->add_option("--labels", labels_path, "Training labels")->required();
  train_global->add_option("--label-map", label_map_path, "Class names in id order (default: sorted names)");
  train_global->add_option("-C", C, "Soft-margin penalty");
  train_global->add_option("--tol", tolerance, "Solver tolerance");
  train_global->add_option("--max-passes", max_passes, "Solver pass limit");
  train_global->add_option("--out", model_path, "Model output (class names go to <out>.classes)")->required();
  add_common(train_global, true);

  // predict-global
  std::string predictions_path;
  auto* predict_global = app.add_subcommand("predict-global", "Predict with a trained one-versus-all model");
  predict_global->add_option("--model", model_path, "Model file")->required();
  predict_global->add_option("--features", features_path, "Features to classify")->required();
  predict_global->add_option("--label-map", label_map_path, "Class names (default: <model>.classes)");
  predict_global->add_option("--out", predictions_path, "Predictions output")->required();

  // predict-local
  std::string train_path, train_labels_path, test_path, timing_path;
  std::size_t k = 200;
  auto* predict_local = app.add_subcommand("predict-local", "Train one SVM per query on its nearest neighbors");
  predict_local->add_option("--train", train_path, "Training features")->required();
  predict_local->add_option("--train-labels", train_labels_path, "Training labels")->required();
  predict_local->add_option("--label-map", label_map_path, "Class names in id order");
  predict_local->add_option("--test", test_path, "Query features")->required();
  predict_local->add_option("-k", k, "Neighbors per query");
  predict_local->add_option("-C", C, "Soft-margin penalty");
  predict_local->add_option("--tol", tolerance, "Solver tolerance");
  predict_local->add_option("--max-passes", max_passes, "Solver pass limit");
  predict_local->add_option("--out", predictions_path, "Predictions output")->required();
  predict_local->add_option("--timing", timing_path, "Stage timing CSV");
  add_common(predict_local, true);

  // knn-baseline
  auto* knn = app.add_subcommand("knn-baseline", "Majority vote over cosine nearest neighbors");
  knn->add_option("--train", train_path, "Training features")->required();
  knn->add_option("--train-labels", train_labels_path, "Training labels")->required();
  knn->add_option("--label-map", label_map_path, "Class names in id order");
  knn->add_option("--test", test_path, "Query features")->required();
  knn->add_option("-k", k, "Neighbors per query");
  knn->add_option("--out", predictions_path, "Predictions output")->required();
  add_common(knn, true);

  // dsd-train
  std::string schedule = "D30,S10@0.3,D10", val_features, val_labels, log_path;
  std::size_t hidden = 64;
  ll::dsd::TrainerConfig trainer;
  auto* dsd_train = app.add_subcommand("dsd-train", "Train an MLP under a dense-sparse-dense schedule");
  dsd_train->add_option("--features", features_path, "Training features")->required();
  dsd_train->add_option("--labels", labels_path, "Training labels")->required();
  dsd_train->add_option("--label-map", label_map_path, "Class names in id order");
  dsd_train->add_option("--val-features", val_features, "Validation features");
  dsd_train->add_option("--val-labels", val_labels, "Validation labels");
  dsd_train->add_option("--schedule", schedule, "e.g. D300,S50@0.6,D50");
  dsd_train->add_option("--hidden", hidden, "Hidden units (0 for linear softmax)");
  dsd_train->add_option("--lr", trainer.learning_rate, "Learning rate");
  dsd_train->add_option("--momentum", trainer.momentum, "Momentum");
  dsd_train->add_option("--batch", trainer.batch_size, "Mini-batch size");
  dsd_train->add_option("--lr-decay", trainer.lr_decay, "Learning-rate decay factor");
  dsd_train->add_option("--patience", trainer.patience, "Stagnant epochs before decay");
  dsd_train->add_option("--flip-width", trainer.flip_width, "Image width for flip augmentation (0 = off)");
  dsd_train->add_option("--out", model_path, "Model output")->required();
  dsd_train->add_option("--log", log_path, "Per-epoch CSV log");
  add_common(dsd_train, false);

  // sensitivity-scan
  std::vector<double> rates = ll::dsd::kScanRates;
  double threshold = 0.5;
  std::string rates_out;
  auto* scan = app.add_subcommand("sensitivity-scan", "Prune each layer alone at several rates");
  scan->add_option("--model", model_path, "MLP model")->required();
  scan->add_option("--features", features_path, "Validation features")->required();
  scan->add_option("--labels", labels_path, "Validation labels")->required();
  scan->add_option("--label-map", label_map_path, "Class names in id order");
  scan->add_option("--rates", rates, "Sparsity rates")->delimiter(',');
  scan->add_option("--threshold", threshold, "Allowed drop in accuracy points");
  scan->add_option("--out", out_path, "Scan table CSV (default stdout)");
  scan->add_option("--rates-out", rates_out, "Selected per-layer rates CSV");

  // eval
  std::string csv_path;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--predictions", predictions_path, "Predictions (sample_id,class_name)")->required();
  eval->add_option("--labels", labels_path, "Ground truth labels")->required();
  eval->add_option("--label-map", label_map_path, "Class names in id order");
  eval->add_option("--out", out_path, "Text report (default stdout)");
  eval->add_option("--csv", csv_path, "CSV report");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Global SVM, local SVM and k-NN on a manifest");
  pipeline->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  pipeline->add_option("--out", out_path, "Output directory")->required();
  add_common(pipeline, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "InvalidArgument: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*ingest) {
      const auto manifest = ll::load_manifest(manifest_path);
      const auto data = ll::ingest(manifest);
      ll::features::FusionSpec spec;
      for (const auto& s : manifest.sources) spec.sources.push_back({s.name, s.normalize});
      spec.post_normalize = manifest.post_normalize;
      const auto fused = ll::features::fuse(spec, data.sources);
      ll::attach_labels(fused, data.labels, data.label_map);
      ll::save_features(out_path, fused, parse_format(format));
      if (!labels_out.empty()) {
        ll::LabelList ordered;
        std::map<std::string, std::string> by_id(data.labels.begin(), data.labels.end());
        for (const auto& id : fused.sample_ids()) ordered.emplace_back(id, by_id.at(id));
        ll::save_label_file(labels_out, ordered);
      }
      std::cerr << "ingested " << fused.n_samples() << " samples, dim " << fused.dim() << ", "
                << data.label_map.n_classes() << " classes\n";
    } else if (*build_vocab) {
      const auto cfg = bovw_config(preset, bovw_cfg_path, common.resolve_seed());
      const auto named = load_images(images_dir, split_path, true);
      std::vector<ll::bovw::GrayImage> images;
      for (const auto& [_, img] : named) images.push_back(img);
      ll::bovw::VocabStats stats;
      const auto vocab = ll::bovw::build_vocab(images, cfg, common.workers, &stats);
      ll::bovw::save_vocabulary(out_path, vocab);
      std::cerr << "vocabulary from " << stats.descriptors_used << " of " << stats.descriptors_total
                << " descriptors\n";
    } else if (*encode) {
      const auto cfg = bovw_config(preset, bovw_cfg_path, common.resolve_seed());
      const auto vocab = ll::bovw::load_vocabulary(vocab_path, cfg.vocab.forest);
      const auto images = load_images(images_dir, "", false);
      const auto m = ll::bovw::encode_images(images, vocab, cfg, common.workers);
      ll::save_features(out_path, m, parse_format(format));
    } else if (*fuse) {
      ll::features::FusionSpec spec;
      std::map<std::string, ll::FeatureMatrix> sources;
      for (const auto& s : fuse_sources) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
          ll::fail(ll::ErrorKind::InvalidArgument, "--source expects name=path, got '" + s + "'");
        const std::string name = s.substr(0, eq);
        if (sources.contains(name)) ll::fail(ll::ErrorKind::InvalidArgument, "duplicate source '" + name + "'");
        sources.emplace(name, ll::load_features(s.substr(eq + 1)));
        spec.sources.push_back({name, true});
      }
      for (const auto& r : raw_sources) {
        bool found = false;
        for (auto& s : spec.sources)
          if (s.name == r) s.normalize = !(found = true);
        if (!found) ll::fail(ll::ErrorKind::UnknownSource, "--raw names unknown source '" + r + "'");
      }
      spec.post_normalize = post_normalize;
      ll::save_features(out_path, ll::features::fuse(spec, sources), parse_format(format));
    } else if (*train_global) {
      const auto labels = ll::load_label_file(labels_path);
      const auto map = label_map_for(label_map_path, labels);
      const auto X = ll::attach_labels(ll::load_features(features_path), labels, map);
      ll::svm::SvmConfig cfg{.C = C, .tolerance = tolerance, .max_passes = max_passes, .seed = common.resolve_seed()};
      const auto model = ll::svm::train_ova(X, cfg, common.workers);
      ll::svm::save_ova(model_path, model);
      ll::save_label_map(classes_path(model_path), map);
    } else if (*predict_global) {
      const auto model = ll::svm::load_ova(model_path);
      const auto map = ll::load_label_map(label_map_path.empty() ? classes_path(model_path) : fs::path(label_map_path));
      if (map.n_classes() != model.n_classes())
        ll::fail(ll::ErrorKind::DimMismatch, "label map has " + std::to_string(map.n_classes()) +
                                                 " classes, model has " + std::to_string(model.n_classes()));
      const auto X = ll::load_features(features_path, model.dim());
      std::vector<int> labels;
      for (std::size_t i = 0; i < X.n_samples(); ++i) labels.push_back(ll::svm::predict_ova(model, X.row(i)).label);
      ll::save_label_file(predictions_path, name_rows(X, labels, map));
    } else if (*predict_local) {
      const auto labels = ll::load_label_file(train_labels_path);
      const auto map = label_map_for(label_map_path, labels);
      const auto train = ll::attach_labels(ll::load_features(train_path), labels, map);
      const auto test = ll::load_features(test_path, train.dim());
      ll::local::LocalLearnerConfig cfg;
      cfg.k = k;
      cfg.svm = {.C = C, .tolerance = tolerance, .max_passes = max_passes, .seed = common.resolve_seed()};
      const auto batch = ll::local::local_predict_batch(train, test, cfg, common.workers);
      std::vector<int> out;
      for (const auto& p : batch.predictions) out.push_back(p.label);
      ll::save_label_file(predictions_path, name_rows(test, out, map));
      if (!timing_path.empty()) {
        std::ostringstream t;
        ll::write_timings(t, {{"search", batch.timing.search},
                              {"train", batch.timing.train},
                              {"predict", batch.timing.predict},
                              {"wall", batch.timing.wall}});
        ll::write_text_file(timing_path, t.str());
      }
    } else if (*knn) {
      const auto labels = ll::load_label_file(train_labels_path);
      const auto map = label_map_for(label_map_path, labels);
      const auto train = ll::attach_labels(ll::load_features(train_path), labels, map);
      const auto test = ll::load_features(test_path, train.dim());
      ll::save_label_file(predictions_path,
                          name_rows(test, ll::local::knn_classify_batch(train, test, k, common.workers), map));
    } else if (*dsd_train) {
      const auto labels = ll::load_label_file(labels_path);
      const auto map = label_map_for(label_map_path, labels);
      const auto train = ll::attach_labels(ll::load_features(features_path), labels, map);
      ll::FeatureMatrix val;
      if (!val_features.empty() != !val_labels.empty())
        ll::fail(ll::ErrorKind::InvalidArgument, "--val-features and --val-labels go together");
      if (!val_features.empty()) val = load_labeled(val_features, val_labels, map);
      trainer.seed = common.resolve_seed();
      std::vector<std::size_t> sizes{train.dim()};
      if (hidden > 0) sizes.push_back(hidden);
      sizes.push_back(map.n_classes());
      const auto result = ll::dsd::dsd_train(ll::dsd::MlpModel::create(sizes, trainer.seed), train, val,
                                             ll::dsd::DsdSchedule::parse(schedule), trainer);
      ll::dsd::save_mlp(model_path, result.model);
      if (!log_path.empty()) {
        std::ostringstream log;
        ll::dsd::write_log_csv(log, result.log, result.model);
        ll::write_text_file(log_path, log.str());
      }
      if (!result.log.empty())
        std::cerr << "final validation accuracy " << result.log.back().val_accuracy << '\n';
    } else if (*scan) {
      const auto model = ll::dsd::load_mlp(model_path);
      const auto labels = ll::load_label_file(labels_path);
      const auto val = load_labeled(features_path, labels_path, label_map_for(label_map_path, labels));
      const auto table = ll::dsd::sensitivity_scan(model, val, rates);
      std::ostringstream csv;
      ll::dsd::write_scan_csv(csv, table);
      write_or_print(out_path, csv.str());
      const auto chosen = ll::dsd::select_rates(table, threshold);
      std::ostringstream sel;
      sel << "layer,rate\n";
      for (std::size_t l = 0; l < chosen.size(); ++l) sel << table.layers[l] << ',' << ll::format_real(chosen[l]) << '\n';
      if (rates_out.empty())
        std::cerr << sel.str();
      else
        ll::write_text_file(rates_out, sel.str());
    } else if (*eval) {
      const auto truth = ll::load_label_file(labels_path);
      const auto report =
          ll::evaluate(ll::load_label_file(predictions_path), truth, label_map_for(label_map_path, truth));
      std::ostringstream text;
      ll::write_report_text(text, report);
      write_or_print(out_path, text.str());
      if (!csv_path.empty()) {
        std::ostringstream csv;
        ll::write_report_csv(csv, report);
        ll::write_text_file(csv_path, csv.str());
      }
    } else if (*pipeline) {
      const auto manifest = ll::load_manifest(manifest_path);
      ll::PipelineOptions options;
      if (common.has_seed()) options.seed = common.resolve_seed();
      options.workers = common.workers;
      const auto result = ll::run_pipeline(manifest, options);
      ll::write_pipeline_outputs(out_path, result);
      std::ostringstream cmp;
      ll::write_comparison_text(cmp, result.reports);
      std::cout << cmp.str();
    }
  } catch (const ll::Error& e) {
    std::cerr << e.what() << '\n';
    if (e.kind() == ll::ErrorKind::IdMismatch && !e.ids.empty()) {
      std::cerr << "  ids:";
      for (std::size_t i = 0; i < e.ids.size() && i < 10; ++i) std::cerr << ' ' << e.ids[i];
      if (e.ids.size() > 10) std::cerr << " ... (" << e.ids.size() << " total)";
      std::cerr << '\n';
    }
    return ll::is_compute_error(e.kind()) ? kExitCompute : kExitValidation;
  } catch (const std::bad_alloc&) {
    std::cerr << "OutOfMemory: allocation failed\n";
    return kExitCompute;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << '\n';
    return kExitCompute;
  }
  return 0;
}
