#include "locallearn/manifest.hpp"

#include <algorithm>
#include <set>

#include "locallearn/errors.hpp"
#include "locallearn/kv_config.hpp"

namespace locallearn {

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const KvConfig cfg = KvConfig::load(path);
  cfg.reject_unknown({"source.", "dim.", "normalize.", "fusion.order", "post_normalize", "labels",
                      "label_map", "splits", "seed", "class_cap", "global.C", "local.C", "local.k",
                      "knn.k", "svm.tolerance", "svm.max_passes"});
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  DatasetManifest m;
  auto names = cfg.suffixes("source.");
  if (names.empty()) fail(ErrorKind::MalformedFile, path.string() + ": no 'source.<name>' entries");
  for (const auto& prefix : {"dim.", "normalize."}) {
    for (const auto& n : cfg.suffixes(prefix))
      if (!cfg.has("source." + n))
        fail(ErrorKind::UnknownSource, path.string() + ": '" + prefix + n + "' names no source");
  }
  if (auto order = cfg.get("fusion.order")) {
    auto listed = split_list(*order);
    auto sorted = listed;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail(ErrorKind::MalformedFile, path.string() + ": duplicate name in fusion.order");
    for (const auto& n : listed)
      if (!cfg.has("source." + n)) fail(ErrorKind::UnknownSource, "fusion.order names unknown source '" + n + "'");
    if (sorted != names) fail(ErrorKind::MalformedFile, path.string() + ": fusion.order must list every source");
    names = std::move(listed);
  }
  for (const auto& n : names) {
    FeatureSource s;
    s.name = n;
    s.path = resolve(*cfg.get("source." + n));
    if (cfg.has("dim." + n)) s.expected_dim = cfg.get_count("dim." + n, 0);
    s.normalize = cfg.get_bool("normalize." + n, true);
    m.sources.push_back(std::move(s));
  }

  auto required = [&](const std::string& key) {
    auto v = cfg.get(key);
    if (!v) fail(ErrorKind::MalformedFile, path.string() + ": missing '" + key + "'");
    return resolve(*v);
  };
  m.label_file = required("labels");
  m.split_file = required("splits");
  if (auto lm = cfg.get("label_map")) m.label_map_file = resolve(*lm);

  m.post_normalize = cfg.get_bool("post_normalize", false);
  m.seed = cfg.get_u64("seed", 0);
  if (cfg.has("class_cap")) m.class_cap = cfg.get_count("class_cap", 0);
  m.global_C = cfg.get_real("global.C", m.global_C);
  m.local_C = cfg.get_real("local.C", m.local_C);
  m.local_k = cfg.get_count("local.k", m.local_k);
  m.knn_k = cfg.get_count("knn.k", m.knn_k);
  m.svm_tolerance = cfg.get_real("svm.tolerance", m.svm_tolerance);
  m.svm_max_passes = cfg.get_count("svm.max_passes", m.svm_max_passes);
  if (m.global_C <= 0 || m.local_C <= 0 || m.svm_tolerance <= 0)
    fail(ErrorKind::InvalidArgument, path.string() + ": C and svm.tolerance must be positive");
  if (m.local_k == 0 || m.knn_k == 0) fail(ErrorKind::InvalidArgument, path.string() + ": k must be >= 1");
  return m;
}

Dataset ingest(const DatasetManifest& manifest) {
  Dataset d;
  d.labels = load_label_file(manifest.label_file);
  d.label_map = manifest.label_map_file ? load_label_map(*manifest.label_map_file) : infer_label_map(d.labels);
  for (const auto& [id, name] : d.labels) d.label_map.id_of(name);

  const FeatureMatrix* first = nullptr;
  for (const auto& src : manifest.sources) {
    auto [it, inserted] = d.sources.emplace(src.name, load_features(src.path, src.expected_dim));
    if (!inserted) fail(ErrorKind::MalformedFile, "duplicate source name '" + src.name + "'");
    if (first == nullptr)
      first = &it->second;
    else
      align_by_id(*first, it->second);  // throws IdMismatch
  }

  for (auto& [id, split] : load_split_file(manifest.split_file)) d.splits.emplace(std::move(id), split);

  std::vector<std::string> missing;
  for (const auto& id : first->sample_ids())
    if (!d.splits.contains(id)) missing.push_back(id);
  if (!missing.empty()) {
    Error e(ErrorKind::IdMismatch, std::to_string(missing.size()) + " samples have no split (first: '" +
                                       missing.front() + "')");
    e.ids = std::move(missing);
    throw e;
  }
  return d;
}

}  // namespace locallearn
