#include "locallearn/local.hpp"

#include <algorithm>
#include <chrono>

#include "locallearn/errors.hpp"
#include "locallearn/parallel.hpp"

namespace locallearn::local {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_labels(const FeatureMatrix& train) {
  if (train.empty()) fail(ErrorKind::InvalidArgument, "training set is empty");
  if (!train.has_labels()) fail(ErrorKind::MissingLabels, "training set has no labels");
}

void require_dim(const FeatureMatrix& train, const FeatureMatrix& queries) {
  if (!queries.empty() && queries.dim() != train.dim())
    fail(ErrorKind::DimMismatch, "query dim " + std::to_string(queries.dim()) + " != training dim " +
                                     std::to_string(train.dim()));
}

svm::Prediction predict_timed(const neighbors::CosineIndex& index, std::span<const double> q,
                              const LocalLearnerConfig& cfg, LocalTiming* timing) {
  auto t0 = Clock::now();
  const auto nn = index.top_k(q, cfg.k);
  std::vector<std::size_t> rows(nn.size());
  for (std::size_t i = 0; i < nn.size(); ++i) rows[i] = nn[i].row;
  std::sort(rows.begin(), rows.end());
  auto t1 = Clock::now();
  const auto model = svm::train_ova(index.data(), rows, cfg.svm, 1);
  auto t2 = Clock::now();
  auto pred = svm::predict_ova(model, q);
  if (timing) {
    timing->search += std::chrono::duration<double>(t1 - t0).count();
    timing->train += std::chrono::duration<double>(t2 - t1).count();
    timing->predict += seconds_since(t2);
  }
  return pred;
}

}  // namespace

void LocalLearnerConfig::validate() const {
  if (k == 0) fail(ErrorKind::InvalidArgument, "local k must be >= 1");
  svm.validate();
}

svm::Prediction local_predict_one(const neighbors::CosineIndex& train, std::span<const double> q,
                                  const LocalLearnerConfig& cfg) {
  cfg.validate();
  require_labels(train.data());
  return predict_timed(train, q, cfg, nullptr);
}

svm::Prediction local_predict_one(const FeatureMatrix& train, std::span<const double> q,
                                  const LocalLearnerConfig& cfg) {
  require_labels(train);
  return local_predict_one(neighbors::CosineIndex(train), q, cfg);
}

LocalBatchResult local_predict_batch(const FeatureMatrix& train, const FeatureMatrix& queries,
                                     const LocalLearnerConfig& cfg, std::size_t workers) {
  cfg.validate();
  require_labels(train);
  require_dim(train, queries);
  const auto start = Clock::now();
  const neighbors::CosineIndex index(train);
  LocalBatchResult out;
  out.predictions.resize(queries.n_samples());
  std::vector<LocalTiming> per_query(queries.n_samples());
  parallel_for(queries.n_samples(), workers, [&](std::size_t i) {
    out.predictions[i] = predict_timed(index, queries.row(i), cfg, &per_query[i]);
  });
  for (const auto& t : per_query) {
    out.timing.search += t.search;
    out.timing.train += t.train;
    out.timing.predict += t.predict;
  }
  out.timing.wall = seconds_since(start);
  return out;
}

int knn_classify(const neighbors::CosineIndex& train, std::span<const double> q, std::size_t k) {
  require_labels(train.data());
  const auto nn = train.top_k(q, k);
  const std::size_t n_classes = train.data().n_classes();
  std::vector<std::size_t> votes(n_classes, 0);
  std::vector<double> mass(n_classes, 0.0);
  for (const auto& n : nn) {
    const auto c = static_cast<std::size_t>(train.data().label(n.row));
    ++votes[c];
    mass[c] += n.similarity;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c)
    if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best])) best = c;
  return static_cast<int>(best);
}

int knn_classify(const FeatureMatrix& train, std::span<const double> q, std::size_t k) {
  require_labels(train);
  return knn_classify(neighbors::CosineIndex(train), q, k);
}

std::vector<int> knn_classify_batch(const FeatureMatrix& train, const FeatureMatrix& queries, std::size_t k,
                                    std::size_t workers) {
  require_labels(train);
  require_dim(train, queries);
  const neighbors::CosineIndex index(train);
  std::vector<int> out(queries.n_samples());
  parallel_for(queries.n_samples(), workers, [&](std::size_t i) { out[i] = knn_classify(index, queries.row(i), k); });
  return out;
}

}  // namespace locallearn::local
