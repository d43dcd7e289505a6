#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "locallearn/feature_matrix.hpp"
#include "locallearn/neighbors.hpp"
#include "locallearn/svm.hpp"

namespace locallearn::local {

struct LocalLearnerConfig {
  std::size_t k = 200;
  svm::SvmConfig svm{.C = 100.0};

  void validate() const;
};

/// Seconds spent per stage, summed over queries, plus batch wall clock.
struct LocalTiming {
  double search = 0.0;
  double train = 0.0;
  double predict = 0.0;
  double wall = 0.0;
};

struct LocalBatchResult {
  std::vector<svm::Prediction> predictions;
  LocalTiming timing;
};

/// Train an OvA SVM on the k cosine-nearest labeled training rows of q and
/// predict q. Neighbor rows are trained in ascending row order, so k >= n
/// reproduces the global model exactly. Classes outside the neighborhood
/// score -inf. Throws DimMismatch, MissingLabels.
svm::Prediction local_predict_one(const neighbors::CosineIndex& train, std::span<const double> q,
                                  const LocalLearnerConfig& cfg);
svm::Prediction local_predict_one(const FeatureMatrix& train, std::span<const double> q,
                                  const LocalLearnerConfig& cfg);

/// local_predict_one over every row of `queries`, in row order.
LocalBatchResult local_predict_batch(const FeatureMatrix& train, const FeatureMatrix& queries,
                                     const LocalLearnerConfig& cfg, std::size_t workers = 1);

/// Majority vote of the k cosine-nearest labels; ties go to the larger summed
/// similarity, then the lower class id.
int knn_classify(const neighbors::CosineIndex& train, std::span<const double> q, std::size_t k);
int knn_classify(const FeatureMatrix& train, std::span<const double> q, std::size_t k);
std::vector<int> knn_classify_batch(const FeatureMatrix& train, const FeatureMatrix& queries, std::size_t k,
                                    std::size_t workers = 1);

}  // namespace locallearn::local
