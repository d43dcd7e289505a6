#include <doctest.h>

#include <cmath>

#include "locallearn/local.hpp"
#include "locallearn/random.hpp"
#include "locallearn/synthetic.hpp"
#include "support.hpp"

using namespace locallearn;
using namespace locallearn::local;
using testsupport::error_kind;

namespace {

FeatureMatrix labeled(std::size_t dim, std::vector<double> values, std::vector<int> labels, std::size_t n_classes) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back("p" + std::to_string(i));
  return FeatureMatrix(dim, std::move(ids), std::move(values), std::move(labels), n_classes);
}

}  // namespace

TEST_CASE("k at least n reproduces the global model") {
  const auto train = synthetic::gaussian_blobs(60, 3, 4, 1);
  const auto test = synthetic::gaussian_blobs(20, 3, 4, 2, 1.0, 0.5, "t");
  const LocalLearnerConfig cfg{.k = 60, .svm = {.C = 10.0, .seed = 3}};
  const auto global = svm::train_ova(train, cfg.svm);
  for (std::size_t k : {60u, 500u}) {
    LocalLearnerConfig c = cfg;
    c.k = k;
    const auto res = local_predict_batch(train, test, c);
    REQUIRE(res.predictions.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
      const auto g = svm::predict_ova(global, test.row(i));
      CHECK(res.predictions[i].label == g.label);
      CHECK(res.predictions[i].decisions == g.decisions);
    }
  }
}

TEST_CASE("single-class neighborhoods short-circuit") {
  const auto train = labeled(2, {1, 0, 1, 0.1, 0, 1, 0.1, 1}, {2, 2, 0, 0}, 3);
  const auto p = local_predict_one(train, std::vector<double>{1, 0.05}, {.k = 2});
  CHECK(p.label == 2);
  CHECK(std::isinf(p.decisions[2]));
  CHECK(p.decisions[2] > 0);
  CHECK(p.decisions[0] == -INFINITY);
  CHECK(p.decisions[1] == -INFINITY);

  const auto q = local_predict_one(train, std::vector<double>{1, 1}, {.k = 3});
  CHECK(q.decisions[1] == -INFINITY);  // absent class is never predicted
  CHECK(q.label != 1);
}

TEST_CASE("local learning fixes an overlap point the global model gets wrong") {
  const auto train = synthetic::two_arcs(2000, 11);
  const auto test = synthetic::two_arcs(400, 12, "t");
  const LocalLearnerConfig cfg{.k = 50, .svm = {.C = 100.0}};
  const auto global = svm::train_ova(train, cfg.svm);
  const neighbors::CosineIndex index(train);
  std::size_t fixed = 0;
  for (std::size_t i = 0; i < test.n_samples(); ++i) {
    const int truth = test.label(i);
    if (svm::predict_ova(global, test.row(i)).label != truth &&
        local_predict_one(index, test.row(i), cfg).label == truth)
      ++fixed;
  }
  CHECK(fixed > 0);
}

TEST_CASE("batch semantics") {
  const auto train = synthetic::two_arcs(300, 1);
  const auto test = synthetic::two_arcs(40, 2, "t");
  const LocalLearnerConfig cfg{.k = 30};
  CHECK(local_predict_batch(train, test.select(std::vector<std::size_t>{}), cfg).predictions.empty());
  const auto one = local_predict_batch(train, test.select(std::vector<std::size_t>{5}), cfg);
  const auto direct = local_predict_one(train, test.row(5), cfg);
  CHECK(one.predictions[0].label == direct.label);
  CHECK(one.predictions[0].decisions == direct.decisions);

  const auto serial = local_predict_batch(train, test, cfg, 1);
  const auto parallel = local_predict_batch(train, test, cfg, 4);
  for (std::size_t i = 0; i < test.n_samples(); ++i) {
    CHECK(serial.predictions[i].label == parallel.predictions[i].label);
    CHECK(serial.predictions[i].decisions == parallel.predictions[i].decisions);
  }
  CHECK(serial.timing.wall >= 0.0);
  CHECK(serial.timing.search + serial.timing.train + serial.timing.predict > 0.0);
}

TEST_CASE("predictions depend only on the selected neighbors") {
  const auto train = synthetic::two_arcs(200, 3);
  const std::vector<double> q{0.3, 0.2, 1.0};
  const LocalLearnerConfig cfg{.k = 25};
  const neighbors::CosineIndex index(train);
  const auto nn = index.top_k(q, cfg.k);
  std::vector<bool> selected(train.n_samples(), false);
  for (const auto& n : nn) selected[n.row] = true;

  std::vector<double> values(train.values().begin(), train.values().end());
  for (std::size_t i = 0; i < train.n_samples(); ++i)
    if (!selected[i]) {
      // Pointing every other row away from q keeps them out of the neighborhood.
      values[i * 3 + 0] = -q[0] - 0.01 * double(i);
      values[i * 3 + 1] = -q[1];
      values[i * 3 + 2] = -q[2];
    }
  const FeatureMatrix moved(3, train.sample_ids(), values, {train.labels().begin(), train.labels().end()},
                            train.n_classes());
  const auto a = local_predict_one(train, q, cfg);
  const auto b = local_predict_one(moved, q, cfg);
  CHECK(a.label == b.label);
  CHECK(a.decisions == b.decisions);
}

TEST_CASE("local errors") {
  const auto train = synthetic::two_arcs(20, 1);
  CHECK(error_kind([&] { local_predict_one(train, std::vector<double>{1, 2}, {}); }) == ErrorKind::DimMismatch);
  CHECK(error_kind([&] { local_predict_one(train, std::vector<double>{1, 2, 3}, {.k = 0}); }) ==
        ErrorKind::InvalidArgument);
  CHECK(error_kind([&] { local_predict_one(train.without_labels(), std::vector<double>{1, 2, 3}, {}); }) ==
        ErrorKind::MissingLabels);
}

TEST_CASE("knn voting") {
  // neighbors of (1,0) in order: a, a, b, b, b
  const auto train = labeled(2, {1, 0, 1, 0.1, 1, 0.2, 1, 0.3, 1, 0.4}, {0, 0, 1, 1, 1}, 2);
  const std::vector<double> q{1, 0};
  CHECK(knn_classify(train, q, 1) == 0);
  CHECK(knn_classify(train, q, 3) == 0);
  CHECK(knn_classify(train, q, 5) == 1);
  // 2-2 vote: class 0 holds the closer pair
  CHECK(knn_classify(train, q, 4) == 0);
  // equal votes and equal similarity go to the lower id
  const auto tie = labeled(2, {0, 1, 0, 1}, {1, 0}, 2);
  CHECK(knn_classify(tie, std::vector<double>{0, 1}, 2) == 0);
  CHECK(error_kind([&] { knn_classify(train, q, 0); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([&] { knn_classify(train, std::vector<double>{1}, 1); }) == ErrorKind::DimMismatch);

  const auto big = synthetic::two_arcs(300, 4);
  const auto queries = synthetic::two_arcs(50, 5, "t");
  CHECK(knn_classify_batch(big, queries, 15, 1) == knn_classify_batch(big, queries, 15, 3));
}
