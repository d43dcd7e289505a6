#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "locallearn/random.hpp"
#include "locallearn/svm.hpp"
#include "support.hpp"

using namespace locallearn;
using testsupport::error_kind;

TEST_CASE("two-point problem matches the QP oracle") {
  const FeatureMatrix X(2, {"n", "p"}, {0, 0, 2, 2});
  const std::vector<int> y{-1, 1};
  svm::SvmConfig cfg;
  cfg.tolerance = 1e-10;

  cfg.C = 1.0;
  auto m = svm::train_binary(X, y, cfg);
  CHECK(m.w[0] == doctest::Approx(4.0 / 9).epsilon(1e-8));
  CHECK(m.w[1] == doctest::Approx(4.0 / 9).epsilon(1e-8));
  CHECK(m.b == doctest::Approx(-7.0 / 9).epsilon(1e-8));

  cfg.C = 100.0;
  m = svm::train_binary(X, y, cfg);
  CHECK(m.w[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(m.b == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(svm::decision(m, X.row(0)) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(svm::decision(m, X.row(1)) == doctest::Approx(1.0).epsilon(1e-8));
  // Hard margin: 2 / ||w|| equals the distance between the two points.
  CHECK(2.0 / std::hypot(m.w[0], m.w[1]) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-7));
}

TEST_CASE("dual objective matches the frozen QP oracle") {
  const auto problems = testsupport::load_qp_problems();
  REQUIRE(problems.size() == 50);
  for (const auto& p : problems) {
    svm::SvmConfig cfg;
    cfg.C = p.C;
    const auto sol = svm::solve_binary(p.X, p.y, cfg);
    CHECK(sol.converged);
    CHECK(std::abs(sol.dual_objective - p.objective) <= 1e-6 * std::abs(p.objective));
  }
}

TEST_CASE("dual solution is feasible and reconstructs the primal") {
  Rng rng(3);
  std::vector<double> v(30 * 3);
  for (double& x : v) x = rng.normal();
  std::vector<std::string> ids;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    ids.push_back(std::to_string(i));
    y.push_back(v[static_cast<std::size_t>(i) * 3] + 0.3 * v[static_cast<std::size_t>(i) * 3 + 1] > 0 ? 1 : -1);
  }
  const FeatureMatrix X(3, ids, v);
  svm::SvmConfig cfg;
  cfg.C = 10;
  const auto sol = svm::solve_binary(X, y, cfg);
  std::vector<double> w(3, 0.0);
  double b = 0.0;
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(sol.alpha[i] >= 0.0);
    CHECK(sol.alpha[i] <= cfg.C);
    for (std::size_t d = 0; d < 3; ++d) w[d] += sol.alpha[i] * y[i] * X.row(i)[d];
    b += sol.alpha[i] * y[i];
  }
  for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(w[d] - sol.model.w[d]) < 1e-8);
  CHECK(std::abs(b - sol.model.b) < 1e-8);
}

TEST_CASE("solver is deterministic per seed") {
  const auto problems = testsupport::load_qp_problems();
  svm::SvmConfig cfg;
  cfg.C = problems[3].C;
  cfg.seed = 11;
  CHECK(svm::train_binary(problems[3].X, problems[3].y, cfg) == svm::train_binary(problems[3].X, problems[3].y, cfg));
}

TEST_CASE("binary solver input errors") {
  const FeatureMatrix X(1, {"a", "b"}, {1, 2});
  CHECK(error_kind([&] { svm::train_binary(X, std::vector<int>{1, 1}, {}); }) == ErrorKind::SingleClass);
  CHECK(error_kind([&] { svm::train_binary(X, std::vector<int>{1, 0}, {}); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([&] { svm::train_binary(X, std::vector<int>{1}, {}); }) == ErrorKind::DimMismatch);
  svm::SvmConfig bad;
  bad.C = 0;
  CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("decision") {
  const svm::SvmModel m{{1.0, 0.0}, 0.0};
  CHECK(svm::decision(m, std::vector<double>{3, 7}) == 3.0);
  CHECK(svm::decision(m, std::vector<double>{0, 5}) == 0.0);
  CHECK(error_kind([&] { svm::decision(m, std::vector<double>{1}); }) == ErrorKind::DimMismatch);
}

TEST_CASE("argmax over decisions") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(svm::argmax_decision(std::vector<double>{0.2, 0.9}) == 1);
  CHECK(svm::argmax_decision(std::vector<double>{0.5, ninf, 0.5}) == 0);
  CHECK(error_kind([&] { svm::argmax_decision(std::vector<double>{ninf, ninf}); }) == ErrorKind::NoTrainedClasses);
}

TEST_CASE("one-versus-all on a separable 4-class toy set") {
  const FeatureMatrix X(2, {"a0", "a1", "a2", "b0", "b1", "b2", "c0", "c1", "c2", "d0", "d1", "d2"},
                        {5, 5, 6, 5, 5, 6, -5, 5, -6, 5, -5, 6, -5, -5, -6, -5, -5, -6, 5, -5, 6, -5, 5, -6},
                        {0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3}, 4);
  const auto m = svm::train_ova(X, {.C = 100.0});
  CHECK(m.trained_classes() == std::vector<int>{0, 1, 2, 3});
  for (std::size_t i = 0; i < X.n_samples(); ++i) CHECK(svm::predict_ova(m, X.row(i)).label == X.label(i));
}

TEST_CASE("one-versus-all degenerate cases") {
  const FeatureMatrix one(1, {"a", "b"}, {1, -1}, {2, 2}, 3);
  const auto m = svm::train_ova(one, {});
  CHECK(m.sole_class() == 2);
  CHECK(m.trained_classes() == std::vector<int>{2});
  const auto p = svm::predict_ova(m, std::vector<double>{100.0});
  CHECK(p.label == 2);
  CHECK(p.decisions[2] == std::numeric_limits<double>::infinity());
  CHECK(p.decisions[0] == -std::numeric_limits<double>::infinity());

  const FeatureMatrix two(1, {"a", "b"}, {1, -1}, {0, 2}, 3);
  const auto m2 = svm::train_ova(two, {});
  CHECK_FALSE(m2.is_trained(1));
  CHECK(svm::predict_ova(m2, std::vector<double>{5.0}).decisions[1] == -std::numeric_limits<double>::infinity());
  CHECK(error_kind([&] { svm::OvaModel(2, 1).decisions(std::vector<double>{1.0}); }) == std::nullopt);
  CHECK(error_kind([&] { svm::predict_ova(svm::OvaModel(2, 1), std::vector<double>{1.0}); }) ==
        ErrorKind::NoTrainedClasses);
  CHECK(error_kind([&] { svm::predict_ova(m2, std::vector<double>{1.0, 2.0}); }) == ErrorKind::DimMismatch);
}

TEST_CASE("OvA training does not depend on worker count") {
  Rng rng(5);
  std::vector<double> v(60 * 4);
  for (double& x : v) x = rng.normal();
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    ids.push_back(std::to_string(i));
    labels.push_back(i % 3);
  }
  const FeatureMatrix X(4, ids, v, labels, 3);
  CHECK(svm::train_ova(X, {.C = 2.0, .seed = 9}, 1) == svm::train_ova(X, {.C = 2.0, .seed = 9}, 3));
}

TEST_CASE("OvA model text round trip") {
  const FeatureMatrix X(2, {"a", "b", "c"}, {0.1, 1, 2, -3, 1e-7, 5}, {0, 2, 0}, 4);
  const auto m = svm::train_ova(X, {.C = 1.0});
  std::stringstream ss;
  svm::write_ova(ss, m);
  CHECK(ss.str().rfind("#locallearn-ova v1 dim=2 classes=4\n", 0) == 0);
  CHECK(svm::read_ova(ss) == m);

  const auto sole = svm::train_ova(FeatureMatrix(1, {"a"}, {1}, {1}, 2), {});
  std::stringstream s2;
  svm::write_ova(s2, sole);
  CHECK(s2.str() == "#locallearn-ova v1 dim=1 classes=2\n1 +inf\n");
  CHECK(svm::read_ova(s2) == sole);

  std::istringstream bad("#locallearn-ova v1 dim=2 classes=2\n0 1.0 2.0\n");
  CHECK(error_kind([&] { svm::read_ova(bad); }) == ErrorKind::DimMismatch);
  std::istringstream junk("#locallearn-ova v1 dim=1 classes=2\n0 x y\n");
  CHECK(error_kind([&] { svm::read_ova(junk); }) == ErrorKind::MalformedFile);
  std::istringstream none("hello\n");
  CHECK(error_kind([&] { svm::read_ova(none); }) == ErrorKind::MalformedFile);
}
