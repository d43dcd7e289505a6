#include <doctest.h>

#include <cmath>
#include <limits>

#include "locallearn/features.hpp"
#include "support.hpp"

using namespace locallearn;
using testsupport::error_kind;

namespace {

double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("l2_normalize") {
  const std::vector<double> v{3.0, 4.0};
  const auto n = features::l2_normalize(v);
  CHECK(n[0] == doctest::Approx(0.6));
  CHECK(n[1] == doctest::Approx(0.8));
  CHECK(features::l2_normalize(std::vector<double>{0, 0, 0}) == std::vector<double>{0, 0, 0});
  const std::vector<double> u{0.0, 1.0, 0.0};
  CHECK(features::l2_normalize(u) == u);
  CHECK(error_kind([] { features::l2_normalize(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}); }) ==
        ErrorKind::NonFiniteValue);
}

TEST_CASE("fuse concatenates normalized blocks in spec order") {
  std::map<std::string, FeatureMatrix> src;
  src.emplace("deep", FeatureMatrix(3, {"a", "b"}, {1, 2, 2, 0, 0, 0}));
  src.emplace("bovw", FeatureMatrix(2, {"b", "a"}, {1, 1, 0, 5}));
  const auto f = features::fuse({{{"deep"}, {"bovw"}}}, src);
  CHECK(f.dim() == 5);
  CHECK(f.sample_ids() == std::vector<std::string>{"a", "b"});
  CHECK(f.row(0)[0] == doctest::Approx(1.0 / 3));
  CHECK(f.row(0)[4] == doctest::Approx(1.0));
  // Zero block stays zero; the other block is unit norm.
  CHECK(norm(f.row(1).subspan(0, 3)) == 0.0);
  CHECK(norm(f.row(1).subspan(3, 2)) == doctest::Approx(1.0));

  const auto g = features::fuse({{{"bovw"}, {"deep"}}}, src);
  CHECK(g.sample_ids() == std::vector<std::string>{"b", "a"});
  CHECK(g.row(1)[1] == doctest::Approx(1.0));
}

TEST_CASE("fuse with one raw source is the identity") {
  std::map<std::string, FeatureMatrix> src;
  src.emplace("only", FeatureMatrix(2, {"x", "y"}, {3, 4, -1, 7}, {0, 1}, 2));
  const auto f = features::fuse({{{"only", false}}}, src);
  CHECK(f == src.at("only"));
}

TEST_CASE("fuse is permutation-equivariant") {
  std::map<std::string, FeatureMatrix> a, b;
  a.emplace("p", FeatureMatrix(1, {"1", "2", "3"}, {1, 2, 3}));
  a.emplace("q", FeatureMatrix(2, {"3", "1", "2"}, {1, 0, 0, 1, 1, 1}));
  b.emplace("p", FeatureMatrix(1, {"3", "1", "2"}, {3, 1, 2}));
  b.emplace("q", a.at("q"));
  const features::FusionSpec spec{{{"p"}, {"q"}}};
  const auto fa = features::fuse(spec, a);
  const auto fb = features::fuse(spec, b);
  REQUIRE(fb.sample_ids() == std::vector<std::string>{"3", "1", "2"});
  const std::vector<std::size_t> perm{2, 0, 1};
  CHECK(fa.select(perm) == fb);
}

TEST_CASE("fuse of five sources adds their dims") {
  std::map<std::string, FeatureMatrix> src;
  const std::vector<std::size_t> dims{7, 4, 3, 2, 5};
  features::FusionSpec spec;
  for (std::size_t s = 0; s < dims.size(); ++s) {
    const std::string name = "s" + std::to_string(s);
    src.emplace(name, FeatureMatrix(dims[s], {"a", "b"}, std::vector<double>(2 * dims[s], 1.0)));
    spec.sources.push_back({name});
  }
  CHECK(features::fuse(spec, src).dim() == 21);
}

TEST_CASE("fuse errors") {
  std::map<std::string, FeatureMatrix> src;
  src.emplace("a", FeatureMatrix(1, {"x", "y"}, {1, 2}));
  src.emplace("b", FeatureMatrix(1, {"x", "z"}, {1, 2}));
  CHECK(error_kind([&] { features::fuse({{{"a"}, {"missing"}}}, src); }) == ErrorKind::UnknownSource);
  CHECK(error_kind([&] { features::fuse({{{"a"}, {"b"}}}, src); }) == ErrorKind::IdMismatch);
  CHECK(error_kind([&] { features::fuse({}, src); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("post normalization renormalizes the whole row") {
  std::map<std::string, FeatureMatrix> src;
  src.emplace("a", FeatureMatrix(1, {"x"}, {2}));
  src.emplace("b", FeatureMatrix(1, {"x"}, {5}));
  const auto f = features::fuse({{{"a"}, {"b"}}, true}, src);
  CHECK(f.row(0)[0] == doctest::Approx(std::sqrt(0.5)));
}
