#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "locallearn/errors.hpp"
#include "locallearn/feature_matrix.hpp"
#include "locallearn/io.hpp"
#include "locallearn/kv_config.hpp"
#include "locallearn/manifest.hpp"
#include "support.hpp"

using namespace locallearn;
using testsupport::error_kind;

namespace {

FeatureMatrix small_matrix() {
  return FeatureMatrix(2, {"a", "b", "c"}, {1.0, 2.0, -0.5, 0.25, 1e-300, 3.0e300});
}

}  // namespace

TEST_CASE("FeatureMatrix validates shape, finiteness, ids and labels") {
  CHECK(error_kind([] { FeatureMatrix(2, {"a"}, {1.0}); }) == ErrorKind::DimMismatch);
  CHECK(error_kind([] { FeatureMatrix(1, {"a", "a"}, {1.0, 2.0}); }) == ErrorKind::InvalidArgument);
  CHECK(error_kind([] { FeatureMatrix(1, {"a"}, {1.0}, {2}, 2); }) == ErrorKind::InvalidArgument);
  try {
    FeatureMatrix(2, {"a", "b"}, {1.0, 2.0, 3.0, std::numeric_limits<double>::quiet_NaN()});
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteValue);
    CHECK(e.row == 2u);
    CHECK(e.column == 2u);
  }
}

TEST_CASE("select keeps labels and order") {
  const auto m = small_matrix().with_labels({0, 1, 0}, 2);
  const std::vector<std::size_t> rows{2, 0};
  const auto s = m.select(rows);
  CHECK(s.sample_ids() == std::vector<std::string>{"c", "a"});
  CHECK(s.label(0) == 0);
  CHECK(s.row(0)[1] == 3.0e300);
}

TEST_CASE("text features round-trip exactly") {
  const auto m = small_matrix();
  std::stringstream ss;
  write_features_text(ss, m);
  CHECK(ss.str().rfind("#locallearn-features v1 dim=2\n", 0) == 0);
  CHECK(read_features_text(ss) == m);
}

TEST_CASE("binary features round-trip exactly") {
  const auto m = small_matrix();
  std::stringstream ss;
  write_features_binary(ss, m);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "LLFB");
  CHECK(bytes.size() == 4 + 4 + 4 + 8 + 3 * (2 + 1 + 2 * 8));
  CHECK(read_features_binary(ss) == m);
}

TEST_CASE("load_features sniffs the encoding and checks expected dim") {
  testsupport::TempDir dir("core");
  save_features(dir / "t.txt", small_matrix(), FeatureFormat::Text);
  save_features(dir / "b.bin", small_matrix(), FeatureFormat::Binary);
  CHECK(load_features(dir / "t.txt") == load_features(dir / "b.bin"));
  CHECK(error_kind([&] { load_features(dir / "t.txt", 3); }) == ErrorKind::DimMismatch);
  CHECK(error_kind([&] { load_features(dir / "missing.txt"); }) == ErrorKind::IoError);
}

TEST_CASE("malformed text feature files") {
  auto kind = [](const std::string& text) {
    return error_kind([&] {
      std::istringstream in(text);
      read_features_text(in);
    });
  };
  CHECK(kind("") == ErrorKind::MalformedFile);
  CHECK(kind("#features dim=2\na,1,2\n") == ErrorKind::MalformedFile);
  CHECK(kind("#locallearn-features v1 dim=2\na,1\n") == ErrorKind::DimMismatch);
  CHECK(kind("#locallearn-features v1 dim=1\na,1\na,2\n") == ErrorKind::MalformedFile);
  CHECK(kind("#locallearn-features v1 dim=1\na,xyz\n") == ErrorKind::MalformedFile);

  std::istringstream in("#locallearn-features v1 dim=3\na,1,2,3\nb,4,inf,6\n");
  try {
    read_features_text(in);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteValue);
    CHECK(e.row == 2u);
    CHECK(e.column == 2u);
  }
}

TEST_CASE("truncated and padded binary feature files") {
  std::stringstream ss;
  write_features_binary(ss, small_matrix());
  const std::string bytes = ss.str();
  std::istringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK(error_kind([&] { read_features_binary(cut); }) == ErrorKind::MalformedFile);
  std::istringstream padded(bytes + "x");
  CHECK(error_kind([&] { read_features_binary(padded); }) == ErrorKind::MalformedFile);
}

TEST_CASE("label, label map and split files") {
  testsupport::TempDir dir("labels");
  const LabelList labels{{"a", "happy"}, {"b", "sad"}, {"c", "happy"}};
  save_label_file(dir / "l.csv", labels);
  CHECK(load_label_file(dir / "l.csv") == labels);

  const LabelMap map({"sad", "happy"});
  save_label_map(dir / "m.txt", map);
  CHECK(load_label_map(dir / "m.txt") == map);
  CHECK(map.id_of("happy") == 1);
  CHECK(error_kind([&] { map.id_of("angry"); }) == ErrorKind::UnknownClassName);

  CHECK(infer_label_map(labels).names() == std::vector<std::string>{"happy", "sad"});

  const auto m = attach_labels(small_matrix(), labels, map);
  CHECK(std::vector<int>(m.labels().begin(), m.labels().end()) == std::vector<int>{1, 0, 1});
  CHECK(error_kind([&] { attach_labels(small_matrix(), {{"a", "happy"}}, map); }) == ErrorKind::MissingLabels);
  CHECK(error_kind([&] { attach_labels(small_matrix(), {{"a", "x"}, {"b", "x"}, {"c", "x"}}, map); }) ==
        ErrorKind::UnknownClassName);

  testsupport::write_file(dir / "s.csv", "a,train\nb,val\nc,test\n");
  const auto splits = load_split_file(dir / "s.csv");
  REQUIRE(splits.size() == 3);
  CHECK(splits[1].second == Split::Validation);
  testsupport::write_file(dir / "bad.csv", "a,holdout\n");
  CHECK(error_kind([&] { load_split_file(dir / "bad.csv"); }) == ErrorKind::MalformedFile);
}

TEST_CASE("align_by_id reports the symmetric difference") {
  const FeatureMatrix a(1, {"x", "y", "z"}, {1, 2, 3});
  const FeatureMatrix b(1, {"z", "x", "y"}, {30, 10, 20});
  const auto [a2, b2] = align_by_id(a, b);
  CHECK(a2.sample_ids() == b2.sample_ids());
  CHECK(b2.row(0)[0] == 10);

  const FeatureMatrix c(1, {"x", "w"}, {1, 2});
  try {
    align_by_id(a, c);
    FAIL("expected IdMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IdMismatch);
    CHECK(e.ids == std::vector<std::string>{"w", "y", "z"});
  }
}

TEST_CASE("balanced_downsample on the AffectNet training class counts") {
  // neutral, happy, sad, surprise, fear, disgust, anger, contempt
  const std::vector<std::size_t> counts{74874, 134415, 25459, 14090, 6378, 3803, 24882, 3750};
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t i = 0; i < counts[c]; ++i) {
      ids.push_back(std::to_string(c) + "_" + std::to_string(i));
      values.push_back(static_cast<double>(ids.size()));
      labels.push_back(static_cast<int>(c));
    }
  const FeatureMatrix m(1, std::move(ids), std::move(values), std::move(labels), counts.size());
  REQUIRE(m.n_samples() == 287651);

  const auto capped = balanced_downsample(m, 15000, 42);
  CHECK(capped.n_samples() == 88021);
  std::vector<std::size_t> kept(counts.size(), 0);
  for (int l : capped.labels()) ++kept[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < counts.size(); ++c) CHECK(kept[c] == std::min<std::size_t>(counts[c], 15000));
  // Original relative order is preserved.
  for (std::size_t i = 1; i < capped.n_samples(); ++i) CHECK(capped.row(i - 1)[0] < capped.row(i)[0]);

  CHECK(balanced_downsample(m, 15000, 42) == capped);
  CHECK(balanced_downsample(m, kNoCap, 1) == m);
  CHECK(error_kind([&] { balanced_downsample(m.without_labels(), 10, 0); }) == ErrorKind::MissingLabels);
}

TEST_CASE("KvConfig parsing") {
  const auto kv = KvConfig::parse("# header\nalpha = 3\nlist = 1, 2,3  # trailing\nflag = true\nname.x = v\n");
  CHECK(kv.get_count("alpha", 0) == 3);
  CHECK(kv.get_counts("list", {}) == std::vector<std::size_t>{1, 2, 3});
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_real("missing", 2.5) == 2.5);
  CHECK(kv.suffixes("name.") == std::vector<std::string>{"x"});
  CHECK(error_kind([] { KvConfig::parse("a = 1\na = 2\n"); }) == ErrorKind::MalformedFile);
  CHECK(error_kind([] { KvConfig::parse("no equals sign\n"); }) == ErrorKind::MalformedFile);
  CHECK(error_kind([&] { kv.reject_unknown({"alpha", "list", "flag"}); }) == ErrorKind::MalformedFile);
  kv.reject_unknown({"alpha", "list", "flag", "name."});
}

TEST_CASE("manifest ingest cross-checks sources and splits") {
  testsupport::TempDir dir("manifest");
  save_features(dir / "deep.txt", FeatureMatrix(2, {"a", "b", "c"}, {1, 0, 0, 1, 1, 1}));
  save_features(dir / "bovw.bin", FeatureMatrix(1, {"c", "a", "b"}, {3, 1, 2}), FeatureFormat::Binary);
  save_label_file(dir / "labels.csv", {{"a", "x"}, {"b", "y"}, {"c", "x"}});
  testsupport::write_file(dir / "splits.csv", "a,train\nb,train\nc,test\n");
  testsupport::write_file(dir / "m.cfg",
                          "source.deep = deep.txt\nsource.bovw = bovw.bin\ndim.bovw = 1\n"
                          "fusion.order = deep,bovw\nlabels = labels.csv\nsplits = splits.csv\nseed = 5\nlocal.k = 7\n");
  const auto man = load_manifest(dir / "m.cfg");
  REQUIRE(man.sources.size() == 2);
  CHECK(man.sources[0].name == "deep");
  CHECK(man.local_k == 7);
  CHECK(man.seed == 5);
  const auto data = ingest(man);
  CHECK(data.sources.size() == 2);
  CHECK(data.label_map.names() == std::vector<std::string>{"x", "y"});
  CHECK(data.splits.at("c") == Split::Test);

  testsupport::write_file(dir / "splits.csv", "a,train\nb,train\n");
  CHECK(error_kind([&] { ingest(man); }) == ErrorKind::IdMismatch);

  testsupport::write_file(dir / "bad.cfg", "source.deep = deep.txt\nlabels = l\nsplits = s\nbogus = 1\n");
  CHECK(error_kind([&] { load_manifest(dir / "bad.cfg"); }) == ErrorKind::MalformedFile);
}

TEST_CASE("error names and exit classes") {
  CHECK(error_name(ErrorKind::IdMismatch) == "IdMismatch");
  CHECK(is_compute_error(ErrorKind::NonFiniteGradient));
  CHECK(is_compute_error(ErrorKind::SingleClass));
  CHECK_FALSE(is_compute_error(ErrorKind::MalformedFile));
  const Error e(ErrorKind::DimMismatch, "boom");
  CHECK(std::string(e.what()) == "DimMismatch: boom");
  const auto wrapped = with_context(e, "fuse");
  CHECK(std::string(wrapped.what()) == "DimMismatch: fuse: boom");
}
