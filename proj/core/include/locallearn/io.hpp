#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "locallearn/feature_matrix.hpp"

namespace locallearn {

// Feature files come in two encodings.
//
// Text (authoritative, used for interchange):
//   #locallearn-features v1 dim=<D>
//   <sample_id>,<v1>,...,<vD>
// Reals are written in shortest round-trip form, so save -> load is exact.
//
// Binary:
//   "LLFB" | u32 version=1 | u32 dim | u64 n_samples |
//   n_samples x ( u16 id_length | id bytes | dim x f64 )
// All integers and reals little-endian.

enum class FeatureFormat { Text, Binary };

/// Loads either encoding (sniffed from the first bytes). Errors:
/// MalformedFile, DimMismatch (vs. header or expected_dim), NonFiniteValue
/// (1-based data row and value column), IoError.
FeatureMatrix load_features(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_dim = std::nullopt);
FeatureMatrix read_features_text(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt);
FeatureMatrix read_features_binary(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt);

void save_features(const std::filesystem::path& path, const FeatureMatrix& m,
                   FeatureFormat format = FeatureFormat::Text);
void write_features_text(std::ostream& out, const FeatureMatrix& m);
void write_features_binary(std::ostream& out, const FeatureMatrix& m);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);

using LabelList = std::vector<std::pair<std::string, std::string>>;

/// `sample_id,<class_name>` per line. Also the predictions file format.
LabelList load_label_file(const std::filesystem::path& path);
void save_label_file(const std::filesystem::path& path, const LabelList& labels);

/// One class name per line; line order defines the ids.
LabelMap load_label_map(const std::filesystem::path& path);
void save_label_map(const std::filesystem::path& path, const LabelMap& map);

enum class Split { Train, Validation, Test };
std::string_view split_name(Split s) noexcept;

/// `sample_id,train|validation|test` per line. Each id must appear once.
std::vector<std::pair<std::string, Split>> load_split_file(const std::filesystem::path& path);
void save_split_file(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Split>>& splits);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace locallearn
