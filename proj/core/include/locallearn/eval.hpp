#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "locallearn/feature_matrix.hpp"
#include "locallearn/io.hpp"

namespace locallearn {

struct EvalReport {
  std::string method;
  std::vector<std::string> class_names;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t total = 0;
  std::size_t correct = 0;

  double accuracy() const;
  std::size_t support(std::size_t c) const;    // row sum
  std::size_t predicted(std::size_t c) const;  // column sum
  /// 0 when the class was never predicted.
  double precision(std::size_t c) const;
  /// 0 when the class never occurs.
  double recall(std::size_t c) const;

  bool operator==(const EvalReport&) const = default;
};

/// Compare predicted and true class names per sample id. Throws IdMismatch
/// when the id sets differ (or a list repeats an id) and UnknownClassName for
/// names outside `classes`.
EvalReport evaluate(const LabelList& predictions, const LabelList& truth, const LabelMap& classes,
                    std::string method = {});

/// Human-readable summary: accuracy, per-class precision/recall, confusion.
void write_report_text(std::ostream& out, const EvalReport& r);
/// class,support,precision,recall,pred_<name>... then a final accuracy row.
void write_report_csv(std::ostream& out, const EvalReport& r);

/// One line per report: method, test samples, accuracy.
void write_comparison_text(std::ostream& out, const std::vector<EvalReport>& reports);
void write_comparison_csv(std::ostream& out, const std::vector<EvalReport>& reports);

/// Named wall-clock durations in seconds, kept apart from reports so that
/// those stay byte-identical across runs.
using StageTimings = std::vector<std::pair<std::string, double>>;
void write_timings(std::ostream& out, const StageTimings& timings);

}  // namespace locallearn
