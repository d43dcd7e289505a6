#include "locallearn/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "locallearn/errors.hpp"

namespace locallearn {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::map<std::string, std::string> index_labels(const LabelList& list, const char* what) {
  std::map<std::string, std::string> out;
  std::vector<std::string> dups;
  for (const auto& [id, name] : list)
    if (!out.emplace(id, name).second) dups.push_back(id);
  if (!dups.empty()) {
    Error e(ErrorKind::IdMismatch, std::string(what) + " repeat sample id '" + dups.front() + "'");
    e.ids = dups;
    throw e;
  }
  return out;
}

}  // namespace

double EvalReport::accuracy() const {
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

std::size_t EvalReport::support(std::size_t c) const {
  std::size_t s = 0;
  for (auto v : confusion.at(c)) s += v;
  return s;
}

std::size_t EvalReport::predicted(std::size_t c) const {
  std::size_t s = 0;
  for (const auto& row : confusion) s += row.at(c);
  return s;
}

double EvalReport::precision(std::size_t c) const {
  const auto p = predicted(c);
  return p == 0 ? 0.0 : static_cast<double>(confusion[c][c]) / static_cast<double>(p);
}

double EvalReport::recall(std::size_t c) const {
  const auto s = support(c);
  return s == 0 ? 0.0 : static_cast<double>(confusion[c][c]) / static_cast<double>(s);
}

EvalReport evaluate(const LabelList& predictions, const LabelList& truth, const LabelMap& classes,
                    std::string method) {
  const auto pred = index_labels(predictions, "predictions");
  const auto gold = index_labels(truth, "ground truth labels");

  std::vector<std::string> missing;
  for (const auto& [id, _] : pred)
    if (!gold.contains(id)) missing.push_back(id);
  for (const auto& [id, _] : gold)
    if (!pred.contains(id)) missing.push_back(id);
  if (!missing.empty() || pred.empty()) {
    std::sort(missing.begin(), missing.end());
    Error e(ErrorKind::IdMismatch, pred.empty() ? "no samples to evaluate"
                                                : std::to_string(missing.size()) +
                                                      " sample ids differ between predictions and truth, first '" +
                                                      missing.front() + "'");
    e.ids = std::move(missing);
    throw e;
  }

  EvalReport r;
  r.method = std::move(method);
  r.class_names = classes.names();
  const std::size_t k = classes.n_classes();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (const auto& [id, true_name] : gold) {
    const auto t = static_cast<std::size_t>(classes.id_of(true_name));
    const auto p = static_cast<std::size_t>(classes.id_of(pred.at(id)));
    ++r.confusion[t][p];
    ++r.total;
    if (t == p) ++r.correct;
  }
  return r;
}

void write_report_text(std::ostream& out, const EvalReport& r) {
  if (!r.method.empty()) out << "method: " << r.method << '\n';
  out << "samples: " << r.total << '\n';
  out << "accuracy: " << fixed(r.accuracy()) << " (" << r.correct << '/' << r.total << ")\n\n";
  std::size_t width = 5;
  for (const auto& n : r.class_names) width = std::max(width, n.size());
  auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  out << pad("class", width) << "  support  precision  recall\n";
  for (std::size_t c = 0; c < r.class_names.size(); ++c)
    out << pad(r.class_names[c], width) << "  " << pad(std::to_string(r.support(c)), 7) << "  "
        << pad(fixed(r.precision(c)), 9) << "  " << fixed(r.recall(c)) << '\n';
  out << "\nconfusion (rows: true, columns: predicted)\n" << pad("", width);
  std::size_t cell = 6;
  for (const auto& n : r.class_names) cell = std::max(cell, n.size());
  for (const auto& n : r.class_names) out << "  " << pad(n, cell);
  out << '\n';
  for (std::size_t t = 0; t < r.class_names.size(); ++t) {
    out << pad(r.class_names[t], width);
    for (auto v : r.confusion[t]) out << "  " << pad(std::to_string(v), cell);
    out << '\n';
  }
}

void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << "class,support,precision,recall";
  for (const auto& n : r.class_names) out << ",pred_" << n;
  out << '\n';
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    out << r.class_names[c] << ',' << r.support(c) << ',' << fixed(r.precision(c), 6) << ','
        << fixed(r.recall(c), 6);
    for (auto v : r.confusion[c]) out << ',' << v;
    out << '\n';
  }
  out << "accuracy," << r.total << ',' << fixed(r.accuracy(), 6) << ',' << fixed(r.accuracy(), 6) << '\n';
}

void write_comparison_text(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "method   samples  accuracy\n";
  for (const auto& r : reports) {
    std::string m = r.method;
    m.resize(std::max<std::size_t>(m.size(), 7), ' ');
    std::string n = std::to_string(r.total);
    n.resize(std::max<std::size_t>(n.size(), 7), ' ');
    out << m << "  " << n << "  " << fixed(r.accuracy()) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "method,samples,correct,accuracy\n";
  for (const auto& r : reports)
    out << r.method << ',' << r.total << ',' << r.correct << ',' << fixed(r.accuracy(), 6) << '\n';
}

void write_timings(std::ostream& out, const StageTimings& timings) {
  out << "stage,seconds\n";
  for (const auto& [stage, s] : timings) out << stage << ',' << fixed(s, 6) << '\n';
}

}  // namespace locallearn
