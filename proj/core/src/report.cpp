#include "eradate/report.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <span>

#include "eradate/corpus.hpp"
#include "eradate/error.hpp"
#include "eradate/image.hpp"

namespace eradate {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double AccuracyCell::accuracy() const {
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

const AccuracyCell& AccuracyReport::cell(const std::string& row, const std::string& task) const {
  for (const auto& c : cells) {
    if (c.row == row && c.task == task) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "no report cell " + row + " / " + task);
}

std::string accuracy_csv(const AccuracyReport& report) {
  std::string out = "method";
  for (const auto& t : report.tasks) out += "," + t;
  out += '\n';
  for (const auto& r : report.rows) {
    out += r;
    for (const auto& t : report.tasks) out += "," + fixed(100.0 * report.cell(r, t).accuracy(), 2);
    out += '\n';
  }
  return out;
}

std::string accuracy_json(const AccuracyReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["rows"] = report.rows;
  j["tasks"] = report.tasks;
  nlohmann::ordered_json splits;
  splits["train"] = report.splits.train;
  splits["test"] = report.splits.test;
  splits["val"] = report.splits.val;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < report.splits.per_class.size(); ++c) {
    const auto& n = report.splits.per_class[c];
    per_class[std::string(era_name(static_cast<int>(c)))] = {{"train", n[0]}, {"test", n[1]}, {"val", n[2]}};
  }
  splits["per_class"] = per_class;
  j["splits"] = splits;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"row", c.row},
                     {"task", c.task},
                     {"correct", c.correct},
                     {"total", c.total},
                     {"accuracy", c.accuracy()},
                     {"C", c.C}});
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

void write_accuracy_report(const AccuracyReport& report, const std::filesystem::path& dir) {
  write_text_file(dir / "report.csv", accuracy_csv(report));
  write_text_file(dir / "report.json", accuracy_json(report));
}

void summarize(CurvePoint& p) {
  const auto n = static_cast<double>(p.correct.size());
  if (p.correct.empty() || p.test_size == 0) {
    p.mean = 0.0;
    p.stddev = 0.0;
    return;
  }
  double sum = 0.0;
  for (int c : p.correct) sum += static_cast<double>(c) / p.test_size;
  p.mean = sum / n;
  double ss = 0.0;
  for (int c : p.correct) {
    const double d = static_cast<double>(c) / p.test_size - p.mean;
    ss += d * d;
  }
  p.stddev = std::sqrt(ss / n);
}

std::string learning_curve_csv(const LearningCurveReport& report) {
  std::string out = "method,fraction,train,test,mean,std\n";
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    for (const auto& p : report.points[r]) {
      out += report.rows[r] + "," + fixed(p.fraction, 2) + "," + std::to_string(p.train_size) +
             "," + std::to_string(p.test_size) + "," + fixed(100.0 * p.mean, 2) + "," +
             fixed(100.0 * p.stddev, 2) + "\n";
    }
  }
  return out;
}

std::string learning_curve_json(const LearningCurveReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["repetitions"] = report.repetitions;
  j["fractions"] = report.fractions;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    nlohmann::ordered_json row;
    row["method"] = report.rows[r];
    if (r < report.c_values.size()) row["C"] = report.c_values[r];
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : report.points[r]) {
      pts.push_back({{"fraction", p.fraction},
                     {"train", p.train_size},
                     {"test", p.test_size},
                     {"correct", p.correct},
                     {"mean", p.mean},
                     {"std", p.stddev}});
    }
    row["points"] = pts;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::string learning_curve_gnuplot(const LearningCurveReport& report) {
  std::string out = "# fraction";
  for (const auto& r : report.rows) out += " " + r + "_mean " + r + "_std";
  out += '\n';
  for (std::size_t f = 0; f < report.fractions.size(); ++f) {
    out += fixed(report.fractions[f], 2);
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      const auto& p = report.points[r][f];
      out += " " + fixed(100.0 * p.mean, 4) + " " + fixed(100.0 * p.stddev, 4);
    }
    out += '\n';
  }
  return out;
}

void write_learning_curve(const LearningCurveReport& report, const std::filesystem::path& dir) {
  write_text_file(dir / "learning_curve.csv", learning_curve_csv(report));
  write_text_file(dir / "learning_curve.json", learning_curve_json(report));
  write_text_file(dir / "learning_curve.dat", learning_curve_gnuplot(report));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + path.parent_path().string());
  }
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace eradate
