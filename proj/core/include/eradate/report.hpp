#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eradate {

struct AccuracyCell {
  std::string row;
  std::string task;
  int correct = 0;
  int total = 0;
  double C = 0.0;

  // correct / total, 0 for an empty test set.
  double accuracy() const;
};

struct SplitSummary {
  int train = 0;
  int test = 0;
  int val = 0;
  // Per class: train, test, val counts.
  std::vector<std::array<int, 3>> per_class;
};

// Feature x task grid: rows are single features and combinations, tasks are
// the era pairs followed by the six-class task.
struct AccuracyReport {
  std::uint64_t seed = 0;
  std::vector<std::string> rows;
  std::vector<std::string> tasks;
  std::vector<AccuracyCell> cells;  // row-major
  SplitSummary splits;

  const AccuracyCell& cell(const std::string& row, const std::string& task) const;
};

// "method,<task>..." with accuracies in percent, two decimals.
std::string accuracy_csv(const AccuracyReport& report);
// Every cell with its integer numerator and denominator.
std::string accuracy_json(const AccuracyReport& report);
void write_accuracy_report(const AccuracyReport& report, const std::filesystem::path& dir);

struct CurvePoint {
  double fraction = 0.0;
  int train_size = 0;
  int test_size = 0;
  std::vector<int> correct;  // one per repetition
  double mean = 0.0;         // mean accuracy
  double stddev = 0.0;       // population standard deviation
};

struct LearningCurveReport {
  std::uint64_t seed = 0;
  int repetitions = 0;
  std::vector<std::string> rows;
  std::vector<double> fractions;
  std::vector<double> c_values;              // per row
  std::vector<std::vector<CurvePoint>> points;  // [row][fraction]
};

// Fills mean and stddev of a point from its per-repetition counts.
void summarize(CurvePoint& point);

std::string learning_curve_csv(const LearningCurveReport& report);
std::string learning_curve_json(const LearningCurveReport& report);
// "# fraction <row>_mean <row>_std ..." then one line per fraction.
std::string learning_curve_gnuplot(const LearningCurveReport& report);
void write_learning_curve(const LearningCurveReport& report, const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace eradate
