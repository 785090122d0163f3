#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eradate/corpus.hpp"
#include "eradate/dating.hpp"
#include "eradate/pipeline.hpp"
#include "eradate/report.hpp"

namespace eradate {

struct FixedSplit {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
  std::vector<ManifestEntry> val;
  std::vector<std::string> warnings;

  SplitSummary summary() const;
};

// Partitions labeled rows by split tag; predict rows are skipped. Throws
// MissingSplit without training rows and DuplicateId when an id repeats.
// Missing test or validation rows only produce a warning.
FixedSplit split_fixed(const Manifest& manifest);

// The five neighboring-era pairs in chronological order.
const std::array<std::pair<int, int>, 5>& canonical_pairs();

// Rows labeled a or b, split tags kept. Throws EmptyPair for a == b or when
// no row carries either label.
Manifest pair_dataset(const Manifest& manifest, int a, int b);

struct Task {
  std::string name;  // "six" or "<EraA>-<EraB>"
  std::optional<std::pair<int, int>> pair;
};

inline constexpr const char* kSixClassTask = "six";
std::string pair_task_name(int a, int b);
// Canonical pairs followed by the six-class task.
std::vector<Task> standard_tasks();

// A report row: one feature or a kernel-averaged combination.
struct FeatureRow {
  std::string name;
  std::vector<FeatureKind> features;
};

// Every configured feature alone, then IFV+RCC and IFV+RCC+DunNet when their
// members are configured, then all configured features if that set is new.
std::vector<FeatureRow> report_rows(const std::vector<FeatureKind>& features);

struct ExperimentSpec {
  std::filesystem::path manifest;
  PipelineConfig config;
  std::uint64_t seed = 0;
  std::filesystem::path out;  // empty: nothing written
  std::vector<Task> tasks = standard_tasks();
};

struct ExperimentResult {
  AccuracyReport report;
  ModelBundle bundle;
};

// Fits encoders on the training split, selects C on the validation split
// for every row and task, trains on the training split and scores the test
// split. Writes report.csv, report.json and models/ under spec.out; the last
// row's classifiers go into the bundle.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Progress& progress = {});

// Classifier for one task on the given features of `train`, with C chosen
// on `val` from config.c_grid.
FeatureClassifier train_task_classifier(const PipelineConfig& config, const FeatureBank& train,
                                        const FeatureBank& val,
                                        const std::vector<FeatureKind>& features,
                                        const Task& task, CSelection* selection = nullptr);

// Fractions 0.1 ... 0.9.
std::vector<double> default_curve_fractions();

struct LearningCurveOptions {
  std::vector<double> fractions = default_curve_fractions();
  int repetitions = 20;
};

struct CurvePartition {
  std::size_t fraction_index = 0;
  int repetition = 0;
  std::vector<std::size_t> train;  // ascending pool indices
  std::vector<std::size_t> test;
};

// Stratified random partitions of a labeled pool, `repetitions` per
// fraction, fraction-major. Class c contributes round(fraction * n_c)
// training samples, kept within [1, n_c - 1] when n_c >= 2.
std::vector<CurvePartition> plan_learning_curve(const std::vector<int>& labels,
                                                const LearningCurveOptions& options,
                                                std::uint64_t seed);

struct LearningCurveSpec {
  std::filesystem::path manifest;
  PipelineConfig config;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  LearningCurveOptions options;
};

// Six-class accuracy against the training fraction on the pooled train and
// test splits. Encoders are fitted once on the training split and C is
// chosen per row on the validation split.
LearningCurveReport run_learning_curve(const LearningCurveSpec& spec,
                                       const Progress& progress = {});

// Votes of the bundle classifier over the crops of a painting. Binary mode
// uses the pair's own classifier.
VoteTally date_with_bundle(const ModelBundle& bundle, const Image& painting, VoteMode mode,
                           std::optional<std::pair<int, int>> pair, std::uint64_t seed);

}  // namespace eradate
