#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "eradate/config.hpp"
#include "eradate/error.hpp"
#include "eradate/experiment.hpp"
#include "eradate/report.hpp"
#include "eradate/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eradate;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIoError;
}

// `counts` rows per split, labels cycling through the eras.
Manifest manifest_of(int train, int test, int val) {
  std::string text = "path,label,split\n";
  int id = 0;
  auto add = [&](int n, const char* split) {
    for (int i = 0; i < n; ++i, ++id) {
      text += "img/" + std::to_string(id) + ".png," + std::string(era_name(id % kNumEras)) + "," +
              split + "\n";
    }
  };
  add(train, "train");
  add(test, "test");
  add(val, "val");
  return parse_manifest(text, "/nonexistent", false);
}

}  // namespace

TEST(ConfigFile, SectionsQuotesListsAndComments) {
  const auto c = Config::parse(
      "# comment\n; also comment\nalpha = 3\n[net]\nname = \"a b\"\nlist = 1, 2.5 ,-4\nflag = true\n");
  EXPECT_EQ(c.get_int("alpha", 0), 3);
  EXPECT_EQ(c.get_string("net.name", ""), "a b");
  EXPECT_EQ(c.get_doubles("net.list", {}), (std::vector<double>{1, 2.5, -4}));
  EXPECT_TRUE(c.get_bool("net.flag", false));
  EXPECT_EQ(c.get_int("missing", 7), 7);
  EXPECT_EQ(code_of([&] { c.require_known({"alpha", "net.name"}); }), ErrorCode::kBadFormat);
  EXPECT_EQ(code_of([] { Config::parse("novalue\n"); }), ErrorCode::kBadFormat);
}

TEST(PipelineSettings, DeskConfigRoundTrips) {
  const auto desk = PipelineConfig::from_config(Config::load(ERADATE_DESK_CONFIG));
  const auto again = PipelineConfig::from_config(desk.to_config());
  EXPECT_EQ(again.to_config().values(), desk.to_config().values());
  EXPECT_EQ(again.net, desk.net);
  EXPECT_EQ(desk.features.size(), 3u);
}

TEST(PipelineSettings, UnknownKeyIsRejected) {
  EXPECT_EQ(code_of([] { PipelineConfig::from_config(Config::parse("gmm_compnents = 3\n")); }),
            ErrorCode::kBadFormat);
  EXPECT_EQ(code_of([] { PipelineConfig::from_config(Config::parse("features = sift\n")); }),
            ErrorCode::kBadFormat);
}

TEST(SplitFixed, PaperShapedSizes) {
  const auto split = split_fixed(manifest_of(3000, 700, 160));
  EXPECT_EQ(split.train.size(), 3000u);
  EXPECT_EQ(split.test.size(), 700u);
  EXPECT_EQ(split.val.size(), 160u);
  EXPECT_TRUE(split.warnings.empty());
  const auto s = split.summary();
  EXPECT_EQ(s.per_class.size(), static_cast<std::size_t>(kNumEras));
  EXPECT_EQ(s.per_class[0][0], 500);
}

TEST(SplitFixed, TrainOnlyWarnsAndMissingTrainFails) {
  const auto split = split_fixed(manifest_of(12, 0, 0));
  EXPECT_EQ(split.train.size(), 12u);
  EXPECT_TRUE(split.test.empty());
  EXPECT_TRUE(split.val.empty());
  EXPECT_FALSE(split.warnings.empty());
  EXPECT_EQ(code_of([] { split_fixed(manifest_of(0, 5, 5)); }), ErrorCode::kMissingSplit);
}

TEST(SplitFixed, DuplicateIdAcrossSplits) {
  auto m = manifest_of(6, 6, 0);
  m.entries.back().id = m.entries.front().id;
  EXPECT_EQ(code_of([&] { split_fixed(m); }), ErrorCode::kDuplicateId);
}

TEST(Pairs, CanonicalOrderAndFilter) {
  const auto& pairs = canonical_pairs();
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(pairs[static_cast<std::size_t>(i)].first, i);
    EXPECT_EQ(pairs[static_cast<std::size_t>(i)].second, i + 1);
  }
  EXPECT_EQ(pair_task_name(0, 1), "Sui-EarlyTang");
  const auto tasks = standard_tasks();
  ASSERT_EQ(tasks.size(), 6u);
  EXPECT_EQ(tasks.back().name, kSixClassTask);
  EXPECT_FALSE(tasks.back().pair.has_value());

  const auto m = manifest_of(30, 12, 6);
  const auto sub = pair_dataset(m, 2, 3);
  std::set<int> labels;
  for (const auto& e : sub.entries) labels.insert(*e.label);
  EXPECT_EQ(labels, (std::set<int>{2, 3}));
  EXPECT_EQ(sub.size(), 16u);
  EXPECT_EQ(std::count_if(sub.entries.begin(), sub.entries.end(),
                          [](const ManifestEntry& e) { return e.split == Split::kVal; }),
            2);
}

TEST(Pairs, Errors) {
  const auto m = manifest_of(12, 0, 0);
  EXPECT_EQ(code_of([&] { pair_dataset(m, 0, 0); }), ErrorCode::kEmptyPair);
  Manifest only_sui = m;
  std::erase_if(only_sui.entries, [](const ManifestEntry& e) { return *e.label > 1; });
  EXPECT_EQ(code_of([&] { pair_dataset(only_sui, 3, 4); }), ErrorCode::kEmptyPair);
}

TEST(ReportRows, CombinationsFollowConfiguredFeatures) {
  auto names = [](const std::vector<FeatureRow>& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.name);
    return out;
  };
  EXPECT_EQ(names(report_rows({FeatureKind::kIfvSift, FeatureKind::kRcc, FeatureKind::kDunnet})),
            (std::vector<std::string>{"IFV", "RCC", "DunNet", "IFV+RCC", "IFV+RCC+DunNet"}));
  EXPECT_EQ(names(report_rows({FeatureKind::kIfvSift})), (std::vector<std::string>{"IFV"}));
  EXPECT_EQ(names(report_rows({FeatureKind::kIfvSift, FeatureKind::kCn11})),
            (std::vector<std::string>{"IFV", "CN", "IFV+CN"}));
}

TEST(LearningCurve, StratifiedHalf) {
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 2);
  const auto plan = plan_learning_curve(labels, {{0.5}, 3}, 4);
  ASSERT_EQ(plan.size(), 3u);
  for (const auto& p : plan) {
    EXPECT_EQ(p.train.size(), 50u);
    EXPECT_EQ(p.test.size(), 50u);
    int zeros = 0;
    for (auto i : p.train) zeros += labels[i] == 0 ? 1 : 0;
    EXPECT_EQ(zeros, 25);
  }
}

TEST(LearningCurve, DefaultsPartitionsAndDeterminism) {
  const auto fr = default_curve_fractions();
  ASSERT_EQ(fr.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(fr[i], 0.1 * static_cast<double>(i + 1), 1e-12);
  EXPECT_EQ(LearningCurveOptions{}.repetitions, 20);

  Rng rng(1);
  std::vector<int> labels;
  for (int i = 0; i < 137; ++i) labels.push_back(static_cast<int>(rng.uniform_int(6)));
  const auto a = plan_learning_curve(labels, {}, 11);
  const auto b = plan_learning_curve(labels, {}, 11);
  const auto c = plan_learning_curve(labels, {}, 12);
  ASSERT_EQ(a.size(), 180u);
  bool differs = false;
  std::map<int, int> class_size;
  for (int l : labels) ++class_size[l];
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].train, b[i].train);
    EXPECT_EQ(a[i].fraction_index, i / 20);
    EXPECT_EQ(a[i].repetition, static_cast<int>(i % 20));
    differs = differs || a[i].train != c[i].train;
    std::vector<std::size_t> all = a[i].train;
    all.insert(all.end(), a[i].test.begin(), a[i].test.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), labels.size());
    for (std::size_t k = 0; k < all.size(); ++k) ASSERT_EQ(all[k], k);
    EXPECT_TRUE(std::is_sorted(a[i].train.begin(), a[i].train.end()));
    const double f = fr[a[i].fraction_index];
    std::map<int, int> in_train;
    for (auto k : a[i].train) ++in_train[labels[k]];
    for (const auto& [cls, n] : class_size) EXPECT_LE(std::fabs(in_train[cls] - f * n), 1.0);
  }
  EXPECT_TRUE(differs);
}

TEST(Synthetic, SplitCountsMirrorPaperProportions) {
  EXPECT_EQ(synthetic_split_counts(100), (std::array<int, 3>{78, 18, 4}));
  for (int n = 10; n <= 400; n += 7) {
    const auto c = synthetic_split_counts(n);
    EXPECT_EQ(c[0] + c[1] + c[2], n);
    EXPECT_NEAR(c[0], n * 3000.0 / 3860, 1.0);
    EXPECT_NEAR(c[1], n * 700.0 / 3860, 1.0);
    EXPECT_NEAR(c[2], n * 160.0 / 3860, 1.0);
  }
}

TEST(Synthetic, HueBandsAreDisjoint) {
  const auto& s = synthetic_styles();
  for (int a = 0; a < kNumEras; ++a) {
    for (int b = 0; b < kNumEras; ++b) {
      if (a == b) continue;
      // Band b must start at least 10 degrees after band a ends and end at
      // least 10 degrees before band a starts, around the circle.
      const double d = std::fmod(s.hue_lo[static_cast<std::size_t>(b)] -
                                     s.hue_lo[static_cast<std::size_t>(a)] + 720.0,
                                 360.0);
      EXPECT_GE(d, kStyleHueWidth + 10.0);
      EXPECT_LE(d, 360.0 - kStyleHueWidth - 10.0);
    }
  }
}

TEST(Synthetic, SameSeedSameBytes) {
  oracle::TempDir a("synth_a");
  oracle::TempDir b("synth_b");
  const SyntheticOptions opt{10, 1, 3};
  const auto m = generate_synthetic_corpus(a.path(), opt);
  generate_synthetic_corpus(b.path(), opt);
  EXPECT_EQ(m.size(), 61u);
  const auto ta = oracle::read_tree(a.path());
  EXPECT_EQ(ta, oracle::read_tree(b.path()));
  const auto split = split_fixed(m);
  EXPECT_EQ(split.train.size(), 6u * 8);
  EXPECT_EQ(code_of([&] { generate_synthetic_corpus(a.path() / "x", {9, 0, 1}); }),
            ErrorCode::kInvalidArgument);
}

TEST(Reports, IntegersAndPercentages) {
  AccuracyReport r;
  r.seed = 42;
  r.rows = {"IFV"};
  r.tasks = {"Sui-EarlyTang", "six"};
  r.cells = {{"IFV", "Sui-EarlyTang", 7, 9, 1.0}, {"IFV", "six", 0, 0, 0.1}};
  EXPECT_EQ(r.cell("IFV", "six").accuracy(), 0.0);
  EXPECT_EQ(accuracy_csv(r), "method,Sui-EarlyTang,six\nIFV,77.78,0.00\n");
  const auto j = nlohmann::json::parse(accuracy_json(r));
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["cells"][0]["correct"], 7);
  EXPECT_EQ(j["cells"][0]["total"], 9);
  EXPECT_EQ(j["cells"][0]["accuracy"].get<double>(), 7.0 / 9.0);
}

TEST(Reports, CurveSummary) {
  CurvePoint p;
  p.test_size = 10;
  p.correct = {5, 7, 9};
  summarize(p);
  EXPECT_NEAR(p.mean, 0.7, 1e-12);
  EXPECT_NEAR(p.stddev, std::sqrt((0.04 + 0.0 + 0.04) / 3), 1e-12);
}

TEST(Experiment, OneFeatureSixClassRun) {
  oracle::TempDir dir("experiment");
  const auto manifest = generate_synthetic_corpus(dir.path() / "corpus", {12, 0, 5});
  save_manifest(manifest, dir.path() / "corpus" / "manifest.csv");
  ExperimentSpec spec;
  spec.manifest = dir.path() / "corpus" / "manifest.csv";
  spec.config = fixture::tiny_pipeline();
  spec.config.features = {FeatureKind::kIfvSift};
  spec.seed = 3;
  spec.out = dir.path() / "run";
  spec.tasks = {Task{kSixClassTask, std::nullopt}};
  const auto result = run_experiment(spec);
  ASSERT_EQ(result.report.cells.size(), 1u);
  const auto& cell = result.report.cells[0];
  EXPECT_EQ(cell.row, "IFV");
  EXPECT_EQ(cell.task, "six");
  EXPECT_EQ(cell.total, static_cast<int>(split_fixed(manifest).test.size()));
  EXPECT_GE(cell.correct, 0);
  EXPECT_LE(cell.correct, cell.total);
  EXPECT_TRUE(std::filesystem::exists(spec.out / "report.csv"));
  EXPECT_TRUE(std::filesystem::exists(spec.out / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(spec.out / "models"));
}
