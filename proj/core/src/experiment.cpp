#include "eradate/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "eradate/error.hpp"
#include "eradate/rng.hpp"

namespace eradate {

namespace {

constexpr std::uint64_t kSaltCurve = 0x1c;

using Index = std::vector<Eigen::Index>;

Index all_rows(std::size_t n) {
  Index idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<Eigen::Index>(i);
  return idx;
}

Index rows_with_labels(const std::vector<int>& labels, const std::optional<std::pair<int, int>>& pair) {
  Index idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!pair || labels[i] == pair->first || labels[i] == pair->second) {
      idx.push_back(static_cast<Eigen::Index>(i));
    }
  }
  return idx;
}

Matrix take(const Matrix& m, const Index& rows, const Index& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
    }
  }
  return out;
}

Matrix take_rows(const Matrix& m, const Index& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

std::vector<int> pick(const std::vector<int>& v, const Index& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

// Kernel of one feature between the training rows and every evaluation set.
struct FeatureKernels {
  KernelBlock block;
  Matrix train;              // N x N
  std::vector<Matrix> other; // M_s x N per evaluation set
};

// `others` may hold empty banks; their kernels are 0 x N.
FeatureKernels feature_kernels(const PipelineConfig& config, FeatureKind k, const Matrix& train,
                               const std::vector<const FeatureBank*>& others) {
  FeatureKernels fk;
  std::vector<KernelBlock> blocks{kernel_block(config, k)};
  fk.train = training_kernel(blocks, {train});
  fk.block = blocks[0];
  for (const FeatureBank* o : others) {
    fk.other.push_back(o->rows() ? cross_kernel(blocks, {train}, {o->of(k)})
                                 : Matrix(0, train.rows()));
  }
  return fk;
}

// Weighted mean over the row's features of the selected kernel.
template <typename Get>
Matrix row_kernel(const FeatureRow& row, const std::map<FeatureKind, FeatureKernels>& kernels,
                  Get get) {
  std::vector<Matrix> parts;
  std::vector<double> weights;
  for (FeatureKind k : row.features) {
    const auto& fk = kernels.at(k);
    parts.push_back(get(fk));
    weights.push_back(fk.block.weight);
  }
  return combine_kernels(parts, weights);
}

// Progress sink that timestamps lines into run.log and forwards them.
class RunLog {
 public:
  RunLog(const std::filesystem::path& out, Progress forward)
      : forward_(std::move(forward)), start_(std::chrono::steady_clock::now()) {
    if (!out.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(out, ec);
      if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out.string());
      file_.open(out / "run.log", std::ios::trunc);
      if (!file_) throw Error(ErrorCode::kIoError, "cannot write " + (out / "run.log").string());
    }
  }

  void operator()(const std::string& msg) {
    if (file_) {
      const double s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      char stamp[32];
      std::snprintf(stamp, sizeof(stamp), "[%9.2fs] ", s);
      file_ << stamp << msg << '\n';
      file_.flush();
    }
    if (forward_) forward_(msg);
  }

  Progress sink() {
    return [this](const std::string& m) { (*this)(m); };
  }

 private:
  Progress forward_;
  std::chrono::steady_clock::time_point start_;
  std::ofstream file_;
};

int count_correct(const std::vector<int>& pred, const std::vector<int>& truth) {
  int c = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) c += pred[i] == truth[i];
  return c;
}

}  // namespace

SplitSummary FixedSplit::summary() const {
  SplitSummary s;
  s.train = static_cast<int>(train.size());
  s.test = static_cast<int>(test.size());
  s.val = static_cast<int>(val.size());
  s.per_class.assign(kNumEras, {0, 0, 0});
  const std::array<const std::vector<ManifestEntry>*, 3> parts{&train, &test, &val};
  for (std::size_t p = 0; p < 3; ++p) {
    for (const auto& e : *parts[p]) {
      if (e.label && *e.label >= 0 && *e.label < kNumEras) {
        ++s.per_class[static_cast<std::size_t>(*e.label)][p];
      }
    }
  }
  return s;
}

FixedSplit split_fixed(const Manifest& manifest) {
  FixedSplit s;
  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    if (!seen.insert(e.id).second) throw Error(ErrorCode::kDuplicateId, "duplicate id " + e.id);
    switch (e.split) {
      case Split::kTrain: s.train.push_back(e); break;
      case Split::kTest: s.test.push_back(e); break;
      case Split::kVal: s.val.push_back(e); break;
      case Split::kPredict: break;
    }
  }
  if (s.train.empty()) throw Error(ErrorCode::kMissingSplit, "manifest has no training rows");
  if (s.test.empty()) s.warnings.push_back("manifest has no test rows");
  if (s.val.empty()) s.warnings.push_back("manifest has no validation rows");
  return s;
}

const std::array<std::pair<int, int>, 5>& canonical_pairs() {
  static const std::array<std::pair<int, int>, 5> pairs{{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}};
  return pairs;
}

Manifest pair_dataset(const Manifest& manifest, int a, int b) {
  if (a == b) throw Error(ErrorCode::kEmptyPair, "a pair needs two distinct eras");
  Manifest out;
  out.root = manifest.root;
  for (const auto& e : manifest.entries) {
    if (e.label && (*e.label == a || *e.label == b)) out.entries.push_back(e);
  }
  if (out.entries.empty()) {
    throw Error(ErrorCode::kEmptyPair, "no rows labeled " + std::string(era_name(a)) + " or " +
                                           std::string(era_name(b)));
  }
  return out;
}

std::string pair_task_name(int a, int b) {
  return std::string(era_name(a)) + "-" + std::string(era_name(b));
}

std::vector<Task> standard_tasks() {
  std::vector<Task> tasks;
  for (const auto& p : canonical_pairs()) tasks.push_back({pair_task_name(p.first, p.second), p});
  tasks.push_back({kSixClassTask, std::nullopt});
  return tasks;
}

std::vector<FeatureRow> report_rows(const std::vector<FeatureKind>& features) {
  std::vector<FeatureRow> rows;
  for (FeatureKind k : features) rows.push_back({std::string(feature_label(k)), {k}});
  auto has = [&](FeatureKind k) {
    return std::find(features.begin(), features.end(), k) != features.end();
  };
  auto add = [&](std::vector<FeatureKind> members) {
    if (members.size() < 2) return;
    for (const auto& r : rows) {
      if (std::set<FeatureKind>(r.features.begin(), r.features.end()) ==
          std::set<FeatureKind>(members.begin(), members.end())) {
        return;
      }
    }
    std::string name;
    for (FeatureKind k : members) {
      if (!name.empty()) name += "+";
      name += feature_label(k);
    }
    rows.push_back({name, std::move(members)});
  };
  if (has(FeatureKind::kIfvSift) && has(FeatureKind::kRcc)) {
    add({FeatureKind::kIfvSift, FeatureKind::kRcc});
    if (has(FeatureKind::kDunnet)) {
      add({FeatureKind::kIfvSift, FeatureKind::kRcc, FeatureKind::kDunnet});
    }
  }
  add(features);
  return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Progress& progress) {
  RunLog log(spec.out, progress);
  log("experiment: seed " + std::to_string(spec.seed));
  const Manifest manifest = load_manifest(spec.manifest);
  const FixedSplit split = split_fixed(manifest);
  for (const auto& w : split.warnings) log("warning: " + w);
  const auto& cfg = spec.config;
  cfg.validate();

  ExperimentResult result;
  result.bundle.models = fit_models(cfg, entry_images(split.train, cfg.predict_side), spec.seed,
                                    log.sink());
  const auto& models = result.bundle.models;

  log("extract: training split");
  const FeatureBank train = extract_features(models, entry_images(split.train, cfg.predict_side), {},
                                             log.sink());
  log("extract: validation split");
  const FeatureBank val = extract_features(models, entry_images(split.val, cfg.predict_side), {},
                                           log.sink());
  log("extract: test split");
  const FeatureBank test = extract_features(models, entry_images(split.test, cfg.predict_side), {},
                                            log.sink());

  std::map<FeatureKind, FeatureKernels> kernels;
  for (FeatureKind k : cfg.features) {
    log("kernel: " + std::string(feature_name(k)));
    kernels.emplace(k, feature_kernels(cfg, k, train.of(k), {&val, &test}));
  }

  const auto rows = report_rows(cfg.features);
  auto& report = result.report;
  report.seed = spec.seed;
  report.splits = split.summary();
  for (const auto& r : rows) report.rows.push_back(r.name);
  for (const auto& t : spec.tasks) report.tasks.push_back(t.name);

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const Matrix k_train = row_kernel(row, kernels, [](const FeatureKernels& f) { return f.train; });
    const Matrix k_val = row_kernel(row, kernels, [](const FeatureKernels& f) { return f.other[0]; });
    const Matrix k_test = row_kernel(row, kernels, [](const FeatureKernels& f) { return f.other[1]; });
    const bool deploy = r + 1 == rows.size();
    for (const auto& task : spec.tasks) {
      const Index tr = rows_with_labels(train.labels, task.pair);
      const Index va = rows_with_labels(val.labels, task.pair);
      const Index te = rows_with_labels(test.labels, task.pair);
      const auto y_tr = pick(train.labels, tr);
      if (std::set<int>(y_tr.begin(), y_tr.end()).size() < 2) {
        throw Error(ErrorCode::kEmptyPair, "task " + task.name + " has fewer than two training classes");
      }
      const Matrix ktt = take(k_train, tr, tr);
      const CSelection sel = select_c(ktt, y_tr, take(k_val, va, tr), pick(val.labels, va), cfg.c_grid);
      const OvaModel ova = ova_train(ktt, y_tr, sel.C);
      AccuracyCell cell;
      cell.row = row.name;
      cell.task = task.name;
      cell.C = sel.C;
      cell.total = static_cast<int>(te.size());
      if (!te.empty()) {
        cell.correct = count_correct(ova_predict(ova, take(k_test, te, tr)), pick(test.labels, te));
      }
      log("cell: " + row.name + " / " + task.name + " C=" + std::to_string(sel.C) + " " +
          std::to_string(cell.correct) + "/" + std::to_string(cell.total));
      report.cells.push_back(cell);
      if (deploy) {
        std::vector<KernelBlock> blocks;
        std::vector<Matrix> feats;
        for (FeatureKind k : row.features) {
          blocks.push_back(kernels.at(k).block);
          feats.push_back(take_rows(train.of(k), tr));
        }
        result.bundle.classifiers.emplace(task.name, make_classifier(blocks, feats, ova, sel.C));
      }
    }
    if (deploy) result.bundle.classifier_features = row.features;
  }

  if (!spec.out.empty()) {
    write_accuracy_report(report, spec.out);
    save_bundle(result.bundle, spec.out / "models");
    log("wrote " + (spec.out / "report.csv").string());
  }
  return result;
}

FeatureClassifier train_task_classifier(const PipelineConfig& config, const FeatureBank& train,
                                        const FeatureBank& val,
                                        const std::vector<FeatureKind>& features,
                                        const Task& task, CSelection* selection) {
  if (features.empty()) throw Error(ErrorCode::kInvalidArgument, "no features to train on");
  const Index tr = rows_with_labels(train.labels, task.pair);
  const Index va = rows_with_labels(val.labels, task.pair);
  const auto y_tr = pick(train.labels, tr);
  if (std::set<int>(y_tr.begin(), y_tr.end()).size() < 2) {
    throw Error(ErrorCode::kEmptyPair, "task " + task.name + " has fewer than two training classes");
  }
  std::vector<KernelBlock> blocks;
  std::vector<Matrix> x_tr;
  std::vector<Matrix> x_va;
  for (FeatureKind k : features) {
    blocks.push_back(kernel_block(config, k));
    x_tr.push_back(take_rows(train.of(k), tr));
    if (!va.empty()) x_va.push_back(take_rows(val.of(k), va));
  }
  const Matrix k_tr = training_kernel(blocks, x_tr);
  const Matrix k_va = va.empty() ? Matrix(0, k_tr.cols()) : cross_kernel(blocks, x_tr, x_va);
  const CSelection sel = select_c(k_tr, y_tr, k_va, pick(val.labels, va), config.c_grid);
  if (selection) *selection = sel;
  return make_classifier(blocks, x_tr, ova_train(k_tr, y_tr, sel.C), sel.C);
}

std::vector<double> default_curve_fractions() {
  std::vector<double> f;
  for (int i = 1; i <= 9; ++i) f.push_back(i / 10.0);
  return f;
}

std::vector<CurvePartition> plan_learning_curve(const std::vector<int>& labels,
                                                const LearningCurveOptions& options,
                                                std::uint64_t seed) {
  if (options.repetitions < 1) throw Error(ErrorCode::kInvalidArgument, "repetitions must be >= 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<CurvePartition> plan;
  for (std::size_t f = 0; f < options.fractions.size(); ++f) {
    const double fraction = options.fractions[f];
    if (!(fraction > 0.0 && fraction < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "fractions must lie in (0, 1)");
    }
    for (int rep = 0; rep < options.repetitions; ++rep) {
      Rng rng(Rng::derive(Rng::derive(seed, kSaltCurve), f * 1000 + static_cast<std::uint64_t>(rep)));
      CurvePartition p;
      p.fraction_index = f;
      p.repetition = rep;
      for (const auto& [label, members] : by_class) {
        const auto n = static_cast<long>(members.size());
        long take_n = static_cast<long>(std::floor(fraction * static_cast<double>(n) + 0.5));
        if (n >= 2) take_n = std::clamp(take_n, 1L, n - 1);
        std::vector<std::size_t> order = members;
        rng.shuffle(order);
        p.train.insert(p.train.end(), order.begin(), order.begin() + take_n);
        p.test.insert(p.test.end(), order.begin() + take_n, order.end());
      }
      std::sort(p.train.begin(), p.train.end());
      std::sort(p.test.begin(), p.test.end());
      plan.push_back(std::move(p));
    }
  }
  return plan;
}

LearningCurveReport run_learning_curve(const LearningCurveSpec& spec, const Progress& progress) {
  RunLog log(spec.out, progress);
  log("learning curve: seed " + std::to_string(spec.seed));
  const Manifest manifest = load_manifest(spec.manifest);
  const FixedSplit split = split_fixed(manifest);
  for (const auto& w : split.warnings) log("warning: " + w);
  const auto& cfg = spec.config;
  cfg.validate();

  const PipelineModels models =
      fit_models(cfg, entry_images(split.train, cfg.predict_side), spec.seed, log.sink());
  std::vector<ManifestEntry> pool_entries = split.train;
  pool_entries.insert(pool_entries.end(), split.test.begin(), split.test.end());
  log("extract: pooled train and test splits");
  const FeatureBank pool = extract_features(models, entry_images(pool_entries, cfg.predict_side), {},
                                            log.sink());
  const FeatureBank val = extract_features(models, entry_images(split.val, cfg.predict_side), {},
                                           log.sink());
  const Index fixed_train = all_rows(split.train.size());
  const Index pool_all = all_rows(pool.rows());

  // Pool x pool kernels; chi2 bandwidths come from the fixed training split.
  std::map<FeatureKind, FeatureKernels> kernels;
  for (FeatureKind k : cfg.features) {
    log("kernel: " + std::string(feature_name(k)));
    FeatureKernels fk;
    std::vector<KernelBlock> blocks{kernel_block(cfg, k)};
    const Matrix xt = take_rows(pool.of(k), fixed_train);
    training_kernel(blocks, {xt});
    fk.block = blocks[0];
    fk.train = cross_kernel(blocks, {pool.of(k)}, {pool.of(k)});
    fk.other.push_back(val.rows() ? cross_kernel(blocks, {xt}, {val.of(k)}) : Matrix(0, xt.rows()));
    kernels.emplace(k, std::move(fk));
  }

  LearningCurveReport report;
  report.seed = spec.seed;
  report.repetitions = spec.options.repetitions;
  report.fractions = spec.options.fractions;
  const auto rows = report_rows(cfg.features);
  const auto plan = plan_learning_curve(pool.labels, spec.options, spec.seed);

  std::vector<Matrix> row_kernels;
  for (const auto& row : rows) {
    report.rows.push_back(row.name);
    Matrix k_pool = row_kernel(row, kernels, [](const FeatureKernels& f) { return f.train; });
    const Matrix k_val = row_kernel(row, kernels, [](const FeatureKernels& f) { return f.other[0]; });
    const CSelection sel = select_c(take(k_pool, fixed_train, fixed_train),
                                    pick(pool.labels, fixed_train), k_val, val.labels, cfg.c_grid);
    report.c_values.push_back(sel.C);
    row_kernels.push_back(std::move(k_pool));
    report.points.emplace_back(spec.options.fractions.size());
  }

  for (const auto& part : plan) {
    const Index tr(part.train.begin(), part.train.end());
    const Index te(part.test.begin(), part.test.end());
    const auto y_tr = pick(pool.labels, tr);
    const auto y_te = pick(pool.labels, te);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const OvaModel ova = ova_train(take(row_kernels[r], tr, tr), y_tr, report.c_values[r]);
      CurvePoint& p = report.points[r][part.fraction_index];
      p.fraction = spec.options.fractions[part.fraction_index];
      p.train_size = static_cast<int>(tr.size());
      p.test_size = static_cast<int>(te.size());
      p.correct.push_back(te.empty() ? 0 : count_correct(ova_predict(ova, take(row_kernels[r], te, tr)), y_te));
    }
    if (part.repetition + 1 == spec.options.repetitions) {
      log("curve: fraction " + std::to_string(spec.options.fractions[part.fraction_index]) + " done");
    }
  }
  for (auto& row : report.points) {
    for (auto& p : row) summarize(p);
  }
  if (!spec.out.empty()) write_learning_curve(report, spec.out);
  return report;
}

VoteTally date_with_bundle(const ModelBundle& bundle, const Image& painting, VoteMode mode,
                           std::optional<std::pair<int, int>> pair, std::uint64_t seed) {
  std::string task = kSixClassTask;
  if (mode == VoteMode::kBinary) {
    if (!pair) throw Error(ErrorCode::kInvalidArgument, "binary dating needs an era pair");
    task = pair_task_name(pair->first, pair->second);
  }
  if (!bundle.classifiers.count(task)) {
    throw Error(ErrorCode::kMissingModel, "bundle has no classifier for " + task);
  }
  CropSpec crops = bundle.models.config.crops;
  crops.seed = seed;
  const CropClassifier classify = [&](const std::vector<Image>& images) {
    return classify_images(bundle, task, images);
  };
  return date_painting(painting, classify, crops, mode, pair, kNumEras);
}

}  // namespace eradate
