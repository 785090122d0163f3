#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "eradate/config.hpp"
#include "eradate/corpus.hpp"
#include "eradate/dating.hpp"
#include "eradate/descriptor_set.hpp"
#include "eradate/error.hpp"
#include "eradate/experiment.hpp"
#include "eradate/pipeline.hpp"
#include "eradate/synthetic.hpp"

namespace fs = std::filesystem;
using namespace eradate;

namespace {

struct Globals {
  std::string manifest;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  bool quiet = false;
};

Progress make_progress(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& msg) { std::cerr << "[eradate] " << msg << '\n'; };
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(flag) + " is required");
}

PipelineConfig load_config(const Globals& g) {
  if (g.config.empty()) return PipelineConfig{};
  return PipelineConfig::from_config(Config::load(g.config));
}

std::pair<int, int> parse_pair(const std::string& s) {
  const auto dash = s.find_first_of("-,");
  if (dash == std::string::npos) {
    throw Error(ErrorCode::kBadFormat, "pair must look like EraA-EraB: " + s);
  }
  const auto a = parse_era(s.substr(0, dash));
  const auto b = parse_era(s.substr(dash + 1));
  if (!a || !b) throw Error(ErrorCode::kBadLabel, "unknown era in pair " + s);
  return {*a, *b};
}

// Existing bundle in `dir`, or a new one; an explicit --config replaces the
// stored settings.
ModelBundle open_bundle(const fs::path& dir, const Globals& g) {
  ModelBundle b;
  if (fs::exists(dir / "pipeline.json")) {
    b = load_bundle(dir);
    if (!g.config.empty()) {
      NetConfig net = b.models.config.net;
      b.models.config = load_config(g);
      if (b.models.net) b.models.config.net = net;
    }
  } else {
    b.models.config = load_config(g);
    b.models.seed = g.seed;
    b.models.cn_table = b.models.config.color_name_table.empty()
                            ? fallback_color_name_table()
                            : load_color_name_table(b.models.config.color_name_table);
  }
  return b;
}

// Fits the encoders of `kinds` on the training split and merges them into
// the bundle at --out.
void fit_into_bundle(const Globals& g, const std::vector<FeatureKind>& kinds) {
  require(g.manifest, "--manifest");
  require(g.out, "--out");
  ModelBundle bundle = open_bundle(g.out, g);
  PipelineConfig cfg = bundle.models.config;
  cfg.features = kinds;
  cfg.kernel_weights.clear();
  const FixedSplit split = split_fixed(load_manifest(g.manifest));
  const PipelineModels fitted =
      fit_models(cfg, entry_images(split.train, cfg.predict_side), g.seed, make_progress(g));
  auto& m = bundle.models;
  if (fitted.gmm) m.gmm = fitted.gmm;
  for (const auto& [k, v] : fitted.dd) m.dd[k] = v;
  for (const auto& [k, v] : fitted.bow) m.bow[k] = v;
  if (fitted.codebook) m.codebook = fitted.codebook;
  if (fitted.net) {
    m.net = fitted.net;
    m.net_log = fitted.net_log;
    m.config.net = fitted.config.net;
  }
  for (FeatureKind k : kinds) {
    if (!m.config.uses(k)) {
      m.config.features.push_back(k);
      m.config.kernel_weights.clear();
    }
  }
  m.seed = g.seed;
  save_bundle(bundle, g.out);
  std::cout << "models written to " << g.out << '\n';
}

std::vector<ManifestEntry> rows_of(const Manifest& m, bool include_predict) {
  std::vector<ManifestEntry> out;
  for (const auto& e : m.entries) {
    if (include_predict || e.split != Split::kPredict) out.push_back(e);
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Creation-era dating of paintings from drawing style"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--manifest", g.manifest, "CSV manifest (path,label,split)");
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--config", g.config, "key = value pipeline settings");
  app.add_flag("--quiet", g.quiet, "No progress messages");

  int per_class = 100;
  int paintings = 0;
  auto* gen = app.add_subcommand("gen-corpus", "Write the synthetic six-style corpus");
  gen->add_option("--per-class", per_class, "Images per class")->capture_default_str();
  gen->add_option("--paintings", paintings, "Full-size predict paintings")->capture_default_str();

  std::string feature = "ifv_sift";
  std::string models_dir;
  auto* extract = app.add_subcommand("extract", "Local descriptors of every manifest row (DSC1)");
  extract->add_option("--feature", feature, "ifv_sift, cn11, dd25 or dd50")->capture_default_str();
  extract->add_option("--models", models_dir, "Bundle holding the DD partitions");

  std::string codebook_feature = "rcc";
  auto* codebook = app.add_subcommand("train-codebook", "Fit the RCC color codebook or a BoW vocabulary");
  codebook->add_option("--feature", codebook_feature, "rcc, cn11, dd25 or dd50")->capture_default_str();

  auto* gmm = app.add_subcommand("train-gmm", "Fit the GMM of the IFV encoder");
  auto* cnn = app.add_subcommand("train-cnn", "Train DunNet on the augmented training split");

  auto* encode = app.add_subcommand("encode", "Global features of every manifest row");
  encode->add_option("--models", models_dir, "Model bundle")->required();

  std::string task = "all";
  auto* svm = app.add_subcommand("train-svm", "Train task classifiers into a bundle");
  svm->add_option("--models", models_dir, "Model bundle")->required();
  svm->add_option("--task", task, "six, EraA-EraB or all")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Full experiment: accuracy grid and models");

  LearningCurveOptions curve;
  auto* lc = app.add_subcommand("learning-curve", "Accuracy against training fraction");
  lc->add_option("--fractions", curve.fractions, "Training fractions")->delimiter(',');
  lc->add_option("--repetitions", curve.repetitions, "Partitions per fraction")->capture_default_str();

  std::string image;
  std::string mode = "multiclass";
  std::string pair;
  auto* date = app.add_subcommand("date", "Vote on the era of paintings");
  date->add_option("--models", models_dir, "Model bundle")->required();
  date->add_option("--image", image, "One painting (otherwise the manifest's predict rows)");
  date->add_option("--mode", mode, "multiclass or binary")->capture_default_str();
  date->add_option("--pair", pair, "Era pair for binary mode, e.g. Sui-EarlyTang");

  CLI11_PARSE(app, argc, argv);
  const Progress progress = make_progress(g);

  if (*gen) {
    require(g.out, "--out");
    SyntheticOptions opt;
    opt.per_class = per_class;
    opt.paintings = paintings;
    opt.seed = g.seed;
    const Manifest m = generate_synthetic_corpus(g.out, opt);
    std::cout << m.size() << " images, manifest " << (fs::path(g.out) / "manifest.csv").string() << '\n';
  } else if (*extract) {
    require(g.manifest, "--manifest");
    require(g.out, "--out");
    const FeatureKind kind = parse_feature(feature);
    PipelineModels models;
    if (!models_dir.empty()) {
      models = load_bundle(models_dir).models;
    } else {
      models.config = load_config(g);
      models.cn_table = models.config.color_name_table.empty()
                            ? fallback_color_name_table()
                            : load_color_name_table(models.config.color_name_table);
    }
    const Manifest m = load_manifest(g.manifest);
    std::size_t done = 0;
    for (const auto& e : m.entries) {
      const auto img = load_labeled_image(e, models.config.predict_side);
      fs::path target = fs::path(g.out) / e.id;
      target.replace_extension(".dsc");
      fs::create_directories(target.parent_path());
      save_descriptor_set(local_descriptors(models, kind, img.pixels), target);
      if (progress && ++done % 50 == 0) progress("extract: " + std::to_string(done) + "/" + std::to_string(m.size()));
    }
    std::cout << m.size() << " descriptor files under " << g.out << '\n';
  } else if (*codebook) {
    const FeatureKind kind = parse_feature(codebook_feature);
    if (kind == FeatureKind::kIfvSift || kind == FeatureKind::kDunnet) {
      throw Error(ErrorCode::kInvalidArgument, "train-codebook covers rcc, cn11, dd25 and dd50");
    }
    fit_into_bundle(g, {kind});
  } else if (*gmm) {
    fit_into_bundle(g, {FeatureKind::kIfvSift});
  } else if (*cnn) {
    fit_into_bundle(g, {FeatureKind::kDunnet});
  } else if (*encode) {
    require(g.manifest, "--manifest");
    require(g.out, "--out");
    const ModelBundle bundle = load_bundle(models_dir);
    const auto rows = rows_of(load_manifest(g.manifest), true);
    const FeatureBank bank =
        extract_features(bundle.models, entry_images(rows, bundle.models.config.predict_side), {}, progress);
    save_feature_bank(bank, g.out);
    std::string ids;
    for (const auto& e : rows) ids += e.id + '\n';
    write_text_file(fs::path(g.out) / "ids.txt", ids);
    std::cout << bank.rows() << " rows encoded into " << g.out << '\n';
  } else if (*svm) {
    require(g.manifest, "--manifest");
    ModelBundle bundle = load_bundle(models_dir);
    const auto& cfg = bundle.models.config;
    const FixedSplit split = split_fixed(load_manifest(g.manifest));
    const FeatureBank train = extract_features(bundle.models, entry_images(split.train, cfg.predict_side), {}, progress);
    const FeatureBank val = extract_features(bundle.models, entry_images(split.val, cfg.predict_side), {}, progress);
    std::vector<Task> tasks;
    if (task == "all") {
      tasks = standard_tasks();
    } else if (task == kSixClassTask) {
      tasks.push_back({kSixClassTask, std::nullopt});
    } else {
      const auto p = parse_pair(task);
      tasks.push_back({pair_task_name(p.first, p.second), p});
    }
    bundle.classifier_features = cfg.features;
    for (const auto& t : tasks) {
      CSelection sel;
      bundle.classifiers[t.name] = train_task_classifier(cfg, train, val, cfg.features, t, &sel);
      std::cout << t.name << ": C = " << sel.C << '\n';
    }
    save_bundle(bundle, g.out.empty() ? fs::path(models_dir) : fs::path(g.out));
  } else if (*evaluate) {
    require(g.manifest, "--manifest");
    require(g.out, "--out");
    ExperimentSpec spec;
    spec.manifest = g.manifest;
    spec.config = load_config(g);
    spec.seed = g.seed;
    spec.out = g.out;
    const auto result = run_experiment(spec, progress);
    std::cout << accuracy_csv(result.report);
  } else if (*lc) {
    require(g.manifest, "--manifest");
    require(g.out, "--out");
    LearningCurveSpec spec;
    spec.manifest = g.manifest;
    spec.config = load_config(g);
    spec.seed = g.seed;
    spec.out = g.out;
    spec.options = curve;
    const auto report = run_learning_curve(spec, progress);
    std::cout << learning_curve_csv(report);
  } else if (*date) {
    require(g.out, "--out");
    const ModelBundle bundle = load_bundle(models_dir);
    const VoteMode vm = mode == "binary" ? VoteMode::kBinary : VoteMode::kMulticlass;
    if (mode != "binary" && mode != "multiclass") {
      throw Error(ErrorCode::kInvalidArgument, "mode must be multiclass or binary");
    }
    std::optional<std::pair<int, int>> p;
    if (!pair.empty()) p = parse_pair(pair);
    std::vector<ManifestEntry> targets;
    if (!image.empty()) {
      ManifestEntry e;
      e.id = fs::path(image).filename().string();
      e.path = image;
      e.split = Split::kPredict;
      targets.push_back(e);
    } else {
      require(g.manifest, "--manifest or --image");
      for (const auto& e : load_manifest(g.manifest).entries) {
        if (e.split == Split::kPredict) targets.push_back(e);
      }
    }
    for (const auto& e : targets) {
      const auto painting = load_labeled_image(e, bundle.models.config.predict_side);
      DatingReport report;
      report.id = e.id;
      report.tally = date_with_bundle(bundle, painting.pixels, vm, p, g.seed);
      const std::string stem = fs::path(e.id).stem().string();
      fs::create_directories(g.out);
      write_dating_report(report, fs::path(g.out) / (stem + ".json"), fs::path(g.out) / (stem + ".dat"));
      std::cout << e.id << ' ' << era_name(report.tally.winner) << ' '
                << report.tally.votes[static_cast<std::size_t>(report.tally.winner)] << '/'
                << report.tally.total << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
