#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "featsplat/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace featsplat;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

json load_config(const CommonArgs& args) {
  json cfg = json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config file: " + args.config_path);
    try {
      in >> cfg;
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config root must be a JSON object");
  }
  return cfg;
}

template <typename T>
T cfg_get(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::uint64_t require_seed(const CommonArgs& args, const json& cfg) {
  if (args.seed) return *args.seed;
  if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
  throw ConfigError("--seed is required for this subcommand");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  out << text;
  if (!out) throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
}

void write_json_file(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

// One provenance manifest per run directory; binary tensor outputs carry no
// comment field, so this is where their config hash lives.
void write_run_manifest(const fs::path& dir, const std::string& subcommand,
                        const std::string& config_hash,
                        std::vector<std::string> files) {
  std::sort(files.begin(), files.end());
  write_json_file(dir / "run.json",
                  {{"subcommand", subcommand}, {"config_hash", config_hash}, {"files", files}});
}

TrainConfig train_config_from(const json& cfg, std::uint64_t seed) {
  TrainConfig tc;
  const std::string mode = cfg_get<std::string>(cfg, "loss_mode", "l1_cos");
  if (mode == "l1_cos") {
    tc.loss_mode = LossMode::L1Cos;
  } else if (mode == "mse_cos") {
    tc.loss_mode = LossMode::MseCos;
  } else {
    throw ConfigError("loss_mode must be 'l1_cos' or 'mse_cos'");
  }
  tc.lambda = cfg_get<double>(cfg, "lambda", 0.5);
  tc.lr = cfg_get<double>(cfg, "lr", 1e-3);
  tc.batch_size = cfg_get<int>(cfg, "batch_size", 256);
  tc.epochs = cfg_get<int>(cfg, "epochs", 100);
  tc.seed = seed;
  tc.validate();
  return tc;
}

FieldTrainConfig field_config_from(const json& cfg, std::uint64_t seed, int threads) {
  FieldTrainConfig fc;
  fc.gamma = cfg_get<double>(cfg, "gamma", 0.5);
  fc.beta = cfg_get<double>(cfg, "beta", 1.0);
  fc.lr = cfg_get<double>(cfg, "field_lr", 2.5e-3);
  fc.iterations = cfg_get<int>(cfg, "iterations", 1000);
  fc.seed = seed;
  fc.render.threads = threads;
  fc.render.tile_size = cfg_get<int>(cfg, "tile_size", 16);
  fc.validate();
  return fc;
}

ConceptDictionary load_dictionary(const fs::path& dir) {
  const Tensor t = read_gten(dir / "dict.gten");
  if (t.rank() != 2) {
    throw IoError(IoError::Kind::DimensionMismatch, "dictionary tensor must be rank 2");
  }
  std::ifstream in(dir / "dict.json");
  if (!in) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open: " + (dir / "dict.json").string());
  }
  json j;
  in >> j;
  ConceptDictionary dict;
  dict.concepts.resize(static_cast<Eigen::Index>(t.dim(0)),
                       static_cast<Eigen::Index>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t c = 0; c < t.dim(1); ++c)
      dict.concepts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t(i, c);
  dict.labels = j.at("labels").get<std::vector<std::string>>();
  dict.intrinsic_dim = j.at("intrinsic_dim").get<int>();
  dict.noise = j.at("noise").get<double>();
  dict.seed = j.at("seed").get<std::uint64_t>();
  return dict;
}

void save_dictionary(const ConceptDictionary& dict, const fs::path& dir,
                     const std::string& config_hash) {
  Tensor t({static_cast<std::size_t>(dict.concepts.rows()),
            static_cast<std::size_t>(dict.concepts.cols())});
  for (Eigen::Index i = 0; i < dict.concepts.rows(); ++i)
    for (Eigen::Index c = 0; c < dict.concepts.cols(); ++c)
      t(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = dict.concepts(i, c);
  write_gten(dir / "dict.gten", t);
  write_json_file(dir / "dict.json", {{"labels", dict.labels},
                                      {"intrinsic_dim", dict.intrinsic_dim},
                                      {"noise", dict.noise},
                                      {"seed", dict.seed},
                                      {"config_hash", config_hash}});
}

int cmd_gen_corpus(const CommonArgs& args) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);
  const int concepts = cfg_get<int>(cfg, "concepts", 64);
  const int dim = cfg_get<int>(cfg, "dim", 512);
  const int intrinsic_dim = cfg_get<int>(cfg, "intrinsic_dim", 12);
  const double noise = cfg_get<double>(cfg, "noise", 0.05);
  const int samples = cfg_get<int>(cfg, "samples_per_concept", 24);
  const double jitter = cfg_get<double>(cfg, "jitter", 0.15);

  const json effective{{"subcommand", "gen-corpus"}, {"concepts", concepts},
                       {"dim", dim},               {"intrinsic_dim", intrinsic_dim},
                       {"noise", noise},           {"samples_per_concept", samples},
                       {"jitter", jitter},         {"seed", seed}};
  const std::string hash = config_hash_hex(effective);

  const ConceptDictionary dict = gen_dictionary(concepts, dim, intrinsic_dim, noise, seed);
  EmbeddingCorpus corpus = gen_corpus(dict, samples, jitter, derive_seed(seed, 1));

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  save_dictionary(dict, out, hash);
  save_corpus(corpus, out / "corpus.gten", out / "corpus_labels.json");
  write_json_file(out / "summary.json",
                  {{"config_hash", hash},
                   {"rows", corpus.size()},
                   {"train_rows", corpus.train_indices().size()},
                   {"val_rows", corpus.val_indices().size()},
                   {"corpus_id", corpus.id}});
  write_run_manifest(out, "gen-corpus", hash,
                     {"dict.gten", "dict.json", "corpus.gten", "corpus_labels.json",
                      "summary.json"});
  std::cout << "corpus " << corpus.id << ": " << corpus.size() << " rows -> "
            << args.out_dir << "\n";
  return 0;
}

int cmd_synth_gen(const CommonArgs& args, const std::string& dict_dir) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);

  WorldParams params;
  params.object_count = cfg_get<int>(cfg, "objects", params.object_count);
  params.gaussians_per_object =
      cfg_get<int>(cfg, "gaussians_per_object", params.gaussians_per_object);
  params.view_count = cfg_get<int>(cfg, "views", params.view_count);
  params.image_width = cfg_get<int>(cfg, "width", params.image_width);
  params.image_height = cfg_get<int>(cfg, "height", params.image_height);
  params.latent_dim = cfg_get<int>(cfg, "latent_dim", params.latent_dim);
  params.render.threads = args.threads;

  const json effective{{"subcommand", "synth-gen"},
                       {"objects", params.object_count},
                       {"gaussians_per_object", params.gaussians_per_object},
                       {"views", params.view_count},
                       {"width", params.image_width},
                       {"height", params.image_height},
                       {"latent_dim", params.latent_dim},
                       {"dict", dict_dir},
                       {"seed", seed}};
  const std::string hash = config_hash_hex(effective);

  const ConceptDictionary dict = load_dictionary(dict_dir);
  SyntheticWorld world = gen_world(params, dict, seed);
  world.scene.metadata["config_hash"] = hash;
  save_world(world, args.out_dir, hash);

  std::cout << "world: " << world.scene.size() << " gaussians, "
            << world.cameras.size() << " views -> " << args.out_dir << "\n";
  return 0;
}

int cmd_train_ae(const CommonArgs& args, const std::string& corpus_dir, int k) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);
  const TrainConfig tc = train_config_from(cfg, seed);

  const json effective{{"subcommand", "train-ae"},
                       {"corpus", corpus_dir},
                       {"k", k},
                       {"loss_mode", tc.loss_mode == LossMode::L1Cos ? "l1_cos" : "mse_cos"},
                       {"lambda", tc.lambda},
                       {"lr", tc.lr},
                       {"batch_size", tc.batch_size},
                       {"epochs", tc.epochs},
                       {"seed", seed}};
  const std::string hash = config_hash_hex(effective);

  const fs::path cdir(corpus_dir);
  const EmbeddingCorpus corpus =
      load_corpus(cdir / "corpus.gten", cdir / "corpus_labels.json");
  const TrainResult result = train_autoencoder(corpus, k, tc);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  save_autoencoder(result.ae, out / "ae.gaew");

  std::string curve;
  for (const TrainCurvePoint& p : result.curve) {
    curve += json{{"epoch", p.epoch},
                  {"train_loss", p.train_loss},
                  {"val_mse", p.val_mse},
                  {"val_cosine", p.val_cosine}}
                 .dump() +
             "\n";
  }
  write_text(out / "curve.jsonl", curve);
  write_json_file(out / "report.json", {{"config_hash", hash},
                                        {"k", k},
                                        {"val_mse", result.val_mse},
                                        {"val_cosine", result.val_cosine},
                                        {"gradient_steps", result.gradient_steps},
                                        {"mse_convention", FidelityReport::kMseConvention}});
  // Wall-clock lives in its own file so every other output is rerun-identical.
  write_json_file(out / "timing.json", {{"train_seconds", result.train_seconds}});
  write_run_manifest(out, "train-ae", hash,
                     {"ae.gaew", "curve.jsonl", "report.json", "timing.json"});
  std::cout << "trained k=" << k << ": val_cosine=" << result.val_cosine
            << " val_mse=" << result.val_mse << " -> " << args.out_dir << "\n";
  return 0;
}

int cmd_train_field(const CommonArgs& args, const std::string& world_dir,
                    const std::string& ae_path) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);
  const FieldTrainConfig fc = field_config_from(cfg, seed, args.threads);

  const json effective{{"subcommand", "train-field"}, {"world", world_dir},
                       {"ae", ae_path},               {"gamma", fc.gamma},
                       {"beta", fc.beta},             {"field_lr", fc.lr},
                       {"iterations", fc.iterations}, {"seed", seed}};
  const std::string hash = config_hash_hex(effective);

  const SyntheticWorld world = load_world(world_dir);
  const Autoencoder ae = load_autoencoder(ae_path);
  const std::vector<SupervisedView> views = supervision_from_world(world);
  const std::vector<TargetFeatureMap> targets = build_targets(views, ae);
  FieldTrainResult result = train_language_field(world.scene, world.cameras, targets, fc);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  result.scene.metadata["config_hash"] = hash;
  save_scene(result.scene, out / "scene_trained.gspl");

  std::string log;
  for (const auto& p : result.curve) {
    log += json{{"iter", p.iter},
                {"loss_l1", p.loss_l1},
                {"loss_cos", p.loss_cos},
                {"total", p.total}}
               .dump() +
           "\n";
  }
  write_text(out / "log.jsonl", log);
  write_json_file(out / "report.json",
                  {{"config_hash", hash},
                   {"iterations", fc.iterations},
                   {"final_total", result.curve.empty() ? 0.0 : result.curve.back().total},
                   {"gradient_steps", result.gradient_steps}});
  write_run_manifest(out, "train-field", hash,
                     {"scene_trained.gspl", "log.jsonl", "report.json"});
  std::cout << "field trained: " << fc.iterations << " iterations -> " << args.out_dir
            << "\n";
  return 0;
}

int cmd_render(const CommonArgs& args, const std::string& world_dir,
               const std::string& scene_path, int view) {
  const json cfg = load_config(args);
  const json effective{{"subcommand", "render"},
                       {"world", world_dir},
                       {"scene", scene_path},
                       {"view", view},
                       {"tile_size", cfg_get<int>(cfg, "tile_size", 16)}};
  const std::string hash = config_hash_hex(effective);

  const SyntheticWorld world = load_world(world_dir);
  if (view < 0 || view >= static_cast<int>(world.cameras.size())) {
    throw ConfigError("view index out of range");
  }
  const Scene scene = scene_path.empty() ? world.scene : load_scene(scene_path);

  RenderOptions opts;
  opts.tile_size = cfg_get<int>(cfg, "tile_size", 16);
  opts.threads = args.threads;
  const RenderOutput out_render =
      render(scene, world.cameras[static_cast<std::size_t>(view)], opts);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_ppm(out / "color.ppm", out_render.color, "cfg " + hash);
  write_gten(out / "feature.gten", out_render.feature);
  write_gten(out / "alpha.gten", out_render.alpha);
  write_run_manifest(out, "render", hash, {"color.ppm", "feature.gten", "alpha.gten"});
  std::cout << "rendered view " << view << " -> " << args.out_dir << "\n";
  return 0;
}

int cmd_query(const CommonArgs& args, const std::string& world_dir,
              const std::string& scene_path, const std::string& ae_path, int view,
              const std::string& query_label, double threshold) {
  const json cfg = load_config(args);
  (void)cfg;
  const json effective{{"subcommand", "query"}, {"world", world_dir},
                       {"scene", scene_path},   {"ae", ae_path},
                       {"view", view},          {"query", query_label},
                       {"threshold", threshold}};
  const std::string hash = config_hash_hex(effective);

  const SyntheticWorld world = load_world(world_dir);
  if (view < 0 || view >= static_cast<int>(world.cameras.size())) {
    throw ConfigError("view index out of range");
  }
  const Scene scene = scene_path.empty() ? world.scene : load_scene(scene_path);
  const Autoencoder ae = load_autoencoder(ae_path);

  Query q;
  q.id = query_label;
  bool found = false;
  for (std::size_t c = 0; c < world.concept_labels.size(); ++c) {
    if (world.concept_labels[c] == query_label) {
      q.embedding = world.concepts.row(static_cast<Eigen::Index>(c)).transpose();
      found = true;
      break;
    }
  }
  if (!found) throw ConfigError("unknown query label: " + query_label);

  RenderOptions opts;
  opts.threads = args.threads;
  const RenderOutput rendered =
      render(scene, world.cameras[static_cast<std::size_t>(view)], opts);
  const QueryResult result = run_query(rendered.feature_map(), ae, q, threshold);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_gten(out / "relevancy.gten", result.relevancy);
  write_pgm(out / "mask.pgm", result.mask, "cfg " + hash);
  write_json_file(out / "result.json", {{"config_hash", hash},
                                        {"query", q.id},
                                        {"view", view},
                                        {"loc_x", result.loc_x},
                                        {"loc_y", result.loc_y},
                                        {"score_at_loc", result.score_at_loc},
                                        {"threshold", threshold},
                                        {"mask_pixels", result.mask.count()}});
  write_run_manifest(out, "query", hash, {"relevancy.gten", "mask.pgm", "result.json"});
  std::cout << "query '" << q.id << "' view " << view << ": loc=(" << result.loc_x
            << "," << result.loc_y << ") score=" << result.score_at_loc << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& world_dir,
             const std::string& ae_path, const std::string& scene_path) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);
  PipelineConfig pc;
  pc.field = field_config_from(cfg, seed, args.threads);
  pc.relevancy_threshold = cfg_get<double>(cfg, "threshold", kDefaultRelevancyThreshold);
  pc.render.threads = args.threads;

  const json effective{{"subcommand", "eval"},
                       {"world", world_dir},
                       {"ae", ae_path},
                       {"scene", scene_path},
                       {"gamma", pc.field.gamma},
                       {"beta", pc.field.beta},
                       {"field_lr", pc.field.lr},
                       {"iterations", pc.field.iterations},
                       {"threshold", pc.relevancy_threshold},
                       {"seed", seed}};
  const std::string hash = config_hash_hex(effective);

  const SyntheticWorld world = load_world(world_dir);
  const Autoencoder ae = load_autoencoder(ae_path);

  PipelineResult result;
  if (!scene_path.empty()) {
    // Score an already-trained scene: skip the field stage.
    PipelineConfig pc2 = pc;
    pc2.field.iterations = 0;
    SyntheticWorld staged = world;
    staged.scene = load_scene(scene_path);
    result = run_pipeline(staged, ae, pc2);
  } else {
    result = run_pipeline(world, ae, pc);
  }

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  json metrics = result.metrics;
  metrics["config_hash"] = hash;
  write_json_file(out / "metrics.json", metrics);

  std::vector<std::string> files{"metrics.json"};
  for (std::size_t v = 0; v < world.cameras.size(); ++v) {
    const RenderOutput rendered =
        render(result.trained_scene, world.cameras[v], pc.render);
    const std::string name = "pca_view" + std::to_string(v) + ".ppm";
    write_ppm(out / name, pca_visualize(rendered.feature_map()), "cfg " + hash);
    files.push_back(name);
  }
  write_run_manifest(out, "eval", hash, files);
  std::cout << "eval: mean_iou=" << result.mean_iou
            << " localization_accuracy=" << result.localization_accuracy << " -> "
            << args.out_dir << "\n";
  return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& corpus_dir,
               std::vector<int> ks) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);
  if (ks.empty()) ks = cfg_get<std::vector<int>>(cfg, "ks", {3, 8, 16, 32, 64});
  const TrainConfig tc = train_config_from(cfg, seed);

  const fs::path cdir(corpus_dir);
  const EmbeddingCorpus corpus =
      load_corpus(cdir / "corpus.gten", cdir / "corpus_labels.json");
  const AblationResult result = run_ablation(corpus, ks, tc);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_ablation_csv(result, out / "ablation.csv");
  json report = ablation_report_json(result);
  // Timings move to their own file; see train-ae.
  json timing = json::array();
  for (auto& row : report.at("rows")) {
    timing.push_back({{"k", row.at("k")}, {"train_seconds", row.at("train_seconds")}});
    row.erase("train_seconds");
  }
  write_json_file(out / "ablation.json", report);
  write_json_file(out / "timing.json", {{"rows", timing}});

  ChartSeries mse{"val_mse", {}}, cosine{"val_cosine", {}};
  for (const AblationRow& row : result.rows) {
    mse.points.emplace_back(row.k, row.val_mse);
    cosine.points.emplace_back(row.k, row.val_cosine);
  }
  write_text(out / "ablation_mse.svg",
             render_line_chart("reconstruction error vs latent dimension", "k", "val MSE",
                               {mse}, "cfg " + result.config_hash));
  write_text(out / "ablation_cosine.svg",
             render_line_chart("cosine similarity vs latent dimension", "k", "val cosine",
                               {cosine}, "cfg " + result.config_hash));
  write_run_manifest(out, "ablate", result.config_hash,
                     {"ablation.csv", "ablation.json", "timing.json", "ablation_mse.svg",
                      "ablation_cosine.svg"});

  std::cout << "ablation over " << ks.size() << " dims -> " << args.out_dir << "\n";
  for (const AblationRow& row : result.rows) {
    std::cout << "  k=" << row.k << " val_mse=" << row.val_mse
              << " val_cosine=" << row.val_cosine << "\n";
  }
  for (const std::string& e : result.errors) std::cout << "  diverged: " << e << "\n";
  return 0;
}

int cmd_efficiency(const CommonArgs& args, const std::vector<std::string>& world_dirs,
                   const std::string& ae_path) {
  const json cfg = load_config(args);
  const std::uint64_t seed = require_seed(args, cfg);

  EfficiencyConfig ec;
  ec.ae_budget_scale = cfg_get<double>(cfg, "ae_budget_scale", 1.0);
  ec.repetitions = cfg_get<int>(cfg, "repetitions", 3);
  ec.field = field_config_from(cfg, seed, args.threads);
  ec.ae = train_config_from(cfg, seed);
  ec.corpus_samples_per_concept = cfg_get<int>(cfg, "samples_per_concept", 32);
  ec.corpus_jitter = cfg_get<double>(cfg, "jitter", 0.1);
  ec.shared_ae_pretrain_seconds = cfg_get<double>(cfg, "shared_ae_pretrain_seconds", 0.0);
  ec.seed = seed;

  if (world_dirs.size() < 2) throw ConfigError("efficiency needs at least two --world dirs");
  std::vector<SyntheticWorld> worlds;
  for (const std::string& dir : world_dirs) worlds.push_back(load_world(dir));
  const Autoencoder shared = load_autoencoder(ae_path);

  const EfficiencyReport report = run_efficiency(worlds, shared, ec);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  write_json_file(out / "efficiency_report.json", report.timing_json());
  write_json_file(out / "efficiency_structure.json", report.structure_json());
  write_run_manifest(out, "efficiency", report.config_hash,
                     {"efficiency_report.json", "efficiency_structure.json"});
  std::cout << "efficiency over " << report.world_count
            << " worlds: speedup=" << report.speedup
            << " (amortized " << report.amortized_speedup << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaussian splatting with compressed language-feature channels"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--config", args.config_path, "JSON config file")->each([](std::string) {});
  app.add_option("--out", args.out_dir, "output directory");
  std::uint64_t seed_value = 0;
  bool seed_set = false;
  app.add_option("--seed", seed_value, "master seed")->each([&](std::string) { seed_set = true; });
  app.add_option("--threads", args.threads, "rasterizer thread count");

  auto* sc_corpus = app.add_subcommand("gen-corpus", "generate dictionary + corpus");
  auto* sc_synth = app.add_subcommand("synth-gen", "generate a synthetic world");
  std::string dict_dir;
  sc_synth->add_option("--dict", dict_dir, "dictionary directory")->required();
  auto* sc_train_ae = app.add_subcommand("train-ae", "train the autoencoder");
  std::string corpus_dir;
  int k = 16;
  sc_train_ae->add_option("--corpus", corpus_dir, "corpus directory")->required();
  sc_train_ae->add_option("--k", k, "latent dimension");
  auto* sc_train_field = app.add_subcommand("train-field", "fit per-gaussian latents");
  std::string world_dir, ae_path, scene_path, query_label;
  sc_train_field->add_option("--world", world_dir, "world directory")->required();
  sc_train_field->add_option("--ae", ae_path, "autoencoder weights")->required();
  auto* sc_render = app.add_subcommand("render", "render one view");
  int view = 0;
  sc_render->add_option("--world", world_dir, "world directory")->required();
  sc_render->add_option("--scene", scene_path, "scene override (defaults to world scene)");
  sc_render->add_option("--view", view, "view index");
  auto* sc_query = app.add_subcommand("query", "open-vocabulary query on one view");
  double threshold = kDefaultRelevancyThreshold;
  sc_query->add_option("--world", world_dir, "world directory")->required();
  sc_query->add_option("--scene", scene_path, "scene override");
  sc_query->add_option("--ae", ae_path, "autoencoder weights")->required();
  sc_query->add_option("--view", view, "view index");
  sc_query->add_option("--query", query_label, "concept label")->required();
  sc_query->add_option("--threshold", threshold, "relevancy threshold");
  auto* sc_eval = app.add_subcommand("eval", "train (optional) + query + metrics");
  sc_eval->add_option("--world", world_dir, "world directory")->required();
  sc_eval->add_option("--ae", ae_path, "autoencoder weights")->required();
  sc_eval->add_option("--scene", scene_path, "pre-trained scene (skips field training)");
  auto* sc_ablate = app.add_subcommand("ablate", "latent-dimension sweep");
  std::vector<int> ks;
  sc_ablate->add_option("--corpus", corpus_dir, "corpus directory")->required();
  sc_ablate->add_option("--ks", ks, "latent dimensions to sweep");
  auto* sc_eff = app.add_subcommand("efficiency", "per-scene vs generalized comparison");
  std::vector<std::string> world_dirs;
  sc_eff->add_option("--world", world_dirs, "world directory (repeat)")->required();
  sc_eff->add_option("--ae", ae_path, "shared autoencoder weights")->required();

  CLI11_PARSE(app, argc, argv);
  if (seed_set) args.seed = seed_value;

  try {
    if (sc_corpus->parsed()) return cmd_gen_corpus(args);
    if (sc_synth->parsed()) return cmd_synth_gen(args, dict_dir);
    if (sc_train_ae->parsed()) return cmd_train_ae(args, corpus_dir, k);
    if (sc_train_field->parsed()) return cmd_train_field(args, world_dir, ae_path);
    if (sc_render->parsed()) return cmd_render(args, world_dir, scene_path, view);
    if (sc_query->parsed())
      return cmd_query(args, world_dir, scene_path, ae_path, view, query_label, threshold);
    if (sc_eval->parsed()) return cmd_eval(args, world_dir, ae_path, scene_path);
    if (sc_ablate->parsed()) return cmd_ablate(args, corpus_dir, ks);
    if (sc_eff->parsed()) return cmd_efficiency(args, world_dirs, ae_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
