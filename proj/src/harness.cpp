#include "featsplat/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace featsplat {

namespace {

std::string format_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Time-boxed Adam training used only for the per-scene efficiency baseline;
// the resulting weights are throwaway, only the elapsed time and step count
// feed the report.
std::pair<double, long> train_for_seconds(Autoencoder ae, const EmbeddingCorpus& corpus,
                                          const TrainConfig& cfg, double seconds) {
  if (seconds <= 0.0) return {0.0, 0};
  const auto deadline_cfg = cfg;
  const std::vector<std::size_t> train_idx = corpus.train_indices();
  if (train_idx.empty()) throw InvalidArgument("corpus has no train split");

  long steps = 0;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  // Reuse the deterministic trainer one epoch at a time until the budget is
  // spent; the epoch count is whatever the clock allows.
  TrainConfig one = deadline_cfg;
  one.epochs = 1;
  std::uint64_t epoch = 0;
  while (elapsed() < seconds) {
    one.seed = derive_seed(deadline_cfg.seed, 0xeff0 + epoch);
    TrainResult r = train(std::move(ae), corpus, one);
    steps += r.gradient_steps;
    ae = std::move(r.ae);
    // train() freezes on return; lift the freeze to continue the loop.
    Autoencoder thawed(ae.encoder_layers(), ae.decoder_layers());
    ae = std::move(thawed);
    ++epoch;
  }
  return {elapsed(), steps};
}

}  // namespace

std::string config_hash_hex(const nlohmann::json& config) {
  const std::uint64_t h = fnv1a64(config.dump());
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AblationResult run_ablation(const EmbeddingCorpus& corpus, const std::vector<int>& ks,
                            const TrainConfig& base) {
  if (ks.empty()) throw ConfigError("ablation requires a non-empty k list");
  for (std::size_t i = 1; i < ks.size(); ++i) {
    if (ks[i] <= ks[i - 1]) throw ConfigError("ablation ks must be strictly increasing");
  }
  base.validate();

  AblationResult result;
  result.corpus_id = corpus.id;
  nlohmann::json cfg_json{{"ks", ks},
                          {"lambda", base.lambda},
                          {"lr", base.lr},
                          {"batch_size", base.batch_size},
                          {"epochs", base.epochs},
                          {"seed", base.seed},
                          {"loss_mode", base.loss_mode == LossMode::L1Cos ? "l1_cos" : "mse_cos"},
                          {"corpus_id", corpus.id}};
  result.config_hash = config_hash_hex(cfg_json);

  for (int k : ks) {
    TrainConfig cfg = base;
    cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(k));
    try {
      const TrainResult r = train_autoencoder(corpus, k, cfg);
      result.rows.push_back({k, r.val_mse, r.val_cosine, r.train_seconds});
    } catch (const DivergenceError& e) {
      result.errors.push_back("k=" + std::to_string(k) + ": " + e.what());
    }
  }
  return result;
}

void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError(IoError::Kind::OpenFailed, "cannot open for write: " + path.string());
  }
  out << "# config_hash=" << result.config_hash << " corpus=" << result.corpus_id << "\n";
  out << "k,val_mse,val_cosine\n";
  for (const AblationRow& row : result.rows) {
    out << row.k << "," << format_g(row.val_mse) << "," << format_g(row.val_cosine)
        << "\n";
  }
  if (!out) {
    throw IoError(IoError::Kind::WriteFailed, "write failed: " + path.string());
  }
}

nlohmann::json ablation_report_json(const AblationResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AblationRow& row : result.rows) {
    rows.push_back({{"k", row.k},
                    {"val_mse", row.val_mse},
                    {"val_cosine", row.val_cosine},
                    {"train_seconds", row.train_seconds}});
  }
  return {{"config_hash", result.config_hash},
          {"corpus_id", result.corpus_id},
          {"rows", rows},
          {"errors", result.errors},
          {"mse_convention", FidelityReport::kMseConvention}};
}

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series,
                              const std::string& comment) {
  constexpr int kWidth = 640, kHeight = 400;
  constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  const int plot_w = kWidth - kLeft - kRight;
  const int plot_h = kHeight - kTop - kBottom;
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const ChartSeries& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;

  auto sx = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto sy = [&](double y) {
    return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n";
  if (!comment.empty()) svg << "<!-- " << comment << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
      << kLeft + plot_w << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">" << y_label
      << "</text>\n";
  // Axis extremes as tick labels.
  svg << "<text x=\"" << kLeft << "\" y=\"" << kTop + plot_h + 16
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_g(x_min)
      << "</text>\n";
  svg << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kTop + plot_h + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_g(x_max) << "</text>\n";
  svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + plot_h
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_g(y_min) << "</text>\n";
  svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_g(y_max) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      svg << format_g(sx(x)) << "," << format_g(sy(y)) << " ";
    }
    svg << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      svg << "<circle cx=\"" << format_g(sx(x)) << "\" cy=\"" << format_g(sy(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w - 8 << "\" y=\"" << kTop + 14 + 16 * i
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << color << "\">" << series[i].name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

nlohmann::json EfficiencyReport::timing_json() const {
  nlohmann::json worlds = nlohmann::json::array();
  for (const EfficiencyWorldRow& row : per_world) {
    worlds.push_back({{"ae_seconds", row.ae_seconds},
                      {"field_seconds_per_scene_mode", row.field_seconds_a},
                      {"field_seconds_generalized_mode", row.field_seconds_b},
                      {"ae_steps", row.ae_steps}});
  }
  return {{"config_hash", config_hash},
          {"world_count", world_count},
          {"per_scene_total_seconds", per_scene_total_seconds},
          {"generalized_total_seconds", generalized_total_seconds},
          {"speedup", speedup},
          {"amortized_speedup", amortized_speedup},
          {"ae_gradient_steps_generalized", ae_gradient_steps_generalized},
          {"ae_gradient_steps_per_scene", ae_gradient_steps_per_scene},
          {"per_world", worlds}};
}

nlohmann::json EfficiencyReport::structure_json() const {
  return {{"config_hash", config_hash},
          {"world_count", world_count},
          {"ae_gradient_steps_generalized", ae_gradient_steps_generalized},
          {"modes", {"per_scene", "generalized"}}};
}

EfficiencyReport run_efficiency(const std::vector<SyntheticWorld>& worlds,
                                const Autoencoder& shared_ae,
                                const EfficiencyConfig& cfg) {
  if (worlds.size() < 2) throw ConfigError("efficiency comparison needs >= 2 worlds");
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (cfg.ae_budget_scale < 0.0) throw ConfigError("ae_budget_scale must be >= 0");

  EfficiencyReport report;
  report.world_count = static_cast<int>(worlds.size());
  report.config_hash = config_hash_hex({{"ae_budget_scale", cfg.ae_budget_scale},
                                        {"repetitions", cfg.repetitions},
                                        {"field_iterations", cfg.field.iterations},
                                        {"seed", cfg.seed},
                                        {"worlds", worlds.size()}});

  auto time_field = [&](const SyntheticWorld& world,
                        const std::vector<TargetFeatureMap>& targets) {
    std::vector<double> reps;
    for (int r = 0; r < cfg.repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      train_language_field(world.scene, world.cameras, targets, cfg.field);
      reps.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return median_of(std::move(reps));
  };

  for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
    const SyntheticWorld& world = worlds[wi];
    const std::vector<SupervisedView> views = supervision_from_world(world);
    EfficiencyWorldRow row;

    // Generalized mode: shared frozen autoencoder, field training only.
    const std::vector<TargetFeatureMap> targets_b = build_targets(views, shared_ae);
    row.field_seconds_b = time_field(world, targets_b);
    if (row.field_seconds_b <= 0.0) {
      throw InvalidArgument("field training time below clock resolution");
    }

    // Per-scene mode: train a fresh autoencoder on this scene's concepts with
    // a budget tied to the measured field time, then train the field.
    ConceptDictionary scene_dict;
    scene_dict.concepts.resize(static_cast<Eigen::Index>(world.concept_of_object.size()),
                               world.concepts.cols());
    for (std::size_t o = 0; o < world.concept_of_object.size(); ++o) {
      scene_dict.concepts.row(static_cast<Eigen::Index>(o)) =
          world.concepts.row(world.concept_of_object[o]);
      scene_dict.labels.push_back(world.concept_labels.empty()
                                      ? "object_" + std::to_string(o)
                                      : world.concept_labels[static_cast<std::size_t>(
                                            world.concept_of_object[o])]);
    }
    scene_dict.intrinsic_dim = static_cast<int>(scene_dict.concepts.rows());
    const EmbeddingCorpus scene_corpus =
        gen_corpus(scene_dict, cfg.corpus_samples_per_concept, cfg.corpus_jitter,
                   derive_seed(cfg.seed, 0xc0 + wi));

    const double ae_budget = cfg.ae_budget_scale * row.field_seconds_b;
    std::vector<double> ae_reps;
    long ae_steps = 0;
    const int scene_latent = shared_ae.latent_dim();
    for (int r = 0; r < cfg.repetitions; ++r) {
      TrainConfig ae_cfg = cfg.ae;
      ae_cfg.seed = derive_seed(cfg.seed, 0xae00 + wi * 16 + static_cast<std::uint64_t>(r));
      auto [secs, steps] = train_for_seconds(
          Autoencoder::mlp(scene_corpus.dim(), scene_latent, ae_cfg.seed), scene_corpus,
          ae_cfg, ae_budget);
      ae_reps.push_back(secs);
      ae_steps = steps;
    }
    row.ae_seconds = median_of(std::move(ae_reps));
    row.ae_steps = ae_steps;
    report.ae_gradient_steps_per_scene += ae_steps;

    // Mode-A targets come from a per-scene encoder; the field cost itself is
    // the same computation either way.
    TrainConfig probe_cfg = cfg.ae;
    probe_cfg.epochs = 0;
    probe_cfg.seed = derive_seed(cfg.seed, 0xa0 + wi);
    TrainResult probe = train(Autoencoder::mlp(scene_corpus.dim(), scene_latent,
                                               probe_cfg.seed),
                              scene_corpus, probe_cfg);
    const std::vector<TargetFeatureMap> targets_a = build_targets(views, probe.ae);
    row.field_seconds_a = time_field(world, targets_a);

    report.per_scene_total_seconds += row.ae_seconds + row.field_seconds_a;
    report.generalized_total_seconds += row.field_seconds_b;
    report.per_world.push_back(row);
  }

  if (report.generalized_total_seconds <= 0.0) {
    throw InvalidArgument("generalized-mode time below clock resolution");
  }
  report.speedup = report.per_scene_total_seconds / report.generalized_total_seconds;
  report.amortized_speedup =
      report.per_scene_total_seconds /
      (report.generalized_total_seconds + cfg.shared_ae_pretrain_seconds);
  report.ae_gradient_steps_generalized = 0;
  return report;
}

std::vector<SupervisedView> supervision_from_world(const SyntheticWorld& world) {
  std::vector<SupervisedView> views;
  for (std::size_t v = 0; v < world.cameras.size(); ++v) {
    SupervisedView view;
    view.camera = world.cameras[v];
    for (std::size_t o = 0; o < world.gt_masks[v].size(); ++o) {
      MaskRegion region;
      region.level = 0;
      region.mask = world.gt_masks[v][o];
      region.embedding =
          world.concepts.row(world.concept_of_object[o]).transpose();
      view.regions.push_back(std::move(region));
    }
    views.push_back(std::move(view));
  }
  return views;
}

PipelineResult run_pipeline(const SyntheticWorld& world, const Autoencoder& ae,
                            const PipelineConfig& cfg) {
  PipelineResult result;
  const std::vector<SupervisedView> views = supervision_from_world(world);

  Scene staged = world.scene;
  if (!cfg.rgb.skip && cfg.rgb.iterations > 0) {
    std::vector<Tensor> target_images;
    for (const Camera& cam : world.cameras) {
      target_images.push_back(render(world.scene, cam, cfg.render).color);
    }
    staged = rgb_stage(staged, world.cameras, target_images, cfg.rgb).scene;
  }

  const std::vector<TargetFeatureMap> targets = build_targets(views, ae);
  FieldTrainResult trained = train_language_field(staged, world.cameras, targets, cfg.field);
  result.curve = trained.curve;
  result.trained_scene = std::move(trained.scene);

  const int n_objects = static_cast<int>(world.concept_of_object.size());
  std::vector<double> ious;
  std::vector<std::pair<std::pair<int, int>, GtBox>> locs;
  nlohmann::json per_view = nlohmann::json::array();

  for (std::size_t v = 0; v < world.cameras.size(); ++v) {
    const RenderOutput out = render(result.trained_scene, world.cameras[v], cfg.render);
    const FeatureMap features = out.feature_map();
    std::vector<QueryResult> view_queries;
    nlohmann::json view_json = nlohmann::json::array();

    for (int o = 0; o < n_objects; ++o) {
      Query q;
      const int concept_id = world.concept_of_object[static_cast<std::size_t>(o)];
      q.id = world.concept_labels.empty()
                 ? "concept_" + std::to_string(concept_id)
                 : world.concept_labels[static_cast<std::size_t>(concept_id)];
      q.embedding = world.concepts.row(concept_id).transpose();
      QueryResult qr = run_query(features, ae, q, cfg.relevancy_threshold);

      const double score =
          iou(qr.mask, world.gt_masks[v][static_cast<std::size_t>(o)]);
      ious.push_back(score);
      locs.push_back({{qr.loc_x, qr.loc_y},
                      world.gt_boxes[v][static_cast<std::size_t>(o)]});
      view_json.push_back({{"object", o},
                           {"query", q.id},
                           {"iou", score},
                           {"loc_x", qr.loc_x},
                           {"loc_y", qr.loc_y},
                           {"score_at_loc", qr.score_at_loc}});
      view_queries.push_back(std::move(qr));
    }
    per_view.push_back(view_json);
    result.queries.push_back(std::move(view_queries));
  }

  result.mean_iou = 0.0;
  for (double s : ious) result.mean_iou += s;
  result.mean_iou /= static_cast<double>(ious.size());
  result.localization_accuracy = localization_accuracy(locs);

  result.metrics = {{"mean_iou", result.mean_iou},
                    {"localization_accuracy", result.localization_accuracy},
                    {"per_view", per_view},
                    {"views", world.cameras.size()},
                    {"objects", n_objects},
                    {"field_iterations", cfg.field.iterations},
                    {"relevancy_threshold", cfg.relevancy_threshold}};
  return result;
}

}  // namespace featsplat
