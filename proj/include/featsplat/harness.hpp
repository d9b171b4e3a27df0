#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "featsplat/codec.hpp"
#include "featsplat/field.hpp"
#include "featsplat/query.hpp"
#include "featsplat/synth.hpp"

namespace featsplat {

std::string config_hash_hex(const nlohmann::json& config);

struct AblationRow {
  int k;
  double val_mse;
  double val_cosine;
  double train_seconds;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::string corpus_id;
  std::string config_hash;
  std::vector<std::string> errors;  // per-k divergence records
};

// One training per k, identical budget, fresh RNG stream per k. Divergence in
// one entry is recorded and the sweep continues.
AblationResult run_ablation(const EmbeddingCorpus& corpus, const std::vector<int>& ks,
                            const TrainConfig& base);

// The deterministic columns (k, val_mse, val_cosine); timings stay out of the
// CSV so reruns are byte-identical.
void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path);
nlohmann::json ablation_report_json(const AblationResult& result);

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Self-contained SVG line chart; no plotting dependency.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series,
                              const std::string& comment = {});

struct EfficiencyConfig {
  // Mode-A per-scene autoencoder budget as a fraction of that world's
  // measured field-training seconds.
  double ae_budget_scale = 1.0;
  int repetitions = 3;
  FieldTrainConfig field;
  TrainConfig ae;  // architecture/optimizer template; epochs ignored (time-boxed)
  int corpus_samples_per_concept = 32;
  double corpus_jitter = 0.1;
  double shared_ae_pretrain_seconds = 0.0;  // amortized into the second ratio
  std::uint64_t seed = 0;
};

struct EfficiencyWorldRow {
  double ae_seconds = 0.0;       // mode A per-scene autoencoder
  double field_seconds_a = 0.0;  // mode A field training
  double field_seconds_b = 0.0;  // mode B field training
  long ae_steps = 0;
};

struct EfficiencyReport {
  int world_count = 0;
  double per_scene_total_seconds = 0.0;
  double generalized_total_seconds = 0.0;
  double speedup = 0.0;            // per_scene / generalized
  double amortized_speedup = 0.0;  // includes the shared pre-training cost once
  long ae_gradient_steps_generalized = 0;
  long ae_gradient_steps_per_scene = 0;
  std::vector<EfficiencyWorldRow> per_world;
  std::string config_hash;

  nlohmann::json timing_json() const;
  nlohmann::json structure_json() const;  // the deterministic fields only
};

EfficiencyReport run_efficiency(const std::vector<SyntheticWorld>& worlds,
                                const Autoencoder& shared_ae,
                                const EfficiencyConfig& cfg);

struct PipelineConfig {
  FieldTrainConfig field;
  RgbStageConfig rgb = skipped_rgb_stage();
  double relevancy_threshold = kDefaultRelevancyThreshold;
  RenderOptions render;

  // Synthetic worlds come with ground-truth geometry; the photometric stage
  // defaults to off.
  static RgbStageConfig skipped_rgb_stage() {
    RgbStageConfig rgb;
    rgb.iterations = 0;
    rgb.skip = true;
    return rgb;
  }
};

struct PipelineResult {
  Scene trained_scene;
  std::vector<FieldTrainResult::Point> curve;
  // queries[view][object]
  std::vector<std::vector<QueryResult>> queries;
  double mean_iou = 0.0;
  double localization_accuracy = 0.0;
  nlohmann::json metrics;
};

// Full second-stage run against a synthetic world: build targets from the
// ground-truth masks, fit latents, render every view, query every planted
// concept, and score against the oracle masks/boxes.
PipelineResult run_pipeline(const SyntheticWorld& world, const Autoencoder& ae,
                            const PipelineConfig& cfg);

// Supervision views assembled from a world's ground truth (level 0 masks with
// the planted concept embeddings).
std::vector<SupervisedView> supervision_from_world(const SyntheticWorld& world);

}  // namespace featsplat
