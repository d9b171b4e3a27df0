#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "featsplat/codec.hpp"
#include "featsplat/raster.hpp"
#include "featsplat/scene.hpp"
#include "featsplat/tensor.hpp"

namespace featsplat {

// One supervision region: a mask at some hierarchy level with the embedding
// of the region's content.
struct MaskRegion {
  int level = 0;
  Mask mask;
  Eigen::VectorXd embedding;  // input-space (D) vector
};

struct SupervisedView {
  Camera camera;
  std::vector<MaskRegion> regions;
};

struct TargetFeatureMap {
  Tensor target;                   // H x W x k
  std::vector<std::uint8_t> valid; // per pixel, 1 where supervised
  int view_index = 0;
  int level = 0;

  std::size_t valid_count() const;
};

class EmptySupervisionError : public InvalidArgument {
 public:
  EmptySupervisionError() : InvalidArgument("no valid pixels in supervision") {}
};

// Encode each region's embedding with the frozen encoder and broadcast it
// over the region's pixels; one map per (view, level). A pixel covered twice
// at the same level is rejected.
std::vector<TargetFeatureMap> build_targets(const std::vector<SupervisedView>& views,
                                            const Autoencoder& ae);

enum class LatentInit { Zeros, Keep };

struct FieldTrainConfig {
  double gamma = 0.5;  // cosine weight inside the language loss
  double beta = 1.0;   // language-term weight in the total objective
  double lr = 2.5e-3;
  int iterations = 1000;
  std::uint64_t seed = 0;
  LatentInit init = LatentInit::Zeros;
  RenderOptions render;

  void validate() const {
    if (gamma < 0.0 || beta < 0.0) throw ConfigError("gamma and beta must be >= 0");
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
  }
};

struct LangLossGrad {
  double value = 0.0;    // l1 + gamma * (1 - cos), mean over valid pixels
  double l1_part = 0.0;
  double cos_part = 0.0; // mean (1 - cos)
  Tensor grad;           // H x W x k, zero on invalid pixels
};

LangLossGrad lang_loss(const Tensor& rendered, const TargetFeatureMap& target,
                       double gamma);

struct FieldTrainResult {
  Scene scene;
  struct Point {
    int iter;
    double loss_l1;
    double loss_cos;
    double total;
  };
  std::vector<Point> curve;
  long gradient_steps = 0;
};

// Second-stage optimizer: geometry and appearance stay bit-identical, only
// latents move. Weights are cached per view up front since the compositing
// is independent of the latents. One Adam step per iteration over the
// round-robin view's supervised pixels.
FieldTrainResult train_language_field(const Scene& scene,
                                      const std::vector<Camera>& views,
                                      const std::vector<TargetFeatureMap>& targets,
                                      const FieldTrainConfig& cfg);

// Objective over all supervised views at the given latent matrix (rows are
// per-gaussian latents). Returns beta * sum of per-view language losses and
// the matching gradient; this is the same computation the trainer steps on.
std::pair<double, Eigen::MatrixXd> language_field_objective(
    const Scene& scene, const std::vector<Camera>& views,
    const std::vector<TargetFeatureMap>& targets, const Eigen::MatrixXd& latents,
    const FieldTrainConfig& cfg);

struct RgbStageConfig {
  double lr = 5e-3;
  int iterations = 200;
  bool skip = false;
  bool optimize_opacity = true;
  RenderOptions render;
};

struct RgbStageResult {
  Scene scene;
  std::vector<double> curve;  // L1 loss per iteration
};

// Toy-scale photometric stage: L1 image loss, Adam over colors (and
// optionally opacities), re-rendered each step.
RgbStageResult rgb_stage(const Scene& scene, const std::vector<Camera>& views,
                         const std::vector<Tensor>& target_images,
                         const RgbStageConfig& cfg);

}  // namespace featsplat
