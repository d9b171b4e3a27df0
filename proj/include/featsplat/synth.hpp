#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "featsplat/codec.hpp"
#include "featsplat/raster.hpp"
#include "featsplat/scene.hpp"
#include "featsplat/tensor.hpp"

namespace featsplat {

// Unit-norm concept vectors living (up to noise) in an r-dimensional subspace
// of R^D. The intrinsic dimension stands in for the local rank of a real
// embedding manifold and is what makes the latent-dimension sweep meaningful.
struct ConceptDictionary {
  Eigen::MatrixXd concepts;  // C x D, unit rows
  std::vector<std::string> labels;
  int intrinsic_dim = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(concepts.rows()); }
  int dim() const { return static_cast<int>(concepts.cols()); }
};

ConceptDictionary gen_dictionary(int concept_count, int dim, int intrinsic_dim,
                                 double noise, std::uint64_t seed);

// Rows are normalize(concept + jitter * unit Gaussian direction); split is a
// deterministic 90/10 train/val partition.
EmbeddingCorpus gen_corpus(const ConceptDictionary& dict, int samples_per_concept,
                           double jitter, std::uint64_t seed);

struct GtBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive pixel bounds

  bool contains(int x, int y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

struct WorldParams {
  int object_count = 3;
  int gaussians_per_object = 48;
  int view_count = 5;
  int image_width = 96;
  int image_height = 96;
  int latent_dim = 16;
  double object_radius = 0.75;    // cluster footprint, world units
  double layout_radius = 2.0;     // object centers sit on a jittered ring
  double camera_distance = 6.0;
  double focal = 105.0;           // pixels
  double splat_scale_min = 0.16;
  double splat_scale_max = 0.30;
  double opacity_min = 0.82;
  double opacity_max = 0.98;
  int min_mask_pixels = 30;
  int max_retries = 32;
  RenderOptions render;
};

// Mask rule: a pixel belongs to an object iff that object's composited weight
// exceeds 0.5 (the background implicitly holds 1 - alpha_sum, so masks are
// pairwise disjoint by construction).
struct SyntheticWorld {
  Scene scene;
  std::vector<int> object_of_gaussian;  // gaussian index -> object index
  std::vector<int> concept_of_object;   // object index -> concept id
  std::vector<Camera> cameras;
  std::vector<std::vector<Mask>> gt_masks;   // [view][object]
  std::vector<std::vector<GtBox>> gt_boxes;  // [view][object]
  Eigen::MatrixXd concepts;                  // copy of the dictionary rows used
  std::vector<std::string> concept_labels;
  std::uint64_t seed = 0;
  WorldParams params;
};

SyntheticWorld gen_world(const WorldParams& params, const ConceptDictionary& dict,
                         std::uint64_t seed);

// Per-object composited weight maps for one view; masks/boxes derive from it.
std::vector<Tensor> object_weight_maps(const Scene& scene,
                                       const std::vector<int>& object_of_gaussian,
                                       int object_count, const Camera& cam,
                                       const RenderOptions& opts);

// World directory layout: scene.gspl, manifest.json (cameras, assignments,
// boxes, params, seed), masks_view<i>.gten (objects x H x W), concepts.gten.
void save_world(const SyntheticWorld& world, const std::filesystem::path& dir,
                const std::string& config_hash = {});
SyntheticWorld load_world(const std::filesystem::path& dir);

}  // namespace featsplat
