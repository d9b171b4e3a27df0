#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "featsplat/scene.hpp"
#include "featsplat/tensor.hpp"

namespace featsplat {

// Contributions with alpha below this are skipped entirely (no transmittance
// effect either); compositing for a pixel stops once transmittance drops
// below kTransmittanceStop.
inline constexpr double kAlphaCutoff = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;
// Low-pass added to the projected covariance before inversion (pixels^2).
inline constexpr double kCovRegularization = 0.3;
inline constexpr double kNearPlane = 0.01;
// Binning radius in units of sqrt(lambda_max). Chosen so that every pixel
// with alpha >= kAlphaCutoff lies inside the footprint: sqrt(2 ln 255).
inline constexpr double kFootprintSigma = 3.3302184446307908;

struct RenderOptions {
  int tile_size = 16;
  int threads = 1;
};

struct Projected2D {
  Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();  // pixels
  Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();  // regularized, pixels^2
  double depth = 0.0;                                 // camera-space z
  std::uint32_t gaussian_index = 0;
  // cached for compositing
  Eigen::Matrix2d inv_cov2d = Eigen::Matrix2d::Identity();
  double radius = 0.0;  // binning radius in pixels
};

// Perspective-projects one Gaussian; nullopt means culled (behind the near
// plane, or its footprint misses the image entirely).
std::optional<Projected2D> project(const Gaussian& g, const Camera& cam,
                                   std::uint32_t index = 0);

struct Contribution {
  std::uint32_t gaussian_index;
  double weight;  // alpha_i(v) * transmittance before i
};

// Rendered latent map plus the alpha-weight accumulator; shared data model
// for composited maps and decoded queries.
struct FeatureMap {
  Tensor values;  // H x W x d
  Tensor alpha;   // H x W
};

struct RenderOutput {
  Tensor color;    // H x W x 3
  Tensor feature;  // H x W x d
  Tensor alpha;    // H x W, sum of weights per pixel
  // Per-pixel contributor lists in ascending depth order, flattened row-major.
  std::vector<std::size_t> contrib_offsets;  // H*W + 1 entries
  std::vector<Contribution> contrib;

  std::span<const Contribution> contributions_at(std::size_t y, std::size_t x) const {
    const std::size_t p = y * alpha.dim(1) + x;
    return {contrib.data() + contrib_offsets[p],
            contrib_offsets[p + 1] - contrib_offsets[p]};
  }

  FeatureMap feature_map() const { return {feature, alpha}; }
};

class EmptySceneError : public InvalidArgument {
 public:
  EmptySceneError() : InvalidArgument("render requires a non-empty scene") {}
};

// Tile-based front-to-back alpha compositing over depth-sorted splats.
// Deterministic for any thread count: tiles own disjoint pixels and the
// in-tile order is the global depth order (ties broken by gaussian index).
RenderOutput render(const Scene& s, const Camera& cam, const RenderOptions& opts = {});

// Oracle: per-pixel compositing over the full depth-sorted list, no tiling.
RenderOutput render_bruteforce(const Scene& s, const Camera& cam);

}  // namespace featsplat
