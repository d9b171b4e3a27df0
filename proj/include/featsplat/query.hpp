#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "featsplat/codec.hpp"
#include "featsplat/raster.hpp"
#include "featsplat/synth.hpp"
#include "featsplat/tensor.hpp"

namespace featsplat {

// Pixels whose accumulated alpha falls below this carry no decodable feature
// and score the -1 background sentinel.
inline constexpr double kBackgroundAlpha = 0.01;
inline constexpr double kDefaultRelevancyThreshold = 0.5;

struct Query {
  std::string id;
  Eigen::VectorXd embedding;  // unit norm within 1e-5

  void validate() const {
    if (std::abs(embedding.norm() - 1.0) > 1e-5) {
      throw InvalidArgument("query embedding must be unit norm");
    }
  }
};

struct QueryResult {
  Tensor relevancy;  // H x W in [-1, 1]
  Mask mask;
  int loc_x = 0, loc_y = 0;  // argmax pixel, row-major tie break
  double score_at_loc = 0.0;
};

// Decode the rendered latents back to embedding space and score each covered
// pixel by cosine against the query.
Tensor relevancy_map(const FeatureMap& features, const Autoencoder& ae, const Query& q);

Mask segment(const Tensor& relevancy, double threshold);
std::pair<int, int> localize(const Tensor& relevancy);  // (x, y)

QueryResult run_query(const FeatureMap& features, const Autoencoder& ae, const Query& q,
                      double threshold = kDefaultRelevancyThreshold);

// IoU is defined 1 when both masks are empty.
double iou(const Mask& a, const Mask& b);
double miou(const std::vector<std::pair<Mask, Mask>>& pairs);
// Fraction of points falling inside their box, bounds inclusive.
double localization_accuracy(
    const std::vector<std::pair<std::pair<int, int>, GtBox>>& points_and_boxes);

// Top-3 PCA of the latents at covered pixels, min-max normalized per channel.
// Sign convention: the largest-|loading| component of each axis is positive.
// Channels without variance (or beyond the data rank) render as 0.5.
Tensor pca_visualize(const FeatureMap& features);

}  // namespace featsplat
