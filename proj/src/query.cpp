#include "featsplat/query.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace featsplat {

Tensor relevancy_map(const FeatureMap& features, const Autoencoder& ae, const Query& q) {
  q.validate();
  const Tensor& z = features.values;
  if (z.rank() != 3) throw InvalidArgument("feature map must be rank 3");
  if (static_cast<int>(z.dim(2)) != ae.latent_dim()) {
    throw InvalidArgument("feature map latent dimension does not match decoder");
  }
  if (q.embedding.size() != ae.input_dim()) {
    throw InvalidArgument("query embedding dimension does not match decoder output");
  }
  const std::size_t h = z.dim(0), w = z.dim(1);

  // Gather covered pixels and decode them in one batch.
  std::vector<std::size_t> covered;
  covered.reserve(h * w);
  for (std::size_t p = 0; p < h * w; ++p) {
    if (features.alpha[p] >= kBackgroundAlpha) covered.push_back(p);
  }

  Tensor rel({h, w});
  for (std::size_t p = 0; p < h * w; ++p) rel[p] = -1.0;
  if (covered.empty()) return rel;

  Eigen::MatrixXd latents(ae.latent_dim(), static_cast<Eigen::Index>(covered.size()));
  for (std::size_t i = 0; i < covered.size(); ++i) {
    const std::size_t y = covered[i] / w, x = covered[i] % w;
    latents.col(static_cast<Eigen::Index>(i)) = z.channels(y, x);
  }
  const Eigen::MatrixXd decoded = ae.decode_batch(latents);
  for (std::size_t i = 0; i < covered.size(); ++i) {
    rel[covered[i]] =
        safe_cosine(decoded.col(static_cast<Eigen::Index>(i)), q.embedding);
  }
  return rel;
}

Mask segment(const Tensor& relevancy, double threshold) {
  if (relevancy.rank() != 2) throw InvalidArgument("relevancy must be rank 2");
  Mask m(relevancy.dim(0), relevancy.dim(1));
  for (std::size_t p = 0; p < relevancy.size(); ++p) {
    m.data[p] = relevancy[p] >= threshold ? 1 : 0;
  }
  return m;
}

std::pair<int, int> localize(const Tensor& relevancy) {
  if (relevancy.rank() != 2 || relevancy.size() == 0) {
    throw InvalidArgument("relevancy must be a non-empty rank-2 tensor");
  }
  std::size_t best = 0;
  for (std::size_t p = 1; p < relevancy.size(); ++p) {
    if (relevancy[p] > relevancy[best]) best = p;
  }
  const std::size_t w = relevancy.dim(1);
  return {static_cast<int>(best % w), static_cast<int>(best / w)};
}

QueryResult run_query(const FeatureMap& features, const Autoencoder& ae, const Query& q,
                      double threshold) {
  QueryResult result;
  result.relevancy = relevancy_map(features, ae, q);
  result.mask = segment(result.relevancy, threshold);
  const auto [x, y] = localize(result.relevancy);
  result.loc_x = x;
  result.loc_y = y;
  result.score_at_loc = result.relevancy(static_cast<std::size_t>(y),
                                         static_cast<std::size_t>(x));
  return result;
}

double iou(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw InvalidArgument("iou: mask shapes differ");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < a.data.size(); ++p) {
    const bool pa = a.data[p] != 0, pb = b.data[p] != 0;
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(const std::vector<std::pair<Mask, Mask>>& pairs) {
  if (pairs.empty()) throw InvalidArgument("miou: empty list");
  double total = 0.0;
  for (const auto& [a, b] : pairs) total += iou(a, b);
  return total / static_cast<double>(pairs.size());
}

double localization_accuracy(
    const std::vector<std::pair<std::pair<int, int>, GtBox>>& points_and_boxes) {
  if (points_and_boxes.empty()) {
    throw InvalidArgument("localization_accuracy: empty list");
  }
  std::size_t hits = 0;
  for (const auto& [point, box] : points_and_boxes) {
    if (box.contains(point.first, point.second)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(points_and_boxes.size());
}

Tensor pca_visualize(const FeatureMap& features) {
  const Tensor& z = features.values;
  if (z.rank() != 3) throw InvalidArgument("feature map must be rank 3");
  const std::size_t h = z.dim(0), w = z.dim(1);
  const auto k = static_cast<Eigen::Index>(z.dim(2));

  std::vector<std::size_t> covered;
  for (std::size_t p = 0; p < h * w; ++p) {
    if (features.alpha[p] >= kBackgroundAlpha) covered.push_back(p);
  }
  if (covered.size() < 3) {
    throw InvalidArgument("pca_visualize requires at least 3 covered pixels");
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(covered.size()), k);
  for (std::size_t i = 0; i < covered.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = z.channels(covered[i] / w, covered[i] % w);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  const Eigen::MatrixXd cov =
      (x.transpose() * x) / static_cast<double>(covered.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw InvalidArgument("pca_visualize: eigendecomposition failed");
  }

  // Eigenvalues come out ascending; take the top three axes.
  const int n_axes = static_cast<int>(std::min<Eigen::Index>(3, k));
  Tensor image({h, w, 3}, 0.5);
  for (int a = 0; a < n_axes; ++a) {
    Eigen::VectorXd axis = solver.eigenvectors().col(k - 1 - a);
    Eigen::Index max_idx = 0;
    axis.cwiseAbs().maxCoeff(&max_idx);
    if (axis[max_idx] < 0.0) axis = -axis;

    const Eigen::VectorXd scores = x * axis;
    const double lo = scores.minCoeff();
    const double hi = scores.maxCoeff();
    if (hi - lo < 1e-12) continue;  // zero variance: keep the 0.5 padding
    for (std::size_t i = 0; i < covered.size(); ++i) {
      const std::size_t y = covered[i] / w, px = covered[i] % w;
      image(y, px, static_cast<std::size_t>(a)) =
          (scores[static_cast<Eigen::Index>(i)] - lo) / (hi - lo);
    }
  }

  // Uncovered pixels render black on all channels.
  for (std::size_t p = 0; p < h * w; ++p) {
    if (features.alpha[p] < kBackgroundAlpha) {
      const std::size_t y = p / w, px = p % w;
      image(y, px, 0) = image(y, px, 1) = image(y, px, 2) = 0.0;
    }
  }
  return image;
}

}  // namespace featsplat
