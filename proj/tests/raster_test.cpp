#include "featsplat/raster.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace featsplat;
using testutil::make_camera;
using testutil::make_random_scene;
using testutil::max_abs_diff;

namespace {

Scene single_gaussian_scene(const Gaussian& g, int d) {
  Scene s;
  s.latent_dim = d;
  s.gaussians.push_back(g);
  return s;
}

Gaussian on_axis_gaussian(double z, double scale, double opacity, int d) {
  Gaussian g;
  g.mu = {0.0, 0.0, z};
  g.scale = {scale, scale, scale};
  g.rotation = Eigen::Quaterniond::Identity();
  g.color = {1.0, 0.5, 0.25};
  g.opacity = opacity;
  g.latent = Eigen::VectorXd::LinSpaced(d, 1.0, 2.0);
  return g;
}

}  // namespace

TEST(Project, OnAxisGaussianLandsAtPrincipalPoint) {
  Camera cam = make_camera(64, 64, 100.0);
  cam.cx = 32.0;
  cam.cy = 32.0;
  const auto p = project(on_axis_gaussian(5.0, 0.2, 0.9, 2), cam);
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(p->mean2d[0], 32.0);
  EXPECT_DOUBLE_EQ(p->mean2d[1], 32.0);
  EXPECT_DOUBLE_EQ(p->depth, 5.0);
}

TEST(Project, IsotropicCovarianceMatchesJacobianFormula) {
  Camera cam = make_camera(64, 64, 100.0);
  cam.cx = 32.0;
  cam.cy = 32.0;
  const double s = 0.2, z = 5.0, f = 100.0;
  const auto p = project(on_axis_gaussian(z, s, 0.9, 2), cam);
  ASSERT_TRUE(p.has_value());
  const double expected = (f * s / z) * (f * s / z) + kCovRegularization;
  EXPECT_NEAR(p->cov2d(0, 0), expected, 1e-9);
  EXPECT_NEAR(p->cov2d(1, 1), expected, 1e-9);
  EXPECT_NEAR(p->cov2d(0, 1), 0.0, 1e-9);
}

TEST(Project, BehindCameraIsCulled) {
  const Camera cam = make_camera();
  EXPECT_FALSE(project(on_axis_gaussian(-5.0, 0.2, 0.9, 2), cam).has_value());
  EXPECT_FALSE(project(on_axis_gaussian(0.0, 0.2, 0.9, 2), cam).has_value());
}

TEST(Project, FarOffscreenFootprintIsCulled) {
  const Camera cam = make_camera(64, 64, 100.0);
  Gaussian g = on_axis_gaussian(5.0, 0.05, 0.9, 2);
  g.mu = {50.0, 0.0, 5.0};  // projects kilometers off the 64px image
  EXPECT_FALSE(project(g, cam).has_value());
}

TEST(Render, FullyOpaqueSplatDeliversItsLatentAtCenterPixel) {
  Camera cam = make_camera(64, 64, 100.0);
  cam.cx = 32.0;
  cam.cy = 32.0;
  const Scene s = single_gaussian_scene(on_axis_gaussian(5.0, 0.3, 1.0, 3), 3);
  const RenderOutput out = render(s, cam);

  EXPECT_NEAR(out.alpha(32, 32), 1.0, 1e-12);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(out.feature(32, 32, static_cast<std::size_t>(c)),
                s.gaussians[0].latent[c], 1e-12);
  }
  const auto contribs = out.contributions_at(32, 32);
  ASSERT_EQ(contribs.size(), 1u);
  EXPECT_NEAR(contribs[0].weight, 1.0, 1e-12);
}

TEST(Render, UncoveredPixelIsZero) {
  Camera cam = make_camera(64, 64, 100.0);
  const Scene s = single_gaussian_scene(on_axis_gaussian(5.0, 0.05, 0.9, 3), 3);
  const RenderOutput out = render(s, cam);
  EXPECT_EQ(out.alpha(0, 0), 0.0);
  EXPECT_EQ(out.color(0, 0, 0), 0.0);
  EXPECT_EQ(out.feature(0, 0, 0), 0.0);
  EXPECT_TRUE(out.contributions_at(0, 0).empty());
}

// Compositing recurrence by hand: two half-opacity splats at the same pixel
// give weights 0.5 and 0.5 * (1 - 0.5).
TEST(Render, TwoOverlappingHalfOpacitySplats) {
  Camera cam = make_camera(64, 64, 100.0);
  cam.cx = 32.0;
  cam.cy = 32.0;
  Scene s;
  s.latent_dim = 2;
  Gaussian front = on_axis_gaussian(4.0, 0.3, 0.5, 2);
  front.latent << 1.0, 0.0;
  Gaussian back = on_axis_gaussian(6.0, 0.3, 0.5, 2);
  back.latent << 0.0, 1.0;
  s.gaussians = {back, front};  // scrambled on purpose; depth sort must fix it

  const RenderOutput out = render(s, cam);
  const auto contribs = out.contributions_at(32, 32);
  ASSERT_EQ(contribs.size(), 2u);
  EXPECT_EQ(contribs[0].gaussian_index, 1u);  // nearer splat first
  EXPECT_NEAR(contribs[0].weight, 0.5, 1e-12);
  EXPECT_NEAR(contribs[1].weight, 0.25, 1e-12);
  EXPECT_NEAR(out.feature(32, 32, 0), 0.5, 1e-12);
  EXPECT_NEAR(out.feature(32, 32, 1), 0.25, 1e-12);
  EXPECT_NEAR(out.alpha(32, 32), 0.75, 1e-12);
}

TEST(Render, EmptySceneThrows) {
  Scene s;
  s.latent_dim = 3;
  EXPECT_THROW(render(s, make_camera()), EmptySceneError);
  EXPECT_THROW(render_bruteforce(s, make_camera()), EmptySceneError);
}

TEST(Render, BruteForceMatchesClosedFormForSingleSplat) {
  Camera cam = make_camera(64, 64, 90.0);
  const Gaussian g = on_axis_gaussian(5.0, 0.25, 0.8, 2);
  const Scene s = single_gaussian_scene(g, 2);
  const RenderOutput out = render_bruteforce(s, cam);
  const auto p = project(g, cam);
  ASSERT_TRUE(p.has_value());

  for (int y : {20, 28, 31, 36}) {
    for (int x : {25, 31, 33, 40}) {
      const Eigen::Vector2d d(x - p->mean2d[0], y - p->mean2d[1]);
      const double maha = d.dot(p->inv_cov2d * d);
      double alpha = g.opacity * std::exp(-0.5 * maha);
      if (alpha < kAlphaCutoff) alpha = 0.0;
      EXPECT_NEAR(out.alpha(static_cast<std::size_t>(y), static_cast<std::size_t>(x)),
                  alpha, 1e-12);
    }
  }
}

TEST(Render, OracleEquivalenceOnRandomScenes) {
  for (std::uint64_t seed : {10ull, 11ull, 12ull}) {
    for (int d : {3, 16}) {
      const Scene s = make_random_scene(200, d, seed * 100 + d);
      const Camera cam = make_camera(64, 64, 90.0);
      const RenderOutput oracle = render_bruteforce(s, cam);
      for (int tile : {8, 16, 32}) {
        RenderOptions opts;
        opts.tile_size = tile;
        const RenderOutput out = render(s, cam, opts);
        EXPECT_LE(max_abs_diff(out.color, oracle.color), 1e-6);
        EXPECT_LE(max_abs_diff(out.feature, oracle.feature), 1e-6);
        EXPECT_LE(max_abs_diff(out.alpha, oracle.alpha), 1e-6);
      }
    }
  }
}

TEST(Render, WeightsConserveAndOrderByDepth) {
  const Scene s = make_random_scene(300, 3, 77);
  const Camera cam = make_camera(64, 64, 90.0);
  const RenderOutput out = render(s, cam);

  std::vector<double> depth_of(s.gaussians.size());
  for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
    depth_of[i] = s.gaussians[i].mu[2];  // identity pose: camera z is world z
  }

  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      double sum = 0.0;
      double prev_depth = -1.0;
      for (const Contribution& c : out.contributions_at(y, x)) {
        EXPECT_GE(c.weight, 0.0);
        sum += c.weight;
        EXPECT_GE(depth_of[c.gaussian_index], prev_depth);
        prev_depth = depth_of[c.gaussian_index];
      }
      EXPECT_NEAR(out.alpha(y, x), sum, 1e-12);
      EXPECT_GE(sum, 0.0);
      EXPECT_LE(sum, 1.0 + 1e-12);
    }
  }
}

TEST(Render, PermutingTheGaussianListDoesNotChangeOutput) {
  const Scene s = make_random_scene(150, 4, 5);
  Scene permuted = s;
  std::mt19937_64 rng(99);
  std::shuffle(permuted.gaussians.begin(), permuted.gaussians.end(), rng);

  const Camera cam = make_camera(64, 64, 90.0);
  const RenderOutput a = render(s, cam);
  const RenderOutput b = render(permuted, cam);
  EXPECT_EQ(a.color.data(), b.color.data());
  EXPECT_EQ(a.feature.data(), b.feature.data());
  EXPECT_EQ(a.alpha.data(), b.alpha.data());
}

// The feature output is linear in the stacked latents for fixed geometry;
// this is what makes the field-stage gradients exact.
TEST(Render, FeatureOutputIsLinearInLatents) {
  const int d = 5;
  Scene s1 = make_random_scene(100, d, 21);
  Scene s2 = s1;
  Scene s_mix = s1;
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = 0.7, b = -1.3;
  for (std::size_t i = 0; i < s1.gaussians.size(); ++i) {
    for (int c = 0; c < d; ++c) s2.gaussians[i].latent[c] = u(rng);
    s_mix.gaussians[i].latent =
        a * s1.gaussians[i].latent + b * s2.gaussians[i].latent;
  }

  const Camera cam = make_camera(48, 48, 80.0);
  const RenderOutput o1 = render(s1, cam);
  const RenderOutput o2 = render(s2, cam);
  const RenderOutput omix = render(s_mix, cam);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < omix.feature.size(); ++i) {
    max_diff = std::max(max_diff,
                        std::abs(omix.feature[i] - (a * o1.feature[i] + b * o2.feature[i])));
  }
  EXPECT_LE(max_diff, 1e-6);
}

TEST(Render, ThreadCountDoesNotChangeResults) {
  const Scene s = make_random_scene(400, 8, 31);
  const Camera cam = make_camera(96, 96, 110.0);
  RenderOptions one, eight;
  one.threads = 1;
  eight.threads = 8;
  const RenderOutput a = render(s, cam, one);
  const RenderOutput b = render(s, cam, eight);
  EXPECT_EQ(a.color.data(), b.color.data());
  EXPECT_EQ(a.feature.data(), b.feature.data());
  EXPECT_EQ(a.alpha.data(), b.alpha.data());
  ASSERT_EQ(a.contrib.size(), b.contrib.size());
  for (std::size_t i = 0; i < a.contrib.size(); ++i) {
    EXPECT_EQ(a.contrib[i].gaussian_index, b.contrib[i].gaussian_index);
    EXPECT_EQ(a.contrib[i].weight, b.contrib[i].weight);
  }
}

TEST(Render, EqualDepthTieBreaksByIndexDeterministically) {
  Camera cam = make_camera(32, 32, 60.0);
  cam.cx = 16.0;
  cam.cy = 16.0;
  Scene s;
  s.latent_dim = 1;
  Gaussian a = on_axis_gaussian(5.0, 0.3, 0.6, 1);
  Gaussian b = on_axis_gaussian(5.0, 0.3, 0.6, 1);
  a.latent << 1.0;
  b.latent << -1.0;
  s.gaussians = {a, b};

  const RenderOutput o1 = render(s, cam);
  const RenderOutput o2 = render(s, cam);
  EXPECT_EQ(o1.feature.data(), o2.feature.data());
  const auto contribs = o1.contributions_at(16, 16);
  ASSERT_EQ(contribs.size(), 2u);
  EXPECT_EQ(contribs[0].gaussian_index, 0u);
  EXPECT_EQ(contribs[1].gaussian_index, 1u);
}
